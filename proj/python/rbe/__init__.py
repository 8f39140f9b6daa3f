"""Recurrent binary embeddings: training, bitwise similarity, exhaustive
top-N retrieval, and selection-miss analysis."""

from ._core import *  # noqa: F401,F403
