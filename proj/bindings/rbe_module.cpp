#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rbe/analysis.hpp"
#include "rbe/embedding_io.hpp"
#include "rbe/index.hpp"
#include "rbe/metrics.hpp"
#include "rbe/model.hpp"
#include "rbe/search.hpp"
#include "rbe/trainer.hpp"

namespace py = pybind11;
using namespace rbe;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Recurrent binary embeddings: bitwise similarity, model training, "
              "exhaustive retrieval, and selection-miss analysis";

    // --- binary vectors and similarity ---
    py::class_<PackedBinaryVector>(m, "PackedBinaryVector")
        .def_readonly("dim", &PackedBinaryVector::dim)
        .def_readonly("words", &PackedBinaryVector::words)
        .def(py::self == py::self)
        .def("__repr__", [](const PackedBinaryVector& v) {
            return "<PackedBinaryVector dim=" + std::to_string(v.dim) + ">";
        });

    m.def("pack", [](const std::vector<int>& values) { return pack(values); },
          py::arg("values"), "Pack a {-1,+1} sequence into 64-bit words");
    m.def("unpack", &unpack, py::arg("vector"));
    m.def("binary_dot", &binary_dot, py::arg("x"), py::arg("y"),
          "Dot product of two packed {-1,+1} vectors");

    py::class_<RbeEmbedding>(m, "RbeEmbedding")
        .def_readonly("planes", &RbeEmbedding::planes)
        .def_readonly("magnitude", &RbeEmbedding::magnitude)
        .def_property_readonly("dim", &RbeEmbedding::dim);

    m.def("make_embedding", &make_embedding, py::arg("planes"),
          py::arg("residual_weights") = true);
    m.def("refined_vector", &refined_vector, py::arg("embedding"),
          py::arg("residual_weights") = true,
          "Float reconstruction of the plane stack");

    py::class_<SimilarityConfig>(m, "SimilarityConfig")
        .def(py::init<>())
        .def_readwrite("query_planes", &SimilarityConfig::query_planes)
        .def_readwrite("keyword_planes", &SimilarityConfig::keyword_planes)
        .def_readwrite("residual_weights", &SimilarityConfig::residual_weights)
        .def_readwrite("normalize_query", &SimilarityConfig::normalize_query);

    m.def("rbe_score", &rbe_score, py::arg("query"), py::arg("keyword"),
          py::arg("config"));

    // --- featurizer and model ---
    py::class_<Featurizer>(m, "Featurizer")
        .def(py::init([](uint32_t hash_dim) { return Featurizer{hash_dim}; }),
             py::arg("hash_dim") = uint32_t(1) << 15)
        .def_readonly("hash_dim", &Featurizer::hash_dim)
        .def("featurize", &Featurizer::featurize, py::arg("text"));
    m.def("normalize_text", &normalize_text, py::arg("text"));

    py::enum_<Estimator>(m, "Estimator")
        .value("STRAIGHT_THROUGH", Estimator::StraightThrough)
        .value("STRAIGHT_THROUGH_VARIANT", Estimator::StraightThroughVariant)
        .value("ANNEALING_TANH", Estimator::AnnealingTanh);

    py::enum_<Side>(m, "Side")
        .value("QUERY", Side::Query)
        .value("KEYWORD", Side::Keyword);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("m", &ModelConfig::m)
        .def_readwrite("n", &ModelConfig::n)
        .def_readwrite("u", &ModelConfig::u)
        .def_readwrite("v", &ModelConfig::v)
        .def_readwrite("hash_dim", &ModelConfig::hash_dim)
        .def_readwrite("estimator", &ModelConfig::estimator)
        .def_readwrite("annealing_slope", &ModelConfig::annealing_slope)
        .def_readwrite("annealing_growth", &ModelConfig::annealing_growth)
        .def_readwrite("residual_weights", &ModelConfig::residual_weights)
        .def_readwrite("use_bias", &ModelConfig::use_bias)
        .def_readwrite("full_precision", &ModelConfig::full_precision);

    py::class_<RbeModelParams>(m, "RbeModelParams")
        .def_readonly("config", &RbeModelParams::config)
        .def_readonly("gamma", &RbeModelParams::gamma)
        .def_static("init", &RbeModelParams::init, py::arg("config"),
                    py::arg("gamma"), py::arg("seed"));

    m.def("binarize", &binarize, py::arg("x"));
    m.def("binarize_grad", &binarize_grad, py::arg("x"), py::arg("upstream"),
          py::arg("estimator"), py::arg("alpha") = 1.0);
    m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
    m.def("embed_text", &embed_text, py::arg("params"), py::arg("featurizer"),
          py::arg("side"), py::arg("text"));
    m.def("score_pair", &score_pair, py::arg("params"), py::arg("featurizer"),
          py::arg("query"), py::arg("keyword"),
          "Cosine of the two towers' reconstructions for a text pair");

    // --- trainer ---
    py::class_<ClickPair>(m, "ClickPair")
        .def(py::init([](std::string q, std::string k) {
                 return ClickPair{std::move(q), std::move(k)};
             }),
             py::arg("query"), py::arg("keyword"))
        .def_readwrite("query", &ClickPair::query)
        .def_readwrite("keyword", &ClickPair::keyword);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("model", &TrainConfig::model)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("lr_decay", &TrainConfig::lr_decay)
        .def_readwrite("group_size", &TrainConfig::group_size)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("validation_fraction", &TrainConfig::validation_fraction)
        .def_readwrite("patience", &TrainConfig::patience)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<EpochMetrics>(m, "EpochMetrics")
        .def_readonly("epoch", &EpochMetrics::epoch)
        .def_readonly("train_loss", &EpochMetrics::train_loss)
        .def_readonly("valid_loss", &EpochMetrics::valid_loss)
        .def_readonly("valid_auc", &EpochMetrics::valid_auc);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("params", &TrainResult::params)
        .def_readonly("history", &TrainResult::history);

    m.def(
        "train",
        [](const std::vector<ClickPair>& dataset, const TrainConfig& config) {
            return train(dataset, config);
        },
        py::arg("dataset"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "group_probability",
        [](const std::vector<double>& sims, size_t positive_index, double gamma) {
            return group_probability(sims, positive_index, gamma);
        },
        py::arg("similarities"), py::arg("positive_index"), py::arg("gamma"));
    m.def(
        "evaluate_auc",
        [](const std::vector<std::pair<double, int>>& scored) {
            return evaluate_auc(scored);
        },
        py::arg("scored"));

    // --- index and search ---
    py::class_<KeywordIndex>(m, "KeywordIndex")
        .def_readonly("dim", &KeywordIndex::dim)
        .def_readonly("keyword_planes", &KeywordIndex::keyword_planes)
        .def_readonly("residual_weights", &KeywordIndex::residual_weights)
        .def_property_readonly("total_keywords", &KeywordIndex::total_keywords)
        .def_property_readonly("plane_bytes_per_keyword",
                               &KeywordIndex::plane_bytes_per_keyword)
        .def_property_readonly("plane_payload_bytes",
                               &KeywordIndex::plane_payload_bytes)
        .def_property_readonly("partition_count", [](const KeywordIndex& idx) {
            return idx.partitions.size();
        });

    m.def(
        "build_index",
        [](const std::vector<std::pair<uint64_t, RbeEmbedding>>& embeddings,
           uint32_t partitions, bool residual_weights) {
            return build_index(embeddings, partitions, residual_weights);
        },
        py::arg("embeddings"), py::arg("partitions") = 1,
        py::arg("residual_weights") = true);
    m.def("save_index", &save_index, py::arg("index"), py::arg("path"));
    m.def("load_index", &load_index, py::arg("path"));

    py::class_<ScanGeometry>(m, "ScanGeometry")
        .def(py::init<>())
        .def_readwrite("blocks", &ScanGeometry::blocks)
        .def_readwrite("threads_per_block", &ScanGeometry::threads_per_block)
        .def_readwrite("items_per_thread", &ScanGeometry::items_per_thread)
        .def_readwrite("queue_length", &ScanGeometry::queue_length);

    m.def("thread_assignment", &thread_assignment, py::arg("geometry"),
          py::arg("partition_count"), py::arg("block"), py::arg("thread"));
    m.def(
        "search",
        [](const RbeEmbedding& query, const KeywordIndex& index,
           const ScanGeometry& geometry, uint64_t n) {
            const SelectionResult result = search(query, index, geometry, n);
            std::vector<std::tuple<double, uint64_t, uint32_t>> out;
            out.reserve(result.entries.size());
            for (const SelectionEntry& e : result.entries) {
                out.emplace_back(e.score, e.id, e.partition);
            }
            return out;
        },
        py::arg("query"), py::arg("index"), py::arg("geometry"), py::arg("n"),
        py::call_guard<py::gil_scoped_release>(),
        "Returns [(score, id, partition)] ordered by (score desc, id asc)");

    // --- analysis ---
    m.def("exact_p_m", &exact_p_m, py::arg("candidates"), py::arg("relevant"),
          py::arg("items_per_thread"), py::arg("occupied_threads"));
    m.def("p_l_at_most", &p_l_at_most, py::arg("candidates"), py::arg("relevant"),
          py::arg("items_per_thread"), py::arg("l"));
    m.def("simulate_miss", &simulate_miss, py::arg("candidates"),
          py::arg("relevant"), py::arg("items_per_thread"), py::arg("queue_length"),
          py::arg("trials"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<RecallPrediction>(m, "RecallPrediction")
        .def_readonly("expected_recall", &RecallPrediction::expected_recall)
        .def_readonly("expected_misses", &RecallPrediction::expected_misses)
        .def_readonly("truncated_recall", &RecallPrediction::truncated_recall)
        .def_readonly("truncation_bound", &RecallPrediction::truncation_bound)
        .def_readonly("truncated_valid", &RecallPrediction::truncated_valid);
    m.def("expected_recall", &expected_recall, py::arg("candidates"),
          py::arg("relevant"), py::arg("items_per_thread"));
}
