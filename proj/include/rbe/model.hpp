#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rbe/embedding.hpp"
#include "rbe/featurizer.hpp"

namespace rbe {

enum class Estimator {
    StraightThrough,
    StraightThroughVariant,
    AnnealingTanh,
};

Estimator estimator_from_name(std::string_view name);
std::string_view estimator_name(Estimator e);

enum class Side { Query, Keyword };

struct ModelConfig {
    uint32_t m = 288;  // dense feature width
    uint32_t n = 64;   // embedding width
    uint32_t u = 2;    // query-side refinement steps (u+1 planes)
    uint32_t v = 1;    // keyword-side refinement steps (v+1 planes)
    uint32_t hash_dim = uint32_t(1) << 15;
    Estimator estimator = Estimator::StraightThroughVariant;
    double annealing_slope = 1.0;   // initial alpha
    double annealing_growth = 1.1;  // per-epoch multiplier
    bool residual_weights = true;
    bool use_bias = true;
    // Ablation: tanh projection instead of binarization, no refinement steps.
    bool full_precision = false;

    uint32_t steps_for(Side side) const { return side == Side::Query ? u : v; }
};

/// All learnable state of one tower. The two sides share no parameters.
struct SideParams {
    Eigen::MatrixXd encoder;       // m x hash_dim
    Eigen::VectorXd encoder_bias;  // m
    Eigen::MatrixXd w;             // n x m
    Eigen::VectorXd w_bias;        // n
    std::vector<Eigen::MatrixXd> b;       // steps, each m x n
    std::vector<Eigen::VectorXd> b_bias;  // steps, each m
    std::vector<Eigen::MatrixXd> r;       // steps, each n x m
    std::vector<Eigen::VectorXd> r_bias;  // steps, each n

    void setZero();
    void add_scaled(const SideParams& other, double scale);
};

struct RbeModelParams {
    ModelConfig config;
    double gamma = 10.0;
    SideParams query;
    SideParams keyword;

    const SideParams& side(Side s) const { return s == Side::Query ? query : keyword; }
    SideParams& side(Side s) { return s == Side::Query ? query : keyword; }

    /// Uniform [-s, s] init with s = sqrt(6 / (fan_in + fan_out)); biases zero.
    static RbeModelParams init(const ModelConfig& config, double gamma, uint64_t seed);
};

/// Eq-style sign: -1 for x <= 0, +1 otherwise. Throws on non-finite input.
double binarize(double x);

/// Smooth stand-in for the sign used by the surrogate forward mode:
/// straight-through = identity, variant = clip to [-1, 1],
/// annealing = tanh(alpha x).
double binarize_surrogate(double x, Estimator estimator, double alpha);

/// Gradient estimate through the sign: upstream scaled by the surrogate's
/// derivative at x.
double binarize_grad(double x, double upstream, Estimator estimator, double alpha);

/// Hard: binarization outputs are exact {-1,+1} (training and inference).
/// Surrogate: the smooth surrogate value flows downstream instead, making the
/// whole network differentiable; used by gradient checks.
enum class ForwardMode { Hard, Surrogate };

struct StepTrace {
    Eigen::VectorXd recon_pre;  // B^{t-1} b^{t-1} + bias
    Eigen::VectorXd recon;      // f^{t-1}
    Eigen::VectorXd resid_pre;  // R^{t-1} (f - f^{t-1}) + bias
    Eigen::VectorXd d;          // residual plane outputs
};

struct ForwardTrace {
    SparseVector features;
    Eigen::VectorXd f_pre;     // encoder preactivation
    Eigen::VectorXd f;         // tanh output, the dense feature
    Eigen::VectorXd base_pre;  // W f + bias
    Eigen::VectorXd base;      // b^0
    std::vector<StepTrace> steps;
    Eigen::VectorXd refined;   // b^t after all steps
};

/// Runs the tower: f = tanh(E x), b^0 = rho(W f), then `steps` rounds of
/// reconstruct / residual / refine. steps must not exceed the side's
/// configured count.
ForwardTrace forward(const RbeModelParams& params, Side side,
                     const SparseVector& features, uint32_t steps,
                     ForwardMode mode = ForwardMode::Hard, double alpha = 1.0);

/// Accumulates parameter gradients for d(loss)/d(refined) into grads. The
/// trace must come from forward() with the same params, side, and mode.
void backward(const RbeModelParams& params, Side side, const ForwardTrace& trace,
              const Eigen::VectorXd& refined_grad, ForwardMode mode, double alpha,
              SideParams& grads);

/// Hard forward followed by plane packing; magnitude from the reconstruction.
RbeEmbedding embed(const RbeModelParams& params, Side side,
                   const SparseVector& features, uint32_t steps);
RbeEmbedding embed_text(const RbeModelParams& params, const Featurizer& featurizer,
                        Side side, std::string_view text);

/// Checkpoint: self-describing header then row-major float32 matrices in
/// declared order (per side: encoder, encoder bias, W, W bias, then per step
/// B, B bias, R, R bias; query side first).
void save_checkpoint(const RbeModelParams& params, const std::filesystem::path& path);
RbeModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace rbe
