#include "rbe/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace rbe {

Estimator estimator_from_name(std::string_view name) {
    if (name == "straight_through") return Estimator::StraightThrough;
    if (name == "straight_through_variant") return Estimator::StraightThroughVariant;
    if (name == "annealing_tanh") return Estimator::AnnealingTanh;
    throw std::invalid_argument("unknown estimator: " + std::string(name));
}

std::string_view estimator_name(Estimator e) {
    switch (e) {
        case Estimator::StraightThrough: return "straight_through";
        case Estimator::StraightThroughVariant: return "straight_through_variant";
        case Estimator::AnnealingTanh: return "annealing_tanh";
    }
    throw std::invalid_argument("unknown estimator value");
}

void SideParams::setZero() {
    encoder.setZero();
    encoder_bias.setZero();
    w.setZero();
    w_bias.setZero();
    for (auto& mat : b) mat.setZero();
    for (auto& vec : b_bias) vec.setZero();
    for (auto& mat : r) mat.setZero();
    for (auto& vec : r_bias) vec.setZero();
}

void SideParams::add_scaled(const SideParams& other, double scale) {
    encoder += scale * other.encoder;
    encoder_bias += scale * other.encoder_bias;
    w += scale * other.w;
    w_bias += scale * other.w_bias;
    for (size_t t = 0; t < b.size(); ++t) {
        b[t] += scale * other.b[t];
        b_bias[t] += scale * other.b_bias[t];
        r[t] += scale * other.r[t];
        r_bias[t] += scale * other.r_bias[t];
    }
}

namespace {

Eigen::MatrixXd glorot(uint32_t rows, uint32_t cols, std::mt19937_64& rng) {
    const double s = std::sqrt(6.0 / (double(rows) + double(cols)));
    std::uniform_real_distribution<double> dist(-s, s);
    Eigen::MatrixXd mat(rows, cols);
    for (uint32_t j = 0; j < cols; ++j) {
        for (uint32_t i = 0; i < rows; ++i) {
            mat(i, j) = dist(rng);
        }
    }
    return mat;
}

SideParams init_side(const ModelConfig& cfg, uint32_t steps, std::mt19937_64& rng) {
    SideParams p;
    p.encoder = glorot(cfg.m, cfg.hash_dim, rng);
    p.encoder_bias = Eigen::VectorXd::Zero(cfg.m);
    p.w = glorot(cfg.n, cfg.m, rng);
    p.w_bias = Eigen::VectorXd::Zero(cfg.n);
    for (uint32_t t = 0; t < steps; ++t) {
        p.b.push_back(glorot(cfg.m, cfg.n, rng));
        p.b_bias.push_back(Eigen::VectorXd::Zero(cfg.m));
        p.r.push_back(glorot(cfg.n, cfg.m, rng));
        p.r_bias.push_back(Eigen::VectorXd::Zero(cfg.n));
    }
    return p;
}

}  // namespace

RbeModelParams RbeModelParams::init(const ModelConfig& config, double gamma,
                                    uint64_t seed) {
    if (config.m == 0 || config.n == 0 || config.hash_dim == 0) {
        throw std::invalid_argument("model init: m, n, hash_dim must be positive");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("model init: gamma must be positive");
    }
    RbeModelParams params;
    params.config = config;
    params.gamma = gamma;
    std::mt19937_64 rng(seed);
    params.query = init_side(config, config.full_precision ? 0 : config.u, rng);
    params.keyword = init_side(config, config.full_precision ? 0 : config.v, rng);
    return params;
}

double binarize(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("binarize: non-finite input");
    }
    return x <= 0.0 ? -1.0 : 1.0;
}

double binarize_surrogate(double x, Estimator estimator, double alpha) {
    switch (estimator) {
        case Estimator::StraightThrough: return x;
        case Estimator::StraightThroughVariant:
            return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x);
        case Estimator::AnnealingTanh: return std::tanh(alpha * x);
    }
    throw std::invalid_argument("unknown estimator value");
}

double binarize_grad(double x, double upstream, Estimator estimator, double alpha) {
    if (!std::isfinite(x) || !std::isfinite(upstream)) {
        throw std::invalid_argument("binarize_grad: non-finite input");
    }
    switch (estimator) {
        case Estimator::StraightThrough: return upstream;
        case Estimator::StraightThroughVariant:
            return std::abs(x) <= 1.0 ? upstream : 0.0;
        case Estimator::AnnealingTanh: {
            const double th = std::tanh(alpha * x);
            return upstream * alpha * (1.0 - th * th);
        }
    }
    throw std::invalid_argument("unknown estimator value");
}

namespace {

Eigen::VectorXd encode_features(const SideParams& side, const ModelConfig& cfg,
                                const SparseVector& features) {
    Eigen::VectorXd pre = cfg.use_bias ? side.encoder_bias
                                       : Eigen::VectorXd::Zero(cfg.m);
    for (const auto& [index, count] : features) {
        if (index >= cfg.hash_dim) {
            throw std::invalid_argument("forward: feature index out of range");
        }
        pre += double(count) * side.encoder.col(index);
    }
    return pre;
}

Eigen::VectorXd apply_rho(const Eigen::VectorXd& pre, ForwardMode mode,
                          Estimator estimator, double alpha) {
    Eigen::VectorXd out(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) {
        out[i] = mode == ForwardMode::Hard
                     ? binarize(pre[i])
                     : binarize_surrogate(pre[i], estimator, alpha);
    }
    return out;
}

}  // namespace

ForwardTrace forward(const RbeModelParams& params, Side side,
                     const SparseVector& features, uint32_t steps,
                     ForwardMode mode, double alpha) {
    const ModelConfig& cfg = params.config;
    const SideParams& p = params.side(side);
    if (cfg.full_precision && steps > 0) {
        throw std::invalid_argument("forward: full-precision model has no steps");
    }
    if (steps > cfg.steps_for(side)) {
        throw std::invalid_argument("forward: steps exceed configured count");
    }

    ForwardTrace trace;
    trace.features = features;
    trace.f_pre = encode_features(p, cfg, features);
    trace.f = trace.f_pre.array().tanh();
    trace.base_pre = p.w * trace.f;
    if (cfg.use_bias) trace.base_pre += p.w_bias;
    if (cfg.full_precision) {
        trace.base = trace.base_pre.array().tanh();
        trace.refined = trace.base;
        return trace;
    }
    trace.base = apply_rho(trace.base_pre, mode, cfg.estimator, alpha);
    trace.refined = trace.base;
    for (uint32_t t = 1; t <= steps; ++t) {
        StepTrace st;
        st.recon_pre = p.b[t - 1] * trace.refined;
        if (cfg.use_bias) st.recon_pre += p.b_bias[t - 1];
        st.recon = st.recon_pre.array().tanh();
        st.resid_pre = p.r[t - 1] * (trace.f - st.recon);
        if (cfg.use_bias) st.resid_pre += p.r_bias[t - 1];
        st.d = apply_rho(st.resid_pre, mode, cfg.estimator, alpha);
        const double weight = cfg.residual_weights ? std::ldexp(1.0, -int(t)) : 1.0;
        trace.refined += weight * st.d;
        trace.steps.push_back(std::move(st));
    }
    return trace;
}

void backward(const RbeModelParams& params, Side side, const ForwardTrace& trace,
              const Eigen::VectorXd& refined_grad, ForwardMode mode, double alpha,
              SideParams& grads) {
    const ModelConfig& cfg = params.config;
    const SideParams& p = params.side(side);
    if (refined_grad.size() != trace.refined.size()) {
        throw std::invalid_argument("backward: gradient size mismatch");
    }

    Eigen::VectorXd g_f = Eigen::VectorXd::Zero(cfg.m);
    Eigen::VectorXd g_b = refined_grad;  // d(loss)/d(b^t), walked down to b^0

    for (size_t t = trace.steps.size(); t >= 1; --t) {
        const StepTrace& st = trace.steps[t - 1];
        const double weight = cfg.residual_weights ? std::ldexp(1.0, -int(t)) : 1.0;
        Eigen::VectorXd g_zr(cfg.n);
        for (uint32_t i = 0; i < cfg.n; ++i) {
            g_zr[i] = binarize_grad(st.resid_pre[i], weight * g_b[i],
                                    cfg.estimator, alpha);
        }
        const Eigen::VectorXd resid_input =
            trace.f - st.recon;  // argument of R^{t-1}
        grads.r[t - 1].noalias() += g_zr * resid_input.transpose();
        if (cfg.use_bias) grads.r_bias[t - 1] += g_zr;
        const Eigen::VectorXd g_resid = p.r[t - 1].transpose() * g_zr;
        g_f += g_resid;
        // Reconstruction branch: f^{t-1} = tanh(B^{t-1} b^{t-1}).
        const Eigen::VectorXd g_zb =
            (-g_resid.array() * (1.0 - st.recon.array().square())).matrix();
        // b^{t-1} is trace.refined minus the planes added at steps >= t; walk
        // the recorded outputs instead of re-deriving it.
        Eigen::VectorXd b_prev = trace.base;
        for (size_t s = 1; s < t; ++s) {
            const double ws = cfg.residual_weights ? std::ldexp(1.0, -int(s)) : 1.0;
            b_prev += ws * trace.steps[s - 1].d;
        }
        grads.b[t - 1].noalias() += g_zb * b_prev.transpose();
        if (cfg.use_bias) grads.b_bias[t - 1] += g_zb;
        g_b += p.b[t - 1].transpose() * g_zb;
    }

    // Base projection.
    Eigen::VectorXd g_zw(cfg.n);
    if (cfg.full_precision) {
        g_zw = (g_b.array() * (1.0 - trace.base.array().square())).matrix();
    } else {
        for (uint32_t i = 0; i < cfg.n; ++i) {
            g_zw[i] = binarize_grad(trace.base_pre[i], g_b[i], cfg.estimator, alpha);
        }
    }
    grads.w.noalias() += g_zw * trace.f.transpose();
    if (cfg.use_bias) grads.w_bias += g_zw;
    g_f += p.w.transpose() * g_zw;

    // Encoder.
    const Eigen::VectorXd g_ze =
        (g_f.array() * (1.0 - trace.f.array().square())).matrix();
    for (const auto& [index, count] : trace.features) {
        grads.encoder.col(index) += double(count) * g_ze;
    }
    if (cfg.use_bias) grads.encoder_bias += g_ze;
}

namespace {

PackedBinaryVector pack_signs(const Eigen::VectorXd& values) {
    PackedBinaryVector v;
    v.dim = uint32_t(values.size());
    v.words.assign(PackedBinaryVector::words_for(v.dim), 0);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values[i] > 0.0) v.words[i / 64] |= uint64_t(1) << (i % 64);
    }
    return v;
}

}  // namespace

RbeEmbedding embed(const RbeModelParams& params, Side side,
                   const SparseVector& features, uint32_t steps) {
    if (params.config.full_precision) {
        throw std::invalid_argument("embed: full-precision model has no binary planes");
    }
    const ForwardTrace trace = forward(params, side, features, steps);
    std::vector<PackedBinaryVector> planes;
    planes.push_back(pack_signs(trace.base));
    for (const StepTrace& st : trace.steps) planes.push_back(pack_signs(st.d));
    return make_embedding(std::move(planes), params.config.residual_weights);
}

RbeEmbedding embed_text(const RbeModelParams& params, const Featurizer& featurizer,
                        Side side, std::string_view text) {
    return embed(params, side, featurizer.featurize(text),
                 params.config.steps_for(side));
}

// --- checkpoint I/O ---------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[4] = {'R', 'B', 'E', 'M'};
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = (v >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(buf), 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = (bits >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(buf[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& mat) {
    std::vector<float> row(size_t(mat.cols()));
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        for (Eigen::Index j = 0; j < mat.cols(); ++j) row[size_t(j)] = float(mat(i, j));
        out.write(reinterpret_cast<const char*>(row.data()),
                  std::streamsize(row.size() * sizeof(float)));
    }
}

void read_matrix(std::istream& in, Eigen::MatrixXd& mat) {
    std::vector<float> row(size_t(mat.cols()));
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                std::streamsize(row.size() * sizeof(float)));
        for (Eigen::Index j = 0; j < mat.cols(); ++j) mat(i, j) = double(row[size_t(j)]);
    }
}

void write_vector(std::ostream& out, const Eigen::VectorXd& vec) {
    Eigen::MatrixXd m = vec.transpose();
    write_matrix(out, m);
}

void read_vector(std::istream& in, Eigen::VectorXd& vec) {
    Eigen::MatrixXd m(1, vec.size());
    read_matrix(in, m);
    vec = m.row(0);
}

void write_side(std::ostream& out, const SideParams& p) {
    write_matrix(out, p.encoder);
    write_vector(out, p.encoder_bias);
    write_matrix(out, p.w);
    write_vector(out, p.w_bias);
    for (size_t t = 0; t < p.b.size(); ++t) {
        write_matrix(out, p.b[t]);
        write_vector(out, p.b_bias[t]);
        write_matrix(out, p.r[t]);
        write_vector(out, p.r_bias[t]);
    }
}

void read_side(std::istream& in, const ModelConfig& cfg, uint32_t steps,
               SideParams& p) {
    p.encoder.resize(cfg.m, cfg.hash_dim);
    p.encoder_bias.resize(cfg.m);
    p.w.resize(cfg.n, cfg.m);
    p.w_bias.resize(cfg.n);
    read_matrix(in, p.encoder);
    read_vector(in, p.encoder_bias);
    read_matrix(in, p.w);
    read_vector(in, p.w_bias);
    p.b.assign(steps, Eigen::MatrixXd(cfg.m, cfg.n));
    p.b_bias.assign(steps, Eigen::VectorXd(cfg.m));
    p.r.assign(steps, Eigen::MatrixXd(cfg.n, cfg.m));
    p.r_bias.assign(steps, Eigen::VectorXd(cfg.n));
    for (uint32_t t = 0; t < steps; ++t) {
        read_matrix(in, p.b[t]);
        read_vector(in, p.b_bias[t]);
        read_matrix(in, p.r[t]);
        read_vector(in, p.r_bias[t]);
    }
}

}  // namespace

void save_checkpoint(const RbeModelParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    }
    const ModelConfig& cfg = params.config;
    out.write(kCheckpointMagic, 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, cfg.m);
    write_u32(out, cfg.n);
    write_u32(out, cfg.u);
    write_u32(out, cfg.v);
    write_u32(out, cfg.hash_dim);
    write_u32(out, uint32_t(cfg.estimator));
    uint32_t flags = 0;
    if (cfg.residual_weights) flags |= 1u;
    if (cfg.use_bias) flags |= 2u;
    if (cfg.full_precision) flags |= 4u;
    write_u32(out, flags);
    write_f64(out, params.gamma);
    write_f64(out, cfg.annealing_slope);
    write_f64(out, cfg.annealing_growth);
    write_side(out, params.query);
    write_side(out, params.keyword);
    if (!out) {
        throw std::runtime_error("failed writing checkpoint: " + path.string());
    }
}

RbeModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open checkpoint: " + path.string());
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw std::runtime_error("not a model checkpoint: " + path.string());
    }
    const uint32_t version = read_u32(in);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version");
    }
    RbeModelParams params;
    ModelConfig& cfg = params.config;
    cfg.m = read_u32(in);
    cfg.n = read_u32(in);
    cfg.u = read_u32(in);
    cfg.v = read_u32(in);
    cfg.hash_dim = read_u32(in);
    cfg.estimator = Estimator(read_u32(in));
    const uint32_t flags = read_u32(in);
    cfg.residual_weights = flags & 1u;
    cfg.use_bias = flags & 2u;
    cfg.full_precision = flags & 4u;
    params.gamma = read_f64(in);
    cfg.annealing_slope = read_f64(in);
    cfg.annealing_growth = read_f64(in);
    read_side(in, cfg, cfg.full_precision ? 0 : cfg.u, params.query);
    read_side(in, cfg, cfg.full_precision ? 0 : cfg.v, params.keyword);
    if (!in) {
        throw std::runtime_error("truncated checkpoint: " + path.string());
    }
    return params;
}

}  // namespace rbe
