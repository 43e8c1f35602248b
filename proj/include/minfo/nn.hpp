#pragma once
// Minimal dense feedforward engine in double precision: dense layers with
// ReLU / sigmoid / softplus / linear activations, inverted dropout after the
// first hidden layer, affine-free batch normalization on the output, exact
// reverse-mode gradients, and Adam with bias correction. All randomness is
// seeded; (spec, seed, data) determine every result bit-for-bit on one
// platform.

#include "minfo/common.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace minfo::nn {

enum class Activation { Linear, ReLU, Sigmoid, Softplus };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::ReLU: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softplus: return "softplus";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "relu") return Activation::ReLU;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softplus") return Activation::Softplus;
    throw std::invalid_argument("unknown activation: " + s);
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow; dDIME heads see large pre-activations.
inline double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline void apply_activation(Activation a, Matrix& z) {
    switch (a) {
        case Activation::Linear:
            break;
        case Activation::ReLU:
            z = z.cwiseMax(0.0);
            break;
        case Activation::Sigmoid:
            z = z.unaryExpr([](double v) { return sigmoid(v); });
            break;
        case Activation::Softplus:
            z = z.unaryExpr([](double v) { return softplus(v); });
            break;
    }
}

// Derivative w.r.t. the pre-activation. ReLU uses subgradient 0 at exactly 0.
inline Matrix activation_grad(Activation a, const Matrix& z) {
    switch (a) {
        case Activation::Linear:
            return Matrix::Ones(z.rows(), z.cols());
        case Activation::ReLU:
            return (z.array() > 0.0).cast<double>();
        case Activation::Sigmoid:
            return z.unaryExpr([](double v) {
                const double s = sigmoid(v);
                return s * (1.0 - s);
            });
        case Activation::Softplus:
            return z.unaryExpr([](double v) { return sigmoid(v); });
    }
    return Matrix();
}

// Layer stack: input -> dense/act (+ dropout after the first hidden layer in
// train mode) -> ... -> dense -> output activation -> optional batchnorm.
struct MlpSpec {
    int input_dim = 1;
    std::vector<int> hidden_dims;
    int output_dim = 1;
    Activation hidden_activation = Activation::ReLU;
    Activation output_activation = Activation::Linear;
    double dropout_rate = 0.0;      // applied after the first hidden layer only
    bool output_batchnorm = false;  // affine-free; pins per-dimension power near 1

    void validate() const {
        if (input_dim < 1) throw std::invalid_argument("MlpSpec: input_dim must be >= 1");
        if (output_dim < 1) throw std::invalid_argument("MlpSpec: output_dim must be >= 1");
        if (hidden_dims.empty()) throw std::invalid_argument("MlpSpec: hidden_dims must be non-empty");
        for (int h : hidden_dims)
            if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw std::invalid_argument("MlpSpec: dropout_rate must be in [0,1)");
    }

    int num_layers() const { return static_cast<int>(hidden_dims.size()) + 1; }

    // (out, in) per dense layer.
    std::vector<std::pair<int, int>> layer_shapes() const {
        std::vector<std::pair<int, int>> shapes;
        int in = input_dim;
        for (int h : hidden_dims) {
            shapes.emplace_back(h, in);
            in = h;
        }
        shapes.emplace_back(output_dim, in);
        return shapes;
    }
};

struct AdamConfig {
    double learning_rate = 0.002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("AdamConfig: learning_rate must be > 0");
        if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("AdamConfig: beta1 must be in (0,1)");
        if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("AdamConfig: beta2 must be in (0,1)");
        if (!(epsilon > 0.0)) throw std::invalid_argument("AdamConfig: epsilon must be > 0");
    }
};

inline constexpr double kBatchnormEps = 1e-8;
inline constexpr double kBatchnormMomentum = 0.1;

struct MlpModel {
    MlpSpec spec;
    std::vector<Matrix> weights;  // (out x in) per layer
    std::vector<Vector> biases;

    // Batchnorm running statistics (population variance), output layer only.
    Vector bn_running_mean;
    Vector bn_running_var;

    // Adam accumulators.
    std::vector<Matrix> adam_m_w, adam_v_w;
    std::vector<Vector> adam_m_b, adam_v_b;
    std::int64_t adam_step_count = 0;

    std::int64_t update_count = 0;
    // Set once a non-finite gradient or parameter shows up; a failed model is
    // never updated again and is counted as a training failure downstream.
    bool failed = false;

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
        for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
        return n;
    }

    bool parameters_finite() const {
        for (const auto& w : weights)
            if (!w.allFinite()) return false;
        for (const auto& b : biases)
            if (!b.allFinite()) return false;
        return true;
    }
};

// Fan-in-scaled uniform initialization: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// filled row-major from a single mt19937_64 stream. Identical seed gives a
// bit-identical model.
inline MlpModel mlp_init(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    MlpModel m;
    m.spec = spec;
    std::mt19937_64 rng(seed);
    for (auto [out, in] : spec.layer_shapes()) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix w(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) w(r, c) = u(rng);
        Vector b(out);
        for (int r = 0; r < out; ++r) b(r) = u(rng);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
        m.adam_m_w.emplace_back(Matrix::Zero(out, in));
        m.adam_v_w.emplace_back(Matrix::Zero(out, in));
        m.adam_m_b.emplace_back(Vector::Zero(out));
        m.adam_v_b.emplace_back(Vector::Zero(out));
    }
    if (spec.output_batchnorm) {
        m.bn_running_mean = Vector::Zero(spec.output_dim);
        m.bn_running_var = Vector::Ones(spec.output_dim);
    }
    return m;
}

struct ForwardCache {
    bool train_mode = false;
    std::vector<Matrix> layer_inputs;  // input seen by dense layer l
    std::vector<Matrix> pre_acts;      // z_l before the layer's activation
    Matrix dropout_mask;               // empty unless dropout was applied
    // Batchnorm internals for backward.
    Matrix bn_xhat;         // train mode
    RowVector bn_inv_std;   // train: batch; eval: running
};

namespace detail {

inline Matrix dropout_mask(int rows, int cols, double rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    Matrix mask(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) mask(r, c) = keep(rng) ? scale : 0.0;
    return mask;
}

}  // namespace detail

// Runs the layer stack on a batch (rows = samples). In train mode dropout is
// active (inverted scaling) and batchnorm uses batch statistics, updating the
// model's running statistics; in eval mode dropout is the identity and
// batchnorm uses running statistics. Non-finite outputs are returned as-is,
// never clamped; failure accounting happens at the estimator level.
inline std::pair<Matrix, ForwardCache> forward(MlpModel& model, const Matrix& X,
                                               bool train_mode, std::uint64_t seed) {
    const MlpSpec& spec = model.spec;
    if (X.cols() != spec.input_dim)
        throw std::invalid_argument("forward: input width does not match spec.input_dim");
    if (X.rows() == 0) throw std::invalid_argument("forward: empty batch");

    const int L = spec.num_layers();
    ForwardCache cache;
    cache.train_mode = train_mode;
    cache.layer_inputs.reserve(L);
    cache.pre_acts.reserve(L);

    Matrix a = X;
    for (int l = 0; l < L; ++l) {
        cache.layer_inputs.push_back(a);
        Matrix z(a.rows(), model.weights[l].rows());
        z.noalias() = a * model.weights[l].transpose();
        z.rowwise() += model.biases[l].transpose();
        cache.pre_acts.push_back(z);
        if (l < L - 1) {
            apply_activation(spec.hidden_activation, z);
            if (l == 0 && spec.dropout_rate > 0.0 && train_mode) {
                cache.dropout_mask = detail::dropout_mask(
                    static_cast<int>(z.rows()), static_cast<int>(z.cols()),
                    spec.dropout_rate, seed);
                z.array() *= cache.dropout_mask.array();
            }
            a = std::move(z);
        } else {
            apply_activation(spec.output_activation, z);
            if (spec.output_batchnorm) {
                if (train_mode) {
                    RowVector mu = z.colwise().mean();
                    Matrix centered = z.rowwise() - mu;
                    RowVector var = centered.array().square().matrix().colwise().mean();
                    cache.bn_inv_std = (var.array() + kBatchnormEps).sqrt().inverse();
                    cache.bn_xhat = centered * cache.bn_inv_std.asDiagonal();
                    model.bn_running_mean =
                        (1.0 - kBatchnormMomentum) * model.bn_running_mean + kBatchnormMomentum * mu.transpose();
                    model.bn_running_var =
                        (1.0 - kBatchnormMomentum) * model.bn_running_var + kBatchnormMomentum * var.transpose();
                    a = cache.bn_xhat;
                } else {
                    cache.bn_inv_std =
                        (model.bn_running_var.transpose().array() + kBatchnormEps).sqrt().inverse();
                    a = (z.rowwise() - model.bn_running_mean.transpose()) * cache.bn_inv_std.asDiagonal();
                }
            } else {
                a = std::move(z);
            }
        }
    }
    return {std::move(a), std::move(cache)};
}

// Eval-mode forward without touching model state (eval writes nothing).
inline Matrix predict(const MlpModel& model, const Matrix& X) {
    return forward(const_cast<MlpModel&>(model), X, /*train_mode=*/false, 0).first;
}

struct Gradients {
    std::vector<Matrix> weight_grads;
    std::vector<Vector> bias_grads;
    Matrix input_grads;  // dL/dX, for generator training through the channel

    bool finite() const {
        for (const auto& g : weight_grads)
            if (!g.allFinite()) return false;
        for (const auto& g : bias_grads)
            if (!g.allFinite()) return false;
        return true;
    }
};

// Exact reverse-mode gradients of the scalar loss whose per-output gradients
// are output_grads (the caller bakes the 1/batch factor into output_grads).
inline Gradients backward(const MlpModel& model, const ForwardCache& cache,
                          const Matrix& output_grads) {
    const MlpSpec& spec = model.spec;
    const int L = spec.num_layers();
    if (static_cast<int>(cache.pre_acts.size()) != L)
        throw std::invalid_argument("backward: cache does not match model");
    if (output_grads.rows() != cache.pre_acts.back().rows() ||
        output_grads.cols() != cache.pre_acts.back().cols())
        throw std::invalid_argument("backward: output_grads shape mismatch");

    Gradients g;
    g.weight_grads.resize(L);
    g.bias_grads.resize(L);

    Matrix d = output_grads;
    if (spec.output_batchnorm) {
        if (cache.train_mode) {
            const Matrix& xh = cache.bn_xhat;
            RowVector mean_d = d.colwise().mean();
            RowVector mean_dxh = (d.array() * xh.array()).matrix().colwise().mean();
            Matrix t = d.rowwise() - mean_d;
            t.noalias() -= xh * mean_dxh.asDiagonal();
            d = t * cache.bn_inv_std.asDiagonal();
        } else {
            d = d * cache.bn_inv_std.asDiagonal();
        }
    }
    d.array() *= activation_grad(spec.output_activation, cache.pre_acts[L - 1]).array();

    for (int l = L - 1; l >= 0; --l) {
        g.weight_grads[l].noalias() = d.transpose() * cache.layer_inputs[l];
        g.bias_grads[l] = d.colwise().sum();
        if (l > 0) {
            Matrix da(d.rows(), model.weights[l].cols());
            da.noalias() = d * model.weights[l];
            if (l - 1 == 0 && cache.dropout_mask.size() > 0)
                da.array() *= cache.dropout_mask.array();
            d = da.array() * activation_grad(spec.hidden_activation, cache.pre_acts[l - 1]).array();
        } else {
            g.input_grads.noalias() = d * model.weights[0];
        }
    }
    return g;
}

// Standard Adam with bias correction. Non-finite gradients mark the model
// FAILED without writing parameters or moments; so does a non-finite
// parameter after the update.
inline void adam_step(MlpModel& model, const Gradients& grads, const AdamConfig& cfg) {
    cfg.validate();
    if (model.failed) return;
    if (grads.weight_grads.size() != model.weights.size() ||
        grads.bias_grads.size() != model.biases.size())
        throw std::invalid_argument("adam_step: gradient layout mismatch");
    if (!grads.finite()) {
        model.failed = true;
        return;
    }

    const std::int64_t t = ++model.adam_step_count;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        auto& mw = model.adam_m_w[l];
        auto& vw = model.adam_v_w[l];
        mw = cfg.beta1 * mw + (1.0 - cfg.beta1) * grads.weight_grads[l];
        vw = cfg.beta2 * vw + (1.0 - cfg.beta2) * grads.weight_grads[l].array().square().matrix();
        model.weights[l].array() -=
            cfg.learning_rate * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + cfg.epsilon);

        auto& mb = model.adam_m_b[l];
        auto& vb = model.adam_v_b[l];
        mb = cfg.beta1 * mb + (1.0 - cfg.beta1) * grads.bias_grads[l];
        vb = cfg.beta2 * vb + (1.0 - cfg.beta2) * grads.bias_grads[l].array().square().matrix();
        model.biases[l].array() -=
            cfg.learning_rate * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + cfg.epsilon);
    }
    ++model.update_count;
    if (!model.parameters_finite()) model.failed = true;
}

// Central-finite-difference check of backward(). loss_value maps a batch of
// outputs to a scalar, loss_grad to the per-output gradients of that scalar.
// Returns the worst relative error over all parameters. The model is taken by
// value: probing perturbs parameters (and batchnorm running stats) locally.
template <class LossValue, class LossGrad>
double grad_check(MlpModel model, const Matrix& X, LossValue&& loss_value,
                  LossGrad&& loss_grad, bool train_mode = false,
                  std::uint64_t seed = 0, double fd_step = 1e-5) {
    if (model.parameter_count() == 0)
        throw std::invalid_argument("grad_check: model has no parameters");
    if (X.rows() == 0) throw std::invalid_argument("grad_check: empty batch");

    auto [y, cache] = forward(model, X, train_mode, seed);
    Matrix dy = loss_grad(y);
    Gradients analytic = backward(model, cache, dy);

    auto loss_at = [&]() {
        auto [out, c] = forward(model, X, train_mode, seed);
        (void)c;
        return loss_value(out);
    };

    double worst = 0.0;
    auto probe = [&](double& param, double analytic_g) {
        const double saved = param;
        param = saved + fd_step;
        const double lp = loss_at();
        param = saved - fd_step;
        const double lm = loss_at();
        param = saved;
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double denom = std::max({std::abs(fd), std::abs(analytic_g), 1e-6});
        worst = std::max(worst, std::abs(fd - analytic_g) / denom);
    };

    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        Matrix& w = model.weights[l];
        for (int r = 0; r < w.rows(); ++r)
            for (int c = 0; c < w.cols(); ++c) probe(w(r, c), analytic.weight_grads[l](r, c));
        Vector& b = model.biases[l];
        for (int r = 0; r < b.size(); ++r) probe(b(r), analytic.bias_grads[l](r));
    }
    return worst;
}

}  // namespace minfo::nn
