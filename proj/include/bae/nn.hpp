#pragma once

// Minimal deterministic dense-network engine: forward pass, backpropagation
// of the squared-L2 loss, Adam with coupled L2 weight decay, and central
// finite-difference gradient verification.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bae/errors.hpp"
#include "bae/random.hpp"

namespace bae {

enum class Activation { Sigmoid, ReLU };

constexpr std::string_view to_string(Activation a) noexcept {
    return a == Activation::Sigmoid ? "sigmoid" : "relu";
}

inline Activation activation_from_string(std::string_view name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "relu") return Activation::ReLU;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

inline double activate(Activation a, double z) noexcept {
    if (a == Activation::ReLU) return z > 0.0 ? z : 0.0;
    return 1.0 / (1.0 + std::exp(-z));
}

/// Derivative of the activation expressed through its output value.
inline double activation_slope(Activation a, double y) noexcept {
    if (a == Activation::ReLU) return y > 0.0 ? 1.0 : 0.0;
    return y * (1.0 - y);
}

/// Fully connected layer. weights[i * out_dim + j] connects input i to output j.
struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights;
    std::vector<double> biases;
    Activation activation = Activation::Sigmoid;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out, Activation act)
        : in_dim(in), out_dim(out), weights(in * out, 0.0), biases(out, 0.0), activation(act) {
        if (in == 0 || out == 0) throw ConfigError("DenseLayer: dimensions must be positive");
    }

    std::size_t parameter_count() const noexcept { return weights.size() + biases.size(); }

    /// Glorot/Xavier uniform weights, zero biases.
    void glorot_init(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
        for (double& w : weights) w = uniform(rng, -limit, limit);
        std::fill(biases.begin(), biases.end(), 0.0);
    }

    void apply(std::span<const double> input, std::span<double> output) const noexcept {
        std::copy(biases.begin(), biases.end(), output.begin());
        for (std::size_t i = 0; i < in_dim; ++i) {
            const double x = input[i];
            const double* w = weights.data() + i * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) output[j] += x * w[j];
        }
        for (double& y : output) y = activate(activation, y);
    }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Per-layer scratch buffers reused across samples.
struct ForwardTrace {
    // outputs[0] is the input, outputs[k + 1] the output of layer k.
    std::vector<std::vector<double>> outputs;
    std::vector<std::vector<double>> deltas;
};

class Network {
public:
    Network() = default;

    explicit Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
        if (layers_.empty()) throw ConfigError("Network: at least one layer is required");
        for (std::size_t k = 1; k < layers_.size(); ++k) {
            if (layers_[k].in_dim != layers_[k - 1].out_dim) {
                throw ConfigError("Network: layer " + std::to_string(k) + " expects " +
                                  std::to_string(layers_[k].in_dim) + " inputs but receives " +
                                  std::to_string(layers_[k - 1].out_dim));
            }
        }
    }

    /// Zero-initialized stack; `sizes` has one more entry than `activations`.
    static Network dense(std::span<const std::size_t> sizes, std::span<const Activation> activations) {
        if (sizes.size() < 2 || activations.size() + 1 != sizes.size()) {
            throw ConfigError("Network::dense: need sizes.size() == activations.size() + 1 >= 2");
        }
        std::vector<DenseLayer> layers;
        layers.reserve(activations.size());
        for (std::size_t k = 0; k < activations.size(); ++k) {
            layers.emplace_back(sizes[k], sizes[k + 1], activations[k]);
        }
        return Network(std::move(layers));
    }

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }

    std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in_dim; }
    std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out_dim; }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.parameter_count();
        return n;
    }

    void glorot_init(Rng& rng) {
        for (auto& l : layers_) l.glorot_init(rng);
    }

    /// Fills `trace.outputs`; returns the final layer output.
    std::span<const double> forward(std::span<const double> input, ForwardTrace& trace) const {
        check_input(input.size());
        prepare(trace);
        std::copy(input.begin(), input.end(), trace.outputs[0].begin());
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            layers_[k].apply(trace.outputs[k], trace.outputs[k + 1]);
        }
        return trace.outputs.back();
    }

    std::vector<double> forward(std::span<const double> input) const {
        ForwardTrace trace;
        const auto out = forward(input, trace);
        return {out.begin(), out.end()};
    }

    /// Flat parameter view in canonical order: per layer, weights then biases.
    std::vector<double> flat_parameters() const {
        std::vector<double> flat;
        flat.reserve(parameter_count());
        for (const auto& l : layers_) {
            flat.insert(flat.end(), l.weights.begin(), l.weights.end());
            flat.insert(flat.end(), l.biases.begin(), l.biases.end());
        }
        return flat;
    }

    void set_flat_parameters(std::span<const double> flat) {
        if (flat.size() != parameter_count()) throw ConfigError("Network: parameter count mismatch");
        auto it = flat.begin();
        for (auto& l : layers_) {
            std::copy_n(it, l.weights.size(), l.weights.begin());
            it += static_cast<std::ptrdiff_t>(l.weights.size());
            std::copy_n(it, l.biases.size(), l.biases.begin());
            it += static_cast<std::ptrdiff_t>(l.biases.size());
        }
    }

    bool all_finite() const noexcept {
        for (const auto& l : layers_) {
            for (double w : l.weights)
                if (!std::isfinite(w)) return false;
            for (double b : l.biases)
                if (!std::isfinite(b)) return false;
        }
        return true;
    }

    friend bool operator==(const Network&, const Network&) = default;

private:
    void check_input(std::size_t n) const {
        if (layers_.empty()) throw ConfigError("Network: no layers");
        if (n != input_dim()) {
            throw ConfigError("Network: input has " + std::to_string(n) + " values, expected " +
                              std::to_string(input_dim()));
        }
    }

    void prepare(ForwardTrace& trace) const {
        if (trace.outputs.size() == layers_.size() + 1 && trace.outputs[0].size() == input_dim() &&
            std::equal(layers_.begin(), layers_.end(), trace.outputs.begin() + 1,
                       [](const DenseLayer& l, const std::vector<double>& o) { return o.size() == l.out_dim; })) {
            return;
        }
        trace.outputs.assign(layers_.size() + 1, {});
        trace.deltas.assign(layers_.size() + 1, {});
        trace.outputs[0].resize(input_dim());
        trace.deltas[0].resize(input_dim());
        for (std::size_t k = 0; k < layers_.size(); ++k) {
            trace.outputs[k + 1].resize(layers_[k].out_dim);
            trace.deltas[k + 1].resize(layers_[k].out_dim);
        }
    }

    std::vector<DenseLayer> layers_;
};

/// Squared L2 distance between output and target.
inline double mse_loss(std::span<const double> output, std::span<const double> target) {
    if (output.size() != target.size()) {
        throw ConfigError("mse_loss: length mismatch (" + std::to_string(output.size()) + " vs " +
                          std::to_string(target.size()) + ")");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double diff = output[i] - target[i];
        sum += diff * diff;
    }
    return sum;
}

struct LayerGradient {
    std::vector<double> weights;
    std::vector<double> biases;
};

/// Gradient set shaped like a Network's parameters.
class Gradients {
public:
    Gradients() = default;
    explicit Gradients(const Network& net) {
        layers_.reserve(net.layers().size());
        for (const auto& l : net.layers()) {
            layers_.push_back({std::vector<double>(l.weights.size(), 0.0),
                               std::vector<double>(l.biases.size(), 0.0)});
        }
    }

    std::vector<LayerGradient>& layers() noexcept { return layers_; }
    const std::vector<LayerGradient>& layers() const noexcept { return layers_; }

    void zero() noexcept {
        for (auto& g : layers_) {
            std::fill(g.weights.begin(), g.weights.end(), 0.0);
            std::fill(g.biases.begin(), g.biases.end(), 0.0);
        }
    }

    std::vector<double> flat() const {
        std::vector<double> out;
        for (const auto& g : layers_) {
            out.insert(out.end(), g.weights.begin(), g.weights.end());
            out.insert(out.end(), g.biases.begin(), g.biases.end());
        }
        return out;
    }

private:
    std::vector<LayerGradient> layers_;
};

/// Backpropagates mse_loss(forward(input), target) and adds `scale` times the
/// gradient into `grads`. Returns the unscaled loss.
inline double accumulate_gradients(const Network& net, std::span<const double> input,
                                   std::span<const double> target, ForwardTrace& trace, Gradients& grads,
                                   double scale = 1.0) {
    const auto output = net.forward(input, trace);
    const double loss = mse_loss(output, target);
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();

    {
        auto& delta = trace.deltas[depth];
        const auto& layer = layers.back();
        for (std::size_t j = 0; j < output.size(); ++j) {
            delta[j] = 2.0 * (output[j] - target[j]) * activation_slope(layer.activation, output[j]);
        }
    }

    for (std::size_t k = depth; k-- > 0;) {
        const auto& layer = layers[k];
        const auto& in = trace.outputs[k];
        const auto& delta = trace.deltas[k + 1];
        auto& g = grads.layers()[k];
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double a = scale * in[i];
            double* gw = g.weights.data() + i * layer.out_dim;
            for (std::size_t j = 0; j < layer.out_dim; ++j) gw[j] += a * delta[j];
        }
        for (std::size_t j = 0; j < layer.out_dim; ++j) g.biases[j] += scale * delta[j];

        if (k == 0) break;
        auto& prev_delta = trace.deltas[k];
        const Activation prev_act = layers[k - 1].activation;
        for (std::size_t i = 0; i < layer.in_dim; ++i) {
            const double* w = layer.weights.data() + i * layer.out_dim;
            double sum = 0.0;
            for (std::size_t j = 0; j < layer.out_dim; ++j) sum += w[j] * delta[j];
            prev_delta[i] = sum * activation_slope(prev_act, in[i]);
        }
    }
    return loss;
}

/// Gradient of mse_loss(forward(input), target) with respect to every parameter.
inline Gradients backward(const Network& net, std::span<const double> input, std::span<const double> target) {
    if (target.size() != net.output_dim()) throw ConfigError("backward: target length mismatch");
    ForwardTrace trace;
    Gradients grads(net);
    accumulate_gradients(net, input, target, trace, grads);
    return grads;
}

/// Central finite-difference estimate of the same gradient, ordered like
/// Network::flat_parameters().
inline std::vector<double> numeric_gradient(const Network& net, std::span<const double> input,
                                            std::span<const double> target, double h = 1e-5) {
    Network probe = net;
    std::vector<double> params = probe.flat_parameters();
    std::vector<double> grad(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        params[p] = saved + h;
        probe.set_flat_parameters(params);
        const double up = mse_loss(probe.forward(input), target);
        params[p] = saved - h;
        probe.set_flat_parameters(params);
        const double down = mse_loss(probe.forward(input), target);
        params[p] = saved;
        grad[p] = (up - down) / (2.0 * h);
    }
    return grad;
}

struct GradientCheckResult {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::size_t failures = 0;
    std::size_t checked = 0;

    bool passed() const noexcept { return failures == 0; }
};

/// Compares backprop against central differences. A parameter passes when its
/// relative error is below `rel_tol` or its absolute error below `abs_floor`.
inline GradientCheckResult gradient_check(const Network& net, std::span<const double> input,
                                          std::span<const double> target, double h = 1e-5,
                                          double rel_tol = 1e-4, double abs_floor = 1e-7) {
    const std::vector<double> analytic = backward(net, input, target).flat();
    const std::vector<double> numeric = numeric_gradient(net, input, target, h);
    GradientCheckResult result;
    result.checked = analytic.size();
    for (std::size_t p = 0; p < analytic.size(); ++p) {
        const double abs_err = std::abs(analytic[p] - numeric[p]);
        const double scale = std::max(std::abs(analytic[p]), std::abs(numeric[p]));
        const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
        result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
        if (abs_err >= abs_floor) result.max_relative_error = std::max(result.max_relative_error, rel_err);
        if (abs_err >= abs_floor && rel_err >= rel_tol) ++result.failures;
    }
    return result;
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step_count = 0;

    AdamState() = default;
    AdamState(std::size_t parameter_count, AdamConfig cfg)
        : config(cfg), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}
};

namespace detail {

inline void adam_block(std::span<double> params, std::span<const double> grads, double* m, double* v,
                       const AdamConfig& cfg, double correction1, double correction2) noexcept {
    for (std::size_t p = 0; p < params.size(); ++p) {
        // Coupled L2 decay: the penalty gradient joins the loss gradient.
        const double g = grads[p] + cfg.weight_decay * params[p];
        m[p] = cfg.beta1 * m[p] + (1.0 - cfg.beta1) * g;
        v[p] = cfg.beta2 * v[p] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[p] / correction1;
        const double v_hat = v[p] / correction2;
        params[p] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace detail

/// One bias-corrected Adam update of a flat parameter block.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
        params.size() != state.second_moment.size()) {
        throw ConfigError("adam_step: parameter, gradient and moment sizes differ");
    }
    ++state.step_count;
    const auto t = static_cast<double>(state.step_count);
    detail::adam_block(params, grads, state.first_moment.data(), state.second_moment.data(), state.config,
                       1.0 - std::pow(state.config.beta1, t), 1.0 - std::pow(state.config.beta2, t));
}

/// One Adam update of every network parameter, in canonical order.
inline void adam_step(Network& net, const Gradients& grads, AdamState& state) {
    if (state.first_moment.size() != net.parameter_count()) {
        throw ConfigError("adam_step: optimizer state does not match network");
    }
    ++state.step_count;
    const auto t = static_cast<double>(state.step_count);
    const double c1 = 1.0 - std::pow(state.config.beta1, t);
    const double c2 = 1.0 - std::pow(state.config.beta2, t);
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
        auto& layer = net.layers()[k];
        const auto& g = grads.layers()[k];
        detail::adam_block(layer.weights, g.weights, m, v, state.config, c1, c2);
        m += layer.weights.size();
        v += layer.weights.size();
        detail::adam_block(layer.biases, g.biases, m, v, state.config, c1, c2);
        m += layer.biases.size();
        v += layer.biases.size();
    }
}

}  // namespace bae
