#pragma once

// Symmetric shrinking autoencoder: architecture sizing, mini-batch Adam
// training with early stopping, and per-instance reconstruction errors.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bae/errors.hpp"
#include "bae/matrix.hpp"
#include "bae/nn.hpp"
#include "bae/random.hpp"
#include "bae/text.hpp"

namespace bae {

/// Depth counts every layer including input and output, so a depth-l
/// autoencoder has l - 1 weight layers and one middle bottleneck.
struct ArchitectureSpec {
    std::size_t input_dim = 1;
    int depth = 3;
    double alpha = 0.5;
    std::size_t min_width = 3;

    void validate() const {
        if (input_dim < 1) throw ConfigError("architecture: input dimension must be positive");
        if (depth < 3 || depth % 2 == 0) {
            throw ConfigError("architecture: depth must be an odd integer >= 3, got " + std::to_string(depth));
        }
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("architecture: alpha must lie in (0, 1)");
        if (min_width < 1) throw ConfigError("architecture: min_width must be positive");
    }

    friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// Encoder widths follow floor(alpha * previous), raised to min_width when
/// smaller; the decoder mirrors the encoder.
inline std::vector<std::size_t> layer_sizes(const ArchitectureSpec& spec) {
    spec.validate();
    const auto depth = static_cast<std::size_t>(spec.depth);
    const std::size_t half = depth / 2;
    std::vector<std::size_t> sizes(depth);
    sizes[0] = spec.input_dim;
    for (std::size_t h = 1; h <= half; ++h) {
        const auto shrunk = static_cast<std::size_t>(std::floor(spec.alpha * static_cast<double>(sizes[h - 1])));
        sizes[h] = shrunk < spec.min_width ? spec.min_width : shrunk;
    }
    for (std::size_t h = half + 1; h < depth; ++h) sizes[h] = sizes[depth - 1 - h];
    return sizes;
}

/// Sigmoid on the first hidden layer and the output layer, ReLU elsewhere.
inline std::vector<Activation> layer_activations(int depth) {
    if (depth < 3 || depth % 2 == 0) throw ConfigError("depth must be an odd integer >= 3");
    std::vector<Activation> acts(static_cast<std::size_t>(depth - 1), Activation::ReLU);
    acts.front() = Activation::Sigmoid;
    acts.back() = Activation::Sigmoid;
    return acts;
}

/// Anything that maps a row to its reconstruction.
template <typename M>
concept Reconstructor = requires(const M& m, std::span<const double> x) {
    { m.input_dim() } -> std::convertible_to<std::size_t>;
    { m.reconstruct(x) } -> std::convertible_to<std::vector<double>>;
};

class AutoencoderModel {
public:
    AutoencoderModel() = default;
    AutoencoderModel(ArchitectureSpec spec, Network net) : spec_(spec), net_(std::move(net)) {
        const auto sizes = layer_sizes(spec_);
        if (net_.layers().size() + 1 != sizes.size()) throw ConfigError("autoencoder: depth does not match network");
        for (std::size_t k = 0; k < net_.layers().size(); ++k) {
            if (net_.layers()[k].in_dim != sizes[k] || net_.layers()[k].out_dim != sizes[k + 1]) {
                throw ConfigError("autoencoder: layer sizes do not match architecture");
            }
        }
    }

    const ArchitectureSpec& spec() const noexcept { return spec_; }
    const Network& network() const noexcept { return net_; }
    Network& network() noexcept { return net_; }

    std::size_t input_dim() const noexcept { return spec_.input_dim; }
    std::vector<std::size_t> sizes() const { return layer_sizes(spec_); }

    std::vector<double> reconstruct(std::span<const double> x) const { return net_.forward(x); }

    friend bool operator==(const AutoencoderModel&, const AutoencoderModel&) = default;

private:
    ArchitectureSpec spec_;
    Network net_;
};

/// Dense layers sized by layer_sizes, Glorot-initialized from `init_seed`.
inline AutoencoderModel build_autoencoder(const ArchitectureSpec& spec, std::uint64_t init_seed) {
    const auto sizes = layer_sizes(spec);
    const auto acts = layer_activations(spec.depth);
    Network net = Network::dense(sizes, acts);
    Rng rng(init_seed);
    net.glorot_init(rng);
    return {spec, std::move(net)};
}

struct TrainConfig {
    int max_epochs = 50;
    double convergence_tol = 1e-4;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;  // drives the per-epoch shuffle
    AdamConfig adam;

    void validate() const {
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (!(convergence_tol > 0.0)) throw ConfigError("train: convergence_tol must be > 0");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (!(adam.learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
        if (adam.weight_decay < 0.0) throw ConfigError("train: weight decay must be >= 0");
    }
};

struct TrainResult {
    std::vector<double> loss_trace;  // epoch-mean per-sample squared-L2 loss
    bool converged = false;

    std::size_t epochs() const noexcept { return loss_trace.size(); }
};

/// True once the last two epoch means differ by less than `tol`.
inline bool should_stop_early(std::span<const double> loss_trace, double tol) noexcept {
    const std::size_t t = loss_trace.size();
    return t >= 2 && std::abs(loss_trace[t - 1] - loss_trace[t - 2]) < tol;
}

/// Trains on the rows listed in `rows` (duplicates allowed). Each epoch visits
/// the list in a freshly shuffled order in batches of min(batch_size, rows).
inline TrainResult train(AutoencoderModel& model, const DataMatrix& data, std::span<const std::size_t> rows,
                         const TrainConfig& config) {
    config.validate();
    if (rows.empty() || data.empty()) throw InputError("train: empty dataset");
    if (data.cols() != model.input_dim()) {
        throw ConfigError("train: data has " + std::to_string(data.cols()) + " columns, model expects " +
                          std::to_string(model.input_dim()));
    }
    for (std::size_t r : rows) {
        if (r >= data.rows()) throw InputError("train: row index out of range");
    }

    Network& net = model.network();
    AdamState adam(net.parameter_count(), config.adam);
    Gradients grads(net);
    ForwardTrace trace;
    Rng shuffle_rng(config.seed);
    std::vector<std::size_t> order(rows.begin(), rows.end());
    const std::size_t batch = std::min(config.batch_size, order.size());

    TrainResult result;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        shuffle(std::span<std::size_t>(order), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(start + batch, order.size());
            const double scale = 1.0 / static_cast<double>(stop - start);
            grads.zero();
            for (std::size_t k = start; k < stop; ++k) {
                const auto x = data.row(order[k]);
                epoch_loss += accumulate_gradients(net, x, x, trace, grads, scale);
            }
            adam_step(net, grads, adam);
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(order.size()));
        if (should_stop_early(result.loss_trace, config.convergence_tol)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

inline TrainResult train(AutoencoderModel& model, const DataMatrix& data, const TrainConfig& config) {
    std::vector<std::size_t> rows(data.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return train(model, data, rows, config);
}

/// Squared L2 distance between every row and its reconstruction.
template <Reconstructor M>
std::vector<double> reconstruction_errors(const M& model, const DataMatrix& data) {
    if (data.cols() != model.input_dim()) {
        throw ConfigError("reconstruction_errors: data has " + std::to_string(data.cols()) +
                          " columns, model expects " + std::to_string(model.input_dim()));
    }
    std::vector<double> errors(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        const std::vector<double> y = model.reconstruct(data.row(i));
        errors[i] = mse_loss(y, data.row(i));
    }
    return errors;
}

inline std::vector<double> reconstruction_errors(const AutoencoderModel& model, const DataMatrix& data) {
    if (data.cols() != model.input_dim()) {
        throw ConfigError("reconstruction_errors: data has " + std::to_string(data.cols()) +
                          " columns, model expects " + std::to_string(model.input_dim()));
    }
    ForwardTrace trace;
    std::vector<double> errors(data.rows());
    for (std::size_t i = 0; i < data.rows(); ++i) {
        errors[i] = mse_loss(model.network().forward(data.row(i), trace), data.row(i));
    }
    return errors;
}

// Model file format (text, version 1):
//
//   bae-autoencoder 1
//   input_dim <d0> depth <l> alpha <a> min_width <w>
//   layer <in> <out> <activation>      (repeated l - 1 times, each followed by)
//   <in*out weights, row-major>
//   <out biases>
//
// Numbers use shortest round-trip decimal text, so save/load is bit-exact.
inline constexpr int kModelFormatVersion = 1;

inline void save_model(const AutoencoderModel& model, std::ostream& out) {
    const auto& s = model.spec();
    out << "bae-autoencoder " << kModelFormatVersion << '\n';
    out << "input_dim " << s.input_dim << " depth " << s.depth << " alpha " << to_text(s.alpha) << " min_width "
        << s.min_width << '\n';
    for (const auto& layer : model.network().layers()) {
        out << "layer " << layer.in_dim << ' ' << layer.out_dim << ' ' << to_string(layer.activation) << '\n';
        for (std::size_t p = 0; p < layer.weights.size(); ++p) {
            out << (p ? " " : "") << to_text(layer.weights[p]);
        }
        out << '\n';
        for (std::size_t p = 0; p < layer.biases.size(); ++p) {
            out << (p ? " " : "") << to_text(layer.biases[p]);
        }
        out << '\n';
    }
}

inline AutoencoderModel load_model(std::istream& in) {
    auto expect = [&](const char* keyword) {
        std::string token;
        if (!(in >> token) || token != keyword) {
            throw IngestError(std::string("model file: expected '") + keyword + "', got '" + token + "'");
        }
    };
    auto read_double = [&]() {
        std::string token;
        if (!(in >> token)) throw IngestError("model file: truncated");
        const auto v = parse_double(token);
        if (!v) throw IngestError("model file: bad number '" + token + "'");
        return *v;
    };

    expect("bae-autoencoder");
    int version = 0;
    if (!(in >> version) || version != kModelFormatVersion) {
        throw IngestError("model file: unsupported format version " + std::to_string(version));
    }
    ArchitectureSpec spec;
    expect("input_dim");
    in >> spec.input_dim;
    expect("depth");
    in >> spec.depth;
    expect("alpha");
    spec.alpha = read_double();
    expect("min_width");
    in >> spec.min_width;
    if (!in) throw IngestError("model file: bad header");
    spec.validate();

    std::vector<DenseLayer> layers;
    for (int k = 0; k + 1 < spec.depth; ++k) {
        expect("layer");
        std::size_t in_dim = 0;
        std::size_t out_dim = 0;
        std::string act;
        if (!(in >> in_dim >> out_dim >> act)) throw IngestError("model file: bad layer header");
        DenseLayer layer(in_dim, out_dim, activation_from_string(act));
        for (double& w : layer.weights) w = read_double();
        for (double& b : layer.biases) b = read_double();
        layers.push_back(std::move(layer));
    }
    return {spec, Network(std::move(layers))};
}

inline void save_model(const AutoencoderModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write model file '" + path + "'");
    save_model(model, out);
}

inline AutoencoderModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open model file '" + path + "'");
    return load_model(in);
}

}  // namespace bae
