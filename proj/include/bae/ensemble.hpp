#pragma once

// Boosting-based autoencoder ensemble. Each iteration trains a component on a
// sample drawn from the original data with probability inversely
// proportional to the previous component's reconstruction error; the final
// score is an error-weighted consensus of every component but the first.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bae/autoencoder.hpp"
#include "bae/errors.hpp"
#include "bae/matrix.hpp"
#include "bae/parallel.hpp"
#include "bae/random.hpp"

namespace bae {

/// Errors are floored to this value before any inversion.
inline constexpr double kErrorFloor = 1e-12;

/// Slack allowed when checking that data lies in [0, 1].
inline constexpr double kNormalizedSlack = 1e-9;

struct SamplingDistribution {
    std::vector<double> probabilities;

    std::size_t size() const noexcept { return probabilities.size(); }
};

namespace detail {

inline std::vector<double> normalized_inverses(std::span<const double> values) {
    std::vector<double> inv(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0) {
            throw InputError("expected finite non-negative values, got " + std::to_string(values[i]));
        }
        inv[i] = 1.0 / std::max(values[i], kErrorFloor);
    }
    const double total = std::accumulate(inv.begin(), inv.end(), 0.0);
    for (double& p : inv) p /= total;
    return inv;
}

}  // namespace detail

/// P_x proportional to 1 / e_x.
inline SamplingDistribution sampling_distribution(std::span<const double> errors) {
    if (errors.empty()) throw InputError("sampling_distribution: no errors given");
    return {detail::normalized_inverses(errors)};
}

/// `count` indices drawn i.i.d. with replacement from `dist` by inverse CDF.
inline std::vector<std::size_t> resample(const SamplingDistribution& dist, std::size_t count, Rng& rng) {
    std::vector<double> cumulative(dist.size());
    std::partial_sum(dist.probabilities.begin(), dist.probabilities.end(), cumulative.begin());
    const double total = cumulative.empty() ? 0.0 : cumulative.back();
    if (!(total > 0.0)) throw InputError("resample: distribution has no mass");
    std::vector<std::size_t> indices(count);
    for (auto& idx : indices) {
        const double u = uniform01(rng) * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        idx = std::min(static_cast<std::size_t>(it - cumulative.begin()), dist.size() - 1);
    }
    return indices;
}

/// Rows of `data` are the sampling support; the draw count equals the row count.
inline std::vector<std::size_t> resample(const DataMatrix& data, const SamplingDistribution& dist, Rng& rng) {
    if (dist.size() != data.rows()) throw ConfigError("resample: distribution does not cover the data rows");
    return resample(dist, dist.size(), rng);
}

/// w_i proportional to 1 / (error sum of component i over its own sample).
/// Takes the sums of components 1..m-1.
inline std::vector<double> consensus_weights(std::span<const double> sample_error_sums) {
    if (sample_error_sums.empty()) {
        throw ConfigError("consensus_weights: need at least one component after the first (m >= 2)");
    }
    return detail::normalized_inverses(sample_error_sums);
}

/// Weighted sum of per-component error vectors.
inline std::vector<double> consensus_scores(std::span<const double> weights,
                                            std::span<const std::vector<double>> component_errors) {
    if (weights.size() != component_errors.size()) {
        throw std::logic_error("consensus_scores: weight count does not match component count");
    }
    if (component_errors.empty()) return {};
    const std::size_t n = component_errors.front().size();
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (component_errors[i].size() != n) throw std::logic_error("consensus_scores: error vector length mismatch");
        for (std::size_t x = 0; x < n; ++x) scores[x] += weights[i] * component_errors[i][x];
    }
    return scores;
}

struct Component {
    AutoencoderModel model;
    std::vector<std::size_t> sample_indices;  // into X0; duplicates allowed
    std::vector<double> errors;               // over every row of X0
    double sample_error_sum = 0.0;            // over sample_indices, per occurrence
    TrainResult training;
};

struct EnsembleState {
    std::vector<Component> components;
    std::vector<double> weights;  // for components 1..m-1

    std::size_t size() const noexcept { return components.size(); }
};

/// Consensus of components 1..m-1; component 0 never contributes.
inline std::vector<double> consensus_scores(const EnsembleState& state) {
    if (state.components.size() < 2) throw std::logic_error("consensus_scores: ensemble needs m >= 2");
    if (state.weights.size() + 1 != state.components.size()) {
        throw std::logic_error("consensus_scores: weights must cover components 1..m-1");
    }
    std::vector<std::vector<double>> errors;
    errors.reserve(state.components.size() - 1);
    for (std::size_t i = 1; i < state.components.size(); ++i) errors.push_back(state.components[i].errors);
    return consensus_scores(state.weights, errors);
}

/// Mean over components 1..m-1 of the sample reconstruction-error sum; the
/// depth-selection objective.
inline double average_sample_error(const EnsembleState& state) {
    if (state.components.size() < 2) throw std::logic_error("average_sample_error: ensemble needs m >= 2");
    double total = 0.0;
    for (std::size_t i = 1; i < state.components.size(); ++i) total += state.components[i].sample_error_sum;
    return total / static_cast<double>(state.components.size() - 1);
}

struct BaeConfig {
    std::size_t ensemble_size = 20;
    int depth = 3;
    double alpha = 0.5;
    TrainConfig train;
    std::uint64_t seed = 0;

    ArchitectureSpec architecture(std::size_t input_dim) const { return {input_dim, depth, alpha, 3}; }
};

struct BaeResult {
    EnsembleState state;
    std::vector<double> scores;
    int depth = 0;
    double average_sample_error = 0.0;
};

/// Throws unless every entry is finite and within [0, 1] up to kNormalizedSlack.
inline void require_normalized(const DataMatrix& data) {
    if (data.empty() || data.cols() == 0) throw InputError("dataset is empty");
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < data.cols(); ++j) {
            const double v = data(i, j);
            if (!std::isfinite(v) || v < -kNormalizedSlack || v > 1.0 + kNormalizedSlack) {
                throw InputError("data is not normalized to [0, 1]: entry (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ") = " + std::to_string(v));
            }
        }
    }
}

/// Trains the component of boosting iteration `iteration` on `rows` of X0.
/// Initialization and shuffling use that iteration's own RNG sub-streams.
inline Component train_component(const DataMatrix& x0, std::vector<std::size_t> rows, const BaeConfig& config,
                                 std::size_t iteration) {
    Component c;
    c.model = build_autoencoder(config.architecture(x0.cols()), derive_seed(config.seed, Stream::Init, iteration));
    TrainConfig tc = config.train;
    tc.seed = derive_seed(config.seed, Stream::Shuffle, iteration);
    c.training = train(c.model, x0, rows, tc);
    c.errors = reconstruction_errors(c.model, x0);
    c.sample_indices = std::move(rows);
    c.sample_error_sum = 0.0;
    for (std::size_t r : c.sample_indices) c.sample_error_sum += c.errors[r];
    return c;
}

/// The full boosting loop followed by the consensus phase.
inline BaeResult run_bae(const DataMatrix& x0, const BaeConfig& config) {
    if (config.ensemble_size < 2) throw InputError("run_bae: ensemble size must be >= 2");
    require_normalized(x0);
    config.architecture(x0.cols()).validate();
    config.train.validate();

    const std::size_t n = x0.rows();
    BaeResult result;
    result.depth = config.depth;
    auto& components = result.state.components;
    components.reserve(config.ensemble_size);

    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (std::size_t i = 0; i < config.ensemble_size; ++i) {
        components.push_back(train_component(x0, std::move(rows), config, i));
        if (i + 1 < config.ensemble_size) {
            const auto dist = sampling_distribution(components.back().errors);
            Rng rng(derive_seed(config.seed, Stream::Resample, i + 1));
            rows = resample(x0, dist, rng);
        }
    }

    std::vector<double> sums;
    sums.reserve(components.size() - 1);
    for (std::size_t i = 1; i < components.size(); ++i) sums.push_back(components[i].sample_error_sum);
    result.state.weights = consensus_weights(sums);
    result.scores = consensus_scores(result.state);
    result.average_sample_error = average_sample_error(result.state);
    return result;
}

/// Depth with the smallest recorded error; ties go to the smallest depth.
inline int argmin_depth(const std::map<int, double>& depth_errors) {
    if (depth_errors.empty()) throw ConfigError("select_depth: no depth candidates");
    int best = depth_errors.begin()->first;
    double best_error = depth_errors.begin()->second;
    for (const auto& [depth, error] : depth_errors) {
        if (error < best_error) {
            best = depth;
            best_error = error;
        }
    }
    return best;
}

struct DepthSelection {
    int chosen_depth = 0;
    std::map<int, double> depth_errors;  // average sample reconstruction error per depth
    std::map<int, BaeResult> runs;

    const BaeResult& chosen() const { return runs.at(chosen_depth); }
};

/// Runs the ensemble once per candidate depth and keeps the depth whose
/// components reconstruct their own samples best on average.
inline DepthSelection select_depth(const DataMatrix& x0, const BaeConfig& config, std::span<const int> candidates,
                                   std::size_t workers = 1) {
    if (candidates.empty()) throw ConfigError("select_depth: empty depth candidate set");
    std::vector<int> depths(candidates.begin(), candidates.end());
    std::sort(depths.begin(), depths.end());
    depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
    for (int d : depths) {
        if (d < 3 || d % 2 == 0) throw ConfigError("select_depth: depth " + std::to_string(d) + " is not odd >= 3");
    }

    std::vector<BaeResult> results(depths.size());
    parallel_for(depths.size(), workers, [&](std::size_t k) {
        BaeConfig c = config;
        c.depth = depths[k];
        results[k] = run_bae(x0, c);
    });

    DepthSelection sel;
    for (std::size_t k = 0; k < depths.size(); ++k) {
        sel.depth_errors[depths[k]] = results[k].average_sample_error;
        sel.runs.emplace(depths[k], std::move(results[k]));
    }
    sel.chosen_depth = argmin_depth(sel.depth_errors);
    return sel;
}

}  // namespace bae
