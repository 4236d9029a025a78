#pragma once

// Evaluation: average precision, Kendall tau between outlier rankings,
// ensemble diversity, and training-sample outlier ratios.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bae/ensemble.hpp"
#include "bae/errors.hpp"

namespace bae {

/// 1 marks an outlier, 0 an inlier.
using Labels = std::vector<int>;

struct LabeledScores {
    std::vector<double> scores;
    Labels labels;
};

/// Instance indices by descending score; equal scores keep ascending index.
struct RankingList {
    std::vector<std::size_t> order;

    std::size_t size() const noexcept { return order.size(); }
};

inline RankingList ranking(std::span<const double> scores) {
    RankingList r;
    r.order.resize(scores.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return r;
}

/// Un-interpolated average precision: mean of precision@k over the ranks k
/// of the positives.
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw MetricError("average_precision: scores and labels differ in length");
    std::size_t positives = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw MetricError("average_precision: labels must be 0 or 1");
        positives += static_cast<std::size_t>(l);
    }
    if (positives == 0 || positives == labels.size()) {
        throw MetricError("average_precision: undefined without both positive and negative labels");
    }
    const RankingList r = ranking(scores);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < r.order.size(); ++k) {
        if (labels[r.order[k]] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(positives);
}

inline double average_precision(const LabeledScores& ls) { return average_precision(ls.scores, ls.labels); }

namespace detail {

inline std::vector<std::size_t> positions(const RankingList& r) {
    std::vector<std::size_t> pos(r.size(), r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (r.order[k] >= r.size() || pos[r.order[k]] != r.size()) {
            throw MetricError("ranking is not a permutation of 0..n-1");
        }
        pos[r.order[k]] = k;
    }
    return pos;
}

// Inversion count by merge sort.
inline std::uint64_t count_inversions(std::vector<std::size_t>& v, std::vector<std::size_t>& buf, std::size_t lo,
                                      std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[i] <= v[j]) {
            buf[k++] = v[i++];
        } else {
            inv += mid - i;
            buf[k++] = v[j++];
        }
    }
    while (i < mid) buf[k++] = v[i++];
    while (j < hi) buf[k++] = v[j++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace detail

/// Tau-a between two total orders over the same instances, O(n log n).
inline double kendall_tau(const RankingList& a, const RankingList& b) {
    if (a.size() != b.size()) throw MetricError("kendall_tau: rankings cover different instance sets");
    if (a.size() < 2) throw MetricError("kendall_tau: undefined for fewer than 2 instances");
    detail::positions(a);
    const auto pos_b = detail::positions(b);
    // Walking a's order, discordant pairs are exactly the inversions of b's positions.
    std::vector<std::size_t> seq(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) seq[k] = pos_b[a.order[k]];
    std::vector<std::size_t> buf(seq.size());
    const std::uint64_t discordant = detail::count_inversions(seq, buf, 0, seq.size());
    const double n = static_cast<double>(a.size());
    const double pairs = n * (n - 1.0) / 2.0;
    return (pairs - 2.0 * static_cast<double>(discordant)) / pairs;
}

/// One minus the mean pairwise Kendall tau; 0 for identical rankings, at most 2.
inline double ensemble_diversity(std::span<const RankingList> rankings) {
    if (rankings.size() < 2) throw MetricError("ensemble_diversity: need at least two rankings");
    double sum = 0.0;
    for (std::size_t i = 0; i < rankings.size(); ++i) {
        for (std::size_t j = i + 1; j < rankings.size(); ++j) sum += kendall_tau(rankings[i], rankings[j]);
    }
    const double k = static_cast<double>(rankings.size());
    return 1.0 - 2.0 * sum / (k * (k - 1.0));
}

/// Fraction of drawn indices (with multiplicity) that are labelled outliers.
inline double outlier_ratio(std::span<const std::size_t> sample_indices, std::span<const int> labels) {
    if (sample_indices.empty()) return 0.0;
    std::size_t outliers = 0;
    for (std::size_t idx : sample_indices) {
        if (idx >= labels.size()) throw InputError("outlier_ratio: index out of range");
        if (labels[idx] == 1) ++outliers;
    }
    return static_cast<double>(outliers) / static_cast<double>(sample_indices.size());
}

/// Rankings of components 1..m-1 by their own errors over X0.
inline std::vector<RankingList> component_rankings(const EnsembleState& state) {
    std::vector<RankingList> out;
    for (std::size_t i = 1; i < state.components.size(); ++i) out.push_back(ranking(state.components[i].errors));
    return out;
}

inline double ensemble_diversity(const EnsembleState& state) {
    const auto r = component_rankings(state);
    return ensemble_diversity(r);
}

/// AP of each of components 1..m-1.
inline std::vector<double> per_component_ap(const EnsembleState& state, std::span<const int> labels) {
    std::vector<double> aps;
    for (std::size_t i = 1; i < state.components.size(); ++i) {
        aps.push_back(average_precision(state.components[i].errors, labels));
    }
    return aps;
}

/// Outlier ratio of every component's training sample, iteration order.
inline std::vector<double> outlier_ratios(const EnsembleState& state, std::span<const int> labels) {
    std::vector<double> out;
    for (const auto& c : state.components) out.push_back(outlier_ratio(c.sample_indices, labels));
    return out;
}

struct FiveNumberSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

/// Linear-interpolation quantile of sorted data, q in [0, 1].
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw MetricError("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline FiveNumberSummary five_number_summary(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return {quantile_sorted(values, 0.0), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5),
            quantile_sorted(values, 0.75), quantile_sorted(values, 1.0)};
}

inline double median(std::vector<double> values) { return five_number_summary(std::move(values)).median; }

inline double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace bae
