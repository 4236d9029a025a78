#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "bae/data.hpp"
#include "bae/ensemble.hpp"
#include "test_support.hpp"

namespace bae {
namespace {

using Vec = std::vector<double>;

void expect_all_near(const Vec& got, const Vec& want, double tol) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "at " << i;
}

TEST(SamplingDistribution, Examples) {
    expect_all_near(sampling_distribution(Vec{2, 2, 2, 2}).probabilities, {0.25, 0.25, 0.25, 0.25}, 1e-15);
    expect_all_near(sampling_distribution(Vec{1, 3}).probabilities, {0.75, 0.25}, 1e-15);
    expect_all_near(sampling_distribution(Vec{0.5, 1.0, 2.0}).probabilities, {4.0 / 7, 2.0 / 7, 1.0 / 7}, 1e-15);
}

TEST(SamplingDistribution, EmptyIsInputError) { EXPECT_THROW(sampling_distribution(Vec{}), InputError); }

TEST(SamplingDistribution, ZeroErrorsAreFloored) {
    const auto p = sampling_distribution(Vec{0.0, 1.0}).probabilities;
    EXPECT_GT(p[0], 0.999);
    EXPECT_GT(p[1], 0.0);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
}

TEST(SamplingDistribution, AntitoneNormalizedAndScaleInvariant) {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 50);
        Vec e = testing::random_vector(rng, n, 1e-6, 5.0);
        const auto p = sampling_distribution(e).probabilities;
        EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
        for (std::size_t a = 0; a < n; ++a) {
            EXPECT_GT(p[a], 0.0);
            for (std::size_t b = 0; b < n; ++b) {
                if (e[a] < e[b]) {
                    EXPECT_GT(p[a], p[b]);
                }
            }
        }
        const double c = uniform(rng, 0.01, 100.0);
        Vec scaled = e;
        for (double& x : scaled) x *= c;
        expect_all_near(sampling_distribution(scaled).probabilities, p, 1e-12);
    }
}

TEST(Resample, PointMass) {
    Rng rng(1);
    const auto idx = resample(SamplingDistribution{{1.0, 0.0, 0.0}}, 3, rng);
    EXPECT_EQ(idx, (std::vector<std::size_t>{0, 0, 0}));
}

TEST(Resample, UniformFrequenciesConverge) {
    Rng rng(2);
    const auto idx = resample(SamplingDistribution{{0.25, 0.25, 0.25, 0.25}}, 100000, rng);
    std::vector<double> freq(4, 0.0);
    for (auto i : idx) freq[i] += 1.0 / 100000.0;
    for (double f : freq) EXPECT_NEAR(f, 0.25, 0.01);
}

TEST(Resample, SameSeedSameIndices) {
    const DataMatrix data(10, 2);
    const auto dist = sampling_distribution(Vec{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    Rng a(55), b(55);
    const auto ia = resample(data, dist, a);
    EXPECT_EQ(ia.size(), 10u);
    EXPECT_EQ(ia, resample(data, dist, b));
}

TEST(Resample, DistributionMustCoverRows) {
    Rng rng(0);
    EXPECT_THROW(resample(DataMatrix(3, 1), SamplingDistribution{{0.5, 0.5}}, rng), ConfigError);
}

TEST(ConsensusWeights, Examples) {
    expect_all_near(consensus_weights(Vec{5, 5}), {0.5, 0.5}, 1e-15);
    expect_all_near(consensus_weights(Vec{2, 4, 8}), {4.0 / 7, 2.0 / 7, 1.0 / 7}, 1e-15);
    expect_all_near(consensus_weights(Vec{3}), {1.0}, 0.0);
}

TEST(ConsensusWeights, NeedsAComponent) { EXPECT_THROW(consensus_weights(Vec{}), ConfigError); }

TEST(ConsensusWeights, NormalizedScaleInvariantSmallestSumWins) {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec sums = testing::random_vector(rng, 1 + uniform_index(rng, 30), 0.01, 50.0);
        const Vec w = consensus_weights(sums);
        EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
        const auto smallest = std::min_element(sums.begin(), sums.end()) - sums.begin();
        EXPECT_EQ(std::max_element(w.begin(), w.end()) - w.begin(), smallest);
        Vec scaled = sums;
        const double c = uniform(rng, 0.001, 1000.0);
        for (double& s : scaled) s *= c;
        expect_all_near(consensus_weights(scaled), w, 1e-12);
    }
}

EnsembleState state_with(const Vec& weights, const std::vector<Vec>& errors) {
    EnsembleState s;
    for (const auto& e : errors) {
        Component c;
        c.errors = e;
        s.components.push_back(c);
    }
    s.weights = weights;
    return s;
}

TEST(ConsensusScores, Examples) {
    // Component 0 comes first and is ignored.
    expect_all_near(consensus_scores(state_with({1.0}, {{9, 9}, {0.3, 0.7}})), {0.3, 0.7}, 0.0);
    const auto two = consensus_scores(state_with({0.5, 0.5}, {{9, 9}, {0.2, 0.1}, {0.4, 0.5}}));
    EXPECT_NEAR(two[0], 0.3, 1e-15);
    EXPECT_NEAR(two[1], 0.3, 1e-15);
    expect_all_near(consensus_scores(state_with({0.2, 0.8}, {{1, 1}, {0, 0}, {0, 0}})), {0, 0}, 0.0);
}

TEST(ConsensusScores, MismatchedLengthsAreInternalErrors) {
    EXPECT_THROW(consensus_scores(state_with({0.5, 0.5}, {{1, 1}, {1, 1}, {1}})), std::logic_error);
    EXPECT_THROW(consensus_scores(state_with({1.0}, {{1, 1}, {1, 1}, {1, 1}})), std::logic_error);
}

TEST(ConsensusScores, ConvexCombinationBounds) {
    Rng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + uniform_index(rng, 8);
        const std::size_t n = 1 + uniform_index(rng, 20);
        std::vector<Vec> errors;
        for (std::size_t i = 0; i < m; ++i) errors.push_back(testing::random_vector(rng, n, 0.0, 3.0));
        const Vec w = consensus_weights(testing::random_vector(rng, m - 1, 0.1, 5.0));
        const Vec s = consensus_scores(state_with(w, errors));
        for (std::size_t x = 0; x < n; ++x) {
            double lo = errors[1][x], hi = errors[1][x];
            for (std::size_t i = 2; i < m; ++i) {
                lo = std::min(lo, errors[i][x]);
                hi = std::max(hi, errors[i][x]);
            }
            EXPECT_GE(s[x], lo - 1e-12);
            EXPECT_LE(s[x], hi + 1e-12);
        }
    }
}

BaeConfig small_config(std::size_t m, std::uint64_t seed) {
    BaeConfig c;
    c.ensemble_size = m;
    c.depth = 3;
    c.seed = seed;
    return c;
}

TEST(RunBae, TwoComponentsScoreEqualsSecondComponent) {
    const Dataset ds = make_synthetic(150, 5, 3, 1);
    const auto r = run_bae(ds.matrix, small_config(2, 4));
    ASSERT_EQ(r.state.size(), 2u);
    EXPECT_EQ(r.state.weights, Vec{1.0});
    EXPECT_EQ(r.scores, r.state.components[1].errors);
}

TEST(RunBae, StructureOfTheBoostingLoop) {
    const Dataset ds = make_synthetic(200, 6, 2, 2);
    const auto r = run_bae(ds.matrix, small_config(6, 5));
    ASSERT_EQ(r.state.size(), 6u);
    ASSERT_EQ(r.state.weights.size(), 5u);
    EXPECT_NEAR(std::accumulate(r.state.weights.begin(), r.state.weights.end(), 0.0), 1.0, 1e-12);

    std::vector<std::size_t> all(ds.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    EXPECT_EQ(r.state.components[0].sample_indices, all);

    for (const auto& c : r.state.components) {
        ASSERT_EQ(c.errors.size(), ds.rows());
        ASSERT_EQ(c.sample_indices.size(), ds.rows());
        double sum = 0.0;
        for (auto i : c.sample_indices) sum += c.errors[i];
        EXPECT_EQ(c.sample_error_sum, sum);
        for (double e : c.errors) {
            EXPECT_GE(e, 0.0);
            EXPECT_TRUE(std::isfinite(e));
        }
    }

    // X(i+1) is drawn from the distribution built on AE(i)'s errors.
    for (std::size_t i = 1; i < r.state.size(); ++i) {
        Rng rng(derive_seed(5, Stream::Resample, i));
        const auto dist = sampling_distribution(r.state.components[i - 1].errors);
        EXPECT_EQ(r.state.components[i].sample_indices, resample(ds.matrix, dist, rng));
    }

    Vec sums;
    for (std::size_t i = 1; i < r.state.size(); ++i) sums.push_back(r.state.components[i].sample_error_sum);
    EXPECT_EQ(r.state.weights, consensus_weights(sums));
    EXPECT_EQ(r.average_sample_error, std::accumulate(sums.begin(), sums.end(), 0.0) / 5.0);
}

TEST(RunBae, SameSeedBitIdenticalScores) {
    const Dataset ds = make_synthetic(120, 4, 3, 3);
    EXPECT_EQ(run_bae(ds.matrix, small_config(5, 8)).scores, run_bae(ds.matrix, small_config(5, 8)).scores);
    EXPECT_NE(run_bae(ds.matrix, small_config(5, 8)).scores, run_bae(ds.matrix, small_config(5, 9)).scores);
}

TEST(RunBae, LargerEnsembleKeepsEarlierIterations) {
    const Dataset ds = make_synthetic(120, 4, 2, 4);
    const auto small = run_bae(ds.matrix, small_config(3, 21));
    const auto large = run_bae(ds.matrix, small_config(6, 21));
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(small.state.components[i].sample_indices, large.state.components[i].sample_indices);
        EXPECT_EQ(small.state.components[i].errors, large.state.components[i].errors);
    }
}

TEST(RunBae, FirstComponentDoesNotEnterConsensus) {
    const Dataset ds = make_synthetic(100, 5, 2, 6);
    auto r = run_bae(ds.matrix, small_config(4, 1));
    const Vec weights = r.state.weights;
    const Vec scores = r.scores;
    for (double& e : r.state.components[0].errors) e = e * 7.0 + 3.0;
    r.state.components[0].sample_error_sum *= 11.0;
    EXPECT_EQ(consensus_scores(r.state), scores);
    Vec sums;
    for (std::size_t i = 1; i < r.state.size(); ++i) sums.push_back(r.state.components[i].sample_error_sum);
    EXPECT_EQ(consensus_weights(sums), weights);
}

TEST(RunBae, ContractViolations) {
    const Dataset ds = make_synthetic(50, 2, 2, 7);
    EXPECT_THROW(run_bae(ds.matrix, small_config(1, 0)), InputError);
    EXPECT_THROW(run_bae(DataMatrix(0, 2), small_config(3, 0)), InputError);
    DataMatrix raw = ds.matrix;
    raw(3, 1) = 1.5;
    EXPECT_THROW(run_bae(raw, small_config(3, 0)), InputError);
    raw(3, 1) = 1.0 + 1e-10;
    EXPECT_NO_THROW(run_bae(raw, small_config(2, 0)));
}

TEST(SelectDepth, ArgminAndTies) {
    EXPECT_EQ(argmin_depth({{3, 3.0}, {5, 2.0}}), 5);
    EXPECT_EQ(argmin_depth({{3, 1.0}, {5, 1.0}, {7, 0.5}, {9, 0.5}}), 7);
    EXPECT_EQ(argmin_depth({{5, 4.2}}), 5);
    EXPECT_THROW(argmin_depth({}), ConfigError);
}

TEST(SelectDepth, SingleCandidate) {
    const Dataset ds = make_synthetic(80, 4, 6, 1);
    const std::vector<int> depths{5};
    const auto sel = select_depth(ds.matrix, small_config(3, 2), depths);
    EXPECT_EQ(sel.chosen_depth, 5);
    EXPECT_EQ(sel.chosen().depth, 5);
}

TEST(SelectDepth, ChosenDepthCarriesMinimumError) {
    const Dataset ds = make_synthetic(150, 5, 8, 3);
    const std::vector<int> depths{9, 3, 7, 5};
    const auto sel = select_depth(ds.matrix, small_config(4, 3), depths);
    ASSERT_EQ(sel.depth_errors.size(), 4u);
    double lo = sel.depth_errors.begin()->second;
    for (const auto& [d, e] : sel.depth_errors) {
        lo = std::min(lo, e);
        EXPECT_EQ(sel.runs.at(d).average_sample_error, e);
    }
    EXPECT_EQ(sel.depth_errors.at(sel.chosen_depth), lo);
}

TEST(SelectDepth, ParallelMatchesSequential) {
    const Dataset ds = make_synthetic(100, 5, 4, 4);
    const std::vector<int> depths{3, 5, 7};
    const auto seq = select_depth(ds.matrix, small_config(3, 9), depths, 1);
    const auto par = select_depth(ds.matrix, small_config(3, 9), depths, 3);
    EXPECT_EQ(seq.depth_errors, par.depth_errors);
    EXPECT_EQ(seq.chosen().scores, par.chosen().scores);
}

TEST(SelectDepth, RejectsBadCandidates) {
    const Dataset ds = make_synthetic(20, 2, 2, 1);
    EXPECT_THROW(select_depth(ds.matrix, small_config(2, 0), std::vector<int>{}), ConfigError);
    EXPECT_THROW(select_depth(ds.matrix, small_config(2, 0), std::vector<int>{3, 4}), ConfigError);
}

}  // namespace
}  // namespace bae
