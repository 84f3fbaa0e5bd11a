#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mvtraffic/error.hpp"
#include "mvtraffic/mux.hpp"
#include "oracle.hpp"

using namespace mvt;

namespace {

DemandSequence demand_of(std::vector<std::int64_t> d, double fps = 24.0) { return DemandSequence{std::move(d), fps}; }

std::vector<std::int64_t> random_demand(std::mt19937_64& gen, int len, std::int64_t hi) {
    std::vector<std::int64_t> d(static_cast<std::size_t>(len));
    for (auto& x : d) x = std::uniform_int_distribution<std::int64_t>(0, hi)(gen);
    d[0] += 1;
    return d;
}

std::vector<std::int64_t> random_phases(std::mt19937_64& gen, int streams, std::int64_t m) {
    std::vector<std::int64_t> p(static_cast<std::size_t>(streams));
    for (auto& x : p) x = std::uniform_int_distribution<std::int64_t>(1, m)(gen);
    return p;
}

}  // namespace

TEST(Replication, HandComputedLoss) {
    const auto s = MuxScenario::with_budget(demand_of({1000, 3000}), 2, 4000);
    const std::vector<std::int64_t> same{1, 1};
    const auto r = simulate_replication(s, same);
    EXPECT_EQ(r.offered_bits, 8000);
    EXPECT_EQ(r.lost_bits, 2000);
    EXPECT_DOUBLE_EQ(r.loss_ratio, 0.25);
    const std::vector<std::int64_t> shifted{1, 2};
    EXPECT_EQ(simulate_replication(s, shifted).lost_bits, 0);
}

TEST(Replication, BudgetFromLinkRate) {
    EXPECT_EQ(MuxScenario(demand_of({1000, 3000}), 2, 96000.0).budget(), 4000);
    EXPECT_EQ(period_budget(96000.0, 24.0), 4000);
    EXPECT_EQ(period_budget(95999.0, 24.0), 3999);
    EXPECT_EQ(period_budget(1e7, 30.0), 333333);
    EXPECT_EQ(period_budget(10.0, 29.97), 0);
    EXPECT_THROW(period_budget(0.0, 24.0), PreconditionError);
    EXPECT_THROW(period_budget(1.0, 0.0), PreconditionError);
}

TEST(Replication, OfferedIsStreamsTimesTotal) {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = std::uniform_int_distribution<int>(1, 20)(gen);
        const int j = std::uniform_int_distribution<int>(1, 5)(gen);
        const auto d = random_demand(gen, m, 1000);
        const auto s = MuxScenario::with_budget(demand_of(d), j, 500);
        const auto phases = random_phases(gen, j, m);
        const auto ref = oracle::replicate(d, 500, phases);
        const auto r = simulate_replication(s, phases);
        EXPECT_EQ(r.offered_bits, ref.offered);
        EXPECT_EQ(r.offered_bits, j * demand_of(d).total());
        EXPECT_EQ(r.lost_bits, ref.lost);
        const auto per_period = period_losses(s, phases);
        EXPECT_EQ(std::accumulate(per_period.begin(), per_period.end(), std::int64_t{0}), ref.lost);
    }
}

TEST(Replication, PhasePreconditions) {
    const auto s = MuxScenario::with_budget(demand_of({1, 2, 3}), 2, 4);
    const std::vector<std::int64_t> one{1};
    const std::vector<std::int64_t> zero{0, 1};
    const std::vector<std::int64_t> over{1, 4};
    EXPECT_THROW(simulate_replication(s, one), PreconditionError);
    EXPECT_THROW(simulate_replication(s, zero), PreconditionError);
    EXPECT_THROW(simulate_replication(s, over), PreconditionError);
    EXPECT_THROW(MuxScenario(demand_of({1, 2}), 0, 100.0), PreconditionError);
    EXPECT_THROW(MuxScenario(demand_of({}), 1, 100.0), PreconditionError);
    EXPECT_THROW(MuxScenario(demand_of({1, -2}), 1, 100.0), PreconditionError);
}

TEST(Phases, UniformAndStreamIndependent) {
    std::vector<int> counts(7, 0);
    for (std::uint64_t r = 0; r < 70000; ++r) {
        const auto p = replication_phase(42, r, 0, 7);
        ASSERT_GE(p, 1);
        ASSERT_LE(p, 7);
        ++counts[static_cast<std::size_t>(p - 1)];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
    std::vector<std::int64_t> three(3), five(5);
    replication_phases(42, 9, 100, three);
    replication_phases(42, 9, 100, five);
    EXPECT_TRUE(std::equal(three.begin(), three.end(), five.begin()));
}

TEST(ExactOracle, HandEnumeratedScenarios) {
    EXPECT_DOUBLE_EQ(exact_loss_oracle(MuxScenario::with_budget(demand_of({1000, 3000}), 2, 4000)), 0.125);
    // Budget 3000: aligned tuples lose 3000 of 8000, shifted ones 2000 of 8000.
    EXPECT_DOUBLE_EQ(exact_loss_oracle(MuxScenario::with_budget(demand_of({1000, 3000}), 2, 3000)), 0.3125);
    EXPECT_EQ(exact_loss_oracle(MuxScenario::with_budget(demand_of({1000, 3000}), 2, 6000)), 0.0);
    EXPECT_THROW(exact_loss_oracle(MuxScenario::with_budget(demand_of(std::vector<std::int64_t>(100, 1)), 4, 1), 1000),
                 PreconditionError);
}

TEST(ExactOracle, AgreesWithNaiveEnumeration) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = std::uniform_int_distribution<int>(1, 8)(gen);
        const int j = std::uniform_int_distribution<int>(1, 3)(gen);
        const auto d = random_demand(gen, m, 5000);
        const std::int64_t budget = std::uniform_int_distribution<std::int64_t>(0, j * 5001)(gen);
        const double got = exact_loss_oracle(MuxScenario::with_budget(demand_of(d), j, budget));
        const auto want = static_cast<double>(oracle::enumerate_loss(d, j, budget));
        EXPECT_NEAR(got, want, 1e-12 + 1e-12 * want);
    }
}

TEST(Estimate, TriviallyLosslessShortCircuit) {
    const auto s = MuxScenario::with_budget(demand_of({1000, 3000}), 2, 6000);
    ASSERT_TRUE(s.trivially_lossless());
    const auto e = estimate_loss(s, 1, StopRule{0.1, 0.95, 10, 500});
    EXPECT_TRUE(e.zero_loss);
    EXPECT_EQ(e.p_hat, 0.0);
    EXPECT_EQ(e.replications, 500);
    EXPECT_DOUBLE_EQ(e.zero_loss_bound, 3.0 / 500.0);
    EXPECT_FALSE(e.converged);
}

TEST(Estimate, ZeroLossWithoutShortCircuit) {
    // Loss needs both streams on the single spike, which has probability
    // 1/1000 per replication; this seed never hits it.
    std::vector<std::int64_t> d(1000, 100);
    d[0] = 3000;
    const auto s = MuxScenario::with_budget(demand_of(d), 2, 3100);
    ASSERT_FALSE(s.trivially_lossless());
    const auto e = estimate_loss(s, 5, StopRule{0.1, 0.95, 10, 200});
    ASSERT_TRUE(e.zero_loss);
    EXPECT_EQ(e.p_hat, 0.0);
    EXPECT_EQ(e.ci_half_width, 0.0);
    EXPECT_DOUBLE_EQ(e.zero_loss_bound, 3.0 / 200.0);
}

TEST(Estimate, ConstantLossStopsAtMinimum) {
    // Constant demand: every phase tuple loses the same bits.
    const auto s = MuxScenario::with_budget(demand_of({1000, 1000, 1000}), 3, 2500);
    const auto e = estimate_loss(s, 1, StopRule{0.1, 0.95, 50, 10000});
    EXPECT_EQ(e.replications, 50);
    EXPECT_TRUE(e.converged);
    EXPECT_EQ(e.ci_half_width, 0.0);
    EXPECT_DOUBLE_EQ(e.p_hat, 1500.0 / 9000.0);
    EXPECT_DOUBLE_EQ(e.pooled_ratio, e.p_hat);
}

TEST(Estimate, MatchesOracleOnSmallScenario) {
    const auto s = MuxScenario::with_budget(demand_of({1000, 3000}), 2, 4000);
    const auto e = estimate_loss(s, 7, StopRule{0.01, 0.95, 1000, 1000000});
    EXPECT_TRUE(e.converged);
    EXPECT_NEAR(e.p_hat, 0.125, 3 * e.ci_half_width);
    EXPECT_LE(e.ci_half_width, 0.01 * e.p_hat);
}

TEST(Estimate, PerReplicationRecordMatchesDirectSimulation) {
    std::mt19937_64 gen(8);
    const auto d = random_demand(gen, 9, 4000);
    const auto s = MuxScenario::with_budget(demand_of(d), 3, 6000);
    std::vector<std::int64_t> lost;
    const auto e = estimate_loss(s, 77, StopRule{0.05, 0.95, 100, 20000}, 1, &lost);
    ASSERT_EQ(static_cast<std::int64_t>(lost.size()), e.replications);
    long double sum = 0;
    std::vector<std::int64_t> phases(3);
    for (std::size_t r = 0; r < lost.size(); ++r) {
        replication_phases(77, r, 9, phases);
        ASSERT_EQ(lost[r], oracle::replicate(d, 6000, phases).lost);
        sum += lost[r];
    }
    EXPECT_NEAR(e.p_hat, static_cast<double>(sum / lost.size() / s.offered_bits()), 1e-15);
}

TEST(Estimate, IdenticalAcrossThreadCounts) {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 5; ++trial) {
        const auto d = random_demand(gen, 50, 10000);
        const auto s = MuxScenario::with_budget(demand_of(d), 4, 4 * 5000);
        const StopRule rule{0.02, 0.95, 200, 200000};
        const auto a = estimate_loss(s, 1234, rule, 1);
        const auto b = estimate_loss(s, 1234, rule, 4);
        const auto c = estimate_loss(s, 1234, rule, 0);
        EXPECT_EQ(a.p_hat, b.p_hat);
        EXPECT_EQ(a.p_hat, c.p_hat);
        EXPECT_EQ(a.replications, b.replications);
        EXPECT_EQ(a.ci_half_width, c.ci_half_width);
        EXPECT_EQ(a.total_lost_bits, b.total_lost_bits);
    }
}

// The Student-t interval should cover the exact loss roughly at its nominal rate.
TEST(Estimate, ConfidenceIntervalCoverage) {
    const std::vector<std::int64_t> d{500, 4000, 1000, 2500, 0, 3000, 1500, 2000};
    const auto s = MuxScenario::with_budget(demand_of(d), 3, 7000);
    const double exact = exact_loss_oracle(s);
    ASSERT_GT(exact, 0.0);
    int covered = 0;
    const int trials = 200;
    for (int seed = 0; seed < trials; ++seed) {
        const auto e = estimate_loss(s, static_cast<std::uint64_t>(seed), StopRule{0.10, 0.95, 1000, 100000});
        if (std::abs(e.p_hat - exact) <= e.ci_half_width) ++covered;
    }
    EXPECT_GE(covered, static_cast<int>(0.88 * trials)) << covered;
}

TEST(Estimate, StopRulePreconditions) {
    const auto s = MuxScenario::with_budget(demand_of({1000, 3000}), 2, 4000);
    EXPECT_THROW(estimate_loss(s, 1, StopRule{0.1, 0.95, 1, 10}), PreconditionError);
    EXPECT_THROW(estimate_loss(s, 1, StopRule{0.1, 0.95, 10, 5}), PreconditionError);
    EXPECT_THROW(estimate_loss(s, 1, StopRule{0.1, 1.0, 10, 50}), PreconditionError);
    EXPECT_THROW(estimate_loss(s, 1, StopRule{0.0, 0.95, 10, 50}), PreconditionError);
}

TEST(Monotonicity, LostBitsNonIncreasingInBudget) {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 500; ++trial) {
        const int m = std::uniform_int_distribution<int>(1, 30)(gen);
        const int j = std::uniform_int_distribution<int>(1, 6)(gen);
        const auto d = random_demand(gen, m, 20000);
        const auto phases = random_phases(gen, j, m);
        std::int64_t prev = -1;
        for (std::int64_t b = 0; b <= j * 20001; b += 997) {
            const auto lost = replication_lost_bits(MuxScenario::with_budget(demand_of(d), j, b), phases);
            if (prev >= 0) EXPECT_LE(lost, prev);
            prev = lost;
        }
    }
}

TEST(Monotonicity, LostBitsNonDecreasingInStreams) {
    std::mt19937_64 gen(32);
    for (int trial = 0; trial < 500; ++trial) {
        const int m = std::uniform_int_distribution<int>(1, 30)(gen);
        const auto d = random_demand(gen, m, 20000);
        const std::int64_t b = std::uniform_int_distribution<std::int64_t>(0, 60000)(gen);
        const auto phases = random_phases(gen, 8, m);
        std::int64_t prev = 0;
        for (int j = 1; j <= 8; ++j) {
            const std::span<const std::int64_t> prefix(phases.data(), static_cast<std::size_t>(j));
            const auto lost = replication_lost_bits(MuxScenario::with_budget(demand_of(d), j, b), prefix);
            EXPECT_GE(lost, prev);
            prev = lost;
        }
    }
}

// With G-aligned phases and block totals divisible by G, each smoothed
// period carries exactly the block mean, so convexity of the loss gives
// dominance per block.
TEST(AlignedSmoothing, DominatesUnsmoothedForEqualShares) {
    std::mt19937_64 gen(41);
    for (int trial = 0; trial < 300; ++trial) {
        const int gop = std::uniform_int_distribution<int>(1, 6)(gen);
        const int blocks = std::uniform_int_distribution<int>(1, 5)(gen);
        const int j = std::uniform_int_distribution<int>(1, 4)(gen);
        std::vector<std::int64_t> d;
        for (int k = 0; k < blocks; ++k) {
            auto block = random_demand(gen, gop, 5000);
            const auto total = std::accumulate(block.begin(), block.end(), std::int64_t{0});
            block.back() += (gop - total % gop) % gop;
            d.insert(d.end(), block.begin(), block.end());
        }
        const auto smooth = gop_smooth(demand_of(d), gop);
        std::vector<std::int64_t> phases(static_cast<std::size_t>(j));
        for (auto& p : phases) p = 1 + gop * std::uniform_int_distribution<std::int64_t>(0, blocks - 1)(gen);
        for (std::int64_t b = 0; b <= j * 5000; b += 211) {
            const auto raw = replication_lost_bits(MuxScenario::with_budget(demand_of(d), j, b), phases);
            const auto sm = replication_lost_bits(MuxScenario::with_budget(smooth, j, b), phases);
            EXPECT_LE(sm, raw);
        }
    }
}

// The smallest budget that is lossless for every aligned phase tuple never
// grows under smoothing.
TEST(AlignedSmoothing, LosslessBudgetNeverGrows) {
    std::mt19937_64 gen(43);
    for (int trial = 0; trial < 100; ++trial) {
        const int gop = std::uniform_int_distribution<int>(2, 4)(gen);
        const int blocks = std::uniform_int_distribution<int>(1, 4)(gen);
        std::vector<std::int64_t> d;
        for (int k = 0; k < blocks; ++k) {
            auto block = random_demand(gen, gop, 3000);
            const auto total = std::accumulate(block.begin(), block.end(), std::int64_t{0});
            block.back() += (gop - total % gop) % gop;
            d.insert(d.end(), block.begin(), block.end());
        }
        const auto smooth = gop_smooth(demand_of(d), gop).demand;
        auto peak_aggregate = [&](const std::vector<std::int64_t>& x) {
            std::int64_t peak = 0;
            for (int a = 0; a < blocks; ++a)
                for (int b = 0; b < blocks; ++b)
                    for (std::int64_t t = 1; t <= static_cast<std::int64_t>(x.size()); ++t)
                        peak = std::max(peak, oracle::aggregate(x, {1 + gop * a, 1 + gop * b}, t));
            return peak;
        };
        EXPECT_LE(peak_aggregate(smooth), peak_aggregate(d));
    }
}
