#include "support.hpp"

#include <ammlab/mev_estimator.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ammlab;
using namespace ammlab::testing;

namespace {

// Oracle: uncontested S0 on a constant-product pool (x y = k) moves
// s*(P_{n-1}) -> s*(P_n) each block, worth sqrt(k) (sqrt(P_n) - sqrt(P_{n-1}))^2
// / sqrt(P_{n-1}). Under zero-drift GBM the sum telescopes in expectation to
// 2 x0 P0 (1 - exp(-sigma^2 t / 8)).
double cp_expected_mev(double x0, double p0, double sigma, double t) {
    return 2.0 * x0 * p0 * (1.0 - std::exp(-sigma * sigma * t / 8.0));
}

ExperimentConfig gbm_config(std::shared_ptr<const Pool> pool, std::size_t paths, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.pool = std::move(pool);
    cfg.schedule = BlockSchedule::uniform(20, 0.01);
    cfg.process = ProcessSpec::gbm(0.3);
    cfg.initial_price = 100.0;
    cfg.n_paths = paths;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST(Estimate, MeanAndStandardError) {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto e = estimate(xs);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_EQ(e.n, 4u);
    EXPECT_EQ(estimate(std::vector<double>{7.0}).std_error, 0.0);
}

TEST(ParallelFor, ThreadCountDoesNotChangeResults) {
    auto cfg = gbm_config(cp_pool(0.003), 500, 5);
    const auto one = expected_mev(cfg);
    cfg.threads = 3;
    const auto three = expected_mev(cfg);
    ASSERT_EQ(one.rows.size(), three.rows.size());
    for (std::size_t i = 0; i < one.rows.size(); ++i) {
        EXPECT_EQ(one.rows[i].estimate, three.rows[i].estimate);
        EXPECT_EQ(one.rows[i].std_error, three.rows[i].std_error);
    }
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
                 std::runtime_error);
}

TEST(DirectSimulation, PropertyMatchesMarketEngine) {
    const auto schedule = BlockSchedule::uniform(12, 0.05);
    const std::vector<std::shared_ptr<const Pool>> pools{cp_pool(), cp_pool(0.003), clmm_pool(), clmm_pool(0.003),
                                                         linear_pool(100.0, 0.01)};
    for_all(91, 40, [&](Rng& rng) {
        const auto& pool = pools[rng() % pools.size()];
        const auto path = sample_path(ProcessSpec::gbm(0.8), schedule, pool->reference_price(),
                                      rng());
        const auto direct = s0_pnl_path(*pool, path);
        const auto engine = uncontested_pnl_path(*pool, schedule, SimpleArb("s0"), path);
        ASSERT_EQ(direct.size(), engine.size());
        for (std::size_t n = 0; n < direct.size(); ++n) {
            EXPECT_NEAR(direct[n], engine[n], 1e-9 * value_scale(path.prices[n], engine[n])) << pool->kind();
        }
        const std::size_t n_star = 1 + rng() % schedule.size();
        const auto deferred = uncontested_pnl_path(*pool, schedule, DeferredArb("d", n_star), path);
        EXPECT_NEAR(deferred_pnl(*pool, path, n_star), deferred[n_star - 1],
                    1e-9 * value_scale(path.prices[n_star - 1], deferred[n_star - 1]));
    });
}

TEST(PathwiseMev, ConstantProductSingleBlock) {
    const auto path = sample_path(ProcessSpec::deterministic({121.0}), BlockSchedule::uniform(1, 1.0), 100.0, 0);
    const auto v = pathwise_competitive_mev(*cp_pool(), BlockSchedule::uniform(1, 1.0), path);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_NEAR(v[0], 100.0, 1e-9);
}

TEST(PathwiseMev, PropertyConstantProductClosedForm) {
    const auto schedule = BlockSchedule::uniform(10, 0.1);
    for_all(12, 100, [&](Rng& rng) {
        const auto path = sample_path(ProcessSpec::gbm(1.0), schedule, 100.0, rng());
        const auto v = pathwise_competitive_mev(*cp_pool(), schedule, path);
        double prev = 100.0;
        double cum = 0.0;
        for (std::size_t n = 0; n < v.size(); ++n) {
            const double d = std::sqrt(path.prices[n]) - std::sqrt(prev);
            cum += 1000.0 * d * d / std::sqrt(prev);
            prev = path.prices[n];
            EXPECT_NEAR(v[n], cum, 1e-9 * value_scale(path.prices[n], cum));
        }
    });
}

TEST(PathwiseMev, RejectsFeePools) {
    const auto schedule = BlockSchedule::uniform(2, 1.0);
    const auto path = sample_path(ProcessSpec::deterministic({101.0, 99.0}), schedule, 100.0, 0);
    EXPECT_THROW(pathwise_competitive_mev(*cp_pool(0.003), schedule, path), PoolNotFrictionless);
}

TEST(ExpectedMev, ConstantProductMatchesClosedForm) {
    auto cfg = gbm_config(cp_pool(), 20000, 3);
    cfg.evaluation_times = {0.05, 0.2};
    const auto r = expected_mev(cfg);
    EXPECT_EQ(r.metric, "expected_competitive");
    ASSERT_EQ(r.rows.size(), 2u);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.n_paths, 20000u);
        EXPECT_LT(std::abs(row.estimate - cp_expected_mev(100.0, 100.0, 0.3, row.t)), 4.0 * row.std_error) << row.t;
    }
}

TEST(NoncompetitiveMev, ZeroBeforeFirstBlockAndClosedFormAfter) {
    auto cfg = gbm_config(cp_pool(), 20000, 4);
    const auto before = noncompetitive_mev(cfg, 0.005);
    EXPECT_EQ(before.estimate, 0.0);
    EXPECT_EQ(before.std_error, 0.0);
    // Same mean as S0 at t_n.
    const auto at = noncompetitive_mev(cfg, 0.2);
    EXPECT_LT(std::abs(at.estimate - cp_expected_mev(100.0, 100.0, 0.3, 0.2)), 4.0 * at.std_error);
    // Between blocks the latest block counts.
    EXPECT_EQ(noncompetitive_mev(cfg, 0.205).estimate, at.estimate);
}

TEST(ExpectedMev, RejectsNonBlockEvaluationTimeAndDeterministicProcess) {
    auto cfg = gbm_config(cp_pool(), 10, 1);
    cfg.evaluation_times = {0.015};
    EXPECT_THROW(expected_mev(cfg), ConfigError);
    cfg.evaluation_times.clear();
    cfg.process = ProcessSpec::deterministic(std::vector<double>(20, 100.0));
    EXPECT_THROW(expected_mev(cfg), ConfigError);
    cfg.process = ProcessSpec::gbm(0.3);
    cfg.n_paths = 0;
    EXPECT_THROW(expected_mev(cfg), ConfigError);
}

TEST(MartingaleEquality, FrictionlessPairedDifferenceIsSmall) {
    auto cfg = gbm_config(clmm_pool(), 4000, 8);
    cfg.initial_price = 2.0;
    const auto rows = martingale_equality_experiment(cfg);
    ASSERT_EQ(rows.size(), 20u);
    for (const auto& r : rows) EXPECT_LE(std::abs(r.diff.mean), 4.0 * r.diff.std_error + 1e-12) << r.t;
}

TEST(MartingaleEquality, FeeS0BelowDeferred) {
    const auto rows = martingale_equality_experiment(gbm_config(cp_pool(0.003), 4000, 9));
    // S0 pays the fee on every rebalancing, deferred pays it once.
    EXPECT_LT(rows.back().diff.mean, 0.0);
}

TEST(Subdivision, FrictionlessNoncompetitiveIsIdenticalPathwise) {
    auto cfg = gbm_config(cp_pool(), 2000, 10);
    const auto res = subdivision_experiment(cfg, 3);
    EXPECT_EQ(res.k, 3u);
    for (const auto& r : res.mev_star) {
        EXPECT_EQ(r.diff.mean, 0.0);
        EXPECT_EQ(r.diff.std_error, 0.0);
    }
    for (const auto& r : res.mev) EXPECT_LE(std::abs(r.diff.mean), 4.0 * r.diff.std_error + 1e-12);
}

TEST(Subdivision, RandomPlacementIsDeterministicInTheSeed) {
    auto cfg = gbm_config(cp_pool(0.003), 300, 11);
    cfg.placement = Placement::random;
    const auto a = subdivision_experiment(cfg, 2);
    const auto b = subdivision_experiment(cfg, 2);
    EXPECT_EQ(a.mev.back().diff.mean, b.mev.back().diff.mean);
    // Fees make the finer schedule strictly worse for S0.
    EXPECT_LT(a.mev.back().diff.mean, 0.0);
}

TEST(OrderingInvariance, FrictionlessTotalsAgreeAcrossMechanismsAndClones) {
    auto cfg = gbm_config(cp_pool(), 30, 12);
    cfg.mechanisms = {OrderingMechanism::fifo(), OrderingMechanism::reverse(), OrderingMechanism::uniform_random(),
                      OrderingMechanism::priority({"s0#3", "s0#2"})};
    cfg.clones = {1, 3};
    const auto rows = ordering_invariance_experiment(cfg);
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_EQ(rows[7].mechanism, "priority");
    EXPECT_EQ(rows[7].clones, 3u);
    for (const auto& r : rows) {
        EXPECT_LE(r.max_rel_diff, 1e-9) << r.mechanism << " m=" << r.clones;
        EXPECT_LE(r.max_rel_vs_pathwise, 1e-9) << r.mechanism << " m=" << r.clones;
    }
}

TEST(OrderingInvariance, NeedsTwoMechanisms) {
    EXPECT_THROW(ordering_invariance_experiment(gbm_config(cp_pool(), 3, 1)), ConfigError);
}

TEST(Counterexample, ReplayRowsMatchHandComputedTrades) {
    const auto rows = counterexample_replay();
    ASSERT_EQ(rows.size(), 4u);
    // Linear book at fee 0.01: moving from price a to b costs (b - a) x + fee |dy|.
    EXPECT_EQ(rows[0].strategy, "S0");
    EXPECT_NEAR(rows[0].dx, 98.0, 1e-9);
    EXPECT_NEAR(rows[0].dy, -4949.0, 1e-7);
    EXPECT_NEAR(rows[1].dx, -97.99, 1e-9);
    EXPECT_NEAR(rows[1].dy, 4850.9900505, 1e-7);
    EXPECT_NEAR(rows[1].cumulative, 4851.0 + 4753.0000505, 1e-7);
    EXPECT_EQ(rows[2].strategy, "S1");
    EXPECT_NEAR(rows[2].profit, 4849.0, 1e-7);
    EXPECT_NEAR(rows[3].profit, 4949.0000505, 1e-7);
    EXPECT_NEAR(rows[3].cumulative - rows[1].cumulative, 194.0, 1e-7);
}

TEST(Csv, HeadersAndRowCount) {
    std::ostringstream a;
    const std::vector<CsvRow> rows{{"mev-estimate", "abc", "fifo", 0.1, "mev", 1.5, 0.25, 10, 7}};
    write_csv(a, rows);
    EXPECT_EQ(a.str(), "experiment,config_id,mechanism,t,metric,estimate,stderr,n_paths,seed\n"
                       "mev-estimate,abc,fifo,0.10000000000000001,mev,1.5,0.25,10,7\n");
    std::ostringstream b;
    const auto ce = counterexample_replay();
    write_counterexample_csv(b, ce);
    const std::string s = b.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "strategy,block,dx,dy,profit,cumulative");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 5);
}
