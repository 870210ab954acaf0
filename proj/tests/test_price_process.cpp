#include "support.hpp"

#include <ammlab/price_process.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace ammlab;
using ammlab::testing::for_all;

namespace {

std::vector<PricePath> many_paths(const ProcessSpec& spec, const BlockSchedule& sched, std::size_t n,
                                  std::uint64_t master) {
    std::vector<PricePath> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_path(spec, sched, 100.0, path_seed(master, i)));
    return out;
}

} // namespace

TEST(Schedule, ValidatesTimes) {
    EXPECT_THROW(BlockSchedule(std::vector<double>{}), ConfigError);
    EXPECT_THROW(BlockSchedule(std::vector<double>{0.0, 1.0}), ConfigError);
    EXPECT_THROW(BlockSchedule(std::vector<double>{1.0, 1.0}), ConfigError);
    EXPECT_THROW(BlockSchedule::uniform(0, 1.0), ConfigError);
    const auto s = BlockSchedule::uniform(3, 0.5);
    EXPECT_EQ(s.times(), (std::vector<double>{0.5, 1.0, 1.5}));
    EXPECT_EQ(s.blocks_until(0.49), 0u);
    EXPECT_EQ(s.blocks_until(1.0), 2u);
    EXPECT_EQ(s.blocks_until(9.0), 3u);
}

TEST(Subdivide, EvenPlacementInsertsMidpoints) {
    const auto sub = subdivide(BlockSchedule(std::vector<double>{1.0, 3.0}), 2);
    EXPECT_EQ(sub.schedule.times(), (std::vector<double>{0.5, 1.0, 2.0, 3.0}));
    EXPECT_EQ(sub.coarse_index, (std::vector<std::size_t>{1, 3}));
    const auto four = subdivide(BlockSchedule::uniform(2, 1.0), 4);
    EXPECT_EQ(four.schedule.size(), 8u);
    EXPECT_DOUBLE_EQ(four.schedule[4], 1.25);
}

TEST(Subdivide, RandomPlacementKeepsOriginalTimes) {
    const auto base = BlockSchedule::uniform(10, 0.1);
    const auto sub = subdivide(base, 3, Placement::random, 7);
    ASSERT_EQ(sub.schedule.size(), 30u);
    for (std::size_t n = 0; n < base.size(); ++n) EXPECT_EQ(sub.schedule[sub.coarse_index[n]], base[n]);
    EXPECT_THROW(subdivide(base, 1), ConfigError);
}

TEST(ProcessSpec, RejectsInvalidParameters) {
    const auto sched = BlockSchedule::uniform(2, 1.0);
    EXPECT_THROW(sample_path(ProcessSpec::gbm(0.0), sched, 1.0, 0), ConfigError);
    EXPECT_THROW(sample_path(ProcessSpec::binomial(1.25, 1.1), sched, 1.0, 0), ConfigError);
    EXPECT_THROW(sample_path(ProcessSpec::binomial(0.9, 0.8), sched, 1.0, 0), ConfigError);
    EXPECT_THROW(sample_path(ProcessSpec::deterministic({1.0, -2.0}), sched, 1.0, 0), ConfigError);
    EXPECT_THROW(sample_path(ProcessSpec::deterministic({1.0}), sched, 1.0, 0), ConfigError);
    EXPECT_THROW(sample_path(ProcessSpec::gbm(0.3), sched, 0.0, 0), ConfigError);
}

TEST(ProcessSpec, BinomialMartingaleProbability) {
    const double u = 1.25;
    const double d = 0.8;
    // p u + (1 - p) d = 1.
    const double p = (1.0 - d) / (u - d);
    EXPECT_NEAR(p * u + (1.0 - p) * d, 1.0, 1e-15);
    EXPECT_NEAR(ProcessSpec::binomial(u, d).p_up(), 4.0 / 9.0, 1e-15);
}

TEST(SamplePath, DeterministicReplayIsExact) {
    const std::vector<double> prices{1, 100, 1, 100, 1, 100};
    const auto path = sample_path(ProcessSpec::deterministic(prices), BlockSchedule::uniform(6, 1.0), 1.0, 123);
    EXPECT_EQ(path.prices, prices);
    EXPECT_EQ(path.price_at(0.5), 1.0);
    EXPECT_EQ(path.price_at(2.0), 100.0);
    EXPECT_EQ(path.price_at(2.5), 100.0);
}

TEST(SamplePath, ReproducibleAndPositive) {
    const auto sched = BlockSchedule::uniform(50, 0.01);
    for_all(5, 200, [&](Rng& rng) {
        const std::uint64_t seed = rng();
        for (const auto& spec : {ProcessSpec::gbm(uniform(rng, 0.01, 3.0)), ProcessSpec::binomial(1.3, 0.7)}) {
            const auto a = sample_path(spec, sched, 50.0, seed);
            const auto b = sample_path(spec, sched, 50.0, seed);
            ASSERT_EQ(a.prices, b.prices);
            for (double p : a.prices) ASSERT_GT(p, 0.0);
        }
    });
}

TEST(SamplePath, GbmTerminalMeanIsP0) {
    const auto sched = BlockSchedule::uniform(20, 0.01);
    const std::size_t n = 100000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = sample_path(ProcessSpec::gbm(0.3), sched, 100.0, path_seed(9, i)).prices.back() / 100.0;
        sum += r;
        sum_sq += r * r;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean - 1.0), 3.0 * se);
    // Var(P_T / P0) = exp(sigma^2 T) - 1.
    EXPECT_NEAR(se * se * n, std::exp(0.09 * 0.2) - 1.0, 0.02 * (std::exp(0.09 * 0.2) - 1.0));
}

// Coarse blocks read off a subdivided path are themselves GBM on the coarse
// schedule: the terminal value is the same draw and per-block log-return
// variance is sigma^2 dt.
TEST(SamplePath, CoarseningKeepsTheTerminalDraw) {
    const auto base = BlockSchedule::uniform(5, 0.2);
    const auto sub = subdivide(base, 4);
    const std::size_t n = 40000;
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto fine = sample_path(ProcessSpec::gbm(0.5), sub.schedule, 10.0, path_seed(4, i));
        const auto coarse = fine.select(sub.coarse_index);
        ASSERT_EQ(coarse.times, base.times());
        ASSERT_EQ(coarse.prices.back(), fine.prices.back());
        const double lr = std::log(coarse.prices[2] / coarse.prices[1]) + 0.5 * 0.25 * 0.2;
        s2 += lr * lr;
    }
    EXPECT_NEAR(s2 / n, 0.25 * 0.2, 0.03 * 0.25 * 0.2);
}

TEST(MartingaleDiagnostic, GbmIsNotFlagged) {
    const auto paths = many_paths(ProcessSpec::gbm(0.3), BlockSchedule::uniform(20, 0.01), 100000, 1);
    const auto r = martingale_diagnostic(paths);
    EXPECT_EQ(r.rows.size(), 20u);
    EXPECT_FALSE(r.any_flagged());
}

TEST(MartingaleDiagnostic, BinomialIsNotFlagged) {
    const auto paths = many_paths(ProcessSpec::binomial(1.25, 0.8), BlockSchedule::uniform(20, 1.0), 100000, 2);
    EXPECT_FALSE(martingale_diagnostic(paths).any_flagged());
}

TEST(MartingaleDiagnostic, AlternatingPathIsFlagged) {
    const auto spec = ProcessSpec::deterministic({100, 1, 100, 1});
    const auto path = sample_path(spec, BlockSchedule::uniform(4, 1.0), 1.0, 0);
    const auto r = martingale_diagnostic({path, path});
    EXPECT_TRUE(r.any_flagged());
    EXPECT_TRUE(r.rows[0].flagged);
    EXPECT_DOUBLE_EQ(r.rows[0].mean_increment, 99.0);
    EXPECT_DOUBLE_EQ(r.rows[0].std_error, 0.0);
}

TEST(MartingaleDiagnostic, DriftIsFlagged) {
    // Binomial with p_up forced to 1/2 instead of 4/9 has positive drift.
    std::vector<PricePath> paths;
    Rng rng = substream(8, 0);
    for (int i = 0; i < 20000; ++i) {
        PricePath p{{1.0}, {uniform_open01(rng) < 0.5 ? 125.0 : 80.0}, 100.0};
        paths.push_back(p);
    }
    EXPECT_TRUE(martingale_diagnostic(paths).any_flagged());
}

TEST(MartingaleDiagnostic, NeedsTwoPaths) {
    EXPECT_THROW(martingale_diagnostic({}), std::invalid_argument);
}

TEST(PriceCsv, ReadsTimeAndPrice) {
    std::istringstream in("time,price\n0.5,100\n1.0,1\n\n1.5,100\n");
    const auto s = read_price_csv(in);
    EXPECT_EQ(s.schedule.times(), (std::vector<double>{0.5, 1.0, 1.5}));
    EXPECT_EQ(s.prices, (std::vector<double>{100, 1, 100}));
}

TEST(PriceCsv, RejectsBadRows) {
    std::istringstream bad("0.5,100\n1.0,abc\n");
    EXPECT_THROW(read_price_csv(bad), ConfigError);
    std::istringstream unordered("1.0,100\n0.5,1\n");
    EXPECT_THROW(read_price_csv(unordered), ConfigError);
    std::istringstream negative("1.0,-1\n");
    EXPECT_THROW(read_price_csv(negative), ConfigError);
    std::istringstream empty("time,price\n");
    EXPECT_THROW(read_price_csv(empty), ConfigError);
}
