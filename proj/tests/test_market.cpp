#include "support.hpp"

#include <ammlab/market.hpp>
#include <ammlab/strategies.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

using namespace ammlab;
using ammlab::testing::for_all;

namespace {

std::vector<Submission> tagged(std::initializer_list<const char*> ids) {
    std::vector<Submission> out;
    for (const char* id : ids) out.push_back({id, Action::null()});
    return out;
}

std::vector<std::string> ids(const std::vector<Submission>& subs) {
    std::vector<std::string> out;
    for (const auto& s : subs) out.push_back(s.strategy_id);
    return out;
}

std::vector<Submission> order(std::vector<Submission> subs, const OrderingMechanism& mech, std::uint64_t seed = 0) {
    Rng rng = substream(seed, 0);
    return order_submissions(std::move(subs), mech, rng);
}

} // namespace

TEST(Ordering, DeterministicMechanisms) {
    EXPECT_EQ(ids(order(tagged({"a", "b", "c"}), OrderingMechanism::fifo())),
              (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(ids(order(tagged({"a", "b", "c"}), OrderingMechanism::reverse())),
              (std::vector<std::string>{"c", "b", "a"}));
}

TEST(Ordering, PriorityIsAStableBucketSort) {
    auto subs = tagged({"s1", "s2", "s1", "s3", "s2"});
    for (std::size_t i = 0; i < subs.size(); ++i) {
        ConstantProductPool pool(100.0, 10000.0);
        subs[i].action = pool.move_to_price(pool.initial_state(), 100.0 + static_cast<double>(i + 1));
    }
    const auto out = order(subs, OrderingMechanism::priority({"s2", "s1"}));
    EXPECT_EQ(ids(out), (std::vector<std::string>{"s2", "s2", "s1", "s1", "s3"}));
    // Input order within a bucket.
    EXPECT_EQ(out[0].action, subs[1].action);
    EXPECT_EQ(out[1].action, subs[4].action);
    EXPECT_EQ(out[2].action, subs[0].action);
    EXPECT_EQ(out[3].action, subs[2].action);
}

TEST(Ordering, PropertyAlwaysAPermutation) {
    const std::vector<OrderingMechanism> mechs{OrderingMechanism::fifo(), OrderingMechanism::reverse(),
                                               OrderingMechanism::uniform_random(),
                                               OrderingMechanism::priority({"x3", "x0"})};
    for_all(7, 500, [&](Rng& rng) {
        std::vector<Submission> subs;
        const auto n = static_cast<std::size_t>(rng() % 9);
        for (std::size_t i = 0; i < n; ++i) subs.push_back({"x" + std::to_string(rng() % 5), Action::null()});
        for (const auto& m : mechs) {
            auto a = ids(order(subs, m, rng()));
            auto b = ids(subs);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            ASSERT_EQ(a, b) << m.name();
        }
    });
}

TEST(Ordering, UniformRandomCoversAllPermutationsEvenly) {
    std::map<std::vector<std::string>, int> counts;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        counts[ids(order(tagged({"a", "b", "c"}), OrderingMechanism::uniform_random(), i))]++;
    }
    ASSERT_EQ(counts.size(), 6u);
    // Each count is Binomial(n, 1/6): sd ~ 91.
    for (const auto& [perm, c] : counts) EXPECT_NEAR(c, n / 6.0, 5.0 * 91.3);
}

TEST(Filter, DuplicateOptimalTradeExecutesOnce) {
    ConstantProductPool pool(100.0, 10000.0);
    const Action best = pool.optimal_action(pool.initial_state(), 121.0);
    const std::vector<Submission> subs{{"a", best}, {"b", best}};
    const auto r = filter_admissible(pool, pool.initial_state(), subs);
    EXPECT_EQ(r.kept, (std::vector<bool>{true, false}));
}

TEST(Filter, NullsAlwaysExecute) {
    ConstantProductPool pool(100.0, 10000.0);
    const std::vector<Submission> subs{{"a", Action::null()}, {"b", Action::null()}, {"c", Action::null()}};
    const auto r = filter_admissible(pool, pool.initial_state(), subs);
    EXPECT_EQ(r.kept, (std::vector<bool>{true, true, true}));
    EXPECT_EQ(r.state_after, pool.initial_state());
}

TEST(Filter, StaleActionIsDropped) {
    ConstantProductPool pool(100.0, 10000.0);
    const Action best = pool.optimal_action(pool.initial_state(), 121.0);
    const Action stale = pool.move_to_price(pool.no_arb_state(90.0), 110.0);
    const std::vector<Submission> subs{{"a", best}, {"b", stale}};
    const auto r = filter_admissible(pool, pool.initial_state(), subs);
    EXPECT_EQ(r.kept, (std::vector<bool>{true, false}));
    // Either order: the stale action never applies.
    const std::vector<Submission> flipped{{"b", stale}, {"a", best}};
    EXPECT_EQ(filter_admissible(pool, pool.initial_state(), flipped).kept, (std::vector<bool>{false, true}));
}

// Oracle: the kept subsequence replays cleanly from s, and every dropped
// action is inadmissible at the state reached by the kept actions before it.
TEST(Filter, PropertyGreedySoundness) {
    const auto pool = ammlab::testing::cp_pool();
    for_all(13, 400, [&](Rng& rng) {
        const PoolState s = pool->no_arb_state(log_uniform(rng, 50.0, 200.0));
        std::vector<Submission> subs;
        PoolState chain = s;
        const auto n = 1 + static_cast<std::size_t>(rng() % 8);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = uniform_open01(rng);
            Action a;
            if (u < 0.4) {
                a = pool->move_to_price(chain, log_uniform(rng, 50.0, 200.0));
                chain = pool->transition(chain, a);
            } else if (u < 0.7) {
                a = pool->move_to_price(s, log_uniform(rng, 50.0, 200.0));
            } else if (u < 0.85) {
                a = Action::null();
            } else {
                a = pool->move_to_price(pool->no_arb_state(log_uniform(rng, 50.0, 200.0)), 100.0);
            }
            subs.push_back({"x", a});
        }
        const auto r = filter_admissible(*pool, s, subs);
        std::vector<Action> kept;
        PoolState cur = s;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            ASSERT_EQ(r.kept[i], pool->admissible(cur, subs[i].action)) << i;
            if (r.kept[i]) {
                kept.push_back(subs[i].action);
                cur = pool->transition(cur, subs[i].action);
            }
        }
        const auto replay = apply_sequence(*pool, s, kept);
        ASSERT_EQ(replay.state, r.state_after);
    });
}

TEST(StepBlock, NoSubmissionsLeavesStateUnchanged) {
    ConstantProductPool pool(100.0, 10000.0);
    Rng rng = substream(0, 0);
    const auto t = step_block(pool, pool.initial_state(), {}, OrderingMechanism::fifo(), rng, 150.0);
    EXPECT_EQ(t.state_after, pool.initial_state());
    EXPECT_TRUE(t.entries.empty());
}

TEST(StepBlock, SingleS0TradeAt121) {
    ConstantProductPool pool(100.0, 10000.0);
    Rng rng = substream(0, 0);
    const Action best = pool.optimal_action(pool.initial_state(), 121.0);
    const auto t = step_block(pool, pool.initial_state(), {{"s0", best}}, OrderingMechanism::fifo(), rng, 121.0);
    const Payoff p = t.executed_payoff("s0");
    EXPECT_NEAR(p.dx, 100.0 - 1000.0 / 11.0, 1e-12);
    EXPECT_NEAR(p.dy, -1000.0, 1e-9);
    EXPECT_NEAR(t.state_after[0], 1000.0 / 11.0, 1e-12);
    EXPECT_NEAR(t.state_after[1], 11000.0, 1e-9);
}

TEST(StepBlock, ThreeClonesExecuteOnceUnderEveryMechanism) {
    ConstantProductPool pool(100.0, 10000.0);
    const Action best = pool.optimal_action(pool.initial_state(), 121.0);
    for (const auto& mech : {OrderingMechanism::fifo(), OrderingMechanism::reverse(),
                             OrderingMechanism::uniform_random(), OrderingMechanism::priority({"c", "b"})}) {
        Rng rng = substream(3, 1);
        const auto t = step_block(pool, pool.initial_state(), {{"a", best}, {"b", best}, {"c", best}}, mech, rng,
                                  121.0);
        EXPECT_EQ(t.executed_non_null(), 1u) << mech.name();
        const Payoff total = t.executed_payoff("a") + t.executed_payoff("b") + t.executed_payoff("c");
        EXPECT_EQ(total, pool.payoff(best)) << mech.name();
    }
}

TEST(RunMarket, NoStrategiesKeepsInitialState) {
    ConstantProductPool pool(100.0, 10000.0);
    const auto sched = BlockSchedule::uniform(5, 1.0);
    const auto path = sample_path(ProcessSpec::gbm(0.5), sched, 100.0, 1);
    StrategySet none;
    for (const auto& t : run_market(pool, sched, none, OrderingMechanism::fifo(), path, 0)) {
        EXPECT_EQ(t.state_after, pool.initial_state());
    }
}

TEST(RunMarket, S0AloneEndsEachBlockAtNoArbitrage) {
    ConstantProductPool pool(100.0, 10000.0);
    const auto sched = BlockSchedule::uniform(20, 0.01);
    const auto path = sample_path(ProcessSpec::gbm(0.3), sched, 100.0, 2);
    StrategySet s;
    s.push_back(std::make_unique<SimpleArb>("s0"));
    const auto traces = run_market(pool, sched, s, OrderingMechanism::fifo(), path, 0);
    for (std::size_t n = 0; n < traces.size(); ++n) {
        const PoolState want = pool.no_arb_state(path.prices[n]);
        EXPECT_TRUE(states_match(traces[n].state_after, want)) << n;
    }
}

TEST(RunMarket, LinearFeeCounterexampleBlockProfits) {
    const auto pool = ammlab::testing::linear_pool(1.0, 0.01);
    const auto sched = BlockSchedule::uniform(2, 1.0);
    const auto path = sample_path(ProcessSpec::deterministic({100.0, 1.0}), sched, 1.0, 0);
    StrategySet s;
    s.push_back(std::make_unique<SimpleArb>("s0", FeeTargetRule::approximate));
    const auto traces = run_market(*pool, sched, s, OrderingMechanism::fifo(), path, 0);
    // Block 1: 1 -> 99, value 98 * 100 - 4900 - 49.
    EXPECT_NEAR(traces[0].executed_payoff("s0").value(100.0), 4851.0, 1e-9);
    // Block 2: 99 -> 1.01; pre-fee dy = (99^2 - 1.01^2) / 2, minus 1% of it.
    const double dy = (99.0 * 99.0 - 1.01 * 1.01) / 2.0 * 0.99;
    EXPECT_NEAR(traces[1].executed_payoff("s0").value(1.0), dy - 97.99, 1e-9);
}

TEST(RunMarket, MisalignedPathIsAConfigError) {
    ConstantProductPool pool(100.0, 10000.0);
    const auto sched = BlockSchedule::uniform(3, 1.0);
    const auto path = sample_path(ProcessSpec::gbm(0.3), BlockSchedule::uniform(4, 1.0), 100.0, 1);
    StrategySet none;
    EXPECT_THROW(run_market(pool, sched, none, OrderingMechanism::fifo(), path, 0), ConfigError);
}

// Trader payoffs are exactly what leaves the reserves.
TEST(RunMarket, PropertyConservationOfReserves) {
    const auto pool = ammlab::testing::cp_pool();
    const auto sched = BlockSchedule::uniform(10, 0.1);
    for_all(17, 50, [&](Rng& rng) {
        const auto path = sample_path(ProcessSpec::gbm(0.5), sched, 100.0, rng());
        auto set = split_competitive_set({rng(), 3, 5, 3.0, 0.5});
        set.push_back(std::make_unique<SimpleArb>("s0"));
        const auto traces = run_market(*pool, sched, set, OrderingMechanism::uniform_random(), path, rng());
        for (const auto& t : traces) {
            Payoff sum;
            for (const auto& e : t.entries) sum += e.payoff;
            ASSERT_NEAR(sum.dx, t.state_before[0] - t.state_after[0], 1e-9 * 100.0);
            ASSERT_NEAR(sum.dy, t.state_before[1] - t.state_after[1], 1e-9 * 10000.0);
        }
    });
}

TEST(RunMarket, DeterministicGivenSeed) {
    ConstantProductPool pool(100.0, 10000.0);
    const auto sched = BlockSchedule::uniform(10, 0.1);
    const auto path = sample_path(ProcessSpec::gbm(0.5), sched, 100.0, 5);
    auto run = [&] {
        StrategySet set = clone_set(SimpleArb("s0"), 4);
        std::ostringstream out;
        const auto traces = run_market(pool, sched, set, OrderingMechanism::uniform_random(), path, 99);
        write_trace_jsonl(out, traces);
        return out.str();
    };
    const std::string a = run();
    EXPECT_EQ(a, run());
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 10);
    const auto first = nlohmann::json::parse(a.substr(0, a.find('\n')));
    for (const char* key : {"block", "time", "price", "state_before", "state_after", "entries", "holdings"}) {
        EXPECT_TRUE(first.contains(key)) << key;
    }
}
