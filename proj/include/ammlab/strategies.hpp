#pragma once

// Arbitrage strategies and self-financing PNL accounting.

#include <ammlab/market.hpp>
#include <ammlab/pools/fee_wrapped.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ammlab {

class CompetitivenessViolation : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// S0's trade: the pool's optimal action, with the fee target rule applied
// when the pool is fee-wrapped.
inline Action s0_action(const Pool& pool, const PoolState& s, double price,
                        FeeTargetRule rule = FeeTargetRule::exact) {
    if (const auto* fee_pool = dynamic_cast<const FeeWrappedPool*>(&pool)) {
        return fee_pool->fee_optimal_action(s, price, rule);
    }
    return pool.optimal_action(s, price);
}

class SimpleArb : public Strategy {
public:
    explicit SimpleArb(std::string id, FeeTargetRule rule = FeeTargetRule::exact)
        : Strategy(std::move(id)), rule_(rule) {}

    std::vector<Action> on_block(const BlockContext& ctx) override {
        return {s0_action(*ctx.pool, ctx.state, ctx.price, rule_)};
    }
    std::unique_ptr<Strategy> clone(std::string id) const override {
        return std::make_unique<SimpleArb>(std::move(id), rule_);
    }

protected:
    FeeTargetRule rule_;
};

// Null on every block except n_star, where it submits S0's trade.
class DeferredArb final : public Strategy {
public:
    DeferredArb(std::string id, std::size_t n_star, FeeTargetRule rule = FeeTargetRule::exact)
        : Strategy(std::move(id)), n_star_(n_star), rule_(rule) {
        if (n_star_ == 0) throw ConfigError("deferred: n_star must be at least 1");
    }

    std::size_t n_star() const { return n_star_; }

    std::vector<Action> on_block(const BlockContext& ctx) override {
        if (ctx.block != n_star_) return {Action::null()};
        return {s0_action(*ctx.pool, ctx.state, ctx.price, rule_)};
    }
    std::unique_ptr<Strategy> clone(std::string id) const override {
        return std::make_unique<DeferredArb>(std::move(id), n_star_, rule_);
    }

private:
    std::size_t n_star_;
    FeeTargetRule rule_;
};

// Prices P' for which s*(P') is a no-arbitrage state at P: [P/(1+fee), P/(1-fee)].
inline PriceInterval competitive_targets(double price, double fee) {
    return {price / (1.0 + fee), price / (1.0 - fee)};
}

// Moves the pool to s*(targets[n-1]) on block n.
class TargetPriceArb final : public Strategy {
public:
    TargetPriceArb(std::string id, std::vector<double> targets)
        : Strategy(std::move(id)), targets_(std::move(targets)) {
        for (double t : targets_) {
            if (!(t > 0.0)) throw ConfigError("target_price: targets must be positive");
        }
    }

    std::vector<Action> on_block(const BlockContext& ctx) override {
        if (ctx.block > targets_.size()) {
            throw ConfigError("target_price: no target for block " + std::to_string(ctx.block));
        }
        const double target = targets_[ctx.block - 1];
        const auto band = competitive_targets(ctx.price, ctx.pool->traits().fee);
        if (!band.contains(target)) {
            throw CompetitivenessViolation("target_price: target " + std::to_string(target) + " at block " +
                                           std::to_string(ctx.block) + " is outside [" + std::to_string(band.lo) +
                                           ", " + std::to_string(band.hi) + "]");
        }
        return {ctx.pool->move_to_price(ctx.state, target)};
    }
    std::unique_ptr<Strategy> clone(std::string id) const override {
        return std::make_unique<TargetPriceArb>(std::move(id), targets_);
    }

private:
    std::vector<double> targets_;
};

// S0's on-chain trades plus an external x position equal to the cumulative
// executed dx. Its PNL at t_n is (sum dx) P_{t_n} + sum dy.
class HedgedS0 final : public SimpleArb {
public:
    explicit HedgedS0(std::string id, FeeTargetRule rule = FeeTargetRule::exact) : SimpleArb(std::move(id), rule) {}

    void on_executed(const BlockContext&, const Action&, bool dropped, const Payoff& p) override {
        if (!dropped) holdings_ += p.dx;
    }
    double external_holdings() const override { return holdings_; }
    std::unique_ptr<Strategy> clone(std::string id) const override {
        return std::make_unique<HedgedS0>(std::move(id), rule_);
    }

private:
    double holdings_ = 0.0;
};

// m copies with ids "<id>#1" .. "<id>#m".
inline StrategySet clone_set(const Strategy& base, std::size_t m) {
    if (m == 0) throw ConfigError("clone_set: m must be at least 1");
    StrategySet out;
    for (std::size_t k = 1; k <= m; ++k) out.push_back(base.clone(base.id() + "#" + std::to_string(k)));
    return out;
}

// Randomized competitive sets for dominance tests. Every member derives the
// same per-block plan from (seed, block, state, price): a chain of moves
// through random intermediate prices ending at s*(P), cut into contiguous
// segments handed to members in member order. Members may also append a
// stale action built for some other state. Under fifo ordering the whole
// chain executes, the stale actions are dropped, and the block ends in the
// no-arbitrage state, so the set is competitive over the finite horizon.
struct SplitPlanConfig {
    std::uint64_t seed = 0;
    std::size_t members = 2;
    std::size_t max_legs = 6;
    // Intermediate prices are drawn log-uniformly from [P / spread, P * spread].
    double spread = 3.0;
    double stale_probability = 0.3;
};

inline std::vector<std::vector<Action>> split_plan(const SplitPlanConfig& cfg, const BlockContext& ctx) {
    const Pool& pool = *ctx.pool;
    Rng rng = substream(cfg.seed, ctx.block);
    const std::size_t legs = 1 + static_cast<std::size_t>(rng() % cfg.max_legs);

    std::vector<Action> chain;
    std::vector<PoolState> visited{ctx.state};
    for (std::size_t i = 0; i < legs; ++i) {
        const double target = i + 1 == legs ? ctx.price : log_uniform(rng, ctx.price / cfg.spread, ctx.price * cfg.spread);
        Action a = pool.move_to_price(visited.back(), target);
        if (a.is_null()) continue;
        visited.push_back(pool.transition(visited.back(), a));
        chain.push_back(std::move(a));
    }

    // Nondecreasing owner per leg keeps each member's legs contiguous.
    std::vector<std::size_t> owner(chain.size());
    for (auto& o : owner) o = static_cast<std::size_t>(rng() % cfg.members);
    std::sort(owner.begin(), owner.end());

    std::vector<std::vector<Action>> plan(cfg.members);
    for (std::size_t i = 0; i < chain.size(); ++i) plan[owner[i]].push_back(chain[i]);
    for (auto& mine : plan) {
        if (uniform_open01(rng) < cfg.stale_probability) {
            const PoolState elsewhere = pool.no_arb_state(ctx.price * log_uniform(rng, 0.5, 2.0));
            const Action stale = pool.move_to_price(elsewhere, ctx.price * log_uniform(rng, 0.5, 2.0));
            // Clamping pools can map "elsewhere" onto a state of the chain.
            const bool on_chain = std::any_of(visited.begin(), visited.end(),
                                              [&](const PoolState& v) { return states_match(v, elsewhere); });
            if (!on_chain) mine.push_back(stale);
        }
    }
    return plan;
}

class SplitMember final : public Strategy {
public:
    SplitMember(std::string id, SplitPlanConfig cfg, std::size_t index)
        : Strategy(std::move(id)), cfg_(cfg), index_(index) {}

    std::vector<Action> on_block(const BlockContext& ctx) override { return split_plan(cfg_, ctx)[index_]; }
    std::unique_ptr<Strategy> clone(std::string id) const override {
        return std::make_unique<SplitMember>(std::move(id), cfg_, index_);
    }

private:
    SplitPlanConfig cfg_;
    std::size_t index_;
};

inline StrategySet split_competitive_set(const SplitPlanConfig& cfg) {
    if (cfg.members == 0 || cfg.max_legs == 0) throw ConfigError("split set: need members and legs");
    StrategySet out;
    for (std::size_t k = 0; k < cfg.members; ++k) {
        out.push_back(std::make_unique<SplitMember>("split#" + std::to_string(k + 1), cfg, k));
    }
    return out;
}

struct PnlRecord {
    double t = 0.0;
    double pnl = 0.0;
    double onchain = 0.0;
    double external = 0.0;

    PnlRecord& operator+=(const PnlRecord& o) {
        pnl += o.pnl;
        onchain += o.onchain;
        external += o.external;
        return *this;
    }
};

// Self-financing PNL at time t:
//   onchain  = sum over executed trades in blocks t_i <= t of dx P_{t_i} + dy
//   external = sum over t_{j+1} <= t of x_{t_j} (P_{t_{j+1}} - P_{t_j})
// Prices are known at block times only, so t is effectively the latest
// block time at or before t.
inline PnlRecord pnl(std::span<const BlockTrace> traces, std::string_view id, const PricePath& path, double t) {
    if (traces.size() > path.size()) throw ConfigError("pnl: trace longer than the price path");
    PnlRecord r{t, 0.0, 0.0, 0.0};
    double held = 0.0;
    for (std::size_t j = 0; j < traces.size() && path.times[j] <= t; ++j) {
        if (j > 0) r.external += held * (path.prices[j] - path.prices[j - 1]);
        r.onchain += traces[j].executed_payoff(id).value(path.prices[j]);
        const auto it = traces[j].holdings.find(std::string(id));
        held = it == traces[j].holdings.end() ? 0.0 : it->second;
    }
    r.pnl = r.onchain + r.external;
    return r;
}

inline PnlRecord sum_strategies(std::span<const BlockTrace> traces, const std::vector<std::string>& ids,
                                const PricePath& path, double t) {
    PnlRecord total{t, 0.0, 0.0, 0.0};
    for (const auto& id : ids) total += pnl(traces, id, path, t);
    return total;
}

inline std::vector<std::string> ids_of(const StrategySet& set) {
    std::vector<std::string> ids;
    for (const auto& s : set) ids.push_back(s->id());
    return ids;
}

// PNL* of one strategy running alone, at every block time.
inline std::vector<double> uncontested_pnl_path(const Pool& pool, const BlockSchedule& schedule, const Strategy& base,
                                                const PricePath& path, std::uint64_t seed = 0) {
    StrategySet solo;
    solo.push_back(base.clone(base.id()));
    const auto traces = run_market(pool, schedule, solo, OrderingMechanism::fifo(), path, seed);
    std::vector<double> out;
    out.reserve(traces.size());
    for (const auto& tr : traces) out.push_back(pnl(traces, base.id(), path, tr.time).pnl);
    return out;
}

// Total volume of S0' on blocks 1..n: S0's trades, with the block-n trade
// composed with a move to `end_state`.
inline double s0_reconciled_volume(const Pool& pool, const PoolState& start, std::span<const double> prices,
                                   const PoolState& end_state, FeeTargetRule rule = FeeTargetRule::exact) {
    PoolState s = start;
    double volume = 0.0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        Action a = s0_action(pool, s, prices[i], rule);
        s = pool.transition(s, a);
        if (i + 1 == prices.size()) a = compose(a, pool.make_move(s, end_state));
        volume += pool.volume(a);
    }
    return volume;
}

} // namespace ammlab
