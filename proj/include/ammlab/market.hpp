#pragma once

// Blockchain market engine. Each block: collect submissions from every
// strategy, permute them with the ordering mechanism, drop every action that
// is inadmissible after the actions kept before it, execute the rest.

#include <ammlab/pool_core.hpp>
#include <ammlab/price_process.hpp>
#include <ammlab/random.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ammlab {

struct Submission {
    std::string strategy_id;
    Action action;
};

class OrderingMechanism {
public:
    enum class Kind { fifo, reverse, uniform_random, priority };

    static OrderingMechanism fifo() { return OrderingMechanism(Kind::fifo, {}); }
    static OrderingMechanism reverse() { return OrderingMechanism(Kind::reverse, {}); }
    static OrderingMechanism uniform_random() { return OrderingMechanism(Kind::uniform_random, {}); }
    // Listed ids first, in list order; unlisted ids last. Ties keep input order.
    static OrderingMechanism priority(std::vector<std::string> ids) {
        return OrderingMechanism(Kind::priority, std::move(ids));
    }

    Kind kind() const { return kind_; }
    const std::vector<std::string>& priority_ids() const { return priority_; }

    std::string name() const {
        switch (kind_) {
        case Kind::fifo: return "fifo";
        case Kind::reverse: return "reverse";
        case Kind::uniform_random: return "uniform_random";
        case Kind::priority: return "priority";
        }
        return "unknown";
    }

    // Index permutation of n submissions; deterministic kinds ignore rng.
    std::vector<std::size_t> permutation(std::span<const Submission> subs, Rng& rng) const {
        std::vector<std::size_t> idx(subs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        switch (kind_) {
        case Kind::fifo: break;
        case Kind::reverse: std::reverse(idx.begin(), idx.end()); break;
        case Kind::uniform_random:
            for (std::size_t i = idx.size(); i > 1; --i) {
                std::uniform_int_distribution<std::size_t> pick(0, i - 1);
                std::swap(idx[i - 1], idx[pick(rng)]);
            }
            break;
        case Kind::priority: {
            auto rank = [&](std::size_t i) {
                const auto it = std::find(priority_.begin(), priority_.end(), subs[i].strategy_id);
                return static_cast<std::size_t>(it - priority_.begin());
            };
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rank(a) < rank(b); });
            break;
        }
        }
        return idx;
    }

private:
    OrderingMechanism(Kind kind, std::vector<std::string> ids) : kind_(kind), priority_(std::move(ids)) {}

    Kind kind_;
    std::vector<std::string> priority_;
};

inline std::vector<Submission> order_submissions(std::vector<Submission> subs, const OrderingMechanism& mech,
                                                 Rng& rng) {
    const auto perm = mech.permutation(subs, rng);
    std::vector<Submission> out;
    out.reserve(subs.size());
    for (std::size_t i : perm) out.push_back(std::move(subs[i]));
    return out;
}

struct FilterResult {
    std::vector<bool> kept;
    PoolState state_after;
};

// Greedy walk: keep an action iff it is admissible at the state reached by
// the actions kept so far.
inline FilterResult filter_admissible(const Pool& pool, const PoolState& s, std::span<const Submission> ordered) {
    FilterResult out{std::vector<bool>(ordered.size(), false), s};
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (pool.admissible(out.state_after, ordered[i].action)) {
            out.state_after = pool.transition(out.state_after, ordered[i].action);
            out.kept[i] = true;
        }
    }
    return out;
}

struct TraceEntry {
    std::string strategy_id;
    Action action;
    bool dropped = false;
    // Zero for dropped entries.
    Payoff payoff;
    double volume = 0.0;
};

struct BlockTrace {
    std::size_t block = 0; // 1-based
    double time = 0.0;
    double price = 0.0;
    PoolState state_before;
    PoolState state_after;
    // In execution order.
    std::vector<TraceEntry> entries;
    // External x holdings of each strategy after the block.
    std::map<std::string, double> holdings;

    Payoff executed_payoff(std::string_view id) const {
        Payoff p;
        for (const auto& e : entries) {
            if (!e.dropped && e.strategy_id == id) p += e.payoff;
        }
        return p;
    }

    std::size_t executed_non_null() const {
        return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const TraceEntry& e) {
            return !e.dropped && !e.action.is_null();
        }));
    }
};

inline BlockTrace step_block(const Pool& pool, const PoolState& state, std::vector<Submission> submissions,
                             const OrderingMechanism& mech, Rng& rng, double price) {
    BlockTrace trace;
    trace.price = price;
    trace.state_before = state;
    const auto ordered = order_submissions(std::move(submissions), mech, rng);
    const auto filtered = filter_admissible(pool, state, ordered);
    trace.state_after = filtered.state_after;
    trace.entries.reserve(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        TraceEntry e{ordered[i].strategy_id, ordered[i].action, !filtered.kept[i], {}, 0.0};
        if (filtered.kept[i]) {
            e.payoff = pool.payoff(e.action);
            e.volume = pool.volume(e.action);
        }
        trace.entries.push_back(std::move(e));
    }
    return trace;
}

// What a strategy may look at before submitting for block n.
struct BlockContext {
    std::size_t block = 0; // 1-based
    double time = 0.0;
    const Pool* pool = nullptr;
    PoolState state;
    double price = 0.0;
    // P_{t_1}, ..., P_{t_n}.
    std::span<const double> prices;
};

class Strategy {
public:
    explicit Strategy(std::string id) : id_(std::move(id)) {}
    virtual ~Strategy() = default;

    const std::string& id() const { return id_; }

    // Ordered actions for this block; each one is ordered and dropped as a unit.
    virtual std::vector<Action> on_block(const BlockContext& ctx) = 0;
    // Called once per submitted action after execution.
    virtual void on_executed(const BlockContext&, const Action&, bool /*dropped*/, const Payoff&) {}
    // External x position held from the end of the current block onwards.
    virtual double external_holdings() const { return 0.0; }
    virtual std::unique_ptr<Strategy> clone(std::string id) const = 0;

private:
    std::string id_;
};

using StrategySet = std::vector<std::unique_ptr<Strategy>>;

inline Rng block_rng(std::uint64_t run_seed, std::size_t block) { return substream(run_seed, block); }

// Blocks run in order; submissions are collected in strategy order before
// the ordering mechanism sees them.
inline std::vector<BlockTrace> run_market(const Pool& pool, const BlockSchedule& schedule, StrategySet& strategies,
                                          const OrderingMechanism& mech, const PricePath& path, std::uint64_t seed,
                                          std::optional<PoolState> initial = std::nullopt) {
    if (path.size() != schedule.size() || path.times != schedule.times()) {
        throw ConfigError("run_market: price path is not aligned with the block schedule");
    }
    PoolState state = initial.value_or(pool.initial_state());
    if (!pool.valid_state(state)) throw ConfigError("run_market: invalid initial pool state");

    std::vector<BlockTrace> traces;
    traces.reserve(schedule.size());
    for (std::size_t n = 0; n < schedule.size(); ++n) {
        BlockContext ctx{n + 1, schedule[n], &pool, state, path.prices[n],
                         std::span<const double>(path.prices.data(), n + 1)};
        std::vector<Submission> subs;
        for (auto& s : strategies) {
            auto actions = s->on_block(ctx);
            for (auto& a : actions) subs.push_back({s->id(), std::move(a)});
        }
        Rng rng = block_rng(seed, n + 1);
        BlockTrace trace = step_block(pool, state, std::move(subs), mech, rng, ctx.price);
        trace.block = n + 1;
        trace.time = schedule[n];

        // Feedback in execution order.
        for (const auto& e : trace.entries) {
            for (auto& s : strategies) {
                if (s->id() == e.strategy_id) s->on_executed(ctx, e.action, e.dropped, e.payoff);
            }
        }
        for (const auto& s : strategies) trace.holdings[s->id()] = s->external_holdings();
        state = trace.state_after;
        traces.push_back(std::move(trace));
    }
    return traces;
}

inline nlohmann::json to_json(const Payoff& p) { return nlohmann::json::array({p.dx, p.dy}); }

inline nlohmann::json to_json(const BlockTrace& t) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : t.entries) {
        entries.push_back({{"strategy", e.strategy_id},
                           {"legs", e.action.size()},
                           {"dropped", e.dropped},
                           {"payoff", to_json(e.payoff)},
                           {"volume", e.volume}});
    }
    return {{"block", t.block},
            {"time", t.time},
            {"price", t.price},
            {"state_before", to_json(t.state_before)},
            {"state_after", to_json(t.state_after)},
            {"entries", entries},
            {"holdings", t.holdings}};
}

// One JSON object per line.
inline void write_trace_jsonl(std::ostream& out, std::span<const BlockTrace> traces) {
    for (const auto& t : traces) out << to_json(t).dump() << '\n';
}

} // namespace ammlab
