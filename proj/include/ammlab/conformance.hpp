#pragma once

// Randomized conformance checks of the liquidity-pool axioms: null action,
// composition (payoff additivity, admissibility chaining, associativity) and
// the optimal-action axiom.

#include <ammlab/pool_core.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ammlab {

struct ActionSampler {
    // External and target prices; defaults to reference_price / 10 .. * 10.
    std::optional<PriceRange> range;
    // Competing actions drawn per optimal-action trial.
    std::size_t actions_per_trial = 8;
    std::size_t max_chain = 3;

    PriceRange resolve(const Pool& pool) const {
        if (range) return *range;
        const double p = pool.reference_price();
        return {p / 10.0, p * 10.0};
    }

    double price(const Pool& pool, Rng& rng) const { return resolve(pool).sample(rng); }
    PoolState state(const Pool& pool, Rng& rng) const { return pool.sample_state(rng, resolve(pool)); }
    Action action(const Pool& pool, const PoolState& s, Rng& rng) const {
        return pool.sample_action(s, rng, resolve(pool));
    }

    // Admissible composite of `length` sampled legs starting at s.
    Action chain(const Pool& pool, const PoolState& s, Rng& rng, std::size_t length) const {
        Action out;
        PoolState cur = s;
        for (std::size_t i = 0; i < length; ++i) {
            Action a = action(pool, cur, rng);
            cur = pool.transition(cur, a);
            out = compose(out, a);
        }
        return out;
    }
};

struct AxiomResult {
    std::string axiom;
    bool passed = true;
    std::size_t trials = 0;
    // Largest violation seen, normalized by max(1, |P|, |dy|); inf for a
    // structural failure (inadmissible, not atomic, unequal composites).
    double worst_violation = 0.0;
    std::uint64_t seed = 0;
    std::string detail;
};

struct ConformanceReport {
    std::string pool_kind;
    std::vector<AxiomResult> results;

    bool all_passed() const {
        for (const auto& r : results) {
            if (!r.passed) return false;
        }
        return true;
    }

    const AxiomResult& find(std::string_view axiom) const {
        for (const auto& r : results) {
            if (r.axiom == axiom) return r;
        }
        throw std::out_of_range("no axiom named " + std::string(axiom));
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : results) {
            nlohmann::json row{{"axiom", r.axiom},
                               {"status", r.passed ? "pass" : "fail"},
                               {"trials", r.trials},
                               {"seed", r.seed}};
            row["worst_violation"] = std::isfinite(r.worst_violation) ? nlohmann::json(r.worst_violation)
                                                                      : nlohmann::json("inf");
            if (!r.detail.empty()) row["detail"] = r.detail;
            rows.push_back(std::move(row));
        }
        return {{"pool", pool_kind}, {"all_passed", all_passed()}, {"axioms", rows}};
    }
};

namespace detail {

inline constexpr double kStructural = std::numeric_limits<double>::infinity();

inline double payoff_gap(const Payoff& a, const Payoff& b, double price) {
    const double scale = std::max({value_scale(price, a.dy), std::abs(b.dy), std::abs(a.dx), std::abs(b.dx)});
    return std::max(std::abs(a.dx - b.dx), std::abs(a.dy - b.dy)) / scale;
}

inline void record(AxiomResult& r, double violation, std::string_view what) {
    if (violation > r.worst_violation) r.worst_violation = violation;
    if (violation > kRelTol && r.passed) {
        r.passed = false;
        r.detail = std::string(what);
    }
}

} // namespace detail

// Deterministic given seed. Failures are report entries, never exceptions.
inline ConformanceReport check_axioms(const Pool& pool, const ActionSampler& sampler, std::size_t n_trials,
                                      std::uint64_t seed) {
    if (n_trials == 0) throw std::invalid_argument("check_axioms: n_trials must be at least 1");
    using detail::kStructural;
    using detail::record;

    AxiomResult null_r{"null_action", true, n_trials, 0.0, seed, {}};
    AxiomResult add_r{"payoff_additivity", true, n_trials, 0.0, seed, {}};
    AxiomResult chain_r{"admissibility_chaining", true, n_trials, 0.0, seed, {}};
    AxiomResult assoc_r{"associativity", true, n_trials, 0.0, seed, {}};
    AxiomResult opt_r{"optimal_action", true, n_trials, 0.0, seed, {}};

    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        Rng rng = substream(seed, trial);
        const PoolState s = sampler.state(pool, rng);
        const double price = sampler.price(pool, rng);

        // Null: admissible everywhere, state-fixing, zero payoff.
        const Action bottom = Action::null();
        if (!pool.admissible(s, bottom)) {
            record(null_r, kStructural, "null action not admissible");
        } else {
            record(null_r, pool.transition(s, bottom) == s ? 0.0 : kStructural, "null action moved the state");
            const Payoff p0 = pool.payoff(bottom);
            record(null_r, std::max(std::abs(p0.dx), std::abs(p0.dy)), "null action has nonzero payoff");
        }
        record(null_r, compose(bottom, bottom).is_null() ? 0.0 : kStructural, "null * null is not null");

        // Composition: a1 at s, a2 at tau(s, a1), a3 at tau(s, a1 a2).
        const Action a1 = sampler.action(pool, s, rng);
        const PoolState s1 = pool.transition(s, a1);
        const Action a2 = sampler.action(pool, s1, rng);
        const PoolState s2 = pool.transition(s1, a2);
        const Action a3 = sampler.action(pool, s2, rng);
        const Action a12 = compose(a1, a2);

        record(add_r, detail::payoff_gap(pool.payoff(a12), pool.payoff(a1) + pool.payoff(a2), price),
               "payoff(a1 a2) != payoff(a1) + payoff(a2)");

        if (!pool.admissible(s, a12)) {
            record(chain_r, kStructural, "a1 a2 not admissible although a2 is admissible after a1");
        } else {
            record(chain_r, pool.transition(s, a12) == s2 ? 0.0 : kStructural,
                   "tau(s, a1 a2) != tau(tau(s, a1), a2)");
        }

        const Action left = compose(compose(a1, a2), a3);
        const Action right = compose(a1, compose(a2, a3));
        record(assoc_r, left == right ? 0.0 : kStructural, "(a1 a2) a3 != a1 (a2 a3)");
        record(assoc_r, compose(bottom, a1) == a1 && compose(a1, bottom) == a1 ? 0.0 : kStructural,
               "null is not a unit");
        if (pool.admissible(s, left)) {
            record(assoc_r, detail::payoff_gap(pool.payoff(left), pool.payoff(right), price),
                   "associated composites pay differently");
        } else {
            record(assoc_r, kStructural, "(a1 a2) a3 not admissible");
        }

        // Optimal action: atomic, admissible, nonnegative value, dominates
        // sampled admissible actions, and leaves a no-arbitrage state behind.
        const Action best = pool.optimal_action(s, price);
        if (!best.is_atomic() || !pool.admissible(s, best)) {
            record(opt_r, kStructural, "optimal action is not an admissible atomic action");
            continue;
        }
        const Payoff best_p = pool.payoff(best);
        const double best_v = best_p.value(price);
        record(opt_r, -best_v / value_scale(price, best_p.dy), "optimal action has negative value");
        const PoolState after = pool.transition(s, best);
        for (std::size_t k = 0; k < sampler.actions_per_trial; ++k) {
            const std::size_t len = 1 + k % std::max<std::size_t>(1, sampler.max_chain);
            const Action a = sampler.chain(pool, s, rng, len);
            const Payoff p = pool.payoff(a);
            const double scale = std::max(value_scale(price, p.dy), std::abs(best_p.dy));
            record(opt_r, (p.value(price) - best_v) / scale, "sampled action beats the optimal action");

            const Action b = sampler.chain(pool, after, rng, len);
            const Payoff pb = pool.payoff(b);
            record(opt_r, pb.value(price) / value_scale(price, pb.dy),
                   "profitable action remains after the optimal action");
        }
    }

    return {pool.kind(), {null_r, add_r, chain_r, assoc_r, opt_r}};
}

} // namespace ammlab
