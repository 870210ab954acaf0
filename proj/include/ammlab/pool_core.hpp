#pragma once

// Abstract liquidity-pool contract: a deterministic state machine with an
// action monoid, admissibility, transition, payoff and optimal action, plus
// the derived notions (volume, no-arbitrage states, potential function).

#include <ammlab/numeric.hpp>
#include <ammlab/random.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ammlab {

class AdmissibilityError : public std::runtime_error {
public:
    AdmissibilityError(std::size_t index, const std::string& what)
        : std::runtime_error(what), index_(index) {}
    // Position of the first element that is not admissible after its prefix.
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class UnsupportedPool : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (dx, dy): change of the trader's holdings in the risky asset and numeraire.
struct Payoff {
    double dx = 0.0;
    double dy = 0.0;

    Payoff& operator+=(const Payoff& o) {
        dx += o.dx;
        dy += o.dy;
        return *this;
    }
    friend Payoff operator+(Payoff a, const Payoff& b) { return a += b; }
    friend Payoff operator-(const Payoff& a, const Payoff& b) { return {a.dx - b.dx, a.dy - b.dy}; }
    friend bool operator==(const Payoff&, const Payoff&) = default;

    // Mark-to-market value at external price P.
    double value(double price) const { return dx * price + dy; }
};

// Canonical pool parameters, e.g. reserves (x, y), a pool price p, or the
// concatenation of two component states for a product pool.
class PoolState {
public:
    PoolState() = default;
    PoolState(std::initializer_list<double> coords) : coords_(coords) {}
    explicit PoolState(std::vector<double> coords) : coords_(std::move(coords)) {}

    std::span<const double> coords() const { return coords_; }
    std::size_t size() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }

    friend bool operator==(const PoolState&, const PoolState&) = default;

    PoolState slice(std::size_t first, std::size_t count) const {
        return PoolState(std::vector<double>(coords_.begin() + static_cast<std::ptrdiff_t>(first),
                                             coords_.begin() + static_cast<std::ptrdiff_t>(first + count)));
    }

    friend PoolState concat(const PoolState& a, const PoolState& b) {
        std::vector<double> c = a.coords_;
        c.insert(c.end(), b.coords_.begin(), b.coords_.end());
        return PoolState(std::move(c));
    }

private:
    std::vector<double> coords_;
};

inline bool states_match(const PoolState& a, const PoolState& b) {
    return approx_equal(a.coords(), b.coords());
}

inline nlohmann::json to_json(const PoolState& s) {
    return nlohmann::json(std::vector<double>(s.coords().begin(), s.coords().end()));
}

class Action;

// One atomic trade. Records where it was built (source), where it leads
// (target) and its pre-fee payoff. Product pools carry one component action
// per factor in `parts`.
struct Leg {
    PoolState source;
    PoolState target;
    Payoff underlying;
    std::vector<Action> parts;
};

// Element of the free monoid A*: a flattened sequence of atomic legs.
// The empty sequence is the null action.
class Action {
public:
    Action() = default;
    explicit Action(Leg leg);

    static Action null() { return Action(); }

    bool is_null() const { return legs_.empty(); }
    // Null is itself atomic.
    bool is_atomic() const { return legs_.size() <= 1; }
    std::span<const Leg> legs() const { return legs_; }
    std::size_t size() const { return legs_.size(); }

    friend Action compose(const Action& a1, const Action& a2);
    friend bool operator==(const Action& a, const Action& b);

private:
    std::vector<Leg> legs_;
};

inline bool operator==(const Leg& a, const Leg& b) {
    return a.source == b.source && a.target == b.target && a.underlying == b.underlying &&
           a.parts == b.parts;
}

inline Action::Action(Leg leg) { legs_.push_back(std::move(leg)); }

inline bool operator==(const Action& a, const Action& b) { return a.legs_ == b.legs_; }

inline Action compose(const Action& a1, const Action& a2) {
    Action out;
    out.legs_.reserve(a1.legs_.size() + a2.legs_.size());
    out.legs_.insert(out.legs_.end(), a1.legs_.begin(), a1.legs_.end());
    out.legs_.insert(out.legs_.end(), a2.legs_.begin(), a2.legs_.end());
    return out;
}

inline Action compose(std::span<const Action> seq) {
    Action out;
    for (const auto& a : seq) out = compose(out, a);
    return out;
}

// Sum of pre-fee payoffs over all legs.
inline Payoff underlying_payoff(const Action& a) {
    Payoff p;
    for (const auto& leg : a.legs()) p += leg.underlying;
    return p;
}

struct PoolTraits {
    bool frictionless = false;
    bool path_independent = false;
    bool efficient = false;
    double fee = 0.0;
};

// Closed set of external prices for which a state is a no-arbitrage state.
// `hi` may be +infinity.
struct PriceInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double p) const {
        return p >= lo * (1.0 - kRelTol) && p <= hi * (1.0 + kRelTol);
    }
};

// Price range the default action sampler draws from (log-uniform).
struct PriceRange {
    double lo = 1.0;
    double hi = 1.0;

    double sample(Rng& rng) const { return lo == hi ? lo : log_uniform(rng, lo, hi); }
};

class Pool {
public:
    virtual ~Pool() = default;

    virtual std::string kind() const = 0;
    virtual PoolTraits traits() const = 0;
    virtual PoolState initial_state() const = 0;
    virtual bool valid_state(const PoolState& s) const = 0;
    // Marginal price of the initial state; the default potential reference.
    virtual double reference_price() const = 0;
    virtual nlohmann::json to_json() const = 0;

    // Pre-fee payoff of moving the pool from one state to another.
    virtual Payoff underlying_move(const PoolState& from, const PoolState& to) const = 0;

    // Admissibility of a single leg: the current state must match the leg's
    // recorded source and reproduce its recorded payoff.
    virtual bool leg_admissible(const PoolState& s, const Leg& leg) const {
        if (!leg.parts.empty() || !valid_state(leg.target) || !states_match(s, leg.source)) {
            return false;
        }
        const Payoff redo = underlying_move(s, leg.target);
        double scale = 1.0;
        for (double c : s.coords()) scale = std::max(scale, std::abs(c));
        return approx_equal(redo.dx, leg.underlying.dx, scale) &&
               approx_equal(redo.dy, leg.underlying.dy, scale);
    }
    virtual PoolState leg_transition(const PoolState&, const Leg& leg) const { return leg.target; }
    virtual Payoff leg_payoff(const Leg& leg) const { return leg.underlying; }
    virtual double leg_volume(const Leg& leg) const { return std::abs(leg.underlying.dy); }

    // Atomic admissible action maximizing dx * P + dy.
    virtual Action optimal_action(const PoolState& s, double price) const = 0;

    // Closed forms; pools without them keep the defaults.
    virtual std::optional<PriceInterval> no_arb_prices(const PoolState&) const { return std::nullopt; }
    virtual PoolState no_arb_state(double /*price*/) const {
        throw UnsupportedPool(kind() + ": no closed-form no-arbitrage state");
    }
    // Atomic action taking s to the no-arbitrage state for `target_price`.
    virtual Action move_to_price(const PoolState& s, double target_price) const {
        return make_move(s, no_arb_state(target_price));
    }

    virtual PoolState sample_state(Rng& rng, const PriceRange& range) const {
        return no_arb_state(range.sample(rng));
    }
    virtual Action sample_action(const PoolState& s, Rng& rng, const PriceRange& range) const {
        return move_to_price(s, range.sample(rng));
    }

    // Atomic leg from `from` to `to`; Null when the two states match.
    Action make_move(const PoolState& from, const PoolState& to) const {
        if (states_match(from, to)) return Action::null();
        return Action(Leg{from, to, underlying_move(from, to), {}});
    }

    bool admissible(const PoolState& s, const Action& a) const {
        PoolState cur = s;
        for (const auto& leg : a.legs()) {
            if (!leg_admissible(cur, leg)) return false;
            cur = leg_transition(cur, leg);
        }
        return true;
    }

    PoolState transition(const PoolState& s, const Action& a) const {
        PoolState cur = s;
        std::size_t i = 0;
        for (const auto& leg : a.legs()) {
            if (!leg_admissible(cur, leg)) {
                throw AdmissibilityError(i, kind() + ": leg " + std::to_string(i) + " not admissible");
            }
            cur = leg_transition(cur, leg);
            ++i;
        }
        return cur;
    }

    Payoff payoff(const Action& a) const {
        Payoff p;
        for (const auto& leg : a.legs()) p += leg_payoff(leg);
        return p;
    }

    double volume(const Action& a) const {
        double v = 0.0;
        for (const auto& leg : a.legs()) v += leg_volume(leg);
        return v;
    }

    double value(const Action& a, double price) const { return payoff(a).value(price); }
};

struct SequenceResult {
    PoolState state;
    Payoff payoff;
};

// Applies seq in order from s. Throws AdmissibilityError naming the first
// element that is inadmissible after its prefix.
inline SequenceResult apply_sequence(const Pool& pool, const PoolState& s, std::span<const Action> seq) {
    SequenceResult out{s, {}};
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (!pool.admissible(out.state, seq[i])) {
            throw AdmissibilityError(i, "element " + std::to_string(i) +
                                            " of the sequence is not admissible after its prefix");
        }
        out.state = pool.transition(out.state, seq[i]);
        out.payoff += pool.payoff(seq[i]);
    }
    return out;
}

inline double volume(const Pool& pool, const Action& a) { return pool.volume(a); }

inline Action optimal_action(const Pool& pool, const PoolState& s, double price) {
    if (!(price > 0.0)) throw std::invalid_argument("optimal_action: price must be positive");
    return pool.optimal_action(s, price);
}

enum class NoArbBasis { closed_form, statistical };

struct NoArbitrageCheck {
    bool no_arbitrage = false;
    NoArbBasis basis = NoArbBasis::closed_form;
    // Largest dx * P + dy among sampled admissible actions.
    double worst_sampled_value = 0.0;
    std::size_t samples = 0;
};

// Closed-form marginal-price test where the pool exposes one, always backed
// by sampling admissible actions from s. Pools without a closed form get a
// purely statistical verdict.
inline NoArbitrageCheck is_no_arbitrage_state(const Pool& pool, const PoolState& s, double price,
                                              std::size_t samples = 64, std::uint64_t seed = 0,
                                              std::optional<PriceRange> range = std::nullopt) {
    if (!(price > 0.0)) throw std::invalid_argument("is_no_arbitrage_state: price must be positive");
    NoArbitrageCheck out;
    const PriceRange r = range.value_or(PriceRange{price / 10.0, price * 10.0});
    Rng rng = substream(seed, 0x6e6f617262ULL);
    double worst = -std::numeric_limits<double>::infinity();
    double scale = value_scale(price, 0.0);
    for (std::size_t i = 0; i < samples; ++i) {
        const Action a = pool.sample_action(s, rng, r);
        const Payoff p = pool.payoff(a);
        worst = std::max(worst, p.value(price));
        scale = std::max(scale, std::abs(p.dy));
    }
    out.samples = samples;
    out.worst_sampled_value = samples ? worst : 0.0;

    if (auto band = pool.no_arb_prices(s)) {
        out.basis = NoArbBasis::closed_form;
        out.no_arbitrage = band->contains(price);
    } else {
        out.basis = NoArbBasis::statistical;
        out.no_arbitrage = approx_le(out.worst_sampled_value, 0.0, scale);
    }
    return out;
}

// Potential q(P) with q(reference) = 0: minus the numeraire paid to move the
// pool from s*(reference) to s*(P). Defined for efficient, frictionless,
// path-independent pools only.
inline double potential(const Pool& pool, double price, std::optional<double> reference = std::nullopt) {
    const PoolTraits t = pool.traits();
    if (t.fee != 0.0) throw UnsupportedPool(pool.kind() + ": potential is defined on the fee-free pool");
    if (!(t.frictionless && t.path_independent && t.efficient)) {
        throw UnsupportedPool(pool.kind() + ": potential needs an efficient, frictionless, path-independent pool");
    }
    if (!(price > 0.0)) throw std::invalid_argument("potential: price must be positive");
    const double ref = reference.value_or(pool.reference_price());
    const Action a = pool.move_to_price(pool.no_arb_state(ref), price);
    return -pool.payoff(a).dy;
}

} // namespace ammlab
