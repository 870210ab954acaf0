#pragma once

#include <ammlab/pool_core.hpp>

#include <cmath>
#include <memory>

namespace ammlab {

// Two pools side by side. Atomic actions are pairs (a1, a2) of component
// actions; transition and payoff act componentwise.
class ProductPool final : public Pool {
public:
    ProductPool(std::shared_ptr<const Pool> left, std::shared_ptr<const Pool> right)
        : left_(std::move(left)), right_(std::move(right)) {
        if (!left_ || !right_) throw ConfigError("product: missing component pool");
        left_size_ = left_->initial_state().size();
    }

    const Pool& left() const { return *left_; }
    const Pool& right() const { return *right_; }

    PoolState left_state(const PoolState& s) const { return s.slice(0, left_size_); }
    PoolState right_state(const PoolState& s) const { return s.slice(left_size_, s.size() - left_size_); }

    // Product action (a1, a2); (Null, Null) is the null action.
    Action pair(const PoolState& s, Action a1, Action a2) const {
        if (a1.is_null() && a2.is_null()) return Action::null();
        const PoolState target = concat(left_->transition(left_state(s), a1), right_->transition(right_state(s), a2));
        const Payoff underlying = underlying_payoff(a1) + underlying_payoff(a2);
        return Action(Leg{s, target, underlying, {std::move(a1), std::move(a2)}});
    }

    std::string kind() const override { return "product"; }
    PoolTraits traits() const override {
        const PoolTraits l = left_->traits();
        const PoolTraits r = right_->traits();
        return {l.frictionless && r.frictionless, l.path_independent && r.path_independent, false, 0.0};
    }
    PoolState initial_state() const override { return concat(left_->initial_state(), right_->initial_state()); }
    double reference_price() const override {
        return std::sqrt(left_->reference_price() * right_->reference_price());
    }

    nlohmann::json to_json() const override {
        return {{"kind", kind()}, {"left", left_->to_json()}, {"right", right_->to_json()}};
    }

    bool valid_state(const PoolState& s) const override {
        return s.size() > left_size_ && left_->valid_state(left_state(s)) && right_->valid_state(right_state(s));
    }

    Payoff underlying_move(const PoolState& from, const PoolState& to) const override {
        return left_->underlying_move(left_state(from), left_state(to)) +
               right_->underlying_move(right_state(from), right_state(to));
    }

    bool leg_admissible(const PoolState& s, const Leg& leg) const override {
        return leg.parts.size() == 2 && left_->admissible(left_state(s), leg.parts[0]) &&
               right_->admissible(right_state(s), leg.parts[1]);
    }
    PoolState leg_transition(const PoolState& s, const Leg& leg) const override {
        return concat(left_->transition(left_state(s), leg.parts[0]),
                      right_->transition(right_state(s), leg.parts[1]));
    }
    Payoff leg_payoff(const Leg& leg) const override {
        return left_->payoff(leg.parts[0]) + right_->payoff(leg.parts[1]);
    }
    double leg_volume(const Leg& leg) const override {
        return left_->volume(leg.parts[0]) + right_->volume(leg.parts[1]);
    }

    // No-arbitrage for P iff both components are.
    std::optional<PriceInterval> no_arb_prices(const PoolState& s) const override {
        const auto l = left_->no_arb_prices(left_state(s));
        const auto r = right_->no_arb_prices(right_state(s));
        if (!l || !r) return std::nullopt;
        return PriceInterval{std::max(l->lo, r->lo), std::min(l->hi, r->hi)};
    }

    PoolState no_arb_state(double price) const override {
        return concat(left_->no_arb_state(price), right_->no_arb_state(price));
    }

    Action move_to_price(const PoolState& s, double target_price) const override {
        return pair(s, left_->move_to_price(left_state(s), target_price),
                    right_->move_to_price(right_state(s), target_price));
    }

    Action optimal_action(const PoolState& s, double price) const override {
        return pair(s, left_->optimal_action(left_state(s), price), right_->optimal_action(right_state(s), price));
    }

    PoolState sample_state(Rng& rng, const PriceRange& range) const override {
        return concat(left_->sample_state(rng, range), right_->sample_state(rng, range));
    }

    // Each side is left untouched a quarter of the time.
    Action sample_action(const PoolState& s, Rng& rng, const PriceRange& range) const override {
        Action a1 = left_->sample_action(left_state(s), rng, range);
        Action a2 = right_->sample_action(right_state(s), rng, range);
        if (uniform_open01(rng) < 0.25) a1 = Action::null();
        if (uniform_open01(rng) < 0.25) a2 = Action::null();
        return pair(s, std::move(a1), std::move(a2));
    }

private:
    std::shared_ptr<const Pool> left_;
    std::shared_ptr<const Pool> right_;
    std::size_t left_size_ = 0;
};

inline Action product_optimal_action(const ProductPool& pool, const PoolState& s, double price) {
    return optimal_action(pool, s, price);
}

} // namespace ammlab
