#pragma once

#include <ammlab/pool_core.hpp>

namespace ammlab {

// One unit of x per unit of price, spread uniformly over (0, inf). Moving the
// pool price p1 -> p2 hands the trader p2 - p1 units of x for (p2^2 - p1^2) / 2
// of numeraire, before fees.
class LinearBookPool final : public Pool {
public:
    explicit LinearBookPool(double price) : p0_(price) {
        if (!(price > 0.0)) throw ConfigError("linear_book: price must be positive");
    }

    std::string kind() const override { return "linear_book"; }
    PoolTraits traits() const override { return {true, true, true, 0.0}; }
    PoolState initial_state() const override { return {p0_}; }
    double reference_price() const override { return p0_; }

    nlohmann::json to_json() const override { return {{"kind", kind()}, {"price", p0_}, {"fee", 0.0}}; }

    bool valid_state(const PoolState& s) const override { return s.size() == 1 && s[0] > 0.0; }

    Payoff underlying_move(const PoolState& from, const PoolState& to) const override {
        const double p1 = from[0];
        const double p2 = to[0];
        return {p2 - p1, -(p2 - p1) * (p2 + p1) / 2.0};
    }

    std::optional<PriceInterval> no_arb_prices(const PoolState& s) const override {
        return PriceInterval{s[0], s[0]};
    }

    PoolState no_arb_state(double price) const override { return {price}; }

    Action optimal_action(const PoolState& s, double price) const override {
        return move_to_price(s, price);
    }

private:
    double p0_;
};

inline Action linear_trade_to_price(const LinearBookPool& pool, const PoolState& s, double target) {
    if (!(target > 0.0)) throw std::invalid_argument("linear_trade_to_price: target must be positive");
    return pool.move_to_price(s, target);
}

} // namespace ammlab
