#pragma once

#include <ammlab/pool_core.hpp>

#include <cmath>

namespace ammlab {

// x * y = L. State is the reserve pair (x, y); payoff of a move is the
// reserve change handed to the trader.
class ConstantProductPool final : public Pool {
public:
    ConstantProductPool(double x, double y) : x0_(x), y0_(y), level_(x * y) {
        if (!(x > 0.0) || !(y > 0.0)) throw ConfigError("constant_product: reserves must be positive");
    }

    double level() const { return level_; }

    std::string kind() const override { return "constant_product"; }
    PoolTraits traits() const override { return {true, true, true, 0.0}; }
    PoolState initial_state() const override { return {x0_, y0_}; }
    double reference_price() const override { return y0_ / x0_; }

    nlohmann::json to_json() const override {
        return {{"kind", kind()}, {"x", x0_}, {"y", y0_}, {"fee", 0.0}};
    }

    bool valid_state(const PoolState& s) const override {
        return s.size() == 2 && s[0] > 0.0 && s[1] > 0.0 && approx_equal(s[0] * s[1], level_);
    }

    Payoff underlying_move(const PoolState& from, const PoolState& to) const override {
        return {from[0] - to[0], from[1] - to[1]};
    }

    std::optional<PriceInterval> no_arb_prices(const PoolState& s) const override {
        const double p = s[1] / s[0];
        return PriceInterval{p, p};
    }

    // (sqrt(L / P), sqrt(L * P)), the unique state with y / x = P.
    PoolState no_arb_state(double price) const override {
        return {std::sqrt(level_ / price), std::sqrt(level_ * price)};
    }

    Action optimal_action(const PoolState& s, double price) const override {
        return move_to_price(s, price);
    }

private:
    double x0_;
    double y0_;
    double level_;
};

// Free-function form of the closed-form no-arbitrage state.
inline PoolState cp_no_arb_state(const ConstantProductPool& pool, double price) {
    if (!(price > 0.0)) throw std::invalid_argument("cp_no_arb_state: price must be positive");
    return pool.no_arb_state(price);
}

} // namespace ammlab
