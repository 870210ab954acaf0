#pragma once

#include <ammlab/pool_core.hpp>

#include <cmath>

namespace ammlab {

// Idealized constant-sum market x * rate + y = K with unbounded reserves.
// Any trade along the line is admissible, so dx * P + dy is unbounded for
// P != rate and no optimal action exists. The pool answers with the best
// trade of size at most x0, which the axiom checker is expected to reject.
class ConstantSumPool final : public Pool {
public:
    ConstantSumPool(double x, double y, double rate) : x0_(x), y0_(y), rate_(rate), level_(x * rate + y) {
        if (!(x > 0.0) || !(y > 0.0) || !(rate > 0.0)) {
            throw ConfigError("constant_sum: reserves and rate must be positive");
        }
    }

    std::string kind() const override { return "constant_sum"; }
    PoolTraits traits() const override { return {false, true, false, 0.0}; }
    PoolState initial_state() const override { return {x0_, y0_}; }
    double reference_price() const override { return rate_; }

    nlohmann::json to_json() const override {
        return {{"kind", kind()}, {"x", x0_}, {"y", y0_}, {"rate", rate_}, {"fee", 0.0}};
    }

    bool valid_state(const PoolState& s) const override {
        return s.size() == 2 && approx_equal(s[0] * rate_ + s[1], level_, std::abs(level_) + std::abs(s[1]));
    }

    Payoff underlying_move(const PoolState& from, const PoolState& to) const override {
        return {from[0] - to[0], from[1] - to[1]};
    }

    Action optimal_action(const PoolState& s, double price) const override {
        if (price == rate_) return Action::null();
        const double dx = price > rate_ ? x0_ : -x0_;
        return make_move(s, {s[0] - dx, s[1] + dx * rate_});
    }

    PoolState sample_state(Rng& rng, const PriceRange&) const override {
        const double x = x0_ * log_uniform(rng, 0.1, 10.0);
        return {x, level_ - rate_ * x};
    }

    Action sample_action(const PoolState& s, Rng& rng, const PriceRange&) const override {
        const double size = x0_ * log_uniform(rng, 1e-3, 1e3);
        const double dx = uniform_open01(rng) < 0.5 ? size : -size;
        return make_move(s, {s[0] - dx, s[1] + dx * rate_});
    }

private:
    double x0_;
    double y0_;
    double rate_;
    double level_;
};

} // namespace ammlab
