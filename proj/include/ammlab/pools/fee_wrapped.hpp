#pragma once

#include <ammlab/pool_core.hpp>

#include <memory>
#include <optional>

namespace ammlab {

// How the optimal fee trade picks its destination price.
//   exact:        P / (1 + fee) when buying, P / (1 - fee) when selling.
//   approximate:  P * (1 - fee) when buying, P * (1 + fee) when selling.
enum class FeeTargetRule { exact, approximate };

// Same state space and admissibility as the inner pool; every leg pays
// fee * volume extra in numeraire, volume measured on the pre-fee payoff.
class FeeWrappedPool final : public Pool {
public:
    FeeWrappedPool(std::shared_ptr<const Pool> inner, double fee) : inner_(std::move(inner)), fee_(fee) {
        if (!inner_) throw ConfigError("fee wrapper: missing inner pool");
        if (!(fee_ > 0.0 && fee_ < 1.0)) throw ConfigError("fee wrapper: fee must be in (0, 1)");
        const PoolTraits t = inner_->traits();
        if (!(t.frictionless && t.path_independent && t.efficient) || t.fee != 0.0) {
            throw ConfigError("fee wrapper: inner pool must be efficient, frictionless, path-independent and fee-free");
        }
    }

    const Pool& inner() const { return *inner_; }
    std::shared_ptr<const Pool> inner_ptr() const { return inner_; }
    double fee() const { return fee_; }

    std::string kind() const override { return inner_->kind(); }
    PoolTraits traits() const override { return {false, false, false, fee_}; }
    PoolState initial_state() const override { return inner_->initial_state(); }
    bool valid_state(const PoolState& s) const override { return inner_->valid_state(s); }
    double reference_price() const override { return inner_->reference_price(); }

    nlohmann::json to_json() const override {
        nlohmann::json j = inner_->to_json();
        j["fee"] = fee_;
        return j;
    }

    Payoff underlying_move(const PoolState& from, const PoolState& to) const override {
        return inner_->underlying_move(from, to);
    }
    bool leg_admissible(const PoolState& s, const Leg& leg) const override {
        return inner_->leg_admissible(s, leg);
    }
    PoolState leg_transition(const PoolState& s, const Leg& leg) const override {
        return inner_->leg_transition(s, leg);
    }
    Payoff leg_payoff(const Leg& leg) const override {
        Payoff p = inner_->leg_payoff(leg);
        p.dy -= fee_ * inner_->leg_volume(leg);
        return p;
    }
    double leg_volume(const Leg& leg) const override { return inner_->leg_volume(leg); }

    // s = s*(P0) is a no-arbitrage state for P iff P0 lies in [P/(1+fee), P/(1-fee)].
    std::optional<PriceInterval> no_arb_prices(const PoolState& s) const override {
        auto band = inner_->no_arb_prices(s);
        if (!band) return std::nullopt;
        return PriceInterval{band->lo * (1.0 - fee_), band->hi * (1.0 + fee_)};
    }

    Action move_to_price(const PoolState& s, double target_price) const override {
        return inner_->move_to_price(s, target_price);
    }
    PoolState sample_state(Rng& rng, const PriceRange& range) const override {
        return inner_->sample_state(rng, range);
    }
    Action sample_action(const PoolState& s, Rng& rng, const PriceRange& range) const override {
        return inner_->sample_action(s, rng, range);
    }

    // Destination pool price of the optimal trade, or nullopt when P sits
    // inside [P0 (1 - fee), P0 (1 + fee)] (band edges included).
    std::optional<double> target_price(const PoolState& s, double price,
                                       FeeTargetRule rule = FeeTargetRule::exact) const {
        const auto band = inner_->no_arb_prices(s);
        if (!band) throw UnsupportedPool(kind() + ": inner pool exposes no marginal price");
        if (price > band->hi * (1.0 + fee_)) {
            return rule == FeeTargetRule::exact ? price / (1.0 + fee_) : price * (1.0 - fee_);
        }
        if (price < band->lo * (1.0 - fee_)) {
            return rule == FeeTargetRule::exact ? price / (1.0 - fee_) : price * (1.0 + fee_);
        }
        return std::nullopt;
    }

    Action optimal_action(const PoolState& s, double price) const override {
        return fee_optimal_action(s, price, FeeTargetRule::exact);
    }

    Action fee_optimal_action(const PoolState& s, double price, FeeTargetRule rule) const {
        const auto target = target_price(s, price, rule);
        if (!target) return Action::null();
        return inner_->move_to_price(s, *target);
    }

private:
    std::shared_ptr<const Pool> inner_;
    double fee_;
};

inline Action fee_optimal_action(const FeeWrappedPool& pool, const PoolState& s, double price) {
    if (!(price > 0.0)) throw std::invalid_argument("fee_optimal_action: price must be positive");
    return pool.optimal_action(s, price);
}

} // namespace ammlab
