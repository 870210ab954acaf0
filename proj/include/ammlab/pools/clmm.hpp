#pragma once

#include <ammlab/pool_core.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace ammlab {

// Concentrated liquidity: constant-product segments stitched over price bands
// [b_i, b_{i+1}) with liquidity L_i. The state is the pool price p, clamped to
// [b_0, b_k]; the upper edge b_k is a valid resting state with no liquidity
// above it.
class ConcentratedLiquidityPool final : public Pool {
public:
    ConcentratedLiquidityPool(std::vector<double> bounds, std::vector<double> liquidity, double price)
        : bounds_(std::move(bounds)), liquidity_(std::move(liquidity)), p0_(price) {
        if (bounds_.size() < 2 || liquidity_.size() + 1 != bounds_.size()) {
            throw ConfigError("clmm: need k+1 band bounds for k liquidity values");
        }
        if (!(bounds_.front() > 0.0)) throw ConfigError("clmm: band bounds must be positive");
        for (std::size_t i = 1; i < bounds_.size(); ++i) {
            if (!(bounds_[i] > bounds_[i - 1])) throw ConfigError("clmm: band bounds must increase");
        }
        for (double l : liquidity_) {
            if (!(l > 0.0)) throw ConfigError("clmm: band liquidity must be positive");
        }
        if (!(p0_ >= bounds_.front() && p0_ <= bounds_.back())) {
            throw ConfigError("clmm: initial price outside the band range");
        }
    }

    const std::vector<double>& bounds() const { return bounds_; }
    const std::vector<double>& liquidity() const { return liquidity_; }

    // Index i of the half-open band [b_i, b_{i+1}) holding p; k at the top edge.
    std::size_t band_index(const PoolState& s) const {
        auto it = std::upper_bound(bounds_.begin(), bounds_.end(), s[0]);
        return static_cast<std::size_t>(it - bounds_.begin()) - 1;
    }

    std::string kind() const override { return "clmm"; }
    PoolTraits traits() const override { return {true, true, true, 0.0}; }
    PoolState initial_state() const override { return {p0_}; }
    double reference_price() const override { return p0_; }

    nlohmann::json to_json() const override {
        return {{"kind", kind()}, {"bands", bounds_}, {"liquidity", liquidity_}, {"price", p0_}, {"fee", 0.0}};
    }

    bool valid_state(const PoolState& s) const override {
        return s.size() == 1 && s[0] >= bounds_.front() && s[0] <= bounds_.back();
    }

    // Per band: dx = L (1/sqrt(p1) - 1/sqrt(p2)), dy = -L (sqrt(p2) - sqrt(p1)).
    Payoff underlying_move(const PoolState& from, const PoolState& to) const override {
        const double p1 = from[0];
        const double p2 = to[0];
        if (p1 == p2) return {};
        const double lo = std::min(p1, p2);
        const double hi = std::max(p1, p2);
        Payoff up;
        for (std::size_t i = 0; i < liquidity_.size(); ++i) {
            const double a = std::max(lo, bounds_[i]);
            const double b = std::min(hi, bounds_[i + 1]);
            if (!(a < b)) continue;
            const double sa = std::sqrt(a);
            const double sb = std::sqrt(b);
            up.dx += liquidity_[i] * (1.0 / sa - 1.0 / sb);
            up.dy -= liquidity_[i] * (sb - sa);
        }
        if (p1 > p2) return {-up.dx, -up.dy};
        return up;
    }

    std::optional<PriceInterval> no_arb_prices(const PoolState& s) const override {
        const double p = s[0];
        if (approx_equal(p, bounds_.front())) return PriceInterval{0.0, p};
        if (approx_equal(p, bounds_.back())) return PriceInterval{p, std::numeric_limits<double>::infinity()};
        return PriceInterval{p, p};
    }

    PoolState no_arb_state(double price) const override {
        return {std::clamp(price, bounds_.front(), bounds_.back())};
    }

    Action optimal_action(const PoolState& s, double price) const override {
        return move_to_price(s, price);
    }

private:
    std::vector<double> bounds_;
    std::vector<double> liquidity_;
    double p0_;
};

inline Action clmm_optimal_action(const ConcentratedLiquidityPool& pool, const PoolState& s, double price) {
    return optimal_action(pool, s, price);
}

} // namespace ammlab
