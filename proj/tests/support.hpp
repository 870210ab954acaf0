#pragma once

// Hand-rolled property-test helpers: each trial gets its own seeded stream,
// and a failure message names the trial so it can be replayed alone.

#include <ammlab/pools.hpp>
#include <ammlab/random.hpp>

#include <gtest/gtest.h>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ammlab::testing {

template <class Body>
void for_all(std::uint64_t seed, int trials, Body&& body) {
    for (int i = 0; i < trials; ++i) {
        SCOPED_TRACE("property trial " + std::to_string(i) + " seed " + std::to_string(seed));
        Rng rng = substream(seed, static_cast<std::uint64_t>(i));
        body(rng);
        if (::testing::Test::HasFatalFailure()) return;
    }
}

inline std::shared_ptr<const Pool> cp_pool(double fee = 0.0) {
    return pool_from_json({{"kind", "constant_product"}, {"x", 100.0}, {"y", 10000.0}, {"fee", fee}});
}

inline std::shared_ptr<const Pool> linear_pool(double price = 1.0, double fee = 0.0) {
    return pool_from_json({{"kind", "linear_book"}, {"price", price}, {"fee", fee}});
}

inline std::shared_ptr<const Pool> clmm_pool(double fee = 0.0) {
    return pool_from_json({{"kind", "clmm"},
                           {"bands", {1.0, 4.0, 9.0}},
                           {"liquidity", {2.0, 3.0}},
                           {"price", 2.0},
                           {"fee", fee}});
}

inline std::shared_ptr<const Pool> product_pool() {
    return pool_from_json({{"kind", "product"},
                           {"left", {{"kind", "constant_product"}, {"x", 100.0}, {"y", 10000.0}}},
                           {"right", {{"kind", "linear_book"}, {"price", 100.0}, {"fee", 0.003}}}});
}

inline std::shared_ptr<const Pool> constant_sum_pool() {
    return pool_from_json({{"kind", "constant_sum"}, {"x", 100.0}, {"y", 10000.0}, {"rate", 100.0}});
}

// Every pool family the library implements, fee-free and fee-wrapped.
inline std::vector<std::shared_ptr<const Pool>> conforming_pools() {
    return {cp_pool(), cp_pool(0.003), linear_pool(), linear_pool(1.0, 0.01), clmm_pool(), clmm_pool(0.003),
            product_pool()};
}

} // namespace ammlab::testing
