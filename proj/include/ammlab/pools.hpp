#pragma once

#include <ammlab/json_util.hpp>
#include <ammlab/pool_core.hpp>
#include <ammlab/pools/clmm.hpp>
#include <ammlab/pools/constant_product.hpp>
#include <ammlab/pools/constant_sum.hpp>
#include <ammlab/pools/fee_wrapped.hpp>
#include <ammlab/pools/linear_book.hpp>
#include <ammlab/pools/product.hpp>

#include <memory>

namespace ammlab {

// Pool configuration:
//   {"kind": "constant_product", "x": .., "y": .., "fee": phi}
//   {"kind": "linear_book", "price": .., "fee": phi}
//   {"kind": "clmm", "bands": [b0, .., bk], "liquidity": [L0, .., L{k-1}], "price": .., "fee": phi}
//   {"kind": "product", "left": {pool}, "right": {pool}}
//   {"kind": "constant_sum", "x": .., "y": .., "rate": ..}
// A nonzero fee wraps the pool in a FeeWrappedPool.
inline std::shared_ptr<const Pool> pool_from_json(const nlohmann::json& j) {
    using namespace json_util;
    if (!j.is_object()) throw ConfigError("pool: expected an object");
    const auto kind = get<std::string>(j, "kind", "pool");
    const std::string where = "pool(" + kind + ")";

    std::shared_ptr<const Pool> base;
    if (kind == "constant_product") {
        require_keys(j, {"kind", "x", "y", "fee"}, where);
        base = std::make_shared<ConstantProductPool>(get<double>(j, "x", where), get<double>(j, "y", where));
    } else if (kind == "linear_book") {
        require_keys(j, {"kind", "price", "fee"}, where);
        base = std::make_shared<LinearBookPool>(get<double>(j, "price", where));
    } else if (kind == "clmm") {
        require_keys(j, {"kind", "bands", "liquidity", "price", "fee"}, where);
        base = std::make_shared<ConcentratedLiquidityPool>(get<std::vector<double>>(j, "bands", where),
                                                           get<std::vector<double>>(j, "liquidity", where),
                                                           get<double>(j, "price", where));
    } else if (kind == "product") {
        require_keys(j, {"kind", "left", "right", "fee"}, where);
        if (get_or<double>(j, "fee", 0.0, where) != 0.0) {
            throw ConfigError("pool(product): fees belong on the component pools");
        }
        return std::make_shared<ProductPool>(pool_from_json(j.at("left")), pool_from_json(j.at("right")));
    } else if (kind == "constant_sum") {
        require_keys(j, {"kind", "x", "y", "rate", "fee"}, where);
        if (get_or<double>(j, "fee", 0.0, where) != 0.0) throw ConfigError("pool(constant_sum): fee not supported");
        return std::make_shared<ConstantSumPool>(get<double>(j, "x", where), get<double>(j, "y", where),
                                                 get<double>(j, "rate", where));
    } else {
        throw ConfigError("pool: unknown kind '" + kind + "'");
    }

    const double fee = get_or<double>(j, "fee", 0.0, where);
    if (fee == 0.0) return base;
    return std::make_shared<FeeWrappedPool>(base, fee);
}

} // namespace ammlab
