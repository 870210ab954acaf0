#pragma once

#include <ammlab/cli.hpp>
#include <ammlab/config.hpp>
#include <ammlab/conformance.hpp>
#include <ammlab/market.hpp>
#include <ammlab/mev_estimator.hpp>
#include <ammlab/pool_core.hpp>
#include <ammlab/pools.hpp>
#include <ammlab/price_process.hpp>
#include <ammlab/strategies.hpp>
