#pragma once

// MEV through its characterizations: pathwise competitive MEV is PNL*(S0)
// on frictionless pools, MEV is E[PNL*(S0)] and noncompetitive MEV* is
// E[PNL*(deferred(n))]. Comparisons use common random numbers: both sides
// of a comparison see the same Brownian increments and are differenced per
// path before averaging.

#include <ammlab/market.hpp>
#include <ammlab/pools.hpp>
#include <ammlab/price_process.hpp>
#include <ammlab/strategies.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace ammlab {

class PoolNotFrictionless : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Estimate {
    double mean = 0.0;
    // Sample standard deviation / sqrt(n).
    double std_error = 0.0;
    std::size_t n = 0;
};

inline Estimate estimate(std::span<const double> xs) {
    Estimate e{0.0, 0.0, xs.size()};
    if (xs.empty()) return e;
    // Two passes keep the variance accurate for near-constant samples.
    double sum = 0.0;
    for (double x : xs) sum += x;
    e.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return e;
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    return e;
}

// Runs body(i) for i in [0, n) on `threads` workers (0 = hardware threads).
// Workers take contiguous chunks; results must be written by index so the
// reduction order never depends on scheduling.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Uncontested S0 simulated directly: same trades as S0 alone in the market
// engine, without the bookkeeping. Returns PNL*(S0) at every block.
inline std::vector<double> s0_pnl_path(const Pool& pool, const PricePath& path,
                                       FeeTargetRule rule = FeeTargetRule::exact) {
    std::vector<double> out(path.size());
    PoolState s = pool.initial_state();
    double cum = 0.0;
    for (std::size_t n = 0; n < path.size(); ++n) {
        const Action a = s0_action(pool, s, path.prices[n], rule);
        cum += pool.payoff(a).value(path.prices[n]);
        s = pool.transition(s, a);
        out[n] = cum;
    }
    return out;
}

// Uncontested deferred(n) at t_n: the pool is still at s_0 when it trades.
inline double deferred_pnl(const Pool& pool, const PricePath& path, std::size_t n_star,
                           FeeTargetRule rule = FeeTargetRule::exact) {
    if (n_star == 0) return 0.0;
    const double p = path.prices.at(n_star - 1);
    return pool.payoff(s0_action(pool, pool.initial_state(), p, rule)).value(p);
}

// MEV^pw at every block time, as PNL*(S0).
inline std::vector<double> pathwise_competitive_mev(const Pool& pool, const BlockSchedule& schedule,
                                                    const PricePath& path) {
    if (!pool.traits().frictionless) {
        throw PoolNotFrictionless(pool.kind() + ": pathwise competitive MEV is characterized for frictionless pools only");
    }
    if (path.times != schedule.times()) throw ConfigError("pathwise_competitive_mev: path not aligned with schedule");
    return s0_pnl_path(pool, path);
}

struct ExperimentConfig {
    std::shared_ptr<const Pool> pool;
    BlockSchedule schedule;
    ProcessSpec process;
    double initial_price = 1.0;
    std::vector<OrderingMechanism> mechanisms{OrderingMechanism::fifo()};
    std::vector<std::size_t> clones{1};
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    // Empty means every block time.
    std::vector<double> evaluation_times;
    std::vector<std::size_t> subdivision_k{2};
    Placement placement = Placement::even;
    unsigned threads = 1;
    FeeTargetRule rule = FeeTargetRule::exact;
    std::string config_id;

    std::vector<double> eval_times() const {
        return evaluation_times.empty() ? schedule.times() : evaluation_times;
    }

    void validate() const {
        if (!pool) throw ConfigError("experiment: missing pool");
        if (n_paths == 0) throw ConfigError("experiment: n_paths must be positive");
        process.validate();
        for (double t : evaluation_times) {
            if (std::find(schedule.times().begin(), schedule.times().end(), t) == schedule.times().end()) {
                throw ConfigError("experiment: evaluation time " + std::to_string(t) + " is not a block time");
            }
        }
    }

    PricePath path(std::size_t i) const {
        return sample_path(process, schedule, initial_price, path_seed(seed, i));
    }
};

struct MevRow {
    double t = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

struct MevReport {
    std::string config_id;
    std::string metric; // expected_competitive | noncompetitive | pathwise_competitive
    std::uint64_t seed = 0;
    std::vector<MevRow> rows;
};

// E[PNL*(S0)] at each evaluation time.
inline MevReport expected_mev(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.process.is_martingale()) throw ConfigError("expected_mev: needs a martingale process");
    const auto times = cfg.eval_times();
    std::vector<std::vector<double>> per_time(times.size(), std::vector<double>(cfg.n_paths));
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const auto path = cfg.path(i);
        const auto s0 = s0_pnl_path(*cfg.pool, path, cfg.rule);
        for (std::size_t k = 0; k < times.size(); ++k) {
            const std::size_t n = cfg.schedule.blocks_until(times[k]);
            per_time[k][i] = n == 0 ? 0.0 : s0[n - 1];
        }
    });
    MevReport r{cfg.config_id, "expected_competitive", cfg.seed, {}};
    for (std::size_t k = 0; k < times.size(); ++k) {
        const auto e = estimate(per_time[k]);
        r.rows.push_back({times[k], e.mean, e.std_error, e.n});
    }
    return r;
}

// E[PNL*(deferred(n))] with t_n <= t < t_{n+1}; zero before the first block.
inline MevRow noncompetitive_mev(const ExperimentConfig& cfg, double t) {
    cfg.validate();
    if (!cfg.process.is_martingale()) throw ConfigError("noncompetitive_mev: needs a martingale process");
    const std::size_t n = cfg.schedule.blocks_until(t);
    std::vector<double> v(cfg.n_paths, 0.0);
    if (n > 0) {
        parallel_for(cfg.n_paths, cfg.threads,
                     [&](std::size_t i) { v[i] = deferred_pnl(*cfg.pool, cfg.path(i), n, cfg.rule); });
    }
    const auto e = estimate(v);
    return {t, e.mean, e.std_error, e.n};
}

// Paired comparison of two per-path quantities a and b.
struct PairedRow {
    double t = 0.0;
    Estimate a;
    Estimate b;
    Estimate diff; // a - b, per path
};

inline std::vector<PairedRow> paired_rows(const std::vector<double>& times, const std::vector<std::vector<double>>& a,
                                          const std::vector<std::vector<double>>& b) {
    std::vector<PairedRow> out;
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<double> d(a[k].size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[k][i] - b[k][i];
        out.push_back({times[k], estimate(a[k]), estimate(b[k]), estimate(d)});
    }
    return out;
}

// a = PNL*(S0)_t, b = PNL*(deferred(n))_t with t_n <= t, on the same paths.
inline std::vector<PairedRow> martingale_equality_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto times = cfg.eval_times();
    std::vector<std::vector<double>> s0(times.size(), std::vector<double>(cfg.n_paths));
    auto deferred = s0;
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const auto path = cfg.path(i);
        const auto pnl = s0_pnl_path(*cfg.pool, path, cfg.rule);
        for (std::size_t k = 0; k < times.size(); ++k) {
            const std::size_t n = cfg.schedule.blocks_until(times[k]);
            s0[k][i] = n == 0 ? 0.0 : pnl[n - 1];
            deferred[k][i] = deferred_pnl(*cfg.pool, path, n, cfg.rule);
        }
    });
    return paired_rows(times, s0, deferred);
}

struct SubdivisionResult {
    std::size_t k = 2;
    // a = fine schedule B', b = coarse schedule B.
    std::vector<PairedRow> mev;
    std::vector<PairedRow> mev_star;
};

// Paths are drawn on the subdivided schedule; the coarse path is its
// restriction to the original block times, so both share increments.
inline SubdivisionResult subdivision_experiment(const ExperimentConfig& cfg, std::size_t k) {
    cfg.validate();
    if (!cfg.process.is_martingale()) throw ConfigError("subdivision: needs a martingale process");
    const auto sub = subdivide(cfg.schedule, k, cfg.placement, cfg.seed);
    const auto times = cfg.eval_times();
    const std::size_t nt = times.size();
    std::vector<std::vector<double>> fine(nt, std::vector<double>(cfg.n_paths));
    auto coarse = fine;
    auto fine_star = fine;
    auto coarse_star = fine;
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const auto fine_path = sample_path(cfg.process, sub.schedule, cfg.initial_price, path_seed(cfg.seed, i));
        const auto coarse_path = fine_path.select(sub.coarse_index);
        const auto f = s0_pnl_path(*cfg.pool, fine_path, cfg.rule);
        const auto c = s0_pnl_path(*cfg.pool, coarse_path, cfg.rule);
        for (std::size_t j = 0; j < nt; ++j) {
            const std::size_t n = cfg.schedule.blocks_until(times[j]);
            const std::size_t nf = sub.schedule.blocks_until(times[j]);
            coarse[j][i] = n == 0 ? 0.0 : c[n - 1];
            fine[j][i] = nf == 0 ? 0.0 : f[nf - 1];
            coarse_star[j][i] = deferred_pnl(*cfg.pool, coarse_path, n, cfg.rule);
            fine_star[j][i] = deferred_pnl(*cfg.pool, fine_path, nf, cfg.rule);
        }
    });
    return {k, paired_rows(times, fine, coarse), paired_rows(times, fine_star, coarse_star)};
}

struct OrderingRow {
    std::string mechanism;
    std::size_t clones = 1;
    std::size_t n_paths = 0;
    // Against fifo with a single S0, at the final block time.
    double max_abs_diff = 0.0;
    double max_rel_diff = 0.0;
    // Against PNL*(S0) at every block time (frictionless pools only).
    double max_rel_vs_pathwise = 0.0;
};

// m-clone S0 sets under every configured mechanism; per path, total PNL is
// compared with the fifo, single-S0 baseline.
inline std::vector<OrderingRow> ordering_invariance_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.mechanisms.size() < 2) throw ConfigError("ordering invariance: need at least two mechanisms");
    const bool frictionless = cfg.pool->traits().frictionless;
    const double t_end = cfg.schedule.times().back();

    struct Cell {
        double abs = 0.0;
        double rel = 0.0;
        double pathwise = 0.0;
    };
    const std::size_t cells = cfg.mechanisms.size() * cfg.clones.size();
    std::vector<std::vector<Cell>> per_path(cfg.n_paths, std::vector<Cell>(cells));

    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
        const auto path = cfg.path(i);
        StrategySet base;
        base.push_back(std::make_unique<SimpleArb>("s0", cfg.rule));
        const auto base_trace = run_market(*cfg.pool, cfg.schedule, base, OrderingMechanism::fifo(), path, cfg.seed);
        const double baseline = pnl(base_trace, "s0", path, t_end).pnl;
        const std::vector<double> pathwise = frictionless ? s0_pnl_path(*cfg.pool, path) : std::vector<double>{};

        std::size_t c = 0;
        for (const auto& mech : cfg.mechanisms) {
            for (std::size_t m : cfg.clones) {
                auto set = clone_set(SimpleArb("s0", cfg.rule), m);
                const auto ids = ids_of(set);
                const auto traces = run_market(*cfg.pool, cfg.schedule, set, mech, path, path_seed(cfg.seed, i));
                const double total = sum_strategies(traces, ids, path, t_end).pnl;
                Cell& cell = per_path[i][c++];
                cell.abs = std::abs(total - baseline);
                cell.rel = cell.abs / value_scale(path.prices.back(), baseline);
                for (std::size_t n = 0; n < pathwise.size(); ++n) {
                    const double v = sum_strategies(traces, ids, path, cfg.schedule[n]).pnl;
                    cell.pathwise = std::max(cell.pathwise, std::abs(v - pathwise[n]) /
                                                                value_scale(path.prices[n], pathwise[n]));
                }
            }
        }
    });

    std::vector<OrderingRow> out;
    std::size_t c = 0;
    for (const auto& mech : cfg.mechanisms) {
        for (std::size_t m : cfg.clones) {
            OrderingRow row{mech.name(), m, cfg.n_paths, 0.0, 0.0, 0.0};
            for (const auto& cells_i : per_path) {
                row.max_abs_diff = std::max(row.max_abs_diff, cells_i[c].abs);
                row.max_rel_diff = std::max(row.max_rel_diff, cells_i[c].rel);
                row.max_rel_vs_pathwise = std::max(row.max_rel_vs_pathwise, cells_i[c].pathwise);
            }
            out.push_back(row);
            ++c;
        }
    }
    return out;
}

struct CounterexampleRow {
    std::string strategy;
    std::size_t block = 0;
    double dx = 0.0;
    double dy = 0.0;
    double profit = 0.0;
    double cumulative = 0.0;
};

struct CounterexampleSetup {
    double fee = 0.01;
    double initial_price = 1.0;
    std::vector<double> prices{100.0, 1.0};
    std::vector<double> targets{101.0, 1.01};
};

// Linear book with a fee: S0 with the approximate fee targets against a
// target-price strategy, each run uncontested on the same deterministic path.
inline std::vector<CounterexampleRow> counterexample_replay(const CounterexampleSetup& setup = {}) {
    const auto pool = std::make_shared<FeeWrappedPool>(std::make_shared<LinearBookPool>(setup.initial_price), setup.fee);
    const auto schedule = BlockSchedule::uniform(setup.prices.size(), 1.0);
    const auto path = sample_path(ProcessSpec::deterministic(setup.prices), schedule, setup.initial_price, 0);

    StrategySet s0;
    s0.push_back(std::make_unique<SimpleArb>("S0", FeeTargetRule::approximate));
    StrategySet s1;
    s1.push_back(std::make_unique<TargetPriceArb>("S1", setup.targets));

    std::vector<CounterexampleRow> rows;
    for (auto* set : {&s0, &s1}) {
        const std::string id = set->front()->id();
        const auto traces = run_market(*pool, schedule, *set, OrderingMechanism::fifo(), path, 0);
        double cum = 0.0;
        for (const auto& t : traces) {
            const Payoff p = t.executed_payoff(id);
            const double profit = p.value(t.price);
            cum += profit;
            rows.push_back({id, t.block, p.dx, p.dy, profit, cum});
        }
    }
    return rows;
}

struct CsvRow {
    std::string experiment;
    std::string config_id;
    std::string mechanism;
    double t = 0.0;
    std::string metric;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
};

inline void write_csv(std::ostream& out, std::span<const CsvRow> rows) {
    out << "experiment,config_id,mechanism,t,metric,estimate,stderr,n_paths,seed\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.config_id << ',' << r.mechanism << ',' << r.t << ',' << r.metric << ','
            << r.estimate << ',' << r.std_error << ',' << r.n_paths << ',' << r.seed << '\n';
    }
}

inline void write_counterexample_csv(std::ostream& out, std::span<const CounterexampleRow> rows) {
    out << "strategy,block,dx,dy,profit,cumulative\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.strategy << ',' << r.block << ',' << r.dx << ',' << r.dy << ',' << r.profit << ',' << r.cumulative
            << '\n';
    }
}

} // namespace ammlab
