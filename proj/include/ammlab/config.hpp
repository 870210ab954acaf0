#pragma once

// JSON experiment documents. Every object is strict: unknown keys raise
// ConfigError.
//
//   {
//     "pool": {pool},
//     "schedule": {"blocks": 20, "interval": 0.01} | {"times": [..]},
//     "process": {"kind": "gbm", "sigma": ..} | {"kind": "binomial", "up": .., "down": ..}
//              | {"kind": "deterministic", "prices": [..]} | {"kind": "csv", "path": ..},
//     "initial_price": 100,
//     "mechanisms": ["fifo", "reverse", "uniform_random", {"kind": "priority", "order": [ids]}],
//     "clones": [1, 4],
//     "strategies": {"fee_rule": "exact" | "approximate", "targets": [..]},
//     "n_paths": 1000, "seed": 1, "threads": 1,
//     "evaluation_times": [..],
//     "subdivision": {"k": [2, 4], "placement": "even" | "random"},
//     "counterexample": {"fee": .., "initial_price": .., "prices": [..], "targets": [..]},
//     "trials": 200, "sampler": {"price_range": [lo, hi], "actions_per_trial": 8, "max_chain": 3},
//     "checks": [{"metric": .., "relation": "eq" | "le" | "ge" | "lt" | "gt",
//                 "value": 0, "z": 3, "tolerance": 0, "t": ..}]
//   }
//
// A csv process replaces "schedule": block times and prices come from the file.

#include <ammlab/conformance.hpp>
#include <ammlab/json_util.hpp>
#include <ammlab/mev_estimator.hpp>
#include <ammlab/pools.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace ammlab {

// FNV-1a 64-bit.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Hash of the canonical dump (nlohmann sorts object keys).
inline std::string config_hash(const nlohmann::json& j) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(j.dump());
    return out.str();
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

struct Check {
    enum class Relation { eq, le, ge, lt, gt };
    std::string metric;
    Relation relation = Relation::le;
    double value = 0.0;
    double z = 3.0;
    double tolerance = 0.0;
    std::optional<double> t;

    static Relation parse_relation(const std::string& s) {
        if (s == "eq") return Relation::eq;
        if (s == "le") return Relation::le;
        if (s == "ge") return Relation::ge;
        if (s == "lt") return Relation::lt;
        if (s == "gt") return Relation::gt;
        throw ConfigError("check: unknown relation '" + s + "'");
    }

    static const char* relation_name(Relation r) {
        switch (r) {
        case Relation::eq: return "eq";
        case Relation::le: return "le";
        case Relation::ge: return "ge";
        case Relation::lt: return "lt";
        case Relation::gt: return "gt";
        }
        return "?";
    }

    // Row metric "k2:mev_fine" matches both "k2:mev_fine" and "mev_fine".
    bool matches(const CsvRow& row) const {
        if (t && row.t != *t) return false;
        if (row.metric == metric) return true;
        return row.metric.size() > metric.size() &&
               row.metric.compare(row.metric.size() - metric.size(), metric.size(), metric) == 0 &&
               row.metric[row.metric.size() - metric.size() - 1] == ':';
    }

    // slack = z * stderr + tolerance; eq is two-sided, the rest one-sided.
    bool holds(const CsvRow& row) const {
        const double slack = z * row.std_error + tolerance;
        switch (relation) {
        case Relation::eq: return std::abs(row.estimate - value) <= slack;
        case Relation::le: return row.estimate <= value + slack;
        case Relation::ge: return row.estimate >= value - slack;
        case Relation::lt: return row.estimate < value + slack;
        case Relation::gt: return row.estimate > value - slack;
        }
        return false;
    }
};

struct CheckOutcome {
    std::string description;
    bool passed = true;
    std::size_t rows = 0;
    std::string detail;
};

inline CheckOutcome evaluate_check(const Check& c, std::span<const CsvRow> rows) {
    std::ostringstream desc;
    desc << c.metric << ' ' << Check::relation_name(c.relation) << ' ' << c.value << " (z=" << c.z
         << ", tol=" << c.tolerance << ")";
    CheckOutcome out{desc.str(), true, 0, {}};
    for (const auto& r : rows) {
        if (!c.matches(r)) continue;
        ++out.rows;
        if (!c.holds(r) && out.passed) {
            out.passed = false;
            std::ostringstream d;
            d.precision(10);
            d << r.metric << " at t=" << r.t << " (" << r.mechanism << "): estimate " << r.estimate << ", stderr "
              << r.std_error;
            out.detail = d.str();
        }
    }
    if (out.rows == 0) throw ConfigError("check: no output rows match metric '" + c.metric + "'");
    return out;
}

struct RunConfig {
    ExperimentConfig experiment;
    nlohmann::json pool_json;
    std::vector<Check> checks;
    std::optional<CounterexampleSetup> counterexample;
    std::vector<double> targets;
    // Axiom suite.
    std::size_t trials = 200;
    ActionSampler sampler;
    nlohmann::json resolved;
    std::string hash;
};

namespace detail {

inline OrderingMechanism parse_mechanism(const nlohmann::json& j) {
    using namespace json_util;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "fifo") return OrderingMechanism::fifo();
        if (s == "reverse") return OrderingMechanism::reverse();
        if (s == "uniform_random") return OrderingMechanism::uniform_random();
        if (s == "priority") return OrderingMechanism::priority({});
        throw ConfigError("mechanisms: unknown mechanism '" + s + "'");
    }
    require_keys(j, {"kind", "order"}, "mechanism");
    if (get<std::string>(j, "kind", "mechanism") != "priority") {
        throw ConfigError("mechanism: only priority takes an object form");
    }
    return OrderingMechanism::priority(get_or<std::vector<std::string>>(j, "order", {}, "mechanism(priority)"));
}

inline FeeTargetRule parse_rule(const std::string& s) {
    if (s == "exact") return FeeTargetRule::exact;
    if (s == "approximate") return FeeTargetRule::approximate;
    throw ConfigError("strategies: unknown fee_rule '" + s + "'");
}

inline void parse_process(const nlohmann::json& j, const std::filesystem::path& base_dir, RunConfig& rc,
                          bool has_schedule) {
    using namespace json_util;
    const auto kind = get<std::string>(j, "kind", "process");
    auto& e = rc.experiment;
    if (kind == "gbm") {
        require_keys(j, {"kind", "sigma"}, "process(gbm)");
        e.process = ProcessSpec::gbm(get<double>(j, "sigma", "process(gbm)"));
    } else if (kind == "binomial") {
        require_keys(j, {"kind", "up", "down"}, "process(binomial)");
        e.process = ProcessSpec::binomial(get<double>(j, "up", "process(binomial)"),
                                          get<double>(j, "down", "process(binomial)"));
    } else if (kind == "deterministic") {
        require_keys(j, {"kind", "prices"}, "process(deterministic)");
        e.process = ProcessSpec::deterministic(get<std::vector<double>>(j, "prices", "process(deterministic)"));
    } else if (kind == "csv") {
        require_keys(j, {"kind", "path"}, "process(csv)");
        if (has_schedule) throw ConfigError("process(csv): block times come from the file; drop 'schedule'");
        std::filesystem::path p = get<std::string>(j, "path", "process(csv)");
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError("process(csv): cannot open " + p.string());
        auto series = read_price_csv(in);
        e.schedule = series.schedule;
        e.process = ProcessSpec::deterministic(std::move(series.prices));
    } else {
        throw ConfigError("process: unknown kind '" + kind + "'");
    }
    e.process.validate();
}

} // namespace detail

// Overrides from the command line are applied before hashing, so the hash
// names the configuration that actually ran.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<unsigned> threads;
};

inline RunConfig parse_run_config(nlohmann::json j, const std::filesystem::path& base_dir = ".",
                                  const Overrides& ov = {}) {
    using namespace json_util;
    const char* where = "config";
    require_keys(j,
                 {"pool", "schedule", "process", "initial_price", "mechanisms", "clones", "strategies", "n_paths",
                  "seed", "evaluation_times", "subdivision", "threads", "checks", "counterexample", "trials",
                  "sampler"},
                 where);
    if (ov.seed) j["seed"] = *ov.seed;
    if (ov.paths) j["n_paths"] = *ov.paths;
    if (ov.threads) j["threads"] = *ov.threads;

    RunConfig rc;
    auto& e = rc.experiment;
    if (j.contains("pool")) {
        rc.pool_json = j.at("pool");
        e.pool = pool_from_json(rc.pool_json);
        e.initial_price = e.pool->reference_price();
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        require_keys(s, {"blocks", "interval", "times"}, "schedule");
        if (s.contains("times")) {
            if (s.contains("blocks") || s.contains("interval")) {
                throw ConfigError("schedule: give either times or blocks/interval");
            }
            e.schedule = BlockSchedule(get<std::vector<double>>(s, "times", "schedule"));
        } else {
            e.schedule = BlockSchedule::uniform(get<std::size_t>(s, "blocks", "schedule"),
                                                get<double>(s, "interval", "schedule"));
        }
    }
    if (j.contains("process")) detail::parse_process(j.at("process"), base_dir, rc, j.contains("schedule"));
    e.initial_price = get_or<double>(j, "initial_price", e.initial_price, where);
    if (!(e.initial_price > 0.0)) throw ConfigError("config: initial_price must be positive");

    if (j.contains("mechanisms")) {
        if (!j.at("mechanisms").is_array()) throw ConfigError("config: mechanisms must be a list");
        e.mechanisms.clear();
        for (const auto& m : j.at("mechanisms")) e.mechanisms.push_back(detail::parse_mechanism(m));
    }
    e.clones = get_or<std::vector<std::size_t>>(j, "clones", e.clones, where);
    for (auto m : e.clones) {
        if (m == 0) throw ConfigError("config: clone counts must be at least 1");
    }
    if (j.contains("strategies")) {
        const auto& s = j.at("strategies");
        require_keys(s, {"fee_rule", "targets"}, "strategies");
        e.rule = detail::parse_rule(get_or<std::string>(s, "fee_rule", "exact", "strategies"));
        rc.targets = get_or<std::vector<double>>(s, "targets", {}, "strategies");
    }
    e.n_paths = get_or<std::size_t>(j, "n_paths", e.n_paths, where);
    e.seed = get_or<std::uint64_t>(j, "seed", e.seed, where);
    e.threads = get_or<unsigned>(j, "threads", e.threads, where);
    e.evaluation_times = get_or<std::vector<double>>(j, "evaluation_times", {}, where);
    if (j.contains("subdivision")) {
        const auto& s = j.at("subdivision");
        require_keys(s, {"k", "placement"}, "subdivision");
        const auto& k = s.contains("k") ? s.at("k") : nlohmann::json(2);
        e.subdivision_k = k.is_array() ? get<std::vector<std::size_t>>(s, "k", "subdivision")
                                       : std::vector<std::size_t>{get_or<std::size_t>(s, "k", 2, "subdivision")};
        for (auto kk : e.subdivision_k) {
            if (kk < 2) throw ConfigError("subdivision: k must be at least 2");
        }
        const auto placement = get_or<std::string>(s, "placement", "even", "subdivision");
        if (placement == "even") {
            e.placement = Placement::even;
        } else if (placement == "random") {
            e.placement = Placement::random;
        } else {
            throw ConfigError("subdivision: unknown placement '" + placement + "'");
        }
    }
    if (j.contains("counterexample")) {
        const auto& c = j.at("counterexample");
        const char* cw = "counterexample";
        require_keys(c, {"fee", "initial_price", "prices", "targets"}, cw);
        CounterexampleSetup setup;
        setup.fee = get_or<double>(c, "fee", setup.fee, cw);
        setup.initial_price = get_or<double>(c, "initial_price", setup.initial_price, cw);
        setup.prices = get_or<std::vector<double>>(c, "prices", setup.prices, cw);
        setup.targets = get_or<std::vector<double>>(c, "targets", setup.targets, cw);
        rc.counterexample = setup;
    }
    rc.trials = get_or<std::size_t>(j, "trials", rc.trials, where);
    if (rc.trials == 0) throw ConfigError("config: trials must be at least 1");
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        require_keys(s, {"price_range", "actions_per_trial", "max_chain"}, "sampler");
        if (s.contains("price_range")) {
            const auto r = get<std::vector<double>>(s, "price_range", "sampler");
            if (r.size() != 2 || !(r[0] > 0.0) || !(r[1] >= r[0])) {
                throw ConfigError("sampler: price_range must be [lo, hi] with 0 < lo <= hi");
            }
            rc.sampler.range = PriceRange{r[0], r[1]};
        }
        rc.sampler.actions_per_trial = get_or<std::size_t>(s, "actions_per_trial", 8, "sampler");
        rc.sampler.max_chain = get_or<std::size_t>(s, "max_chain", 3, "sampler");
    }
    if (j.contains("checks")) {
        if (!j.at("checks").is_array()) throw ConfigError("config: checks must be a list");
        for (const auto& cj : j.at("checks")) {
            const char* w = "check";
            require_keys(cj, {"metric", "relation", "value", "z", "tolerance", "t"}, w);
            Check c;
            c.metric = get<std::string>(cj, "metric", w);
            c.relation = Check::parse_relation(get_or<std::string>(cj, "relation", "le", w));
            c.value = get_or<double>(cj, "value", 0.0, w);
            c.z = get_or<double>(cj, "z", 3.0, w);
            c.tolerance = get_or<double>(cj, "tolerance", 0.0, w);
            if (cj.contains("t")) c.t = get<double>(cj, "t", w);
            if (c.z < 0.0 || c.tolerance < 0.0) throw ConfigError("check: z and tolerance must be nonnegative");
            rc.checks.push_back(std::move(c));
        }
    }

    rc.resolved = std::move(j);
    rc.hash = config_hash(rc.resolved);
    e.config_id = rc.hash;
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path, const Overrides& ov = {}) {
    return parse_run_config(load_json_file(path), path.parent_path(), ov);
}

} // namespace ammlab
