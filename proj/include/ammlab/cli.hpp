#pragma once

// Command-line driver.
//   ammlab axioms --config PATH
//   ammlab experiment NAME --config PATH
// with --out DIR, --seed N, --paths N, --threads N (0 = auto). AMMLAB_OUT is
// the default output directory. Exit codes: 0 all checks pass, 1 a check
// fails, 2 configuration or input error, 3 internal error.

#include <ammlab/config.hpp>
#include <ammlab/conformance.hpp>
#include <ammlab/mev_estimator.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace ammlab {

inline constexpr const char* kToolVersion = "0.1.0";

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"ordering-invariance", "subdivision", "martingale-equality",
                                                "counterexample", "mev-estimate"};
    return names;
}

struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
    std::string tool_version = kToolVersion;
    double wall_clock_seconds = 0.0;
    std::vector<CheckOutcome> checks;
    bool passed = true;

    nlohmann::json to_json() const {
        nlohmann::json checks_json = nlohmann::json::array();
        for (const auto& c : checks) {
            checks_json.push_back({{"check", c.description}, {"passed", c.passed}, {"rows", c.rows},
                                   {"detail", c.detail}});
        }
        return {{"command", command},     {"config_path", config_path},
                {"config_hash", config_hash}, {"seed", seed},
                {"outputs", outputs},     {"tool_version", tool_version},
                {"wall_clock_seconds", wall_clock_seconds},
                {"checks", checks_json},  {"passed", passed}};
    }
};

namespace cli_detail {

inline std::string fmt_k(const char* prefix, std::size_t k, const char* metric) {
    return std::string(prefix) + std::to_string(k) + ":" + metric;
}

inline void add_paired(std::vector<CsvRow>& rows, const std::string& experiment, const ExperimentConfig& cfg,
                       const std::vector<PairedRow>& paired, const std::string& a, const std::string& b,
                       const std::string& diff) {
    for (const auto& r : paired) {
        rows.push_back({experiment, cfg.config_id, "fifo", r.t, a, r.a.mean, r.a.std_error, r.a.n, cfg.seed});
        rows.push_back({experiment, cfg.config_id, "fifo", r.t, b, r.b.mean, r.b.std_error, r.b.n, cfg.seed});
        rows.push_back(
            {experiment, cfg.config_id, "fifo", r.t, diff, r.diff.mean, r.diff.std_error, r.diff.n, cfg.seed});
    }
}

inline std::vector<CsvRow> run_experiment_rows(const std::string& name, const RunConfig& rc) {
    const auto& cfg = rc.experiment;
    std::vector<CsvRow> rows;
    if (name == "mev-estimate") {
        for (const auto& r : expected_mev(cfg).rows) {
            rows.push_back({name, cfg.config_id, "fifo", r.t, "mev", r.estimate, r.std_error, r.n_paths, cfg.seed});
        }
        for (double t : cfg.eval_times()) {
            const auto r = noncompetitive_mev(cfg, t);
            rows.push_back(
                {name, cfg.config_id, "fifo", r.t, "mev_star", r.estimate, r.std_error, r.n_paths, cfg.seed});
        }
    } else if (name == "martingale-equality") {
        add_paired(rows, name, cfg, martingale_equality_experiment(cfg), "s0", "deferred", "s0_minus_deferred");
    } else if (name == "subdivision") {
        for (std::size_t k : cfg.subdivision_k) {
            const auto res = subdivision_experiment(cfg, k);
            add_paired(rows, name, cfg, res.mev, fmt_k("k", k, "mev_fine"), fmt_k("k", k, "mev_coarse"),
                       fmt_k("k", k, "mev_fine_minus_coarse"));
            add_paired(rows, name, cfg, res.mev_star, fmt_k("k", k, "mev_star_fine"), fmt_k("k", k, "mev_star_coarse"),
                       fmt_k("k", k, "mev_star_fine_minus_coarse"));
        }
    } else if (name == "ordering-invariance") {
        const double t_end = cfg.schedule.times().empty() ? 0.0 : cfg.schedule.times().back();
        const bool frictionless = cfg.pool && cfg.pool->traits().frictionless;
        for (const auto& r : ordering_invariance_experiment(cfg)) {
            rows.push_back({name, cfg.config_id, r.mechanism, t_end, fmt_k("m", r.clones, "max_abs_diff"),
                            r.max_abs_diff, 0.0, r.n_paths, cfg.seed});
            rows.push_back({name, cfg.config_id, r.mechanism, t_end, fmt_k("m", r.clones, "max_rel_diff"),
                            r.max_rel_diff, 0.0, r.n_paths, cfg.seed});
            if (frictionless) {
                rows.push_back({name, cfg.config_id, r.mechanism, t_end, fmt_k("m", r.clones, "max_rel_vs_pathwise"),
                                r.max_rel_vs_pathwise, 0.0, r.n_paths, cfg.seed});
            }
        }
    } else {
        throw ConfigError("unknown experiment '" + name + "'");
    }
    return rows;
}

// Counterexample values as metric rows "<strategy>:b<block>:<field>" plus
// "cumulative_gap" = last S1 cumulative - last S0 cumulative.
inline std::vector<CsvRow> counterexample_rows(const std::vector<CounterexampleRow>& table, const RunConfig& rc) {
    std::vector<CsvRow> rows;
    double s0 = 0.0;
    double s1 = 0.0;
    for (const auto& r : table) {
        const std::string p = r.strategy + ":b" + std::to_string(r.block) + ":";
        const double t = static_cast<double>(r.block);
        for (auto [field, v] : {std::pair<const char*, double>{"dx", r.dx}, {"dy", r.dy}, {"profit", r.profit},
                                {"cumulative", r.cumulative}}) {
            rows.push_back({"counterexample", rc.hash, "fifo", t, p + field, v, 0.0, 1, 0});
        }
        (r.strategy == "S0" ? s0 : s1) = r.cumulative;
    }
    rows.push_back({"counterexample", rc.hash, "fifo", 0.0, "cumulative_gap", s1 - s0, 0.0, 1, 0});
    return rows;
}

inline std::filesystem::path output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("AMMLAB_OUT"); env && *env) return env;
    return "ammlab-out";
}

inline std::string write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << contents;
    return path.string();
}

} // namespace cli_detail

struct CliOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<unsigned> threads;
};

inline int cmd_axioms(const CliOptions& opt, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rc = load_run_config(opt.config, {opt.seed, opt.paths, opt.threads});
    if (!rc.experiment.pool) throw ConfigError("axioms: config has no pool");
    const auto report = check_axioms(*rc.experiment.pool, rc.sampler, rc.trials, rc.experiment.seed);

    const auto dir = cli_detail::output_dir(opt.out);
    std::filesystem::create_directories(dir);
    RunManifest m;
    m.command = "axioms";
    m.config_path = opt.config;
    m.config_hash = rc.hash;
    m.seed = rc.experiment.seed;
    m.outputs.push_back(cli_detail::write_file(dir / ("axioms-" + rc.hash + ".json"), report.to_json().dump(2) + "\n"));
    m.passed = report.all_passed();
    for (const auto& r : report.results) {
        out << (r.passed ? "PASS " : "FAIL ") << report.pool_kind << ' ' << r.axiom << " worst=" << r.worst_violation
            << (r.detail.empty() ? "" : " (" + r.detail + ")") << '\n';
    }
    m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto manifest = dir / ("axioms-" + rc.hash + ".manifest.json");
    m.outputs.push_back(manifest.string());
    cli_detail::write_file(manifest, m.to_json().dump(2) + "\n");
    out << "wrote " << m.outputs.front() << '\n';
    return m.passed ? 0 : 1;
}

inline int cmd_experiment(const std::string& name, const CliOptions& opt, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rc = load_run_config(opt.config, {opt.seed, opt.paths, opt.threads});
    const auto dir = cli_detail::output_dir(opt.out);

    RunManifest m;
    m.command = "experiment " + name;
    m.config_path = opt.config;
    m.config_hash = rc.hash;
    m.seed = rc.experiment.seed;

    std::vector<CsvRow> rows;
    std::ostringstream csv;
    if (name == "counterexample") {
        const auto table = counterexample_replay(rc.counterexample.value_or(CounterexampleSetup{}));
        write_counterexample_csv(csv, table);
        rows = cli_detail::counterexample_rows(table, rc);
    } else {
        rows = cli_detail::run_experiment_rows(name, rc);
        write_csv(csv, rows);
    }
    for (const auto& c : rc.checks) {
        m.checks.push_back(evaluate_check(c, rows));
        m.passed = m.passed && m.checks.back().passed;
    }

    std::filesystem::create_directories(dir);
    m.outputs.push_back(cli_detail::write_file(dir / (name + "-" + rc.hash + ".csv"), csv.str()));
    const auto manifest = dir / (name + "-" + rc.hash + ".manifest.json");
    m.outputs.push_back(manifest.string());
    m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    cli_detail::write_file(manifest, m.to_json().dump(2) + "\n");

    for (const auto& c : m.checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.description << " over " << c.rows << " rows"
            << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
    }
    out << "wrote " << m.outputs.front() << '\n';
    return m.passed ? 0 : 1;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"ammlab: liquidity pool axioms and MEV experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CliOptions opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
        sub->add_option("--out", opt.out, "output directory (default $AMMLAB_OUT or ./ammlab-out)");
        sub->add_option("--seed", opt.seed, "master seed (overrides config)");
        sub->add_option("--paths", opt.paths, "number of paths (overrides config)");
        sub->add_option("--threads", opt.threads, "worker threads, 0 = auto (overrides config)");
    };
    auto* axioms = app.add_subcommand("axioms", "run the pool axiom suite");
    add_common(axioms);
    std::string name;
    auto* experiment = app.add_subcommand("experiment", "run a named experiment");
    experiment->add_option("name", name, "experiment name")->required()->check(CLI::IsMember(experiment_names()));
    add_common(experiment);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (axioms->parsed()) return cmd_axioms(opt, out);
        return cmd_experiment(name, opt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const PoolNotFrictionless& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const CompetitivenessViolation& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace ammlab
