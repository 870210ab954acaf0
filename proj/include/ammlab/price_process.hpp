#pragma once

// External price paths read at block times: zero-drift GBM, martingale
// binomial trees and deterministic replays.

#include <ammlab/pool_core.hpp>
#include <ammlab/random.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace ammlab {

class BlockSchedule {
public:
    BlockSchedule() = default;
    explicit BlockSchedule(std::vector<double> times) : times_(std::move(times)) {
        if (times_.empty()) throw ConfigError("schedule: need at least one block");
        if (!(times_.front() > 0.0)) throw ConfigError("schedule: block times must be positive");
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (!(times_[i] > times_[i - 1])) throw ConfigError("schedule: block times must strictly increase");
        }
    }

    // Blocks at interval, 2 interval, ..., blocks * interval.
    static BlockSchedule uniform(std::size_t blocks, double interval) {
        if (blocks == 0 || !(interval > 0.0)) throw ConfigError("schedule: need blocks >= 1 and interval > 0");
        std::vector<double> t(blocks);
        for (std::size_t i = 0; i < blocks; ++i) t[i] = static_cast<double>(i + 1) * interval;
        return BlockSchedule(std::move(t));
    }

    const std::vector<double>& times() const { return times_; }
    std::size_t size() const { return times_.size(); }
    double operator[](std::size_t i) const { return times_[i]; }

    // Number of blocks with t_n <= t.
    std::size_t blocks_until(double t) const {
        return static_cast<std::size_t>(std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    }

private:
    std::vector<double> times_;
};

enum class Placement { even, random };

struct Subdivision {
    BlockSchedule schedule;
    // fine index of each original block: schedule[coarse_index[n]] == original[n].
    std::vector<std::size_t> coarse_index;
};

// Inserts k - 1 times strictly inside every interval (t_{n-1}, t_n], t_0 = 0.
inline Subdivision subdivide(const BlockSchedule& base, std::size_t k, Placement placement = Placement::even,
                             std::uint64_t seed = 0) {
    if (k < 2) throw ConfigError("subdivide: k must be at least 2");
    Rng rng = substream(seed, 0x737562ULL);
    Subdivision out;
    std::vector<double> t;
    double prev = 0.0;
    for (double cur : base.times()) {
        std::vector<double> inner(k - 1);
        for (std::size_t j = 0; j < k - 1; ++j) {
            inner[j] = placement == Placement::even ? prev + (cur - prev) * static_cast<double>(j + 1) / k
                                                    : uniform(rng, prev, cur);
        }
        std::sort(inner.begin(), inner.end());
        t.insert(t.end(), inner.begin(), inner.end());
        t.push_back(cur);
        out.coarse_index.push_back(t.size() - 1);
        prev = cur;
    }
    out.schedule = BlockSchedule(std::move(t));
    return out;
}

struct ProcessSpec {
    enum class Kind { gbm, binomial, deterministic };
    Kind kind = Kind::gbm;
    double sigma = 0.0;
    double up = 0.0;
    double down = 0.0;
    std::vector<double> prices;

    static ProcessSpec gbm(double sigma) { return {Kind::gbm, sigma, 0.0, 0.0, {}}; }
    static ProcessSpec binomial(double u, double d) { return {Kind::binomial, 0.0, u, d, {}}; }
    static ProcessSpec deterministic(std::vector<double> prices) {
        return {Kind::deterministic, 0.0, 0.0, 0.0, std::move(prices)};
    }

    bool is_martingale() const { return kind != Kind::deterministic; }

    // Martingale up-probability (1 - d) / (u - d).
    double p_up() const { return (1.0 - down) / (up - down); }

    void validate() const {
        switch (kind) {
        case Kind::gbm:
            if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("process(gbm): sigma must be positive");
            break;
        case Kind::binomial:
            if (!(down > 0.0 && down < 1.0 && up > 1.0) || !std::isfinite(up)) {
                throw ConfigError("process(binomial): need 0 < d < 1 < u");
            }
            break;
        case Kind::deterministic:
            if (prices.empty()) throw ConfigError("process(deterministic): empty price list");
            for (double p : prices) {
                if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("process(deterministic): prices must be positive");
            }
            break;
        }
    }
};

struct PricePath {
    std::vector<double> times;
    std::vector<double> prices;
    double p0 = 1.0;

    std::size_t size() const { return prices.size(); }

    // Price in force at time t: P_{t_n} for the latest t_n <= t, else p0.
    double price_at(double t) const {
        const auto n = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
        return n == 0 ? p0 : prices[n - 1];
    }

    // Sub-path at the given block indices, e.g. the coarse blocks of a subdivision.
    PricePath select(const std::vector<std::size_t>& index) const {
        PricePath out{{}, {}, p0};
        for (std::size_t i : index) {
            out.times.push_back(times.at(i));
            out.prices.push_back(prices.at(i));
        }
        return out;
    }
};

// Seed of path i under a master seed.
inline std::uint64_t path_seed(std::uint64_t master, std::uint64_t path_index) {
    return splitmix64(master ^ path_index);
}

inline PricePath sample_path(const ProcessSpec& spec, const BlockSchedule& schedule, double p0, std::uint64_t seed) {
    spec.validate();
    if (schedule.size() == 0) throw ConfigError("sample_path: empty schedule");
    if (!(p0 > 0.0) || !std::isfinite(p0)) throw ConfigError("sample_path: initial price must be positive");

    PricePath path{schedule.times(), std::vector<double>(schedule.size()), p0};
    if (spec.kind == ProcessSpec::Kind::deterministic) {
        if (spec.prices.size() != schedule.size()) {
            throw ConfigError("sample_path: deterministic path has " + std::to_string(spec.prices.size()) +
                              " prices for " + std::to_string(schedule.size()) + " blocks");
        }
        path.prices = spec.prices;
        return path;
    }

    Rng rng = substream(seed, 0);
    const double p_up = spec.kind == ProcessSpec::Kind::binomial ? spec.p_up() : 0.0;
    double price = p0;
    double prev_t = 0.0;
    for (std::size_t n = 0; n < schedule.size(); ++n) {
        if (spec.kind == ProcessSpec::Kind::gbm) {
            const double dt = schedule[n] - prev_t;
            const double z = standard_normal(rng);
            price *= std::exp(spec.sigma * std::sqrt(dt) * z - 0.5 * spec.sigma * spec.sigma * dt);
        } else {
            price *= uniform_open01(rng) < p_up ? spec.up : spec.down;
        }
        path.prices[n] = price;
        prev_t = schedule[n];
    }
    return path;
}

struct MartingaleRow {
    std::size_t block = 0;
    double mean_increment = 0.0;
    double std_error = 0.0;
    bool flagged = false;
};

struct MartingaleReport {
    std::vector<MartingaleRow> rows;
    bool any_flagged() const {
        return std::any_of(rows.begin(), rows.end(), [](const MartingaleRow& r) { return r.flagged; });
    }
};

// Per-block mean of P_{t_n} - P_{t_{n-1}} (P_{t_0} = p0) with its standard
// error; a block is flagged when |mean| > 4 stderr. A zero-variance sample
// with nonzero mean is flagged too.
inline MartingaleReport martingale_diagnostic(const std::vector<PricePath>& paths) {
    if (paths.size() < 2) throw std::invalid_argument("martingale_diagnostic: need at least two paths");
    const std::size_t blocks = paths.front().size();
    for (const auto& p : paths) {
        if (p.size() != blocks) throw std::invalid_argument("martingale_diagnostic: paths differ in length");
    }
    const double n = static_cast<double>(paths.size());
    MartingaleReport out;
    for (std::size_t b = 0; b < blocks; ++b) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& p : paths) {
            const double inc = p.prices[b] - (b == 0 ? p.p0 : p.prices[b - 1]);
            sum += inc;
            sum_sq += inc * inc;
        }
        const double mean = sum / n;
        const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
        const double se = std::sqrt(var / n);
        const bool flagged = se > 0.0 ? std::abs(mean) > 4.0 * se : std::abs(mean) > 0.0;
        out.rows.push_back({b + 1, mean, se, flagged});
    }
    return out;
}

struct PriceSeries {
    BlockSchedule schedule;
    std::vector<double> prices;
};

// Two columns (time, price), comma separated; an optional header line and
// blank lines are skipped.
inline PriceSeries read_price_csv(std::istream& in) {
    std::vector<double> times;
    std::vector<double> prices;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        std::string t_str;
        std::string p_str;
        std::getline(row, t_str, ',');
        std::getline(row, p_str);
        try {
            const double t = std::stod(t_str);
            const double p = std::stod(p_str);
            times.push_back(t);
            prices.push_back(p);
        } catch (const std::exception&) {
            if (line_no == 1 && times.empty()) continue;
            throw ConfigError("price csv: cannot parse line " + std::to_string(line_no));
        }
    }
    if (prices.empty()) throw ConfigError("price csv: no rows");
    PriceSeries out{BlockSchedule(std::move(times)), std::move(prices)};
    ProcessSpec::deterministic(out.prices).validate();
    return out;
}

} // namespace ammlab
