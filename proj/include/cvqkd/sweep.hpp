#pragma once

// Run descriptors and drivers for the numerical experiments: config-file
// loading, parameter sweeps over distance or excess noise, zero-crossing
// root finding (maximum distance, maximum tolerable noise), and CSV /
// plot-data emission.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/finite_size.hpp"
#include "cvqkd/protocols.hpp"

namespace cvqkd {

enum class Protocol {
    two_way_ideal,   // asymptotic improved two-way protocol
    two_way_finite,  // finite-size improved two-way protocol
    one_way_finite,  // finite-size one-way baseline
};

inline std::string to_string(Protocol p) {
    switch (p) {
        case Protocol::two_way_ideal:
            return "two_way_ideal";
        case Protocol::two_way_finite:
            return "two_way_finite";
        case Protocol::one_way_finite:
            return "one_way_finite";
    }
    throw invalid_argument("unrecognized protocol enumerator");
}

inline Protocol protocol_from_string(const std::string& name) {
    if (name == "two_way_ideal") return Protocol::two_way_ideal;
    if (name == "two_way_finite") return Protocol::two_way_finite;
    if (name == "one_way_finite") return Protocol::one_way_finite;
    throw validation_error(
        "protocol must be one of two_way_ideal, two_way_finite, "
        "one_way_finite (got `" +
        name + "`)");
}

/// Which parameter a sweep varies and over what grid.
struct SweepAxis {
    std::string variable = "length_km";  // length_km | excess_noise
    double start = 0.0;
    double stop = 60.0;
    double step = 0.5;

    void validate() const {
        if (variable != "length_km" && variable != "excess_noise") {
            throw validation_error(
                "sweep.variable must be length_km or excess_noise (got `" +
                variable + "`)");
        }
        if (!(step > 0.0)) {
            throw validation_error("sweep.step must be > 0");
        }
        if (!(start < stop)) {
            throw validation_error("sweep.start must be < sweep.stop");
        }
        if (!(start >= 0.0)) {
            throw validation_error("sweep.start must be >= 0");
        }
    }
};

struct OutputSpec {
    std::string path;             // empty: stdout
    std::string format = "csv";   // csv | plot

    void validate() const {
        if (format != "csv" && format != "plot") {
            throw validation_error(
                "output.format must be csv or plot (got `" + format + "`)");
        }
    }
};

/// A full run descriptor, loadable from a config file.
struct SweepConfig {
    Protocol protocol = Protocol::two_way_ideal;
    TwoWayParams params;
    EstimationBudget budget;
    SweepAxis sweep;
    OutputSpec output;

    void validate() const {
        params.validate();
        budget.validate();
        sweep.validate();
        output.validate();
    }
};

/// One evaluated grid point. Failed points carry nan in every result
/// column; the swept value itself is always finite.
struct ResultRow {
    double value = 0.0;
    double key_rate = 0.0;
    double i_ab = 0.0;
    double holevo = 0.0;
    double delta_n = 0.0;
    double t_min = 0.0;
    double sigma2_max = 0.0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& value, int line, int column) {
    const std::string v = trim(value);
    if (v.empty()) {
        throw parse_error("expected a numeric value", line, column);
    }
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size()) {
        throw parse_error("could not parse `" + v + "` as a number", line,
                          column);
    }
    return parsed;
}

inline std::uint64_t parse_count(const std::string& value, int line,
                                 int column) {
    const double parsed = parse_double(value, line, column);
    if (!(parsed >= 1.0) || parsed != std::floor(parsed) ||
        parsed > 9.0e18) {
        throw parse_error("expected a positive integer, got `" +
                              trim(value) + "`",
                          line, column);
    }
    return static_cast<std::uint64_t>(parsed);
}

inline std::string format_double(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

/// Parse a `key = value` config file with dotted section prefixes.
/// Unknown keys are rejected by name; a missing `protocol` is a
/// validation error; malformed lines report line and column.
inline SweepConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config file `" + path + "`");
    }
    SweepConfig cfg;
    bool protocol_seen = false;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = raw.find('=');
        if (eq == std::string::npos) {
            throw parse_error("expected `key = value`", line_no,
                              static_cast<int>(raw.find_first_not_of(
                                  " \t")) + 1);
        }
        const std::string key = detail::trim(raw.substr(0, eq));
        const std::string value = detail::trim(raw.substr(eq + 1));
        const int vcol = static_cast<int>(eq) + 2;
        if (key.empty()) {
            throw parse_error("missing key before `=`", line_no, 1);
        }
        if (value.empty()) {
            throw parse_error("missing value after `=`", line_no, vcol);
        }

        if (key == "protocol") {
            cfg.protocol = protocol_from_string(value);
            protocol_seen = true;
        } else if (key == "params.v_a") {
            cfg.params.v_a = detail::parse_double(value, line_no, vcol);
        } else if (key == "params.v_b") {
            cfg.params.v_b = detail::parse_double(value, line_no, vcol);
        } else if (key == "params.t_a") {
            cfg.params.t_a = detail::parse_double(value, line_no, vcol);
        } else if (key == "params.alpha") {
            cfg.params.alpha = detail::parse_double(value, line_no, vcol);
        } else if (key == "params.length_km") {
            cfg.params.length_km =
                detail::parse_double(value, line_no, vcol);
        } else if (key == "params.excess_noise") {
            cfg.params.excess_noise =
                detail::parse_double(value, line_no, vcol);
        } else if (key == "params.beta") {
            cfg.params.beta = detail::parse_double(value, line_no, vcol);
        } else if (key == "eta.aa") {
            cfg.params.eta.aa = detail::parse_double(value, line_no, vcol);
        } else if (key == "eta.ab") {
            cfg.params.eta.ab = detail::parse_double(value, line_no, vcol);
        } else if (key == "eta.ba") {
            cfg.params.eta.ba = detail::parse_double(value, line_no, vcol);
        } else if (key == "eta.bb") {
            cfg.params.eta.bb = detail::parse_double(value, line_no, vcol);
        } else if (key == "budget.n_total") {
            cfg.budget.n_total = detail::parse_count(value, line_no, vcol);
        } else if (key == "budget.m") {
            cfg.budget.m = detail::parse_count(value, line_no, vcol);
        } else if (key == "budget.eps_pe") {
            cfg.budget.eps_pe = detail::parse_double(value, line_no, vcol);
        } else if (key == "budget.eps_bar") {
            cfg.budget.eps_bar = detail::parse_double(value, line_no, vcol);
        } else if (key == "budget.eps_pa") {
            cfg.budget.eps_pa = detail::parse_double(value, line_no, vcol);
        } else if (key == "budget.v_mod") {
            cfg.budget.v_mod = detail::parse_double(value, line_no, vcol);
        } else if (key == "sweep.variable") {
            cfg.sweep.variable = value;
        } else if (key == "sweep.start") {
            cfg.sweep.start = detail::parse_double(value, line_no, vcol);
        } else if (key == "sweep.stop") {
            cfg.sweep.stop = detail::parse_double(value, line_no, vcol);
        } else if (key == "sweep.step") {
            cfg.sweep.step = detail::parse_double(value, line_no, vcol);
        } else if (key == "output.path") {
            cfg.output.path = value;
        } else if (key == "output.format") {
            cfg.output.format = value;
        } else {
            throw validation_error("unknown configuration key `" + key +
                                   "` (line " + std::to_string(line_no) +
                                   ")");
        }
    }
    if (!protocol_seen) {
        throw validation_error(
            "missing required field `protocol` in `" + path + "`");
    }
    cfg.validate();
    return cfg;
}

/// Canonical `key = value` echo of a config, used by plot-data headers
/// and for determinism checks.
inline std::vector<std::string> config_echo_lines(const SweepConfig& cfg) {
    using detail::format_double;
    std::vector<std::string> lines;
    auto put = [&lines](const std::string& k, const std::string& v) {
        lines.push_back(k + " = " + v);
    };
    put("protocol", to_string(cfg.protocol));
    put("params.v_a", format_double(cfg.params.v_a));
    put("params.v_b", format_double(cfg.params.v_b));
    put("params.t_a", format_double(cfg.params.t_a));
    put("params.alpha", format_double(cfg.params.alpha));
    put("params.length_km", format_double(cfg.params.length_km));
    put("params.excess_noise", format_double(cfg.params.excess_noise));
    put("params.beta", format_double(cfg.params.beta));
    put("eta.aa", format_double(cfg.params.eta.aa));
    put("eta.ab", format_double(cfg.params.eta.ab));
    put("eta.ba", format_double(cfg.params.eta.ba));
    put("eta.bb", format_double(cfg.params.eta.bb));
    put("budget.n_total", std::to_string(cfg.budget.n_total));
    put("budget.m", std::to_string(cfg.budget.m));
    put("budget.eps_pe", format_double(cfg.budget.eps_pe));
    put("budget.eps_bar", format_double(cfg.budget.eps_bar));
    put("budget.eps_pa", format_double(cfg.budget.eps_pa));
    if (cfg.budget.v_mod) {
        put("budget.v_mod", format_double(*cfg.budget.v_mod));
    }
    put("sweep.variable", cfg.sweep.variable);
    put("sweep.start", format_double(cfg.sweep.start));
    put("sweep.stop", format_double(cfg.sweep.stop));
    put("sweep.step", format_double(cfg.sweep.step));
    put("output.format", cfg.output.format);
    return lines;
}

/// Key-rate evaluation at one point: the configured parameter record with
/// the swept variable overridden.
inline KeyRateBreakdown evaluate_point(const SweepConfig& cfg,
                                       double value) {
    TwoWayParams p = cfg.params;
    if (cfg.sweep.variable == "excess_noise") {
        p.excess_noise = value;
    } else {
        p.length_km = value;
    }
    switch (cfg.protocol) {
        case Protocol::two_way_ideal:
            return key_rate_two_way(p, std::nullopt);
        case Protocol::two_way_finite:
            return key_rate_two_way(p, cfg.budget);
        case Protocol::one_way_finite:
            return key_rate_one_way(p, cfg.budget);
    }
    throw invalid_argument("unrecognized protocol enumerator");
}

/// Evaluate the configured grid. Points are independent; with jobs > 1
/// they are processed by stride-partitioned threads, and the result is
/// identical to the serial run. A point that throws becomes a row of
/// nan results plus a warning on stderr — the sweep never aborts.
inline std::vector<ResultRow> sweep(const SweepConfig& cfg, int jobs = 1) {
    cfg.validate();
    const SweepAxis& ax = cfg.sweep;
    std::vector<double> grid;
    if (!(ax.start + ax.step > ax.stop)) {
        const double tiny = ax.step * 1e-9;
        for (std::size_t i = 0;; ++i) {
            const double v = ax.start + static_cast<double>(i) * ax.step;
            if (v > ax.stop + tiny) break;
            grid.push_back(v);
        }
    }
    std::vector<ResultRow> rows(grid.size());
    std::mutex log_mutex;
    auto eval_range = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < grid.size(); i += stride) {
            ResultRow& row = rows[i];
            row.value = grid[i];
            try {
                const KeyRateBreakdown b = evaluate_point(cfg, grid[i]);
                row.key_rate = b.key_rate;
                row.i_ab = b.i_ab;
                row.holevo = b.holevo;
                row.delta_n = b.delta_n;
                row.t_min = b.t_min;
                row.sigma2_max = b.sigma2_max;
            } catch (const std::exception& e) {
                const double nan = std::nan("");
                row.key_rate = row.i_ab = row.holevo = nan;
                row.delta_n = row.t_min = row.sigma2_max = nan;
                std::lock_guard<std::mutex> lock(log_mutex);
                std::cerr << "warning: " << ax.variable << " = "
                          << grid[i] << ": " << e.what() << "\n";
            }
        }
    };
    if (jobs <= 1 || rows.size() <= 1) {
        eval_range(0, 1);
    } else {
        const std::size_t n_threads =
            std::min<std::size_t>(static_cast<std::size_t>(jobs),
                                  rows.size());
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back(eval_range, t, n_threads);
        }
        for (auto& th : pool) th.join();
    }
    return rows;
}

namespace detail {

/// Bisect f over [lo, hi] with f(lo) > 0 >= f(hi) to tolerance tol.
template <typename F>
double bisect(F&& f, double lo, double hi, double tol) {
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Largest distance with positive key rate: bracket the zero crossing by
/// doubling from 1 km, then bisect to 0.01 km. No crossing by 500 km is
/// reported as an error, as is a non-positive rate at L = 0.
inline double find_max_distance(const SweepConfig& cfg) {
    SweepConfig point = cfg;
    point.sweep.variable = "length_km";
    auto rate = [&point](double l) {
        return evaluate_point(point, l).key_rate;
    };
    if (!(rate(0.0) > 0.0)) {
        throw no_crossing(
            "key rate is not positive at L = 0; no distance crossing");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (rate(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 500.0) {
            throw no_crossing(
                "key rate stays positive out to 500 km; no crossing found");
        }
    }
    return detail::bisect(rate, lo, hi, 0.01);
}

/// Largest tolerable excess noise at the given distance: bisection of
/// K(eps) over [0, 1] to 1e-4. Requires K(0) > 0 and K(1) <= 0.
inline double find_max_noise(const SweepConfig& cfg, double length_km) {
    SweepConfig point = cfg;
    point.sweep.variable = "excess_noise";
    point.params.length_km = length_km;
    auto rate = [&point](double eps) {
        return evaluate_point(point, eps).key_rate;
    };
    if (!(rate(0.0) > 0.0)) {
        throw no_crossing(
            "key rate is not positive at eps = 0; no noise crossing");
    }
    if (rate(1.0) > 0.0) {
        throw no_crossing(
            "key rate stays positive up to eps = 1; no crossing found");
    }
    return detail::bisect(rate, 0.0, 1.0, 1e-4);
}

inline std::string csv_string(const std::vector<ResultRow>& rows,
                              const std::string& variable) {
    using detail::format_double;
    std::string out = variable +
                      ",key_rate,i_ab,holevo,delta_n,t_min,sigma2_max\n";
    for (const ResultRow& r : rows) {
        out += format_double(r.value) + ',' + format_double(r.key_rate) +
               ',' + format_double(r.i_ab) + ',' +
               format_double(r.holevo) + ',' + format_double(r.delta_n) +
               ',' + format_double(r.t_min) + ',' +
               format_double(r.sigma2_max) + '\n';
    }
    return out;
}

inline std::string plot_data_string(const SweepConfig& cfg,
                                    const std::vector<ResultRow>& rows) {
    if (rows.empty()) {
        throw invalid_argument("plot data needs at least one row");
    }
    std::string out;
    for (const std::string& line : config_echo_lines(cfg)) {
        out += "# " + line + '\n';
    }
    out += "# columns: " + cfg.sweep.variable + " key_rate\n";
    for (const ResultRow& r : rows) {
        out += detail::format_double(r.value) + ' ' +
               detail::format_double(r.key_rate) + '\n';
    }
    return out;
}

namespace detail {

inline void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot open output file `" + path + "`");
    }
    out << body;
    out.flush();
    if (!out) {
        throw io_error("failed writing output file `" + path + "`");
    }
}

}  // namespace detail

inline void emit_csv(const std::vector<ResultRow>& rows,
                     const std::string& variable, const std::string& path) {
    detail::write_file(path, csv_string(rows, variable));
}

inline void emit_plot_data(const SweepConfig& cfg,
                           const std::vector<ResultRow>& rows,
                           const std::string& path) {
    detail::write_file(path, plot_data_string(cfg, rows));
}

}  // namespace cvqkd
