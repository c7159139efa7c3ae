// Command-line driver: single-point rates, sweeps, max-distance and
// max-noise root finding, temporal-mode overlap calculation, and a
// self-check harness (Monte-Carlo confidence-bound coverage plus quick
// invariants).
//
// Exit codes: 0 on success, 1 on validation errors (bad flags, bad
// config, bad inputs), 2 on numeric failures (unphysical states, missing
// crossings).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cvqkd/cvqkd.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string protocol;
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::optional<double> length_km;
    std::optional<double> excess_noise;
};

void add_common(CLI::App* sub, CommonOpts* opts, bool with_point_overrides) {
    sub->add_option("--config", opts->config_path,
                    "Run descriptor file (key = value)");
    sub->add_option("--protocol", opts->protocol,
                    "two_way_ideal | two_way_finite | one_way_finite");
    sub->add_option("--out", opts->out, "Output file path (default stdout)");
    sub->add_option("--seed", opts->seed, "RNG seed where randomness exists");
    sub->add_option("--jobs", opts->jobs, "Worker threads")
        ->check(CLI::PositiveNumber);
    if (with_point_overrides) {
        sub->add_option("--length-km", opts->length_km,
                        "Override channel length (km)");
        sub->add_option("--excess-noise", opts->excess_noise,
                        "Override channel excess noise (SNU)");
    }
}

cvqkd::SweepConfig make_config(const CommonOpts& opts) {
    cvqkd::SweepConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = cvqkd::load_config(opts.config_path);
    } else if (opts.protocol.empty()) {
        throw cvqkd::validation_error(
            "missing `protocol`: pass --config or --protocol");
    }
    if (!opts.protocol.empty()) {
        cfg.protocol = cvqkd::protocol_from_string(opts.protocol);
    }
    if (opts.length_km) cfg.params.length_km = *opts.length_km;
    if (opts.excess_noise) cfg.params.excess_noise = *opts.excess_noise;
    cfg.validate();
    return cfg;
}

int run_rate(const CommonOpts& opts) {
    const cvqkd::SweepConfig cfg = make_config(opts);
    const cvqkd::KeyRateBreakdown b =
        cvqkd::evaluate_point(cfg, cfg.sweep.variable == "excess_noise"
                                       ? cfg.params.excess_noise
                                       : cfg.params.length_km);
    std::printf("protocol     = %s\n", cvqkd::to_string(cfg.protocol).c_str());
    std::printf("length_km    = %.12g\n", cfg.params.length_km);
    std::printf("excess_noise = %.12g\n", cfg.params.excess_noise);
    std::printf("key_rate     = %.12g\n", b.key_rate);
    std::printf("i_ab         = %.12g\n", b.i_ab);
    std::printf("s_e          = %.12g\n", b.s_e);
    std::printf("s_e_cond     = %.12g\n", b.s_e_cond);
    std::printf("holevo       = %.12g\n", b.holevo);
    std::printf("delta_n      = %.12g\n", b.delta_n);
    std::printf("t_min        = %.12g\n", b.t_min);
    std::printf("sigma2_max   = %.12g\n", b.sigma2_max);
    return 0;
}

int run_sweep(const CommonOpts& opts) {
    cvqkd::SweepConfig cfg = make_config(opts);
    if (!opts.out.empty()) cfg.output.path = opts.out;
    const std::vector<cvqkd::ResultRow> rows = cvqkd::sweep(cfg, opts.jobs);
    const std::string body =
        cfg.output.format == "plot"
            ? cvqkd::plot_data_string(cfg, rows)
            : cvqkd::csv_string(rows, cfg.sweep.variable);
    if (cfg.output.path.empty() || cfg.output.path == "-") {
        std::fputs(body.c_str(), stdout);
    } else {
        cvqkd::detail::write_file(cfg.output.path, body);
        std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(),
                     cfg.output.path.c_str());
    }
    return 0;
}

int run_max_distance(const CommonOpts& opts) {
    const cvqkd::SweepConfig cfg = make_config(opts);
    std::printf("max_distance_km = %.12g\n", cvqkd::find_max_distance(cfg));
    return 0;
}

int run_max_noise(const CommonOpts& opts) {
    const cvqkd::SweepConfig cfg = make_config(opts);
    const double l = opts.length_km.value_or(cfg.params.length_km);
    std::printf("max_excess_noise = %.12g\n",
                cvqkd::find_max_noise(cfg, l));
    return 0;
}

int run_eta(const std::vector<std::string>& files) {
    if (files.size() < 2 || files.size() % 2 != 0) {
        throw cvqkd::validation_error(
            "eta expects an even number (>= 2) of waveform files, "
            "compared pairwise");
    }
    for (std::size_t i = 0; i + 1 < files.size(); i += 2) {
        const cvqkd::Wavepacket a = cvqkd::load_waveform(files[i]);
        const cvqkd::Wavepacket b = cvqkd::load_waveform(files[i + 1]);
        std::printf("eta(%s, %s) = %.12g\n", files[i].c_str(),
                    files[i + 1].c_str(), cvqkd::mode_match(a, b));
    }
    return 0;
}

bool report(const char* name, bool ok, double value, double bound,
            const char* relation) {
    std::printf("  [%s] %-34s %.6g (%s %.6g)\n", ok ? "PASS" : "FAIL", name,
                value, relation, bound);
    return ok;
}

int run_validate(std::uint64_t seed, std::uint64_t trials, std::uint64_t m,
                 double eps_pe, int jobs) {
    using namespace cvqkd;
    bool all_ok = true;
    std::printf("Monte-Carlo confidence-bound coverage:\n");
    const double transmittance = channel_transmittance(0.2, 10.0);
    const double t = std::sqrt(transmittance);
    const double sigma2 = 1.0 + transmittance * 0.1;
    const double v_mod = 19.0;
    const double coverage = monte_carlo_coverage(t, sigma2, v_mod, m, eps_pe,
                                                 trials, seed, jobs);
    const double target = 1.0 - eps_pe;
    const double sigma_binom =
        std::sqrt(target * eps_pe / static_cast<double>(trials));
    all_ok &= report("coverage", coverage >= target - 3.0 * sigma_binom,
                     coverage, target - 3.0 * sigma_binom, ">=");

    std::printf("Invariant spot checks:\n");
    for (double v : {1.0, 2.0, 20.0, 1000.0}) {
        const double s = von_neumann_entropy(tmsv_state(v));
        all_ok &= report("pure-state entropy", std::abs(s) < 1e-8,
                         std::abs(s), 1e-8, "<");
    }
    {
        TwoWayParams p;
        p.length_km = 10.0;
        const double tr = channel_transmittance(p.alpha, p.length_km);
        const auto ideal = cov_ideal(p);
        const auto fan = cov_fan(
            p, WorstCaseChannel{std::sqrt(tr), 1.0 + tr * p.excess_noise});
        const double diff =
            (ideal.matrix() - fan.matrix()).cwiseAbs().maxCoeff();
        all_ok &= report("asymptotic-bound reduction", diff < 1e-8, diff,
                         1e-8, "<");
    }
    {
        double max_err = 0.0;
        for (double eps : {1e-10, 1e-5, 0.0455, 0.5}) {
            const double z = gaussian_tail_quantile(eps);
            const double back = std::erfc(z / std::numbers::sqrt2);
            max_err = std::max(max_err, std::abs(back - eps) / eps);
        }
        all_ok &= report("quantile round trip", max_err < 1e-9, max_err,
                         1e-9, "<");
    }
    {
        // heterodyning one arm of a two-mode squeezed state leaves the
        // other arm in a coherent state (unit covariance)
        const auto tmsv = tmsv_state(20.0);
        const auto split = heterodyne_split(tmsv, 0);
        const auto cond = condition_on_quadratures(
            split, {{0, Quadrature::x}, {2, Quadrature::p}});
        const double diff =
            (cond.matrix() - Eigen::MatrixXd::Identity(2, 2))
                .cwiseAbs()
                .maxCoeff();
        all_ok &= report("heterodyne conditioning", diff < 1e-8, diff, 1e-8,
                         "<");
    }
    if (!all_ok) {
        throw numeric_failure("validation checks failed");
    }
    std::printf("all validation checks passed\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Finite-size key rates for an improved two-way CV-QKD protocol "
        "and a one-way baseline"};
    app.require_subcommand(1);

    CommonOpts rate_opts;
    CLI::App* rate_cmd =
        app.add_subcommand("rate", "Key-rate breakdown at a single point");
    add_common(rate_cmd, &rate_opts, true);

    CommonOpts sweep_opts;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Evaluate the configured parameter grid");
    add_common(sweep_cmd, &sweep_opts, true);

    CommonOpts maxd_opts;
    CLI::App* maxd_cmd = app.add_subcommand(
        "max-distance", "Largest distance with positive key rate");
    add_common(maxd_cmd, &maxd_opts, true);

    CommonOpts maxn_opts;
    CLI::App* maxn_cmd = app.add_subcommand(
        "max-noise", "Largest tolerable excess noise at a distance");
    add_common(maxn_cmd, &maxn_opts, true);

    std::vector<std::string> eta_files;
    CLI::App* eta_cmd = app.add_subcommand(
        "eta", "Squared temporal-mode overlap of waveform-file pairs");
    eta_cmd->add_option("files", eta_files, "Waveform files, in pairs")
        ->expected(-2);

    std::uint64_t val_seed = 0;
    std::uint64_t val_trials = 10000;
    std::uint64_t val_m = 10000;
    double val_eps_pe = 0.05;
    int val_jobs = 1;
    CLI::App* val_cmd = app.add_subcommand(
        "validate", "Monte-Carlo coverage harness and invariant checks");
    val_cmd->add_option("--seed", val_seed, "RNG seed");
    val_cmd->add_option("--trials", val_trials, "Monte-Carlo trials")
        ->check(CLI::PositiveNumber);
    val_cmd->add_option("--m", val_m, "Estimation samples per trial")
        ->check(CLI::PositiveNumber);
    val_cmd->add_option("--eps-pe", val_eps_pe,
                        "Estimation failure probability");
    val_cmd->add_option("--jobs", val_jobs, "Worker threads")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (rate_cmd->parsed()) return run_rate(rate_opts);
        if (sweep_cmd->parsed()) return run_sweep(sweep_opts);
        if (maxd_cmd->parsed()) return run_max_distance(maxd_opts);
        if (maxn_cmd->parsed()) return run_max_noise(maxn_opts);
        if (eta_cmd->parsed()) return run_eta(eta_files);
        if (val_cmd->parsed()) {
            return run_validate(val_seed, val_trials, val_m, val_eps_pe,
                                val_jobs);
        }
    } catch (const cvqkd::validation_category& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const cvqkd::numeric_category& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
