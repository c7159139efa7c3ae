#pragma once

// Finite-size security machinery: one-sided confidence bounds on the
// channel estimators, the privacy-amplification penalty, the finite-size
// key-rate envelope, and a Monte-Carlo harness validating the coverage of
// the bounds.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "cvqkd/errors.hpp"

namespace cvqkd {

/// Signal accounting for one protocol run: N total signals, m sacrificed
/// for parameter estimation, n = N - m kept for the key. The epsilons are
/// the parameter-estimation, smoothing, and privacy-amplification security
/// parameters. v_mod optionally overrides the protocol's default
/// modulation variance used in the estimator-variance model.
struct EstimationBudget {
    std::uint64_t n_total = 100000000;  // N
    std::uint64_t m = 50000000;
    double eps_pe = 1e-10;
    double eps_bar = 1e-10;
    double eps_pa = 1e-10;
    std::optional<double> v_mod;

    std::uint64_t n_key() const { return n_total - m; }

    void validate() const {
        if (m == 0 || m >= n_total) {
            throw invalid_argument("estimation budget requires 0 < m < N");
        }
        for (double e : {eps_pe, eps_bar, eps_pa}) {
            if (!(e > 0.0 && e < 1.0)) {
                throw invalid_argument(
                    "security parameters must lie in (0,1)");
            }
        }
        if (v_mod && !(*v_mod > 0.0)) {
            throw invalid_argument("modulation variance must be positive");
        }
    }
};

/// Maximum-likelihood estimates from the estimation samples of the
/// effective channel y = t x + z: t_hat for t = sqrt(T) and sigma2_hat for
/// the noise variance sigma^2 = 1 + T eps, with the modulation variance
/// V_mod of the x data.
struct ChannelEstimate {
    double t_hat = 0.0;
    double sigma2_hat = 0.0;
    double v_mod = 0.0;
};

/// One-sided confidence bounds holding except with probability eps_pe.
struct WorstCaseChannel {
    double t_min = 0.0;
    double sigma2_max = 0.0;

    double transmittance_min() const { return t_min * t_min; }
};

/// z >= 0 solving (1 - erf(z/sqrt(2)))/2 = eps/2, i.e. the upper tail
/// quantile of the standard normal. Bisection on erfc(z/sqrt(2)) = eps;
/// monotone, accurate to ~1e-13 in z across the full (0,1) range.
inline double gaussian_tail_quantile(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw invalid_argument("tail probability must lie in (0,1)");
    }
    double lo = 0.0;
    double hi = 40.0;  // erfc(40/sqrt 2) underflows; safely past any eps > 0
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid / std::numbers::sqrt2) > eps) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Lower confidence bound t_min = t_hat - z * sqrt(sigma2_hat/(m V_mod)).
inline double t_min_bound(const ChannelEstimate& est, std::uint64_t m,
                          double eps_pe) {
    if (m < 2) {
        throw invalid_argument("estimation needs m >= 2 samples");
    }
    if (!(est.v_mod > 0.0) || est.sigma2_hat < 0.0) {
        throw invalid_argument("channel estimate has invalid variances");
    }
    const double z = gaussian_tail_quantile(eps_pe);
    return est.t_hat -
           z * std::sqrt(est.sigma2_hat /
                         (static_cast<double>(m) * est.v_mod));
}

/// Upper confidence bound sigma2_max = sigma2_hat (1 + z sqrt(2)/sqrt(m)).
inline double sigma2_max_bound(const ChannelEstimate& est, std::uint64_t m,
                               double eps_pe) {
    if (m < 2) {
        throw invalid_argument("estimation needs m >= 2 samples");
    }
    if (est.sigma2_hat < 0.0) {
        throw invalid_argument("noise variance estimate must be >= 0");
    }
    const double z = gaussian_tail_quantile(eps_pe);
    return est.sigma2_hat +
           z * est.sigma2_hat * std::numbers::sqrt2 /
               std::sqrt(static_cast<double>(m));
}

/// Worst-case channel for the security analysis: the confidence bounds
/// evaluated at the estimator expectation values t_hat = sqrt(T) and
/// sigma2_hat = 1 + T eps.
inline WorstCaseChannel worst_case_channel(double transmittance, double eps,
                                           double v_mod, std::uint64_t m,
                                           double eps_pe) {
    if (!(transmittance > 0.0 && transmittance <= 1.0)) {
        throw invalid_argument("transmittance must lie in (0,1]");
    }
    if (eps < 0.0) {
        throw invalid_argument("excess noise must be >= 0");
    }
    const ChannelEstimate est{std::sqrt(transmittance),
                              1.0 + transmittance * eps, v_mod};
    const double t_lo = t_min_bound(est, m, eps_pe);
    if (!(t_lo > 0.0)) {
        throw numeric_failure(
            "estimation with m = " + std::to_string(m) +
            " samples cannot certify a positive transmittance "
            "(t_min = " + std::to_string(t_lo) + ")");
    }
    return WorstCaseChannel{t_lo, sigma2_max_bound(est, m, eps_pe)};
}

/// Finite-size penalty
///   Delta(n) = 7 sqrt(log2(2/eps_bar)/n) + (2/n) log2(1/eps_pa),
/// the 7 coming from 2*dim_HX + 3 with a two-dimensional raw-key alphabet.
inline double delta_n(std::uint64_t n, double eps_bar = 1e-10,
                      double eps_pa = 1e-10) {
    if (n == 0) {
        throw invalid_argument("key-signal count must be >= 1");
    }
    if (!(eps_bar > 0.0) || !(eps_pa > 0.0)) {
        throw invalid_argument("security parameters must be positive");
    }
    const double nd = static_cast<double>(n);
    return 7.0 * std::sqrt(std::log2(2.0 / eps_bar) / nd) +
           (2.0 / nd) * std::log2(1.0 / eps_pa);
}

/// Finite-size secret key rate envelope
///   K = n/N [ beta I_AB - S_BE - Delta(n) ],
/// which may be negative (callers treat K <= 0 as no key).
inline double finite_key_rate(double i_ab, double s_be,
                              const EstimationBudget& budget, double beta) {
    budget.validate();
    const double n = static_cast<double>(budget.n_key());
    const double ratio = n / static_cast<double>(budget.n_total);
    return ratio *
           (beta * i_ab - s_be - delta_n(budget.n_key(), budget.eps_bar,
                                         budget.eps_pa));
}

/// Monte-Carlo check of the confidence-bound coverage. Each trial draws m
/// estimation samples of y = t x + z with x ~ N(0, v_mod) and z ~ N(0,
/// sigma2), forms the maximum-likelihood estimates t_hat = sum(xy)/sum(x^2)
/// and sigma2_hat = (1/m) sum((y - t_hat x)^2), and tests whether the true
/// channel satisfies both bounds. Trials are seeded independently, so
/// parallel execution reproduces the serial result exactly.
inline double monte_carlo_coverage(double t, double sigma2, double v_mod,
                                   std::uint64_t m, double eps_pe,
                                   std::uint64_t trials,
                                   std::uint64_t seed = 0, int jobs = 1) {
    if (trials == 0) {
        throw invalid_argument("coverage estimation needs trials >= 1");
    }
    if (m < 2) {
        throw invalid_argument("estimation needs m >= 2 samples");
    }
    if (!(v_mod > 0.0) || sigma2 < 0.0) {
        throw invalid_argument("variances must be physical");
    }
    if (jobs < 1) {
        jobs = 1;
    }

    const double sx = std::sqrt(v_mod);
    const double sz = std::sqrt(sigma2);
    auto run_trial = [&](std::uint64_t trial) -> bool {
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (trial + 1)));
        std::normal_distribution<double> unit;
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (std::uint64_t i = 0; i < m; ++i) {
            const double x = sx * unit(rng);
            const double y = t * x + sz * unit(rng);
            sxx += x * x;
            sxy += x * y;
            syy += y * y;
        }
        const double t_hat = sxy / sxx;
        // (1/m) sum (y - t_hat x)^2, expanded to avoid a second pass; the
        // expansion can land epsilon-negative for a noiseless channel
        const double sigma2_hat = std::max(
            0.0, (syy - 2.0 * t_hat * sxy + t_hat * t_hat * sxx) /
                     static_cast<double>(m));
        const ChannelEstimate est{t_hat, sigma2_hat, v_mod};
        return t >= t_min_bound(est, m, eps_pe) &&
               sigma2 <= sigma2_max_bound(est, m, eps_pe);
    };

    std::atomic<std::uint64_t> covered{0};
    if (jobs == 1) {
        std::uint64_t local = 0;
        for (std::uint64_t trial = 0; trial < trials; ++trial) {
            local += run_trial(trial) ? 1 : 0;
        }
        covered = local;
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(jobs));
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&, w]() {
                std::uint64_t local = 0;
                for (std::uint64_t trial = static_cast<std::uint64_t>(w);
                     trial < trials;
                     trial += static_cast<std::uint64_t>(jobs)) {
                    local += run_trial(trial) ? 1 : 0;
                }
                covered += local;
            });
        }
        for (auto& th : workers) {
            th.join();
        }
    }
    return static_cast<double>(covered.load()) / static_cast<double>(trials);
}

}  // namespace cvqkd
