#pragma once

// The improved two-way protocol: entangled-state covariance matrices
// (ideal and finite-size worst-case with mode-mismatch corrections),
// heterodyne mutual information, the receiver's combined-quadrature data
// processing, Holevo leakage, and a one-way coherent-state baseline.
//
// Protocol sketch: Bob sends one arm of a two-mode squeezed vacuum (B1
// kept, B ~ sent) through the channel; Alice splits her own squeezed arm
// onto the incoming mode with a beam splitter of transmittance T_A,
// heterodynes her kept modes, and returns the combined mode A2 -> B2
// through the channel again. Bob heterodynes both B2 and his kept B1 and
// forms x_B = x_B2 - k x_B1, p_B = p_B2 + k p_B1.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/finite_size.hpp"
#include "cvqkd/gaussian.hpp"

namespace cvqkd {

/// Squared overlaps between each party's signal temporal mode and each
/// detector's effective temporal mode (aa: Alice signal vs Alice detector,
/// ab: Alice signal vs Bob detector, and so on).
struct ModeMatchMatrix {
    double aa = 1.0;
    double ab = 1.0;
    double ba = 1.0;
    double bb = 1.0;

    void validate() const {
        for (double e : {aa, ab, ba, bb}) {
            if (!(e >= 0.0 && e <= 1.0)) {
                throw invalid_argument(
                    "mode-match coefficients must lie in [0,1]");
            }
        }
    }
};

/// Physical parameters of one two-way evaluation point. The same record
/// drives the one-way baseline, which uses v_b as the sender variance and
/// eta.bb as the receiver mode match.
struct TwoWayParams {
    double v_a = 20.0;           // Alice TCMSV variance (SNU)
    double v_b = 20.0;           // Bob TCMSV variance (SNU)
    double t_a = 0.8;            // Alice beam-splitter transmittance
    double alpha = 0.2;          // fiber loss (dB/km)
    double length_km = 0.0;      // one-way channel length
    double excess_noise = 0.1;   // channel-input-referred, SNU
    double beta = 0.95;          // reconciliation efficiency
    ModeMatchMatrix eta;

    void validate() const {
        if (!(v_a >= 1.0) || !(v_b >= 1.0)) {
            throw invalid_argument("squeezed-state variances must be >= 1");
        }
        if (!(t_a > 0.0 && t_a < 1.0)) {
            throw invalid_argument(
                "Alice's beam-splitter transmittance must lie in (0,1)");
        }
        if (!(alpha >= 0.0) || !(length_km >= 0.0)) {
            throw invalid_argument("loss and length must be >= 0");
        }
        if (!(excess_noise >= 0.0)) {
            throw invalid_argument("excess noise must be >= 0");
        }
        if (!(beta > 0.0 && beta <= 1.0)) {
            throw invalid_argument(
                "reconciliation efficiency must lie in (0,1]");
        }
        eta.validate();
    }
};

/// Everything one key-rate evaluation produces, in bits per channel use.
struct KeyRateBreakdown {
    double i_ab = 0.0;
    double s_e = 0.0;
    double s_e_cond = 0.0;
    double holevo = 0.0;
    double delta_n = 0.0;
    double key_rate = 0.0;
    double t_min = 0.0;       // worst-case bound actually used
    double sigma2_max = 0.0;  // worst-case bound actually used
};

/// Fiber transmittance per pass: T = 10^(-alpha L / 10).
inline double channel_transmittance(double alpha, double length_km) {
    if (alpha < 0.0 || length_km < 0.0) {
        throw invalid_argument("loss and length must be >= 0");
    }
    return std::pow(10.0, -alpha * length_km / 10.0);
}

/// Channel-added noise referred to the input: chi = (1-T)/T + eps.
inline double chi(double transmittance, double eps) {
    if (!(transmittance > 0.0)) {
        throw invalid_argument("transmittance must be positive");
    }
    return (1.0 - transmittance) / transmittance + eps;
}

namespace detail {

/// The four-mode matrix over (B2, B1, A2, A1) from its nine distinct
/// entries. Diagonal blocks are V*I; correlations to the heterodyned
/// mode A2 carry an I block on (B2,A2) and sigma_z blocks elsewhere.
inline QuadratureCovariance assemble_two_way(double v_b2, double v_b1,
                                             double v_a2, double v_a1,
                                             double c_b2b1, double c_b1a2,
                                             double c_b2a2, double c_b2a1,
                                             double c_a2a1) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(8, 8);
    auto put_i = [&g](int i, int j, double c) {
        g(2 * i, 2 * j) = c;
        g(2 * i + 1, 2 * j + 1) = c;
        g(2 * j, 2 * i) = c;
        g(2 * j + 1, 2 * i + 1) = c;
    };
    auto put_z = [&g](int i, int j, double c) {
        g(2 * i, 2 * j) = c;
        g(2 * i + 1, 2 * j + 1) = -c;
        g(2 * j, 2 * i) = c;
        g(2 * j + 1, 2 * i + 1) = -c;
    };
    put_i(0, 0, v_b2);
    put_i(1, 1, v_b1);
    put_i(2, 2, v_a2);
    put_i(3, 3, v_a1);
    put_z(0, 1, c_b2b1);
    put_i(0, 2, c_b2a2);
    put_z(0, 3, c_b2a1);
    put_z(1, 2, c_b1a2);
    put_z(2, 3, c_a2a1);
    return QuadratureCovariance(std::move(g), {"B2", "B1", "A2", "A1"});
}

}  // namespace detail

/// Covariance matrix of (B2, B1, A2, A1) for a perfectly mode-matched
/// receiver, with both channel passes at the estimated transmittance.
inline QuadratureCovariance cov_ideal(const TwoWayParams& p) {
    p.validate();
    const double t = channel_transmittance(p.alpha, p.length_km);
    const double x = chi(t, p.excess_noise);
    const double va = p.v_a;
    const double vb = p.v_b;
    const double ta = p.t_a;

    const double v_b1 = vb;
    const double v_b2 = t * ((1.0 - ta) * va + x + t * ta * (vb + x));
    const double v_a2 = ta * va + t * (1.0 - ta) * (vb + x);
    const double v_a1 = va;
    const double c_b2b1 = t * std::sqrt(ta * (vb * vb - 1.0));
    const double c_b1a2 = -std::sqrt(t * (1.0 - ta) * (vb * vb - 1.0));
    const double c_b2a2 =
        std::sqrt(t * (1.0 - ta) * ta) * (va - t * (vb + x));
    const double c_b2a1 = std::sqrt(t * (1.0 - ta) * (va * va - 1.0));
    const double c_a2a1 = std::sqrt(ta * (va * va - 1.0));
    return detail::assemble_two_way(v_b2, v_b1, v_a2, v_a1, c_b2b1, c_b1a2,
                                    c_b2a2, c_b2a1, c_a2a1);
}

/// Covariance matrix of (B2, B1, A2, A1) with finite-size worst-case
/// channel bounds and mode-mismatch vacuum admixtures folded in. Every
/// squared-overlap coefficient eta turns a variance V into
/// eta V + (1 - eta) and scales each correlation by sqrt(eta).
inline QuadratureCovariance cov_fan(const TwoWayParams& p,
                                    const WorstCaseChannel& wc) {
    p.validate();
    const double tm = wc.transmittance_min();
    const double s2 = wc.sigma2_max;
    if (!(tm > 0.0) || !(s2 >= tm)) {
        throw invalid_argument(
            "worst-case channel bounds are outside their physical range");
    }
    const double va = p.v_a;
    const double vb = p.v_b;
    const double ta = p.t_a;
    const double eaa = p.eta.aa;
    const double eab = p.eta.ab;
    const double eba = p.eta.ba;
    const double ebb = p.eta.bb;

    const double v_b1 = vb;
    const double v_b2 =
        tm * (1.0 - ta) * (eab * va + (1.0 - eab)) + (s2 - tm) +
        tm * ta * (tm * ebb * vb + tm * (1.0 - ebb) + (s2 - tm));
    const double v_a2 =
        ta * (eaa * va + 1.0 - eaa) +
        (1.0 - ta) * (tm * eba * vb + tm * (1.0 - eba) + (s2 - tm));
    const double v_a1 = va;
    const double c_b2b1 = tm * std::sqrt(ta * ebb * (vb * vb - 1.0));
    const double c_b1a2 =
        -std::sqrt(tm * (1.0 - ta) * eba * (vb * vb - 1.0));
    const double c_b2a2 =
        std::sqrt(tm * (1.0 - ta) * ta) *
        (std::sqrt(eab * eaa) * va +
         std::sqrt(1.0 - eab) * std::sqrt(1.0 - eaa) -
         (tm * std::sqrt(ebb * eba) * vb +
          tm * std::sqrt(1.0 - ebb) * std::sqrt(1.0 - eba) + s2 - tm));
    const double c_b2a1 = std::sqrt(tm * (1.0 - ta) * eab * (va * va - 1.0));
    const double c_a2a1 = std::sqrt(ta * eaa * (va * va - 1.0));

    auto gamma = detail::assemble_two_way(v_b2, v_b1, v_a2, v_a1, c_b2b1,
                                          c_b1a2, c_b2a2, c_b2a1, c_a2a1);
    const auto spectrum = symplectic_eigenvalues(gamma);
    const double nu_min = spectrum.back();
    if (nu_min < 1.0 - kEigenvalueClampTol) {
        throw unphysical_state(
            "worst-case covariance matrix violates the uncertainty "
            "principle (min symplectic eigenvalue " +
            std::to_string(nu_min) + " at L=" + std::to_string(p.length_km) +
            " km, eps=" + std::to_string(p.excess_noise) + ")");
    }
    return gamma;
}

/// The two-way protocol's modulation variance entering the estimator
/// noise model; defaults to Alice's equivalent modulation V_A - 1.
inline double two_way_v_mod(const TwoWayParams& p,
                            const EstimationBudget& budget) {
    return budget.v_mod.value_or(p.v_a - 1.0);
}

/// Convenience: worst-case bounds at this parameter point.
inline WorstCaseChannel two_way_worst_case(const TwoWayParams& p,
                                           const EstimationBudget& budget) {
    budget.validate();
    const double t = channel_transmittance(p.alpha, p.length_km);
    return worst_case_channel(t, p.excess_noise, two_way_v_mod(p, budget),
                              budget.m, budget.eps_pe);
}

inline QuadratureCovariance cov_fan(const TwoWayParams& p,
                                    const EstimationBudget& budget) {
    return cov_fan(p, two_way_worst_case(p, budget));
}

/// Heterodyne mutual information of the reconciled data, using estimated
/// (not worst-case) channel parameters:
///   I = log2( (T^2 T_A (chi+1) + T chi + 1 + T(1-T_A)(eta_ab V_A + 1 - eta_ab))
///           / (T^2 T_A (chi+1) + T chi + 1 + T(1-T_A)) ).
inline double mutual_information(const TwoWayParams& p) {
    p.validate();
    const double t = channel_transmittance(p.alpha, p.length_km);
    const double x = chi(t, p.excess_noise);
    const double base = t * t * p.t_a * (x + 1.0) + t * x + 1.0;
    const double num =
        base + t * (1.0 - p.t_a) * (p.eta.ab * p.v_a + 1.0 - p.eta.ab);
    const double den = base + t * (1.0 - p.t_a);
    if (!(num > 0.0) || !(den > 0.0)) {
        throw numeric_failure("mutual-information ratio is not positive");
    }
    return std::log2(num / den);
}

/// Combining gain of Bob's data processing,
///   k = T sqrt(T_A) sqrt(eta_bb) sqrt((V_B-1)/(V_B+1)),
/// evaluated at the estimated transmittance (a reconciliation choice).
inline double k_gain(const TwoWayParams& p, double t_used) {
    if (!(p.v_b >= 1.0)) {
        throw invalid_argument("squeezed-state variance must be >= 1");
    }
    return t_used * std::sqrt(p.t_a) * std::sqrt(p.eta.bb) *
           std::sqrt((p.v_b - 1.0) / (p.v_b + 1.0));
}

/// Bob's processing applied to the four-mode matrix: heterodyne-split B2
/// and B1 with vacuum ancillas, apply the symplectic that forms the
/// combined quadratures x_B = x_B2' - k x_B1' (on the first split outputs)
/// and p_B = p_B2'' + k p_B1'' (on the second), and condition on those two
/// measurements. Returns the conditional state of the remaining modes.
inline QuadratureCovariance bob_conditional_cov(
    const QuadratureCovariance& gamma, double k) {
    if (gamma.n_modes() != 4) {
        throw invalid_argument(
            "receiver processing expects the four-mode (B2,B1,A2,A1) state");
    }
    // mode layout after the splits: B2, B1, A2, A1, B2', B1'
    const auto g5 = heterodyne_split(gamma, 0);
    const auto g6 = heterodyne_split(g5, 1);

    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(12, 12);
    s(0, 2) = -k;   // x_B2  <- x_B2  - k x_B1
    s(3, 1) = k;    // p_B1  <- p_B1  + k p_B2   (symplectic completion)
    s(10, 8) = -k;  // x_B1' <- x_B1' - k x_B2'  (symplectic completion)
    s(9, 11) = k;   // p_B2' <- p_B2' + k p_B1'
    const SymplecticTransform combine(std::move(s),
                                      "combined-quadrature gain");
    const auto combined = apply_symplectic(combine, g6);
    return condition_on_quadratures(
        combined, {{0, Quadrature::x}, {4, Quadrature::p}});
}

struct HolevoSplit {
    double s_e = 0.0;
    double s_e_cond = 0.0;
    double holevo = 0.0;
};

namespace detail {

inline HolevoSplit holevo_from_cov(const QuadratureCovariance& gamma,
                                   double k) {
    HolevoSplit split;
    split.s_e = von_neumann_entropy(gamma);
    split.s_e_cond = von_neumann_entropy(bob_conditional_cov(gamma, k));
    split.holevo = split.s_e - split.s_e_cond;
    if (split.holevo < -kEigenvalueClampTol) {
        throw numeric_failure(
            "conditioning increased the eavesdropper entropy");
    }
    return split;
}

}  // namespace detail

/// Eavesdropper information bound: S(E) equals the joint entropy of the
/// trusted modes (the eavesdropper holds a purification), S(E|x_B,p_B) is
/// the entropy after Bob's combined-quadrature measurement, and the Holevo
/// leakage is their difference. Without a budget the ideal matrix is used;
/// with one, the worst-case finite-size matrix.
inline HolevoSplit holevo_leakage(
    const TwoWayParams& p, const std::optional<EstimationBudget>& budget) {
    const double t = channel_transmittance(p.alpha, p.length_km);
    const double k = k_gain(p, t);
    if (budget) {
        return detail::holevo_from_cov(cov_fan(p, *budget), k);
    }
    return detail::holevo_from_cov(cov_ideal(p), k);
}

/// Full two-way key-rate evaluation. With a budget: worst-case Holevo
/// term, key fraction n/N, and the finite-size penalty. Without:
/// asymptotic rate beta I - chi_BE from the ideal matrix.
inline KeyRateBreakdown key_rate_two_way(
    const TwoWayParams& p, const std::optional<EstimationBudget>& budget) {
    p.validate();
    KeyRateBreakdown out;
    out.i_ab = mutual_information(p);
    const double t = channel_transmittance(p.alpha, p.length_km);
    const auto split = holevo_leakage(p, budget);
    out.s_e = split.s_e;
    out.s_e_cond = split.s_e_cond;
    out.holevo = split.holevo;
    if (budget) {
        const auto wc = two_way_worst_case(p, *budget);
        out.t_min = wc.t_min;
        out.sigma2_max = wc.sigma2_max;
        out.delta_n =
            delta_n(budget->n_key(), budget->eps_bar, budget->eps_pa);
        out.key_rate =
            finite_key_rate(out.i_ab, out.holevo, *budget, p.beta);
    } else {
        out.t_min = std::sqrt(t);
        out.sigma2_max = 1.0 + t * p.excess_noise;
        out.delta_n = 0.0;
        out.key_rate = p.beta * out.i_ab - out.holevo;
    }
    return out;
}

/// One-way coherent-state heterodyne baseline with reverse reconciliation:
/// sender TMSV of variance V = v_b through the channel (T, eps), receiver
/// mode mismatch eta.bb as a pure-loss beam splitter before detection.
/// Mutual information uses estimated parameters; the Holevo term uses the
/// worst-case bounds when a budget is given.
inline KeyRateBreakdown key_rate_one_way(
    const TwoWayParams& p, const std::optional<EstimationBudget>& budget) {
    p.validate();
    const double v = p.v_b;
    const double eta = p.eta.bb;
    const double t = channel_transmittance(p.alpha, p.length_km);
    const double x = chi(t, p.excess_noise);

    const double a = v;
    const double b_est = eta * t * (v + x) + 1.0 - eta;
    const double c2_est = eta * t * (v * v - 1.0);

    KeyRateBreakdown out;
    const double joint = (a + 1.0) * (b_est + 1.0);
    out.i_ab = std::log2(joint / (joint - c2_est));

    double b = b_est;
    double c2 = c2_est;
    if (budget) {
        budget->validate();
        const double v_mod = budget->v_mod.value_or(v - 1.0);
        const auto wc = worst_case_channel(t, p.excess_noise, v_mod,
                                           budget->m, budget->eps_pe);
        const double tm = wc.transmittance_min();
        b = eta * (tm * v + wc.sigma2_max - tm) + 1.0 - eta;
        c2 = eta * tm * (v * v - 1.0);
        out.t_min = wc.t_min;
        out.sigma2_max = wc.sigma2_max;
    } else {
        out.t_min = std::sqrt(t);
        out.sigma2_max = 1.0 + t * p.excess_noise;
    }

    // symplectic spectrum of [[a I, c sigma_z], [c sigma_z, b I]] and of
    // the post-measurement single mode
    const double det = a * b - c2;
    const double delta = a * a + b * b - 2.0 * c2;
    const double disc = std::max(delta * delta - 4.0 * det * det, 0.0);
    const double nu1 = std::sqrt(0.5 * (delta + std::sqrt(disc)));
    const double nu2 = std::sqrt(std::max(0.5 * (delta - std::sqrt(disc)), 0.0));
    const double nu3 = a - c2 / (b + 1.0);
    out.s_e = entropy_G(nu1) + entropy_G(nu2);
    out.s_e_cond = entropy_G(nu3);
    out.holevo = out.s_e - out.s_e_cond;

    if (budget) {
        out.delta_n =
            delta_n(budget->n_key(), budget->eps_bar, budget->eps_pa);
        out.key_rate =
            finite_key_rate(out.i_ab, out.holevo, *budget, p.beta);
    } else {
        out.delta_n = 0.0;
        out.key_rate = p.beta * out.i_ab - out.holevo;
    }
    return out;
}

}  // namespace cvqkd
