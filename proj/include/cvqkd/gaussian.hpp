#pragma once

// Gaussian quantum information over quadrature covariance matrices:
// symplectic transforms and spectra, von Neumann entropies, and
// measurement conditioning. All variances are in shot-noise units
// (vacuum quadrature variance = 1); quadratures are ordered
// (x1, p1, x2, p2, ...).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cvqkd/errors.hpp"

namespace cvqkd {

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kSymplecticTol = 1e-9;
inline constexpr double kEigenvalueClampTol = 1e-9;
inline constexpr double kPseudoInverseTol = 1e-12;

/// Second moments of the quadratures of an n-mode Gaussian state.
/// Immutable after construction; construction enforces symmetry.
class QuadratureCovariance {
 public:
    explicit QuadratureCovariance(Eigen::MatrixXd entries,
                                  std::vector<std::string> labels = {}) {
        const auto rows = entries.rows();
        if (rows < 2 || rows != entries.cols() || rows % 2 != 0) {
            throw invalid_argument(
                "covariance matrix must be square with even dimension >= 2");
        }
        const double asym =
            (entries - entries.transpose()).cwiseAbs().maxCoeff();
        if (asym > kSymmetryTol) {
            throw invalid_argument(
                "covariance matrix is not symmetric (max asymmetry " +
                std::to_string(asym) + ")");
        }
        matrix_ = 0.5 * (entries + entries.transpose());
        const int n = static_cast<int>(rows / 2);
        if (labels.empty()) {
            labels.reserve(n);
            for (int i = 0; i < n; ++i) {
                labels.push_back("M" + std::to_string(i + 1));
            }
        } else if (static_cast<int>(labels.size()) != n) {
            throw invalid_argument("label count does not match mode count");
        }
        labels_ = std::move(labels);
    }

    int n_modes() const { return static_cast<int>(matrix_.rows() / 2); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// 2x2 covariance block between modes i and j.
    Eigen::Matrix2d block(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_modes() || j >= n_modes()) {
            throw invalid_argument("mode index out of range");
        }
        return matrix_.block<2, 2>(2 * i, 2 * j);
    }

 private:
    Eigen::MatrixXd matrix_;
    std::vector<std::string> labels_;
};

/// The standard symplectic form: block-diagonal copies of [[0,1],[-1,0]].
inline Eigen::MatrixXd symplectic_form(int n_modes) {
    if (n_modes < 1) {
        throw invalid_argument("symplectic_form requires n_modes >= 1");
    }
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int i = 0; i < n_modes; ++i) {
        omega(2 * i, 2 * i + 1) = 1.0;
        omega(2 * i + 1, 2 * i) = -1.0;
    }
    return omega;
}

/// A linear map S on quadratures preserving the symplectic form.
/// Construction verifies S Omega S^T = Omega.
class SymplecticTransform {
 public:
    explicit SymplecticTransform(Eigen::MatrixXd matrix,
                                 std::string description = {})
        : matrix_(std::move(matrix)), description_(std::move(description)) {
        const auto rows = matrix_.rows();
        if (rows < 2 || rows != matrix_.cols() || rows % 2 != 0) {
            throw invalid_argument(
                "symplectic matrix must be square with even dimension >= 2");
        }
        const Eigen::MatrixXd omega =
            symplectic_form(static_cast<int>(rows / 2));
        const double defect =
            (matrix_ * omega * matrix_.transpose() - omega)
                .cwiseAbs()
                .maxCoeff();
        if (defect > kSymplecticTol) {
            throw invalid_argument(
                "matrix does not preserve the symplectic form (defect " +
                std::to_string(defect) + ")");
        }
    }

    int n_modes() const { return static_cast<int>(matrix_.rows() / 2); }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const std::string& description() const { return description_; }

 private:
    Eigen::MatrixXd matrix_;
    std::string description_;
};

/// Symplectic eigenvalues: the moduli of the eigenvalues of i*Omega*gamma,
/// one per +/- pair, sorted descending.
///
/// For positive-definite gamma this is computed through the numerically
/// robust normal-matrix route: with gamma = L L^T (Cholesky), the
/// antisymmetric matrix L^T Omega L has singular values
/// (nu_1, nu_1, nu_2, nu_2, ...). A direct dense eigensolve of Omega*gamma
/// serves as fallback for semidefinite edge cases.
inline std::vector<double> symplectic_eigenvalues(
    const QuadratureCovariance& gamma) {
    const int n = gamma.n_modes();
    const Eigen::MatrixXd omega = symplectic_form(n);
    std::vector<double> moduli;
    moduli.reserve(2 * n);

    Eigen::LLT<Eigen::MatrixXd> llt(gamma.matrix());
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd l = llt.matrixL();
        Eigen::MatrixXd m = l.transpose() * omega * l;
        m = 0.5 * (m - m.transpose().eval());  // exact antisymmetry
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        for (int i = 0; i < 2 * n; ++i) {
            moduli.push_back(svd.singularValues()(i));
        }
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(omega * gamma.matrix(),
                                                   false);
        if (solver.info() != Eigen::Success) {
            throw numeric_failure(
                "eigenvalue solver failed on the symplectic spectrum");
        }
        for (int i = 0; i < 2 * n; ++i) {
            moduli.push_back(std::abs(solver.eigenvalues()(i)));
        }
        std::sort(moduli.begin(), moduli.end(), std::greater<>());
    }

    std::vector<double> spectrum;
    spectrum.reserve(n);
    for (int i = 0; i < 2 * n; i += 2) {
        spectrum.push_back(moduli[static_cast<std::size_t>(i)]);
    }
    return spectrum;
}

/// Thermal-mode entropy kernel, in bits:
///   G(lam) = (lam+1)/2 log2((lam+1)/2) - (lam-1)/2 log2((lam-1)/2).
/// Evaluated as [d log1p(1/d) + log1p(d)] / ln 2 with d = (lam-1)/2, which
/// has no cancellation anywhere on [1, inf) and keeps full relative
/// precision both near the pure-state limit and for large lam.
inline double entropy_G(double lambda) {
    if (lambda < 1.0 - kEigenvalueClampTol) {
        throw unphysical_eigenvalue("symplectic eigenvalue " +
                                    std::to_string(lambda) +
                                    " below the physical floor of 1");
    }
    if (lambda <= 1.0) {
        return 0.0;
    }
    const double d = 0.5 * (lambda - 1.0);
    return (d * std::log1p(1.0 / d) + std::log1p(d)) / std::numbers::ln2;
}

/// Von Neumann entropy in bits: sum of G over the symplectic spectrum.
/// Eigenvalues within kEigenvalueClampTol below 1 are clamped to 1.
inline double von_neumann_entropy(const QuadratureCovariance& gamma) {
    double total = 0.0;
    for (double nu : symplectic_eigenvalues(gamma)) {
        total += entropy_G(nu);
    }
    return total;
}

/// Congruence action of a symplectic transform: gamma -> S gamma S^T.
inline QuadratureCovariance apply_symplectic(const SymplecticTransform& s,
                                             const QuadratureCovariance& gamma) {
    if (s.n_modes() != gamma.n_modes()) {
        throw invalid_argument(
            "transform and state have different mode counts");
    }
    Eigen::MatrixXd out =
        s.matrix() * gamma.matrix() * s.matrix().transpose();
    out = 0.5 * (out + out.transpose().eval());
    return QuadratureCovariance(std::move(out), gamma.labels());
}

/// Beam splitter of transmittance t between modes a and b:
/// out_a = sqrt(t) a + sqrt(1-t) b, out_b = -sqrt(1-t) a + sqrt(t) b,
/// identically on both quadratures.
inline SymplecticTransform beam_splitter(double transmittance, int mode_a,
                                         int mode_b, int n_modes) {
    if (!(transmittance >= 0.0 && transmittance <= 1.0)) {
        throw invalid_argument("beam-splitter transmittance outside [0,1]");
    }
    if (n_modes < 2 || mode_a < 0 || mode_b < 0 || mode_a >= n_modes ||
        mode_b >= n_modes || mode_a == mode_b) {
        throw invalid_argument("beam splitter needs two distinct valid modes");
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
    const double st = std::sqrt(transmittance);
    const double sr = std::sqrt(1.0 - transmittance);
    for (int q = 0; q < 2; ++q) {
        const int ia = 2 * mode_a + q;
        const int ib = 2 * mode_b + q;
        s(ia, ia) = st;
        s(ia, ib) = sr;
        s(ib, ia) = -sr;
        s(ib, ib) = st;
    }
    return SymplecticTransform(std::move(s), "beam splitter");
}

enum class Quadrature { x, p };

struct QuadratureMeasurement {
    int mode;
    Quadrature quad;
};

/// Homodyne conditioning: Schur complement of the measured quadratures
/// using the Moore-Penrose pseudo-inverse (singular directions of the
/// measured block below kPseudoInverseTol contribute nothing). The measured
/// modes are removed from the output. Heterodyne detection is modeled as
/// heterodyne_split followed by two homodyne conditionings.
inline QuadratureCovariance condition_on_quadratures(
    const QuadratureCovariance& gamma,
    const std::vector<QuadratureMeasurement>& measurements) {
    const int n = gamma.n_modes();
    if (measurements.empty()) {
        return gamma;
    }
    std::set<int> measured_modes;
    std::vector<int> midx;
    midx.reserve(measurements.size());
    for (const auto& meas : measurements) {
        if (meas.mode < 0 || meas.mode >= n) {
            throw invalid_argument("measured mode index out of range");
        }
        if (!measured_modes.insert(meas.mode).second) {
            throw invalid_argument(
                "at most one quadrature may be measured per mode");
        }
        midx.push_back(2 * meas.mode + (meas.quad == Quadrature::x ? 0 : 1));
    }
    if (static_cast<int>(measured_modes.size()) == n) {
        throw invalid_argument("at least one mode must remain unmeasured");
    }

    std::vector<int> ridx;
    std::vector<std::string> remaining_labels;
    for (int mode = 0; mode < n; ++mode) {
        if (measured_modes.count(mode) == 0) {
            ridx.push_back(2 * mode);
            ridx.push_back(2 * mode + 1);
            remaining_labels.push_back(gamma.labels()[mode]);
        }
    }

    const auto& g = gamma.matrix();
    const auto nr = static_cast<Eigen::Index>(ridx.size());
    const auto nm = static_cast<Eigen::Index>(midx.size());
    Eigen::MatrixXd a(nr, nr), c(nr, nm), m(nm, nm);
    for (Eigen::Index i = 0; i < nr; ++i) {
        for (Eigen::Index j = 0; j < nr; ++j) {
            a(i, j) = g(ridx[i], ridx[j]);
        }
        for (Eigen::Index j = 0; j < nm; ++j) {
            c(i, j) = g(ridx[i], midx[j]);
        }
    }
    for (Eigen::Index i = 0; i < nm; ++i) {
        for (Eigen::Index j = 0; j < nm; ++j) {
            m(i, j) = g(midx[i], midx[j]);
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd inv = svd.singularValues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
        inv(i) = inv(i) > kPseudoInverseTol ? 1.0 / inv(i) : 0.0;
    }
    const Eigen::MatrixXd m_pinv =
        svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();

    Eigen::MatrixXd out = a - c * m_pinv * c.transpose();
    out = 0.5 * (out + out.transpose().eval());
    return QuadratureCovariance(std::move(out), std::move(remaining_labels));
}

/// Models heterodyne detection of one mode: appends a vacuum ancilla and
/// mixes it with the target on a balanced beam splitter. The two outputs
/// (target slot and appended slot) carry the x and p information for
/// subsequent homodyne conditioning.
inline QuadratureCovariance heterodyne_split(const QuadratureCovariance& gamma,
                                             int mode) {
    const int n = gamma.n_modes();
    if (mode < 0 || mode >= n) {
        throw invalid_argument("heterodyne_split mode index out of range");
    }
    Eigen::MatrixXd ext = Eigen::MatrixXd::Identity(2 * n + 2, 2 * n + 2);
    ext.topLeftCorner(2 * n, 2 * n) = gamma.matrix();
    auto labels = gamma.labels();
    labels.push_back(labels[static_cast<std::size_t>(mode)] + "'");
    QuadratureCovariance extended(std::move(ext), std::move(labels));
    return apply_symplectic(beam_splitter(0.5, mode, n, n + 1), extended);
}

/// Rows/columns reordered so that output mode i is input mode perm[i].
inline QuadratureCovariance permute_modes(const QuadratureCovariance& gamma,
                                          const std::vector<int>& permutation) {
    const int n = gamma.n_modes();
    if (static_cast<int>(permutation.size()) != n) {
        throw invalid_argument("permutation length does not match mode count");
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int p : permutation) {
        if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) {
            throw invalid_argument("permutation is not a bijection on modes");
        }
        seen[static_cast<std::size_t>(p)] = true;
    }
    Eigen::MatrixXd out(2 * n, 2 * n);
    std::vector<std::string> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] =
            gamma.labels()[static_cast<std::size_t>(permutation[i])];
        for (int j = 0; j < n; ++j) {
            out.block<2, 2>(2 * i, 2 * j) =
                gamma.block(permutation[static_cast<std::size_t>(i)],
                            permutation[static_cast<std::size_t>(j)]);
        }
    }
    return QuadratureCovariance(std::move(out), std::move(labels));
}

/// n-mode vacuum: the identity matrix.
inline QuadratureCovariance vacuum_state(int n_modes) {
    if (n_modes < 1) {
        throw invalid_argument("vacuum_state requires n_modes >= 1");
    }
    return QuadratureCovariance(
        Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

/// Single thermal mode of quadrature variance v >= 1.
inline QuadratureCovariance thermal_state(double v) {
    if (v < 1.0) {
        throw invalid_argument("thermal variance must be >= 1");
    }
    return QuadratureCovariance(v * Eigen::MatrixXd::Identity(2, 2));
}

/// Two-mode squeezed vacuum of quadrature variance v per mode:
/// [[v I, sqrt(v^2-1) sigma_z], [sqrt(v^2-1) sigma_z, v I]].
inline QuadratureCovariance tmsv_state(double v) {
    if (v < 1.0) {
        throw invalid_argument("squeezed-vacuum variance must be >= 1");
    }
    const double c = std::sqrt(v * v - 1.0);
    Eigen::MatrixXd g(4, 4);
    g << v, 0, c, 0,
         0, v, 0, -c,
         c, 0, v, 0,
         0, -c, 0, v;
    return QuadratureCovariance(std::move(g));
}

}  // namespace cvqkd
