#pragma once

// Shared test utilities: deterministic random symplectics and physical
// states, matrix comparison helpers, temp-file scaffolding.

#include <gtest/gtest.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "cvqkd/gaussian.hpp"

namespace cvqkd::test {

inline double max_abs_diff(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

#define EXPECT_REL_NEAR(val, ref, tol)                                     \
    EXPECT_NEAR((val), (ref), std::abs(ref) * (tol) + (tol))

/// Single-mode rotation embedded at `mode` of an n-mode transform.
inline Eigen::MatrixXd rotation(int n, int mode, double theta) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    const double c = std::cos(theta);
    const double g = std::sin(theta);
    s(2 * mode, 2 * mode) = c;
    s(2 * mode, 2 * mode + 1) = g;
    s(2 * mode + 1, 2 * mode) = -g;
    s(2 * mode + 1, 2 * mode + 1) = c;
    return s;
}

/// Single-mode squeezer embedded at `mode` of an n-mode transform.
inline Eigen::MatrixXd squeezer(int n, int mode, double r) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    s(2 * mode, 2 * mode) = std::exp(-r);
    s(2 * mode + 1, 2 * mode + 1) = std::exp(r);
    return s;
}

/// Random symplectic built from rotations, squeezers, and beam splitters;
/// deterministic in the RNG state.
inline SymplecticTransform random_symplectic(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
    std::uniform_real_distribution<double> squeeze(-0.8, 0.8);
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    for (int pass = 0; pass < 2; ++pass) {
        for (int m = 0; m < n; ++m) {
            s = rotation(n, m, angle(rng)) * s;
            s = squeezer(n, m, squeeze(rng)) * s;
        }
        for (int m = 0; m + 1 < n; ++m) {
            const double t = 0.1 + 0.8 * angle(rng) / 6.283185307179586;
            s = beam_splitter(t, m, m + 1, n).matrix() * s;
        }
    }
    return SymplecticTransform(std::move(s), "random test symplectic");
}

/// Random physical n-mode state: random thermal occupations conjugated by
/// a random symplectic. Symplectic spectrum is the chosen occupations.
inline QuadratureCovariance random_state(int n, std::mt19937_64& rng,
                                         double v_max = 10.0) {
    std::uniform_real_distribution<double> occ(1.0, v_max);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int m = 0; m < n; ++m) {
        const double v = occ(rng);
        g(2 * m, 2 * m) = v;
        g(2 * m + 1, 2 * m + 1) = v;
    }
    return apply_symplectic(random_symplectic(n, rng),
                            QuadratureCovariance(std::move(g)));
}

/// Writes content to a unique temp file and removes it on destruction.
class TempFile {
  public:
    explicit TempFile(const std::string& content,
                      const std::string& suffix = ".txt") {
        static int counter = 0;
        path_ = testing::TempDir() + "cvqkd_test_" +
                std::to_string(::getpid()) + "_" +
                std::to_string(counter++) + suffix;
        std::ofstream out(path_, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path_.c_str()); }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;
    const std::string& path() const { return path_; }

  private:
    std::string path_;
};

}  // namespace cvqkd::test
