#pragma once

#include <complex>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "omnoise/errors.hpp"
#include "omnoise/params.hpp"
#include "omnoise/steady_state.hpp"

namespace omnoise {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix6cd = Eigen::Matrix<std::complex<double>, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector6cd = Eigen::Matrix<std::complex<double>, 6, 1>;

/// Fixed quadrature ordering of the fluctuation vector
/// R = (X_a, Y_a, X_b1, Y_b1, X_b2, Y_b2).
enum QuadIndex : int {
    quad_x_a = 0,
    quad_y_a = 1,
    quad_x_b1 = 2,
    quad_y_b1 = 3,
    quad_x_b2 = 4,
    quad_y_b2 = 5,
};

inline const char* quad_name(int q) {
    static const char* names[6] = {"X_a", "Y_a", "X_b1",
                                   "Y_b1", "X_b2", "Y_b2"};
    if (q < 0 || q > 5) throw invalid_parameter("quadrature index out of range");
    return names[q];
}

/// Linearized quadrature dynamics R' = M R + D R_in with input correlations
/// <N(w) N^T(w')> = 2 pi C delta(w + w').
struct LinearModel {
    Matrix6d m = Matrix6d::Zero();  ///< drift matrix [rad/s]
    Matrix6d d = Matrix6d::Zero();  ///< diagonal noise coefficients [(rad/s)^1/2]
    Matrix6cd c = Matrix6cd::Zero(); ///< Hermitian noise correlation [rad/s]
    MeanFields mean;
};

namespace detail {

/// Complex dynamics matrix on the doubled basis
/// (da, da+, db1, db1+, db2, db2+).
inline Matrix6cd doubled_basis_matrix(const PhysicalParams& p,
                                      const MeanFields& mf) {
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    const cd a = mf.a_mean;
    const cd mu = p.mu();

    Matrix6cd am = Matrix6cd::Zero();
    am(0, 0) = -i * mf.delta_a - 0.5 * p.kappa;
    am(0, 2) = i * a * std::conj(p.g1);
    am(0, 3) = i * a * p.g1;
    am(0, 4) = i * a * std::conj(p.g2);
    am(0, 5) = i * a * p.g2;

    am(2, 2) = -i * p.omega_m - 0.5 * p.gamma1;
    am(2, 4) = i * mu;
    am(2, 0) = i * p.g1 * std::conj(a);
    am(2, 1) = i * p.g1 * a;

    am(4, 4) = -i * p.omega_m - 0.5 * p.gamma2;
    am(4, 2) = i * std::conj(mu);
    am(4, 0) = i * p.g2 * std::conj(a);
    am(4, 1) = i * p.g2 * a;

    // Daggered rows are the formal adjoints of the plain rows.
    for (int r = 0; r < 6; r += 2)
        for (int col = 0; col < 6; col += 2) {
            am(r + 1, col + 1) = std::conj(am(r, col));
            am(r + 1, col) = std::conj(am(r, col + 1));
        }
    return am;
}

/// Per-mode quadrature map (X, Y)^T = Q (x, x+)^T and its inverse.
inline void quadrature_maps(Matrix6cd& w, Matrix6cd& w_inv) {
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    const double s = 1.0 / std::sqrt(2.0);
    w = Matrix6cd::Zero();
    w_inv = Matrix6cd::Zero();
    for (int b = 0; b < 6; b += 2) {
        w(b, b) = s;
        w(b, b + 1) = s;
        w(b + 1, b) = -i * s;
        w(b + 1, b + 1) = i * s;
        w_inv(b, b) = s;
        w_inv(b, b + 1) = i * s;
        w_inv(b + 1, b) = s;
        w_inv(b + 1, b + 1) = -i * s;
    }
}

} // namespace detail

/// Builds M by transforming the complex linearized equations to quadratures,
/// D from the decay rates, and C from the input-noise correlations. The
/// imaginary residue of the transformed M is asserted, not discarded.
inline LinearModel build_linear_model(const PhysicalParams& p,
                                      const MeanFields& mf) {
    LinearModel lm;
    lm.mean = mf;

    Matrix6cd w, w_inv;
    detail::quadrature_maps(w, w_inv);
    const Matrix6cd mc = w * detail::doubled_basis_matrix(p, mf) * w_inv;

    const double scale = mc.cwiseAbs().maxCoeff();
    const double residue = mc.imag().cwiseAbs().maxCoeff();
    if (residue > 1e-14 * scale)
        throw numerical_error(
            "drift matrix has non-real residue: " + std::to_string(residue));
    lm.m = mc.real();

    const double rates[6] = {p.kappa,  p.kappa,  p.gamma1,
                             p.gamma1, p.gamma2, p.gamma2};
    for (int k = 0; k < 6; ++k) lm.d(k, k) = std::sqrt(rates[k]);

    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    auto fill_block = [&](int b, double rate, double occ) {
        lm.c(b, b) = 0.5 * rate * (2.0 * occ + 1.0);
        lm.c(b + 1, b + 1) = lm.c(b, b);
        lm.c(b, b + 1) = i * 0.5 * rate;
        lm.c(b + 1, b) = -i * 0.5 * rate;
    };
    fill_block(0, p.kappa, p.n_a);
    fill_block(2, p.gamma1, p.n_b1);
    fill_block(4, p.gamma2, p.n_b2);
    return lm;
}

/// Ground-truth check of the quadrature substitution: evaluates the complex
/// linearized right-hand sides on random mode fluctuations, converts both
/// sides to quadratures, and returns max |M R - quad(RHS)| over the samples.
inline double verify_drift(const PhysicalParams& p, const MeanFields& mf,
                           const LinearModel& lm, int samples,
                           unsigned seed = 12345u) {
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    const cd a = mf.a_mean;
    const cd mu = p.mu();
    const double s2 = std::sqrt(2.0);

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&] { return cd{gauss(rng), gauss(rng)}; };

    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const cd da = draw(), db1 = draw(), db2 = draw();

        // Complex linearized equations, written out directly.
        const cd da_dot = (-i * mf.delta_a - 0.5 * p.kappa) * da +
                          i * a * std::conj(p.g1) * db1 +
                          i * a * p.g1 * std::conj(db1) +
                          i * a * std::conj(p.g2) * db2 +
                          i * a * p.g2 * std::conj(db2);
        const cd db1_dot = (-i * p.omega_m - 0.5 * p.gamma1) * db1 +
                           i * mu * db2 + i * p.g1 * std::conj(a) * da +
                           i * p.g1 * a * std::conj(da);
        const cd db2_dot = (-i * p.omega_m - 0.5 * p.gamma2) * db2 +
                           i * std::conj(mu) * db1 +
                           i * p.g2 * std::conj(a) * da +
                           i * p.g2 * a * std::conj(da);

        Vector6d r, r_dot;
        r << s2 * da.real(), s2 * da.imag(), s2 * db1.real(), s2 * db1.imag(),
            s2 * db2.real(), s2 * db2.imag();
        r_dot << s2 * da_dot.real(), s2 * da_dot.imag(), s2 * db1_dot.real(),
            s2 * db1_dot.imag(), s2 * db2_dot.real(), s2 * db2_dot.imag();

        const double dev = (lm.m * r - r_dot).cwiseAbs().maxCoeff() /
                           std::max(1.0, r.cwiseAbs().maxCoeff());
        worst = std::max(worst, dev);
    }
    return worst;
}

struct StabilityReport {
    bool stable = false;
    double abscissa = 0.0; ///< max Re(lambda) over eigenvalues of M [rad/s]
};

inline StabilityReport stability_check(const LinearModel& lm) {
    Eigen::EigenSolver<Matrix6d> es(lm.m, false);
    if (es.info() != Eigen::Success)
        throw numerical_error("eigensolver failed in stability check");
    StabilityReport rep;
    rep.abscissa = es.eigenvalues().real().maxCoeff();
    rep.stable = rep.abscissa < 0.0;
    return rep;
}

/// Block permutation swapping the b1 and b2 quadrature pairs; conjugating M
/// with it realizes the resonator-swap side of the Onsager-Casimir relation.
inline Matrix6d swap_resonators_permutation() {
    Matrix6d pi = Matrix6d::Zero();
    pi(0, 0) = pi(1, 1) = 1.0;
    pi(2, 4) = pi(3, 5) = 1.0;
    pi(4, 2) = pi(5, 3) = 1.0;
    return pi;
}

} // namespace omnoise
