#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "omnoise/constants.hpp"
#include "omnoise/errors.hpp"
#include "omnoise/linmodel.hpp"

namespace omnoise {

/// Eigendecomposition M = U diag(lambda) U^-1 with deterministic ordering
/// (negative imaginary parts first, then by |Im|, then by Re). Near an EP
/// cond(U) diverges; that is reported, not treated as an error.
struct EigenSystem {
    Vector6cd lambdas;
    Matrix6cd u;
    Matrix6cd u_inv;
    double cond = 0.0;
    bool high_cond = false; ///< cond exceeded the fallback ceiling
    Matrix6d m;             ///< generator, kept for the direct-inverse path
};

inline constexpr double eigensystem_cond_ceiling = 1e8;

inline EigenSystem eigensystem(const LinearModel& lm) {
    Eigen::EigenSolver<Matrix6d> solver(lm.m, true);
    if (solver.info() != Eigen::Success)
        throw numerical_error("eigendecomposition of M did not converge");

    std::array<int, 6> order{0, 1, 2, 3, 4, 5};
    const auto& vals = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto la = vals(a), lb = vals(b);
        const int sa = la.imag() < 0.0 ? 0 : 1;
        const int sb = lb.imag() < 0.0 ? 0 : 1;
        if (sa != sb) return sa < sb;
        if (std::abs(la.imag()) != std::abs(lb.imag()))
            return std::abs(la.imag()) < std::abs(lb.imag());
        return la.real() < lb.real();
    });

    EigenSystem es;
    es.m = lm.m;
    for (int k = 0; k < 6; ++k) {
        es.lambdas(k) = vals(order[k]);
        es.u.col(k) = solver.eigenvectors().col(order[k]);
    }
    es.u_inv = es.u.inverse();

    Eigen::JacobiSVD<Matrix6cd> svd(es.u);
    const double smin = svd.singularValues().minCoeff();
    es.cond = smin > 0.0 ? svd.singularValues().maxCoeff() / smin
                         : std::numeric_limits<double>::infinity();
    es.high_cond = !(es.cond < eigensystem_cond_ceiling);

    const double mscale = lm.m.cwiseAbs().maxCoeff();
    const double resid =
        (lm.m * es.u - es.u * es.lambdas.asDiagonal().toDenseMatrix())
            .cwiseAbs()
            .maxCoeff();
    if (resid > 1e-10 * std::max(mscale, 1.0))
        throw numerical_error("eigendecomposition residual too large: " +
                              std::to_string(resid / mscale));
    return es;
}

/// T(w) = [i w I + M]^-1 via the eigensum T_ij = sum_k U_ik U^-1_kj/(iw+l_k),
/// falling back to a direct LU inverse when cond(U) is above the ceiling.
inline Matrix6cd transfer(const EigenSystem& es, double omega) {
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    if (es.high_cond) {
        Matrix6cd a = es.m.cast<cd>();
        a.diagonal().array() += i * omega;
        Eigen::PartialPivLU<Matrix6cd> lu(a);
        const Matrix6cd t = lu.inverse();
        if (!t.allFinite())
            throw numerical_error("singular i w I + M at omega = " +
                                  std::to_string(omega));
        return t;
    }
    Vector6cd poles;
    for (int k = 0; k < 6; ++k) {
        const cd denom = i * omega + es.lambdas(k);
        if (denom == cd{0.0, 0.0})
            throw numerical_error("pole of T(omega) hit at omega = " +
                                  std::to_string(omega));
        poles(k) = 1.0 / denom;
    }
    return es.u * poles.asDiagonal() * es.u_inv;
}

/// Internal susceptibility T'(w) = T(w) D; column j is the response of the
/// fluctuation vector to the j-th input noise quadrature.
inline Matrix6cd susceptibility_internal(const EigenSystem& es,
                                         const LinearModel& lm, double omega) {
    return transfer(es, omega) * lm.d;
}

/// Output susceptibility P(w) = I + D T(w) D from the input-output relation
/// R_out = R_in - D R.
inline Matrix6cd susceptibility_output(const EigenSystem& es,
                                       const LinearModel& lm, double omega) {
    return Matrix6cd::Identity() + lm.d * transfer(es, omega) * lm.d;
}

/// Internal PSD matrix S(w) = 2 pi T(-w) C T^T(w).
inline Matrix6cd psd_internal(const EigenSystem& es, const LinearModel& lm,
                              double omega) {
    return constants::two_pi * transfer(es, -omega) * lm.c *
           transfer(es, omega).transpose();
}

/// Output PSD matrix S_out(w) = 2 pi P(-w) C P^T(w).
inline Matrix6cd psd_output(const EigenSystem& es, const LinearModel& lm,
                            double omega) {
    return constants::two_pi * susceptibility_output(es, lm, -omega) * lm.c *
           susceptibility_output(es, lm, omega).transpose();
}

enum class SpectrumKind { internal, output };

/// Input-noise PSD diagonal entry, 2 pi C_qq.
inline double input_psd(const LinearModel& lm, int q) {
    return constants::two_pi * lm.c(q, q).real();
}

/// Individual noise contribution |X_{to,from}(w)|^2 S_in_{from,from} with
/// X = T' (internal) or P (output) and S_in_{ff} = 2 pi C_ff.
inline double contribution(SpectrumKind kind, int from, int to,
                           const EigenSystem& es, const LinearModel& lm,
                           double omega) {
    if (from < 0 || from > 5 || to < 0 || to > 5)
        throw invalid_parameter("quadrature index out of range");
    const Matrix6cd x = kind == SpectrumKind::internal
                            ? susceptibility_internal(es, lm, omega)
                            : susceptibility_output(es, lm, omega);
    return std::norm(x(to, from)) * input_psd(lm, from);
}

/// Homodyne spectrum v . S_out(w) v with v = cos(theta) e_Xa + sin(theta) e_Ya.
inline double homodyne_output(const EigenSystem& es, const LinearModel& lm,
                              double omega, double theta) {
    const Matrix6cd s = psd_output(es, lm, omega);
    Vector6cd v = Vector6cd::Zero();
    v(quad_x_a) = std::cos(theta);
    v(quad_y_a) = std::sin(theta);
    return (v.adjoint() * s * v)(0, 0).real();
}

/// Sampled scalar spectrum entries on a frequency grid.
struct SpectrumTable {
    std::vector<double> omegas;                ///< sorted [rad/s]
    std::vector<std::complex<double>> values;  ///< one sample per omega
    std::string label;                         ///< quantity description
    std::uint64_t params_hash = 0;
};

/// FNV-1a over the canonical JSON of the parameters.
inline std::uint64_t params_fingerprint(const PhysicalParams& p) {
    const std::string s = params_to_json(p).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

/// Default spectrum window centered on omega_m, wide enough for the
/// hybridized doublet: W = 4 |mu| + 40 max(gamma1, gamma2).
inline std::pair<double, double> default_spectrum_window(
    const PhysicalParams& p) {
    const double w = 4.0 * p.mu_abs + 40.0 * std::max(p.gamma1, p.gamma2);
    return {p.omega_m - w, p.omega_m + w};
}

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (n < 1 || hi < lo) throw invalid_parameter("bad frequency grid");
    std::vector<double> g(static_cast<std::size_t>(n));
    if (n == 1) {
        g[0] = 0.5 * (lo + hi);
        return g;
    }
    for (int k = 0; k < n; ++k)
        g[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    return g;
}

} // namespace omnoise
