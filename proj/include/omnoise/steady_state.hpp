#pragma once

#include <cmath>
#include <complex>

#include "omnoise/errors.hpp"
#include "omnoise/params.hpp"

namespace omnoise {

/// Self-consistent classical mean fields and the effective detuning
/// Delta_a = Delta - 2 Re(g1 <b1>* + g2* <b2>).
struct MeanFields {
    std::complex<double> a_mean{0.0, 0.0};
    std::complex<double> b1_mean{0.0, 0.0};
    std::complex<double> b2_mean{0.0, 0.0};
    double delta_a = 0.0; ///< [rad/s]
    int iterations = 0;
    double residual = 0.0; ///< max absolute update of the final iteration
};

namespace detail {

/// Exact solve of the 2x2 mechanical stationarity system at fixed |<a>|^2:
///   (gamma1/2 + i omega_m) b1 - i mu b2   = i g1 |a|^2
///   -i mu* b1 + (gamma2/2 + i omega_m) b2 = i g2 |a|^2
inline std::pair<std::complex<double>, std::complex<double>>
solve_mechanical_pair(const PhysicalParams& p, double photon_number) {
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    const cd mu = p.mu();
    const cd d1 = 0.5 * p.gamma1 + i * p.omega_m;
    const cd d2 = 0.5 * p.gamma2 + i * p.omega_m;
    const cd r1 = i * p.g1 * photon_number;
    const cd r2 = i * p.g2 * photon_number;
    const cd det = d1 * d2 - (i * mu) * (i * std::conj(mu));
    if (std::abs(det) <=
        1e-300 + 1e-14 * (std::abs(d1 * d2) + std::norm(mu)))
        throw numerical_error("degenerate mechanical 2x2 system");
    const cd b1 = (r1 * d2 + i * mu * r2) / det;
    const cd b2 = (d1 * r2 + i * std::conj(mu) * r1) / det;
    return {b1, b2};
}

inline double effective_detuning(const PhysicalParams& p,
                                 std::complex<double> b1,
                                 std::complex<double> b2) {
    return p.delta - 2.0 * std::real(p.g1 * std::conj(b1) +
                                     std::conj(p.g2) * b2);
}

} // namespace detail

/// Damped fixed-point iteration for the steady state: given Delta_a compute
/// <a>, solve the mechanical pair exactly, update Delta_a with damping 0.5,
/// iterate until the largest field update falls below tol (scaled by the
/// current field magnitudes).
inline MeanFields solve_mean_fields(const PhysicalParams& p,
                                    double tol = 1e-12,
                                    int max_iter = 10000) {
    if (tol <= 0.0) throw invalid_parameter("tol must be > 0");
    p.validate();
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    const double eps_l = drive_amplitude(p);
    const double drive = std::sqrt(p.eta * p.kappa) * eps_l;

    MeanFields mf;
    mf.delta_a = p.delta;

    for (int it = 1; it <= max_iter; ++it) {
        const cd a_new = drive / (0.5 * p.kappa + i * mf.delta_a);
        const auto [b1_new, b2_new] =
            detail::solve_mechanical_pair(p, std::norm(a_new));
        const double da_target = detail::effective_detuning(p, b1_new, b2_new);
        const double da_new = mf.delta_a + 0.5 * (da_target - mf.delta_a);

        const double scale =
            std::max({std::abs(a_new), std::abs(b1_new), std::abs(b2_new),
                      std::abs(da_new) / p.omega_m, 1.0});
        const double update =
            std::max({std::abs(a_new - mf.a_mean),
                      std::abs(b1_new - mf.b1_mean),
                      std::abs(b2_new - mf.b2_mean),
                      std::abs(da_new - mf.delta_a) / p.omega_m});

        mf.a_mean = a_new;
        mf.b1_mean = b1_new;
        mf.b2_mean = b2_new;
        mf.delta_a = da_new;
        mf.iterations = it;
        mf.residual = update / scale;
        if (mf.residual < tol) {
            // Converged on the damped iterate; land exactly on the
            // undamped stationarity point.
            mf.delta_a = detail::effective_detuning(p, mf.b1_mean, mf.b2_mean);
            mf.a_mean = drive / (0.5 * p.kappa + i * mf.delta_a);
            return mf;
        }
    }
    throw numerical_error("steady state not converged after " +
                          std::to_string(max_iter) +
                          " iterations, residual = " +
                          std::to_string(mf.residual));
}

/// Max absolute residual of the three stationarity equations at mf,
/// normalized by the equation scales. Diagnostic used by tests and the CLI.
inline double stationarity_residual(const PhysicalParams& p,
                                    const MeanFields& mf) {
    using cd = std::complex<double>;
    const cd i{0.0, 1.0};
    const double drive = std::sqrt(p.eta * p.kappa) * drive_amplitude(p);
    const double da = detail::effective_detuning(p, mf.b1_mean, mf.b2_mean);
    const double n_ph = std::norm(mf.a_mean);
    const cd mu = p.mu();

    const cd f_a = drive - (0.5 * p.kappa + i * da) * mf.a_mean;
    const cd f_b1 = i * mu * mf.b2_mean + i * p.g1 * n_ph -
                    (0.5 * p.gamma1 + i * p.omega_m) * mf.b1_mean;
    const cd f_b2 = i * std::conj(mu) * mf.b1_mean + i * p.g2 * n_ph -
                    (0.5 * p.gamma2 + i * p.omega_m) * mf.b2_mean;

    const double s_a = std::max(drive, p.kappa * std::abs(mf.a_mean)) +
                       std::abs(da * mf.a_mean);
    const double s_b = p.omega_m * std::max(
        {std::abs(mf.b1_mean), std::abs(mf.b2_mean), 1e-300});
    const double sf = std::max({s_a, s_b, 1.0});
    return std::max({std::abs(f_a), std::abs(f_b1), std::abs(f_b2)}) / sf;
}

} // namespace omnoise
