#pragma once

#include <cmath>
#include <complex>
#include <functional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "omnoise/errors.hpp"
#include "omnoise/linmodel.hpp"
#include "omnoise/spectra.hpp"
#include "omnoise/steady_state.hpp"

namespace omnoise {

enum class FlowDirection { from_2_to_1, from_1_to_2 };

/// Directional noise flows on the momentum quadratures and the integrated
/// non-reciprocity measure at a given loop phase.
struct NoiseFlow {
    double phi = 0.0;
    double flow_21 = 0.0;   ///< integral of F_{2->1} [PSD * rad/s]
    double flow_12 = 0.0;   ///< integral of F_{1->2}
    double i_delta = 0.0;   ///< integral of |F_{2->1} - F_{1->2}|
    double quad_error = 0.0;
};

namespace detail {

struct FlowModel {
    LinearModel lm;
    EigenSystem es;
};

inline FlowModel flow_model(const PhysicalParams& p, double phi) {
    const PhysicalParams q = p.with_phi(phi);
    const MeanFields mf = solve_mean_fields(q);
    FlowModel fm{build_linear_model(q, mf), {}};
    const StabilityReport st = stability_check(fm.lm);
    if (!st.stable)
        throw numerical_error("drift matrix unstable (abscissa = " +
                              std::to_string(st.abscissa) + ")");
    fm.es = eigensystem(fm.lm);
    return fm;
}

inline double flow_at(const FlowModel& fm, FlowDirection dir, double omega) {
    const int from =
        dir == FlowDirection::from_2_to_1 ? quad_y_b2 : quad_y_b1;
    const int to = dir == FlowDirection::from_2_to_1 ? quad_y_b1 : quad_y_b2;
    return contribution(SpectrumKind::internal, from, to, fm.es, fm.lm, omega);
}

} // namespace detail

/// F_{j->i}(phi, w) = |T'_{Y_bi Y_bj}(w)|^2 S_in_{Y_bj Y_bj}.
inline double flow_spectrum(FlowDirection dir, const PhysicalParams& p,
                            double phi, double omega) {
    return detail::flow_at(detail::flow_model(p, phi), dir, omega);
}

/// Integration window around the hybridized resonance band:
/// [omega_m - W, omega_m + W], W = 8 |mu| + 200 max(gamma1, gamma2).
inline std::pair<double, double> flow_window(const PhysicalParams& p) {
    const double w = 8.0 * p.mu_abs + 200.0 * std::max(p.gamma1, p.gamma2);
    return {p.omega_m - w, p.omega_m + w};
}

/// I_Delta(phi) = integral |F_{2->1} - F_{1->2}| d omega over the resonance
/// band, by adaptive Gauss-Kronrod quadrature; the two directional flows
/// are integrated alongside.
inline NoiseFlow nonreciprocity_measure(const PhysicalParams& p, double phi,
                                        double tol = 1e-8) {
    if (!(tol > 0.0)) throw invalid_parameter("tol must be > 0");
    const detail::FlowModel fm = detail::flow_model(p, phi);
    const auto [lo, hi] = flow_window(p);

    using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto integrate = [&](const std::function<double(double)>& f,
                         double* err_out) {
        double err = 0.0;
        const double val = quad::integrate(f, lo, hi, 15, tol, &err);
        if (err_out) *err_out = err;
        const double scale = std::max(std::abs(val), 1e-300);
        if (err > 100.0 * tol * scale && err > 1e-280)
            throw numerical_error(
                "non-reciprocity quadrature did not converge: estimate " +
                std::to_string(val) + ", error " + std::to_string(err));
        return val;
    };

    NoiseFlow nf;
    nf.phi = PhysicalParams::normalize_phase(phi);
    double e21 = 0.0, e12 = 0.0, ed = 0.0;
    nf.flow_21 = integrate(
        [&](double w) {
            return detail::flow_at(fm, FlowDirection::from_2_to_1, w);
        },
        &e21);
    nf.flow_12 = integrate(
        [&](double w) {
            return detail::flow_at(fm, FlowDirection::from_1_to_2, w);
        },
        &e12);
    nf.i_delta = integrate(
        [&](double w) {
            return std::abs(detail::flow_at(fm, FlowDirection::from_2_to_1, w) -
                            detail::flow_at(fm, FlowDirection::from_1_to_2, w));
        },
        &ed);
    nf.quad_error = std::max({e21, e12, ed});
    return nf;
}

/// Empirical check of F_{i->j}(phi, w) = F_{j->i}(phi + pi, w), evaluated
/// with the bare complex products T'_{R_i R_j} S_in of the printed relation.
/// Returns the max relative deviation over uniformly sampled frequencies;
/// reported as a diagnostic, not asserted.
inline double counterpart_check(const PhysicalParams& p, double phi,
                                int omega_samples = 51) {
    if (omega_samples < 1) throw invalid_parameter("need at least one sample");
    const detail::FlowModel fm = detail::flow_model(p, phi);
    const detail::FlowModel fm_pi =
        detail::flow_model(p, phi + constants::pi);
    const auto [lo, hi] = flow_window(p);

    double worst = 0.0;
    for (int k = 0; k < omega_samples; ++k) {
        const double w =
            omega_samples == 1
                ? 0.5 * (lo + hi)
                : lo + (hi - lo) * k / (omega_samples - 1.0);
        // bare F_{1->2}(phi) vs F_{2->1}(phi + pi)
        const std::complex<double> lhs =
            susceptibility_internal(fm.es, fm.lm, w)(quad_y_b2, quad_y_b1) *
            input_psd(fm.lm, quad_y_b1);
        const std::complex<double> rhs =
            susceptibility_internal(fm_pi.es, fm_pi.lm, w)(quad_y_b1,
                                                           quad_y_b2) *
            input_psd(fm_pi.lm, quad_y_b2);
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

} // namespace omnoise
