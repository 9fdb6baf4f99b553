#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "omnoise/errors.hpp"
#include "omnoise/linmodel.hpp"
#include "omnoise/spectra.hpp"
#include "omnoise/steady_state.hpp"

namespace omnoise {

/// Candidate eigenvalue/eigenvector coalescence of M.
struct EPReport {
    double mu_abs = 0.0;           ///< [rad/s]
    double mu_over_gamma_sum = 0.0;
    double phi = 0.0;              ///< loop phase at the coalescence [rad]
    double gap = 0.0;              ///< min pairwise |l_k - l_k'| [rad/s]
    double vec_overlap = 0.0;      ///< |<v_k|v_k'>| of the closest pair
    double cond_u = 0.0;
};

struct CoalescenceMetric {
    double gap = 0.0;
    double vec_overlap = 0.0;
    double cond_u = 0.0;
};

/// Restricted to the three eigenvalues on the Im(lambda) > 0 branch:
/// minimal pairwise distance, normalized eigenvector overlap of the closest
/// pair, and cond(U). A diabolic degeneracy shows gap ~ 0 with overlap ~ 0;
/// only gap ~ 0 together with overlap ~ 1 marks an EP.
inline CoalescenceMetric coalescence_metric(const LinearModel& lm) {
    const EigenSystem es = eigensystem(lm);

    std::vector<int> branch;
    for (int k = 0; k < 6; ++k)
        if (es.lambdas(k).imag() > 0.0) branch.push_back(k);
    if (branch.size() < 2)
        throw numerical_error("fewer than two eigenvalues on the Im > 0 branch");

    CoalescenceMetric cm;
    cm.cond_u = es.cond;
    cm.gap = std::numeric_limits<double>::infinity();
    int ki = -1, kj = -1;
    for (std::size_t a = 0; a + 1 < branch.size(); ++a)
        for (std::size_t b = a + 1; b < branch.size(); ++b) {
            const double d =
                std::abs(es.lambdas(branch[a]) - es.lambdas(branch[b]));
            if (d < cm.gap) {
                cm.gap = d;
                ki = branch[a];
                kj = branch[b];
            }
        }
    const Vector6cd vi = es.u.col(ki).normalized();
    const Vector6cd vj = es.u.col(kj).normalized();
    cm.vec_overlap = std::abs(vi.dot(vj));
    return cm;
}

namespace detail {

inline CoalescenceMetric metric_at(const PhysicalParams& p, double mu_abs,
                                   double phi) {
    const PhysicalParams q = p.with_mu_abs(mu_abs).with_phi(phi);
    const MeanFields mf = solve_mean_fields(q);
    return coalescence_metric(build_linear_model(q, mf));
}

/// Coordinate-descent minimization of the eigenvalue gap over (|mu|, phi),
/// starting from a grid seed with steps matching the grid spacing. Steps are
/// halved whenever neither coordinate improves; terminates once both fall
/// below rel_width of their scan scales.
inline EPReport refine_gap_minimum(const PhysicalParams& p, double mu0,
                                   double phi0, double mu_step,
                                   double phi_step, double rel_width,
                                   double mu_scale) {
    double mu = mu0, phi = phi0;
    double g = metric_at(p, mu, phi).gap;
    double smu = mu_step, sphi = phi_step;
    const double smu_floor = rel_width * mu_scale;
    const double sphi_floor = rel_width * constants::two_pi;
    while (smu > smu_floor || sphi > sphi_floor) {
        bool improved = false;
        for (const double cand : {mu - smu, mu + smu}) {
            if (!(cand > 0.0)) continue;
            const double gc = metric_at(p, cand, phi).gap;
            if (gc < g) {
                g = gc;
                mu = cand;
                improved = true;
            }
        }
        for (const double cand : {phi - sphi, phi + sphi}) {
            const double gc = metric_at(p, mu, cand).gap;
            if (gc < g) {
                g = gc;
                phi = cand;
                improved = true;
            }
        }
        if (!improved) {
            smu *= 0.5;
            sphi *= 0.5;
        }
    }
    const CoalescenceMetric cm = metric_at(p, mu, phi);
    EPReport rep;
    rep.mu_abs = mu;
    rep.phi = PhysicalParams::normalize_phase(phi);
    rep.gap = cm.gap;
    rep.vec_overlap = cm.vec_overlap;
    rep.cond_u = cm.cond_u;
    return rep;
}

inline double circular_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), constants::two_pi);
    return std::min(d, constants::two_pi - d);
}

} // namespace detail

struct EPScanOptions {
    int mu_points = 201;
    int phi_points = 73;
    double refine_rel_width = 1e-12;
    double gap_threshold_frac = 1e-3; ///< gap < frac * (gamma1 + gamma2)
    double overlap_threshold = 0.99;
};

/// Scans the (|mu|, phi) plane for eigenvalue coalescence. Per phi gridline,
/// local minima of the gap along |mu| seed a coordinate-descent refinement in
/// both |mu| and phi; refined candidates are deduplicated and kept when both
/// the gap and eigenvector-overlap criteria hold.
inline std::vector<EPReport> scan_eps(const PhysicalParams& p, double mu_min,
                                      double mu_max,
                                      const EPScanOptions& opt = {}) {
    if (!(mu_min > 0.0) || !(mu_max > mu_min))
        throw invalid_parameter("EP scan requires 0 < mu_min < mu_max");
    if (opt.mu_points < 3 || opt.phi_points < 1)
        throw invalid_parameter("EP scan grid too small");

    const double gap_thr = opt.gap_threshold_frac * p.gamma_sum();
    const double mu_step = (mu_max - mu_min) / (opt.mu_points - 1.0);
    const double phi_step = constants::two_pi / opt.phi_points;
    std::vector<EPReport> reports;

    for (int ip = 0; ip < opt.phi_points; ++ip) {
        const double phi = phi_step * ip;
        std::vector<double> mus(static_cast<std::size_t>(opt.mu_points));
        std::vector<double> gaps(static_cast<std::size_t>(opt.mu_points));
        for (int im = 0; im < opt.mu_points; ++im) {
            mus[im] = mu_min + mu_step * im;
            gaps[im] = detail::metric_at(p, mus[im], phi).gap;
        }
        for (int im = 1; im + 1 < opt.mu_points; ++im) {
            if (!(gaps[im] <= gaps[im - 1] && gaps[im] <= gaps[im + 1]))
                continue;
            EPReport rep = detail::refine_gap_minimum(
                p, mus[im], phi, mu_step, phi_step, opt.refine_rel_width,
                mu_max);
            if (rep.gap > gap_thr || rep.vec_overlap < opt.overlap_threshold)
                continue;
            rep.mu_over_gamma_sum = rep.mu_abs / p.gamma_sum();
            bool merged = false;
            for (EPReport& seen : reports) {
                if (std::abs(seen.mu_abs - rep.mu_abs) <=
                        1e-4 * std::max(seen.mu_abs, rep.mu_abs) &&
                    detail::circular_distance(seen.phi, rep.phi) < 1e-3) {
                    if (rep.gap < seen.gap) seen = rep;
                    merged = true;
                    break;
                }
            }
            if (!merged) reports.push_back(rep);
        }
    }
    std::sort(reports.begin(), reports.end(),
              [](const EPReport& a, const EPReport& b) {
                  return a.mu_abs < b.mu_abs;
              });
    return reports;
}

/// Groups EP reports into |mu| clusters (relative width `rel`) and returns
/// the mean |mu|/(gamma1+gamma2) of each cluster, ascending.
inline std::vector<double> ep_cluster_magnitudes(
    const std::vector<EPReport>& reports, double rel = 0.02) {
    std::vector<double> clusters;
    std::vector<double> sums, counts;
    for (const EPReport& r : reports) { // reports sorted by mu_abs
        if (!sums.empty() &&
            std::abs(r.mu_over_gamma_sum - sums.back() / counts.back()) <=
                rel * (sums.back() / counts.back())) {
            sums.back() += r.mu_over_gamma_sum;
            counts.back() += 1.0;
        } else {
            sums.push_back(r.mu_over_gamma_sum);
            counts.push_back(1.0);
        }
    }
    for (std::size_t k = 0; k < sums.size(); ++k)
        clusters.push_back(sums[k] / counts[k]);
    return clusters;
}

} // namespace omnoise
