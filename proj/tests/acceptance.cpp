// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each check is self-contained and uses the library's public API
// plus the independent oracles.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "omnoise/eplocator.hpp"
#include "omnoise/nonreciprocity.hpp"
#include "omnoise/spectra.hpp"
#include "omnoise/sweep.hpp"
#include "oracles.hpp"

using namespace omnoise;
using cd = std::complex<double>;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL",
                detail.c_str());
    if (!pass) ++failures;
}

LinearModel model_at(const PhysicalParams& p) {
    return build_linear_model(p, solve_mean_fields(p));
}

std::vector<double> sampled_internal(const PhysicalParams& p, double phi,
                                     int row, const std::vector<double>& ws) {
    const PhysicalParams q = p.with_phi(phi);
    const LinearModel lm = model_at(q);
    const EigenSystem es = eigensystem(lm);
    std::vector<double> s(ws.size());
    for (std::size_t k = 0; k < ws.size(); ++k)
        s[k] = psd_internal(es, lm, ws[k])(row, row).real();
    return s;
}

int local_max_count(const std::vector<double>& v) {
    int n = 0;
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        if (v[k] > v[k - 1] && v[k] > v[k + 1]) ++n;
    return n;
}

char buf[512];

// --- criterion 1: EP magnitudes ------------------------------------------
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const PhysicalParams p = paper_defaults();
    const double gs = p.gamma_sum();
    const auto reports = scan_eps(p, 10.0 * gs, 60.0 * gs);
    const auto clusters = ep_cluster_magnitudes(reports);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    bool pass = clusters.size() == 2;
    double c1 = 0.0, c2 = 0.0;
    if (pass) {
        c1 = clusters[0];
        c2 = clusters[1];
        pass = std::abs(c1 - 31.06) < 0.05 * 31.06 &&
               std::abs(c2 - 41.6) < 0.05 * 41.6;
        for (const EPReport& r : reports)
            if (r.vec_overlap <= 0.99) pass = false;
    }
    pass = pass && secs < 120.0;
    std::snprintf(buf, sizeof(buf),
                  "EP clusters at %.4f / %.4f (gamma1+gamma2), targets "
                  "31.06 / 41.6, %zu reports, %.1f s",
                  c1, c2, reports.size(), secs);
    report(1, pass, buf);
}

// --- criterion 2: thermal occupancy --------------------------------------
void criterion_2() {
    const double n = thermal_occupancy(18.1, constants::two_pi * 3.75e9);
    std::snprintf(buf, sizeof(buf),
                  "thermal_occupancy(18.1 K, 2 pi x 3.75 GHz) = %.4f, "
                  "target 100 +- 1",
                  n);
    report(2, std::abs(n - 100.0) < 1.0, buf);
}

// --- criterion 3: reciprocity restoration --------------------------------
void criterion_3() {
    const PhysicalParams p = paper_defaults();
    const double i0 = nonreciprocity_measure(p, 0.0).i_delta;
    const double ipi = nonreciprocity_measure(p, constants::pi).i_delta;
    const double iq = nonreciprocity_measure(p, constants::pi / 2).i_delta;
    const bool pass = i0 < 1e-6 * iq && ipi < 1e-6 * iq;
    std::snprintf(buf, sizeof(buf),
                  "I(0)/I(pi/2) = %.2e, I(pi)/I(pi/2) = %.2e, bound 1e-6",
                  i0 / iq, ipi / iq);
    report(3, pass, buf);
}

// --- criterion 4: directional flip ---------------------------------------
void criterion_4(const EPMagnitudes& eps) {
    const PhysicalParams p = paper_defaults().with_mu_abs(eps.mu_ep2);
    const NoiseFlow a = nonreciprocity_measure(p, constants::pi / 2);
    const NoiseFlow b = nonreciprocity_measure(p, 3.0 * constants::pi / 2);
    const bool pass = a.flow_21 > a.flow_12 && b.flow_12 > b.flow_21;
    std::snprintf(buf, sizeof(buf),
                  "at pi/2: F21/F12 = %.3f; at 3pi/2: F12/F21 = %.3f "
                  "(both must exceed 1)",
                  a.flow_21 / a.flow_12, b.flow_12 / b.flow_21);
    report(4, pass, buf);
}

// --- criterion 5: coupling trend -----------------------------------------
void criterion_5(const EPMagnitudes& eps) {
    const PhysicalParams p = paper_defaults();
    std::vector<double> mus = {0.5 * eps.mu_ep1, 1.0 * eps.mu_ep1,
                               1.5 * eps.mu_ep1, 1.0 * eps.mu_ep2,
                               1.5 * eps.mu_ep2, 2.0 * eps.mu_ep2};
    std::sort(mus.begin(), mus.end());
    bool pass = true;
    double prev = 0.0;
    std::string seq;
    for (std::size_t k = 0; k < mus.size(); ++k) {
        const double i =
            nonreciprocity_measure(p.with_mu_abs(mus[k]), constants::pi / 2)
                .i_delta;
        if (k > 0 && i >= prev) pass = false;
        prev = i;
        std::snprintf(buf, sizeof(buf), "%s%.3e", k ? ", " : "", i);
        seq += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "I(pi/2) over ascending |mu| must fall: [%s]", seq.c_str());
    report(5, pass, buf);
}

// --- criterion 6: band switching -----------------------------------------
void criterion_6(const EPMagnitudes& eps) {
    const PhysicalParams p = paper_defaults().with_mu_abs(eps.mu_ep2);
    const auto [lo, hi] = default_spectrum_window(p);
    const auto ws = uniform_grid(lo, hi, 2001);

    auto argmax_offset = [&](double phi) {
        const auto s = sampled_internal(p, phi, quad_y_a, ws);
        std::size_t am = 0;
        for (std::size_t k = 0; k < s.size(); ++k)
            if (s[k] > s[am]) am = k;
        return ws[am] - p.omega_m;
    };
    const double off0 = argmax_offset(0.0);
    const double offpi = argmax_offset(constants::pi);
    const bool switched =
        (off0 < 0.0 && offpi > 0.0) || (off0 > 0.0 && offpi < 0.0);

    auto peak_to_valley = [&](double mu) {
        const PhysicalParams q = paper_defaults().with_mu_abs(mu);
        const auto [qlo, qhi] = default_spectrum_window(q);
        const auto qws = uniform_grid(qlo, qhi, 2001);
        const auto s =
            sampled_internal(q, constants::pi / 2, quad_y_a, qws);
        double peak = 0.0, valley = 1e300;
        for (std::size_t k = 0; k < s.size(); ++k) {
            peak = std::max(peak, s[k]);
            if (std::abs(qws[k] - q.omega_m) < 2.0 * mu)
                valley = std::min(valley, s[k]);
        }
        return peak / valley;
    };
    const double r1 = peak_to_valley(eps.mu_ep1);
    const double r2 = peak_to_valley(eps.mu_ep2);

    const bool pass = switched && r1 < r2;
    std::snprintf(buf, sizeof(buf),
                  "argmax offset/gs: %.2f (phi=0) vs %.2f (phi=pi); "
                  "peak/valley %.3f (EP1) < %.3f (EP2)",
                  off0 / p.gamma_sum(), offpi / p.gamma_sum(), r1, r2);
    report(6, pass, buf);
}

// --- criterion 7: double-peak onset --------------------------------------
void criterion_7(const EPMagnitudes& eps) {
    bool pass = true;
    std::string detail;
    for (const double f : {0.2, 0.5, 0.8}) {
        const PhysicalParams q =
            paper_defaults().with_mu_abs(f * eps.mu_ep1);
        const auto [lo, hi] = default_spectrum_window(q);
        const auto ws = uniform_grid(lo, hi, 2001);
        const int n = local_max_count(
            sampled_internal(q, constants::pi / 2, quad_y_b2, ws));
        if (n != 1) pass = false;
        std::snprintf(buf, sizeof(buf), "%.1f:%d ", f, n);
        detail += buf;
    }
    for (const double mu :
         {eps.mu_ep1, 1.2 * eps.mu_ep1, eps.mu_ep2, 1.5 * eps.mu_ep2}) {
        const PhysicalParams q = paper_defaults().with_mu_abs(mu);
        const auto [lo, hi] = default_spectrum_window(q);
        const auto ws = uniform_grid(lo, hi, 2001);
        const int n = local_max_count(
            sampled_internal(q, constants::pi / 2, quad_y_b2, ws));
        if (n < 2) pass = false;
        std::snprintf(buf, sizeof(buf), "%.1fgs:%d ", mu / paper_defaults().gamma_sum(), n);
        detail += buf;
    }
    report(7, pass,
           "peak counts (single below EP1, double at and above): " + detail);
}

// --- criterion 8: oracle equivalences ------------------------------------
void criterion_8() {
    bool pass = true;
    std::string detail;

    // (a) eigensum vs direct inverse.
    {
        std::mt19937 rng(1001u);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const PhysicalParams p = oracles::random_stable_params(rng);
            const LinearModel lm = model_at(p);
            const EigenSystem es = eigensystem(lm);
            const double w = p.omega_m * (1.0 + u(rng));
            const Matrix6cd t_ref = oracles::direct_transfer(lm.m, w);
            const double dev =
                (transfer(es, w) - t_ref).cwiseAbs().maxCoeff() /
                t_ref.cwiseAbs().maxCoeff();
            worst = std::max(worst, dev);
        }
        if (worst >= 1e-10) pass = false;
        std::snprintf(buf, sizeof(buf), "(a) transfer dev %.1e; ", worst);
        detail += buf;
    }
    // (b) drift residual.
    {
        std::mt19937 rng(1002u);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const PhysicalParams p = oracles::random_stable_params(rng);
            const MeanFields mf = solve_mean_fields(p);
            const LinearModel lm = build_linear_model(p, mf);
            const double dev = verify_drift(p, mf, lm, 50, 400u + k) /
                               lm.m.cwiseAbs().maxCoeff();
            worst = std::max(worst, dev);
        }
        if (worst >= 1e-12) pass = false;
        std::snprintf(buf, sizeof(buf), "(b) drift dev %.1e; ", worst);
        detail += buf;
    }
    // (c) steady state vs Newton.
    {
        std::mt19937 rng(1003u);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const PhysicalParams p =
                paper_defaults()
                    .with_phi(constants::two_pi * u(rng))
                    .with_mu_abs((10.0 + 70.0 * u(rng)) *
                                 paper_defaults().gamma_sum());
            const MeanFields a = solve_mean_fields(p);
            const MeanFields b = oracles::newton_mean_fields(p);
            const double scale = std::abs(b.a_mean);
            const double dev =
                std::max({std::abs(a.a_mean - b.a_mean),
                          std::abs(a.b1_mean - b.b1_mean),
                          std::abs(a.b2_mean - b.b2_mean)}) /
                scale;
            worst = std::max(worst, dev);
        }
        if (worst >= 1e-10) pass = false;
        std::snprintf(buf, sizeof(buf), "(c) steady-state dev %.1e; ", worst);
        detail += buf;
    }
    // (d) Onsager-Casimir swap of the PSD.
    {
        std::mt19937 rng(1004u);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Matrix6d pim = swap_resonators_permutation();
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const double phi = constants::two_pi * u(rng);
            const double w =
                paper_defaults().omega_m * (0.9 + 0.2 * u(rng));
            const LinearModel lp = model_at(paper_defaults().with_phi(phi));
            const LinearModel ln = model_at(paper_defaults().with_phi(-phi));
            const Matrix6cd sp = psd_internal(eigensystem(lp), lp, w);
            const Matrix6cd sn = psd_internal(eigensystem(ln), ln, w);
            const Matrix6cd mapped =
                pim.cast<cd>() * sp * pim.transpose().cast<cd>();
            worst = std::max(worst,
                             (mapped - sn).cwiseAbs().maxCoeff() /
                                 sn.cwiseAbs().maxCoeff());
        }
        if (worst >= 1e-9) pass = false;
        std::snprintf(buf, sizeof(buf), "(d) swap dev %.1e; ", worst);
        detail += buf;
    }
    // (e) decoupled-cavity closed forms.
    {
        PhysicalParams p = paper_defaults();
        p.g1 = p.g2 = 0.0;
        p.mu_abs = 0.0;
        p.delta = 0.0;
        p.power = 0.0;
        const LinearModel lm = model_at(p);
        const EigenSystem es = eigensystem(lm);
        double worst = 0.0;
        for (const double w : {0.0, 0.3 * p.kappa, 2.0 * p.kappa}) {
            const double expect =
                constants::pi * p.kappa / (w * w + 0.25 * p.kappa * p.kappa);
            const double got =
                psd_internal(es, lm, w)(quad_x_a, quad_x_a).real();
            worst = std::max(worst, std::abs(got - expect) / expect);
            const Matrix6cd so = psd_output(es, lm, w);
            worst = std::max(
                worst, (so - Matrix6cd(constants::two_pi * lm.c))
                               .cwiseAbs()
                               .maxCoeff() /
                           (constants::two_pi * lm.c.cwiseAbs().maxCoeff()));
        }
        if (worst >= 1e-12) pass = false;
        std::snprintf(buf, sizeof(buf), "(e) closed-form dev %.1e; ", worst);
        detail += buf;
    }
    // (f) stochastic trajectory within Monte-Carlo bars.
    {
        PhysicalParams p;
        p.omega_m = 1.0;
        p.kappa = 0.8;
        p.gamma1 = 0.25;
        p.gamma2 = 0.3;
        p.g1 = std::polar(0.04, 0.3);
        p.g2 = std::polar(0.05, 1.1);
        p.mu_abs = 0.1;
        p.phi_loop = 1.0;
        p.delta = 1.0;
        p.eta = 0.5;
        p.lambda_laser = 1550e-9;
        const double nu = constants::c_light / p.lambda_laser;
        const double eps_needed = 2.0 * std::hypot(0.5 * p.kappa, p.delta) /
                                  std::sqrt(p.eta * p.kappa);
        p.power = 0.5 * eps_needed * eps_needed * constants::hbar * nu;
        p.n_a = 0.2;
        p.n_b1 = 2.0;
        p.n_b2 = 1.0;

        const LinearModel lm = model_at(p);
        const EigenSystem es = eigensystem(lm);
        const std::vector<double> omegas{0.4, 0.8, 1.0, 1.15, 1.4};
        const auto est = oracles::trajectory_psd(lm, quad_y_b2, omegas,
                                                 0.003, 65536, 80, 424242u);
        double worst_sigma = 0.0;
        for (std::size_t k = 0; k < omegas.size(); ++k) {
            const double pred = oracles::classical_psd_prediction(
                es, lm, quad_y_b2, omegas[k]);
            // Allow a small discretization allowance on top of the bars.
            const double excess =
                std::abs(est[k].mean - pred) - 0.02 * pred;
            worst_sigma =
                std::max(worst_sigma, excess / est[k].stderr_);
        }
        if (worst_sigma >= 3.0) pass = false;
        std::snprintf(buf, sizeof(buf), "(f) worst MC deviation %.2f sigma",
                      worst_sigma);
        detail += buf;
    }
    report(8, pass, detail);
}

// --- criterion 9: selective internal-noise boosting -----------------------
void criterion_9() {
    const PhysicalParams p = paper_defaults();
    const auto [lo, hi] = default_spectrum_window(p);
    const auto ws = uniform_grid(lo, hi, 4001);
    auto band_integral = [&](double phi, int row) {
        const auto s = sampled_internal(p, phi, row, ws);
        double acc = 0.0;
        for (std::size_t k = 1; k < s.size(); ++k)
            acc += 0.5 * (s[k] + s[k - 1]) * (ws[k] - ws[k - 1]);
        return acc;
    };
    const double b1_half = band_integral(constants::pi / 2, quad_y_b1);
    const double b1_three = band_integral(3.0 * constants::pi / 2, quad_y_b1);
    const double b2_half = band_integral(constants::pi / 2, quad_y_b2);
    const double b2_three = band_integral(3.0 * constants::pi / 2, quad_y_b2);
    const bool pass = b1_half > b1_three && b2_three > b2_half;
    std::snprintf(buf, sizeof(buf),
                  "band-integrated S[Y_b1]: %.3e (pi/2) vs %.3e (3pi/2); "
                  "S[Y_b2]: %.3e vs %.3e",
                  b1_half, b1_three, b2_half, b2_three);
    report(9, pass, buf);
}

} // namespace

int main() {
    const PhysicalParams p = paper_defaults();
    criterion_1();
    criterion_2();
    criterion_3();
    const EPMagnitudes eps = resolve_ep_magnitudes(p);
    criterion_4(eps);
    criterion_5(eps);
    criterion_6(eps);
    criterion_7(eps);
    criterion_8();
    criterion_9();
    std::printf("%s\n", failures == 0 ? "all criteria passed"
                                      : "some criteria FAILED");
    return failures == 0 ? 0 : 1;
}
