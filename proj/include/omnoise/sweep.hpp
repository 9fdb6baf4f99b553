#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "omnoise/eplocator.hpp"
#include "omnoise/errors.hpp"
#include "omnoise/nonreciprocity.hpp"
#include "omnoise/parallel.hpp"
#include "omnoise/params.hpp"
#include "omnoise/spectra.hpp"

namespace omnoise {

inline constexpr const char* version_string = "omnoise 1.0.0";

/// Named, unit-tagged sweep coordinate.
struct AxisSpec {
    std::string name; ///< one of the parameter/coordinate names below
    std::vector<double> values;
};

/// Scalar quantity evaluated at each sweep cell.
struct QuantitySpec {
    std::string kind = "internal"; ///< internal|output|contribution_internal|
                                   ///< contribution_output|homodyne|
                                   ///< flow_21|flow_12|i_delta
    int row = quad_y_b2;
    int col = quad_y_b2;
    double theta = 0.0;
    double omega_over_omega_m = 1.0; ///< used unless an omega axis overrides
    double tol = 1e-7;               ///< quadrature tolerance for i_delta
};

struct SweepGrid {
    AxisSpec axis1, axis2;
    std::vector<double> values; ///< row-major, shape (axis1, axis2)
    std::string quantity;
    nlohmann::json meta;
    std::vector<std::string> diagnostics; ///< one entry per masked cell

    double at(std::size_t i, std::size_t j) const {
        return values[i * axis2.values.size() + j];
    }
};

namespace detail {

/// Axes that only move the evaluation coordinate, not the physical model.
inline bool model_invariant_axis(const std::string& name) {
    return name == "omega_over_omega_m" || name == "theta_rad";
}

inline PhysicalParams apply_axis(const PhysicalParams& p,
                                 const std::string& name, double v) {
    PhysicalParams q = p;
    if (name == "phi_loop_rad")
        q.phi_loop = PhysicalParams::normalize_phase(v);
    else if (name == "mu_abs_over_gamma_sum")
        q.mu_abs = v * p.gamma_sum();
    else if (name == "mu_abs_hz")
        q.mu_abs = constants::two_pi * v;
    else if (name == "mu_abs_rad_s")
        q.mu_abs = v;
    else if (name == "power_watt")
        q.power = v;
    else if (name == "eta")
        q.eta = v;
    else if (name == "n_b1")
        q.n_b1 = v;
    else if (name == "n_b2")
        q.n_b2 = v;
    else if (name == "delta_over_omega_m")
        q.delta = v * p.omega_m;
    else
        throw invalid_parameter("unknown sweep axis: " + name);
    return q;
}

struct CellContext {
    double omega_over_omega_m;
    double theta;
};

inline double evaluate_quantity(const QuantitySpec& q,
                                const PhysicalParams& p,
                                const detail::FlowModel& fm,
                                const CellContext& ctx) {
    const double omega = ctx.omega_over_omega_m * p.omega_m;
    if (q.kind == "internal")
        return psd_internal(fm.es, fm.lm, omega)(q.row, q.col).real();
    if (q.kind == "output")
        return psd_output(fm.es, fm.lm, omega)(q.row, q.col).real();
    if (q.kind == "contribution_internal")
        return contribution(SpectrumKind::internal, q.col, q.row, fm.es,
                            fm.lm, omega);
    if (q.kind == "contribution_output")
        return contribution(SpectrumKind::output, q.col, q.row, fm.es, fm.lm,
                            omega);
    if (q.kind == "homodyne")
        return homodyne_output(fm.es, fm.lm, omega, ctx.theta);
    if (q.kind == "flow_21")
        return flow_at(fm, FlowDirection::from_2_to_1, omega);
    if (q.kind == "flow_12")
        return flow_at(fm, FlowDirection::from_1_to_2, omega);
    throw invalid_parameter("unknown sweep quantity: " + q.kind);
}

} // namespace detail

/// Evaluates `q` on the outer product of the two axes; a fresh steady state
/// and drift matrix are built per physical-parameter cell, reused along a
/// model-invariant second axis. Per-cell numerical failures mask the cell
/// (NaN) with a diagnostic instead of aborting the sweep.
inline SweepGrid sweep(const PhysicalParams& base, const QuantitySpec& q,
                       const AxisSpec& axis1, const AxisSpec& axis2,
                       int jobs = 0) {
    if (axis1.values.empty() || axis2.values.empty())
        throw invalid_parameter("sweep axes must be nonempty");

    SweepGrid grid;
    grid.axis1 = axis1;
    grid.axis2 = axis2;
    grid.quantity = q.kind;
    const std::size_t n1 = axis1.values.size(), n2 = axis2.values.size();
    grid.values.assign(n1 * n2, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::vector<std::string>> diags(n1);

    const bool inner_invariant = detail::model_invariant_axis(axis2.name);

    parallel_for(n1, jobs, [&](std::size_t i) {
        PhysicalParams p_row = base;
        if (!detail::model_invariant_axis(axis1.name))
            p_row = detail::apply_axis(base, axis1.name, axis1.values[i]);

        std::optional<detail::FlowModel> row_model;
        for (std::size_t j = 0; j < n2; ++j) {
            try {
                PhysicalParams p = p_row;
                if (!detail::model_invariant_axis(axis2.name))
                    p = detail::apply_axis(p_row, axis2.name, axis2.values[j]);

                detail::CellContext ctx{q.omega_over_omega_m, q.theta};
                if (axis1.name == "omega_over_omega_m")
                    ctx.omega_over_omega_m = axis1.values[i];
                if (axis2.name == "omega_over_omega_m")
                    ctx.omega_over_omega_m = axis2.values[j];
                if (axis1.name == "theta_rad") ctx.theta = axis1.values[i];
                if (axis2.name == "theta_rad") ctx.theta = axis2.values[j];

                if (q.kind == "i_delta") {
                    grid.values[i * n2 + j] =
                        nonreciprocity_measure(p, p.phi_loop, q.tol).i_delta;
                    continue;
                }
                if (inner_invariant) {
                    if (!row_model) row_model = detail::flow_model(p, p.phi_loop);
                    grid.values[i * n2 + j] =
                        detail::evaluate_quantity(q, p, *row_model, ctx);
                } else {
                    const detail::FlowModel fm =
                        detail::flow_model(p, p.phi_loop);
                    grid.values[i * n2 + j] =
                        detail::evaluate_quantity(q, p, fm, ctx);
                }
            } catch (const numerical_error& e) {
                diags[i].push_back("cell (" + std::to_string(i) + ", " +
                                   std::to_string(j) + "): " + e.what());
            }
        }
    });

    for (auto& d : diags)
        grid.diagnostics.insert(grid.diagnostics.end(), d.begin(), d.end());
    grid.meta["config"] = params_to_json(base);
    grid.meta["version"] = version_string;
    grid.meta["quantity"] = q.kind;
    grid.meta["row"] = q.row;
    grid.meta["col"] = q.col;
    return grid;
}

// ---------------------------------------------------------------------------
// Serialization: fixed %.12e formatting, byte-reproducible across runs.

namespace detail {

inline std::string format_sci(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

} // namespace detail

inline void write_grid_csv(const SweepGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_parameter("cannot open for writing: " + path);
    out << grid.axis1.name << "," << grid.axis2.name << "," << grid.quantity
        << "\n";
    for (std::size_t i = 0; i < grid.axis1.values.size(); ++i)
        for (std::size_t j = 0; j < grid.axis2.values.size(); ++j)
            out << detail::format_sci(grid.axis1.values[i]) << ","
                << detail::format_sci(grid.axis2.values[j]) << ","
                << detail::format_sci(grid.at(i, j)) << "\n";
}

inline void write_meta_json(const nlohmann::json& meta,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_parameter("cannot open for writing: " + path);
    out << meta.dump(2) << "\n";
}

/// Multi-series spectrum CSV: x column plus one named column per series.
inline void write_series_csv(
    const std::string& path, const std::string& x_name,
    const std::vector<double>& x,
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    std::ofstream out(path);
    if (!out) throw invalid_parameter("cannot open for writing: " + path);
    out << x_name;
    for (const auto& s : series) out << "," << s.first;
    out << "\n";
    for (std::size_t k = 0; k < x.size(); ++k) {
        out << detail::format_sci(x[k]);
        for (const auto& s : series)
            out << "," << detail::format_sci(s.second[k]);
        out << "\n";
    }
}

inline void write_spectrum_csv(const SpectrumTable& table, double omega_m,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_parameter("cannot open for writing: " + path);
    out << "omega_over_omega_m,value_re,value_im\n";
    for (std::size_t k = 0; k < table.omegas.size(); ++k)
        out << detail::format_sci(table.omegas[k] / omega_m) << ","
            << detail::format_sci(table.values[k].real()) << ","
            << detail::format_sci(table.values[k].imag()) << "\n";
}

// ---------------------------------------------------------------------------
// Figure presets.

/// Resolved EP magnitudes for a parameter set, plus the reports behind them.
struct EPMagnitudes {
    double mu_ep1 = 0.0; ///< [rad/s]
    double mu_ep2 = 0.0; ///< [rad/s]
};

/// Fresh EP scan over |mu|/(gamma1+gamma2) in [10, 60], memoized per
/// parameter fingerprint (mu and phi excluded: the scan covers them).
inline EPMagnitudes resolve_ep_magnitudes(const PhysicalParams& p,
                                          int phi_points = 8) {
    static std::map<std::uint64_t, EPMagnitudes> cache;
    static std::mutex cache_mutex;

    PhysicalParams key = p;
    key.mu_abs = 0.0;
    key.phi_loop = 0.0;
    const std::uint64_t fp = params_fingerprint(key);
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find(fp);
        if (it != cache.end()) return it->second;
    }

    EPScanOptions opt;
    opt.phi_points = phi_points;
    const auto reports =
        scan_eps(p, 10.0 * p.gamma_sum(), 60.0 * p.gamma_sum(), opt);
    const auto clusters = ep_cluster_magnitudes(reports);
    if (clusters.size() < 2)
        throw numerical_error("EP resolution found " +
                              std::to_string(clusters.size()) +
                              " coalescence cluster(s), expected 2");
    EPMagnitudes eps;
    eps.mu_ep1 = clusters.front() * p.gamma_sum();
    eps.mu_ep2 = clusters.back() * p.gamma_sum();
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache[fp] = eps;
    }
    return eps;
}

namespace detail {

inline std::vector<double> spectrum_series(const PhysicalParams& p, double phi,
                                           const QuantitySpec& q,
                                           const std::vector<double>& omegas) {
    const FlowModel fm = flow_model(p, phi);
    std::vector<double> out(omegas.size());
    for (std::size_t k = 0; k < omegas.size(); ++k)
        out[k] = evaluate_quantity(q, p, fm,
                                   {omegas[k] / p.omega_m, q.theta});
    return out;
}

inline nlohmann::json preset_meta(const std::string& name,
                                  const PhysicalParams& p,
                                  const EPMagnitudes& eps) {
    nlohmann::json meta;
    meta["preset"] = name;
    meta["version"] = version_string;
    meta["config"] = params_to_json(p);
    meta["mu_ep1_rad_s"] = eps.mu_ep1;
    meta["mu_ep2_rad_s"] = eps.mu_ep2;
    meta["mu_ep1_over_gamma_sum"] = eps.mu_ep1 / p.gamma_sum();
    meta["mu_ep2_over_gamma_sum"] = eps.mu_ep2 / p.gamma_sum();
    return meta;
}

} // namespace detail

struct PresetOptions {
    int omega_points = 2001;
    int phi_points = 361;
    int mu_points = 121;
    int jobs = 0;
    double i_delta_tol = 1e-6;
};

/// Regenerates the dataset behind a named figure at `out_base` (CSV plus a
/// .meta.json sidecar). Returns the list of files written.
std::vector<std::string> run_preset(const std::string& name,
                                    const PhysicalParams& base,
                                    const std::string& out_base,
                                    const PresetOptions& opt = {});

namespace detail {

inline std::vector<double> omega_axis(const PhysicalParams& p, int n) {
    const auto [lo, hi] = default_spectrum_window(p);
    return uniform_grid(lo, hi, n);
}

inline std::vector<std::string> preset_phase_spectra(
    const std::string& name, const PhysicalParams& p, const EPMagnitudes& eps,
    const QuantitySpec& q, const std::vector<double>& phis,
    const std::vector<std::string>& labels, const std::string& out_base,
    const PresetOptions& opt) {
    const auto omegas = omega_axis(p, opt.omega_points);
    std::vector<double> x(omegas.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = omegas[k] / p.omega_m;

    std::vector<std::pair<std::string, std::vector<double>>> series(
        phis.size());
    parallel_for(phis.size(), opt.jobs, [&](std::size_t k) {
        series[k] = {labels[k], spectrum_series(p, phis[k], q, omegas)};
    });

    const std::string csv = out_base + ".csv";
    const std::string meta = out_base + ".meta.json";
    write_series_csv(csv, "omega_over_omega_m", x, series);
    nlohmann::json m = preset_meta(name, p, eps);
    m["quantity"] = q.kind;
    m["row"] = q.row;
    m["col"] = q.col;
    write_meta_json(m, meta);
    return {csv, meta};
}

} // namespace detail

inline std::vector<std::string> run_preset(const std::string& name,
                                           const PhysicalParams& base,
                                           const std::string& out_base,
                                           const PresetOptions& opt) {
    const EPMagnitudes eps = resolve_ep_magnitudes(base);
    const double pi = constants::pi;
    const std::vector<double> four_phases{0.0, pi / 2, pi, 3 * pi / 2};
    const std::vector<std::string> four_labels{"phi_0", "phi_pi_2", "phi_pi",
                                               "phi_3pi_2"};
    const std::vector<double> two_phases{pi / 2, 3 * pi / 2};

    auto at_mu = [&](double mu) { return base.with_mu_abs(mu); };

    auto intracavity = [&](const PhysicalParams& p,
                           const std::string& base_path) {
        QuantitySpec q;
        q.kind = "internal";
        q.row = q.col = quad_y_a;
        return detail::preset_phase_spectra(name, p, eps, q, four_phases,
                                            four_labels, base_path, opt);
    };
    auto output_contrib = [&](const PhysicalParams& p,
                              const std::string& base_path) {
        QuantitySpec q;
        q.kind = "contribution_output";
        q.row = quad_y_a;
        q.col = quad_y_b2;
        return detail::preset_phase_spectra(name, p, eps, q, four_phases,
                                            four_labels, base_path, opt);
    };
    auto mech_psd = [&](const PhysicalParams& p,
                        const std::string& base_path) {
        const auto omegas = detail::omega_axis(p, opt.omega_points);
        std::vector<double> x(omegas.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            x[k] = omegas[k] / p.omega_m;
        std::vector<std::pair<std::string, std::vector<double>>> series;
        for (int res = 0; res < 2; ++res) {
            QuantitySpec q;
            q.kind = "internal";
            q.row = q.col = res == 0 ? quad_y_b1 : quad_y_b2;
            for (double phi : two_phases) {
                const std::string lab =
                    std::string(res == 0 ? "S_Yb1_" : "S_Yb2_") +
                    (phi < pi ? "phi_pi_2" : "phi_3pi_2");
                series.emplace_back(
                    lab, detail::spectrum_series(p, phi, q, omegas));
            }
        }
        const std::string csv = base_path + ".csv";
        const std::string meta = base_path + ".meta.json";
        write_series_csv(csv, "omega_over_omega_m", x, series);
        write_meta_json(detail::preset_meta(name, p, eps), meta);
        return std::vector<std::string>{csv, meta};
    };
    auto flow_pair = [&](const PhysicalParams& p,
                         const std::string& base_path) {
        const auto omegas = detail::omega_axis(p, opt.omega_points);
        std::vector<double> x(omegas.size());
        for (std::size_t k = 0; k < x.size(); ++k)
            x[k] = omegas[k] / p.omega_m;
        std::vector<std::pair<std::string, std::vector<double>>> series;
        for (double phi : two_phases) {
            const std::string suffix = phi < pi ? "_phi_pi_2" : "_phi_3pi_2";
            QuantitySpec q21;
            q21.kind = "flow_21";
            QuantitySpec q12;
            q12.kind = "flow_12";
            series.emplace_back("flow_2_to_1" + suffix,
                                detail::spectrum_series(p, phi, q21, omegas));
            series.emplace_back("flow_1_to_2" + suffix,
                                detail::spectrum_series(p, phi, q12, omegas));
        }
        const std::string csv = base_path + ".csv";
        const std::string meta = base_path + ".meta.json";
        write_series_csv(csv, "omega_over_omega_m", x, series);
        write_meta_json(detail::preset_meta(name, p, eps), meta);
        return std::vector<std::string>{csv, meta};
    };
    auto grid_preset = [&](const PhysicalParams& p, const QuantitySpec& q,
                           const AxisSpec& a1, const AxisSpec& a2,
                           const std::string& base_path) {
        SweepGrid grid = sweep(p, q, a1, a2, opt.jobs);
        const std::string csv = base_path + ".csv";
        const std::string meta = base_path + ".meta.json";
        nlohmann::json m = detail::preset_meta(name, p, eps);
        m.update(grid.meta);
        m["diagnostics"] = grid.diagnostics;
        write_grid_csv(grid, csv);
        write_meta_json(m, meta);
        return std::vector<std::string>{csv, meta};
    };

    const AxisSpec phi_axis{
        "phi_loop_rad",
        uniform_grid(0.0, constants::two_pi * (1.0 - 1.0 / opt.phi_points),
                     opt.phi_points)};
    const AxisSpec mu_axis{
        "mu_abs_rad_s",
        uniform_grid(0.2 * eps.mu_ep2, 1.5 * eps.mu_ep2, opt.mu_points)};

    if (name == "fig2a") return intracavity(at_mu(eps.mu_ep2), out_base);
    if (name == "fig2b") return output_contrib(at_mu(eps.mu_ep2), out_base);
    if (name == "fig3") return mech_psd(at_mu(eps.mu_ep2), out_base);
    if (name == "fig4") return flow_pair(at_mu(eps.mu_ep2), out_base);
    if (name == "fig5") {
        QuantitySpec q;
        q.kind = "i_delta";
        q.tol = opt.i_delta_tol;
        return grid_preset(at_mu(eps.mu_ep2), q, phi_axis, mu_axis, out_base);
    }
    if (name == "fig6") {
        QuantitySpec q;
        q.kind = "internal";
        q.row = q.col = quad_y_b2;
        q.omega_over_omega_m = 1.0;
        return grid_preset(at_mu(eps.mu_ep2), q, phi_axis, mu_axis, out_base);
    }
    if (name == "fig7") {
        QuantitySpec q;
        q.kind = "internal";
        q.row = q.col = quad_y_b2;
        const PhysicalParams p =
            at_mu(1.5 * eps.mu_ep2).with_phi(constants::pi / 2);
        const auto [lo, hi] = default_spectrum_window(p);
        AxisSpec omega_axis_spec{
            "omega_over_omega_m",
            uniform_grid(lo / p.omega_m, hi / p.omega_m, opt.omega_points)};
        return grid_preset(p.with_mu_abs(eps.mu_ep2), q, mu_axis,
                           omega_axis_spec, out_base);
    }
    if (name == "figA1") {
        auto files = intracavity(at_mu(eps.mu_ep1), out_base + "_a");
        auto more = output_contrib(at_mu(eps.mu_ep1), out_base + "_b");
        files.insert(files.end(), more.begin(), more.end());
        return files;
    }
    if (name == "figA2") return mech_psd(at_mu(eps.mu_ep1), out_base);
    if (name == "figA3") return flow_pair(at_mu(0.5 * eps.mu_ep1), out_base);
    if (name == "figA4") return flow_pair(at_mu(eps.mu_ep1), out_base);
    if (name == "figA5") return flow_pair(at_mu(1.5 * eps.mu_ep1), out_base);
    if (name == "figA6") return flow_pair(at_mu(1.5 * eps.mu_ep2), out_base);
    if (name == "figA7") return flow_pair(at_mu(2.0 * eps.mu_ep2), out_base);

    throw invalid_parameter(
        "unknown preset '" + name +
        "'; valid: fig2a fig2b fig3 fig4 fig5 fig6 fig7 "
        "figA1 figA2 figA3 figA4 figA5 figA6 figA7");
}

} // namespace omnoise
