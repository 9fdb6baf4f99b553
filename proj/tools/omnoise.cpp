#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omnoise/eplocator.hpp"
#include "omnoise/linmodel.hpp"
#include "omnoise/nonreciprocity.hpp"
#include "omnoise/parallel.hpp"
#include "omnoise/params.hpp"
#include "omnoise/spectra.hpp"
#include "omnoise/steady_state.hpp"
#include "omnoise/sweep.hpp"

namespace {

using nlohmann::json;
using namespace omnoise;

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;

json complex_pair(std::complex<double> z) {
    return json::array({z.real(), z.imag()});
}

json matrix_json(const Matrix6cd& m) {
    json rows = json::array();
    for (int i = 0; i < 6; ++i) {
        json row = json::array();
        for (int j = 0; j < 6; ++j) row.push_back(complex_pair(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json matrix_json(const Matrix6d& m) {
    return matrix_json(Matrix6cd(m.cast<std::complex<double>>()));
}

PhysicalParams load_params(const std::string& config_path) {
    if (config_path.empty()) return paper_defaults();
    return load_config(config_path);
}

int cmd_steady_state(const std::string& config) {
    const PhysicalParams p = load_params(config);
    const MeanFields mf = solve_mean_fields(p);
    json out;
    out["a_mean"] = complex_pair(mf.a_mean);
    out["b1_mean"] = complex_pair(mf.b1_mean);
    out["b2_mean"] = complex_pair(mf.b2_mean);
    out["delta_a_rad_s"] = mf.delta_a;
    out["delta_a_over_omega_m"] = mf.delta_a / p.omega_m;
    out["photon_number"] = std::norm(mf.a_mean);
    out["iterations"] = mf.iterations;
    out["residual"] = mf.residual;
    std::cout << out.dump(2) << "\n";
    return exit_ok;
}

int cmd_model(const std::string& config, const std::string& out_path) {
    const PhysicalParams p = load_params(config);
    const MeanFields mf = solve_mean_fields(p);
    const LinearModel lm = build_linear_model(p, mf);
    json out;
    out["quadrature_order"] = {quad_name(0), quad_name(1), quad_name(2),
                               quad_name(3), quad_name(4), quad_name(5)};
    out["m"] = matrix_json(lm.m);
    out["d"] = matrix_json(lm.d);
    out["c"] = matrix_json(lm.c);
    const StabilityReport st = stability_check(lm);
    out["stable"] = st.stable;
    out["spectral_abscissa_rad_s"] = st.abscissa;
    if (out_path.empty()) {
        std::cout << out.dump(2) << "\n";
    } else {
        write_meta_json(out, out_path);
    }
    return exit_ok;
}

int cmd_spectrum(const std::string& config, const std::string& quantity,
                 int row, int col, double theta, double omega_min,
                 double omega_max, int points, const std::string& out_path) {
    const PhysicalParams p = load_params(config);
    const MeanFields mf = solve_mean_fields(p);
    const LinearModel lm = build_linear_model(p, mf);
    const EigenSystem es = eigensystem(lm);
    if (row < 0 || row > 5 || col < 0 || col > 5)
        throw invalid_parameter("--row/--col must be quadrature indices 0..5");

    double lo = omega_min * p.omega_m, hi = omega_max * p.omega_m;
    if (omega_min == 0.0 && omega_max == 0.0) {
        const auto [wlo, whi] = default_spectrum_window(p);
        lo = wlo;
        hi = whi;
    }
    SpectrumTable table;
    table.omegas = uniform_grid(lo, hi, points);
    table.values.resize(table.omegas.size());
    for (std::size_t k = 0; k < table.omegas.size(); ++k) {
        const double w = table.omegas[k];
        if (quantity == "internal")
            table.values[k] = psd_internal(es, lm, w)(row, col);
        else if (quantity == "output")
            table.values[k] = psd_output(es, lm, w)(row, col);
        else if (quantity == "contribution")
            table.values[k] =
                contribution(SpectrumKind::internal, col, row, es, lm, w);
        else if (quantity == "homodyne")
            table.values[k] = homodyne_output(es, lm, w, theta);
        else
            throw invalid_parameter("unknown spectrum quantity: " + quantity);
    }
    if (out_path.empty())
        throw invalid_parameter("spectrum requires --out FILE.csv");
    write_spectrum_csv(table, p.omega_m, out_path);
    return exit_ok;
}

int cmd_eps(const std::string& config, double mu_min, double mu_max,
            int mu_points, int phi_points, const std::string& out_path) {
    const PhysicalParams p = load_params(config);
    EPScanOptions opt;
    opt.mu_points = mu_points;
    opt.phi_points = phi_points;
    const auto reports = scan_eps(p, mu_min * p.gamma_sum(),
                                  mu_max * p.gamma_sum(), opt);
    json arr = json::array();
    for (const EPReport& r : reports) {
        json item;
        item["mu_abs_rad_s"] = r.mu_abs;
        item["mu_over_gamma_sum"] = r.mu_over_gamma_sum;
        item["phi_rad"] = r.phi;
        item["gap_rad_s"] = r.gap;
        item["vec_overlap"] = r.vec_overlap;
        item["cond_u"] = r.cond_u;
        arr.push_back(item);
    }
    if (out_path.empty()) {
        std::cout << arr.dump(2) << "\n";
    } else {
        write_meta_json(arr, out_path);
    }
    return exit_ok;
}

int cmd_nonreciprocity(const std::string& config, int phi_points,
                       double mu_over_ep2, double tol, int jobs,
                       const std::string& out_path) {
    PhysicalParams p = load_params(config);
    const EPMagnitudes eps = resolve_ep_magnitudes(p);
    p = p.with_mu_abs(mu_over_ep2 * eps.mu_ep2);
    if (out_path.empty())
        throw invalid_parameter("nonreciprocity requires --out FILE.csv");

    std::vector<NoiseFlow> flows(static_cast<std::size_t>(phi_points));
    parallel_for(flows.size(), jobs, [&](std::size_t k) {
        const double phi = constants::two_pi * k / phi_points;
        flows[k] = nonreciprocity_measure(p, phi, tol);
    });
    std::ofstream out(out_path);
    if (!out) throw invalid_parameter("cannot open for writing: " + out_path);
    out << "phi_rad,flow_21,flow_12,i_delta,quad_error\n";
    for (const NoiseFlow& f : flows)
        out << detail::format_sci(f.phi) << ","
            << detail::format_sci(f.flow_21) << ","
            << detail::format_sci(f.flow_12) << ","
            << detail::format_sci(f.i_delta) << ","
            << detail::format_sci(f.quad_error) << "\n";
    return exit_ok;
}

AxisSpec axis_from_json(const json& j, const std::string& which) {
    if (!j.is_object())
        throw schema_error(which, "must be an object");
    AxisSpec ax;
    ax.name = j.value("name", "");
    if (ax.name.empty()) throw schema_error(which + ".name", "required");
    if (j.contains("values")) {
        ax.values = j.at("values").get<std::vector<double>>();
    } else {
        const double lo = j.at("min").get<double>();
        const double hi = j.at("max").get<double>();
        const int n = j.at("points").get<int>();
        if (n < 1) throw schema_error(which + ".points", "must be >= 1");
        ax.values = uniform_grid(lo, hi, n);
    }
    if (ax.values.empty()) throw schema_error(which, "axis is empty");
    return ax;
}

int cmd_sweep(const std::string& config, int jobs,
              const std::string& out_base) {
    if (config.empty())
        throw invalid_parameter("sweep requires --config with a sweep block");
    std::ifstream in(config);
    if (!in) throw invalid_parameter("cannot open config: " + config);
    json doc = json::parse(in);
    if (!doc.contains("sweep"))
        throw schema_error("sweep", "config must contain a sweep object");
    json sw = doc.at("sweep");
    doc.erase("sweep");
    const PhysicalParams p =
        doc.empty() ? paper_defaults() : params_from_json(doc);

    QuantitySpec q;
    const json& qj = sw.at("quantity");
    q.kind = qj.value("kind", "internal");
    q.row = qj.value("row", static_cast<int>(quad_y_b2));
    q.col = qj.value("col", static_cast<int>(quad_y_b2));
    q.theta = qj.value("theta_rad", 0.0);
    q.omega_over_omega_m = qj.value("omega_over_omega_m", 1.0);
    q.tol = qj.value("tol", 1e-7);

    const AxisSpec a1 = axis_from_json(sw.at("axis1"), "sweep.axis1");
    const AxisSpec a2 = axis_from_json(sw.at("axis2"), "sweep.axis2");
    SweepGrid grid = sweep(p, q, a1, a2, jobs);

    const std::string base = out_base.empty() ? "sweep" : out_base;
    json meta = grid.meta;
    meta["diagnostics"] = grid.diagnostics;
    write_grid_csv(grid, base + ".csv");
    write_meta_json(meta, base + ".meta.json");
    std::cout << base + ".csv\n" << base + ".meta.json\n";
    if (!grid.diagnostics.empty())
        std::cerr << grid.diagnostics.size() << " cell(s) masked\n";
    return exit_ok;
}

int cmd_preset(const std::string& config, const std::string& name, int jobs,
               const std::string& out_base) {
    const PhysicalParams p = load_params(config);
    PresetOptions opt;
    opt.jobs = jobs;
    const std::string base = out_base.empty() ? name : out_base;
    const auto files = run_preset(name, p, base, opt);
    for (const auto& f : files) std::cout << f << "\n";
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noise-spectrum toolkit for a closed-loop three-mode "
                 "optomechanical system"};
    app.set_version_flag("--version", omnoise::version_string);
    app.require_subcommand(1);

    std::string config, out_path;
    int jobs = 0;
    app.add_option("--config", config, "JSON parameter file")
        ->check(CLI::ExistingFile);
    app.add_option("--jobs", jobs,
                   "worker threads (fallback: OMNOISE_JOBS, then hardware)");
    app.add_option("--out", out_path, "output path / basename");

    auto* ss = app.add_subcommand("steady-state",
                                  "Solve the mean fields, print JSON");

    auto* model = app.add_subcommand("model", "Build M, D, C");
    bool dump = false;
    model->add_flag("--dump", dump, "emit M, D, C as JSON matrices");

    auto* spectrum =
        app.add_subcommand("spectrum", "Sample a noise spectrum to CSV");
    std::string sp_quantity = "internal";
    int sp_row = omnoise::quad_y_b2, sp_col = omnoise::quad_y_b2;
    double sp_theta = 0.0, sp_omega_min = 0.0, sp_omega_max = 0.0;
    int sp_points = 2001;
    spectrum->add_option("--quantity", sp_quantity,
                         "internal|output|contribution|homodyne");
    spectrum->add_option("--row", sp_row, "quadrature row index 0..5");
    spectrum->add_option("--col", sp_col, "quadrature column index 0..5");
    spectrum->add_option("--theta", sp_theta, "homodyne angle [rad]");
    spectrum->add_option("--omega-min", sp_omega_min, "window start [omega_m]");
    spectrum->add_option("--omega-max", sp_omega_max, "window end [omega_m]");
    spectrum->add_option("--points", sp_points, "frequency samples");

    auto* eps = app.add_subcommand("eps", "Scan for eigenvalue coalescence");
    double ep_mu_min = 10.0, ep_mu_max = 60.0;
    int ep_mu_points = 201, ep_phi_points = 73;
    eps->add_option("--mu-min", ep_mu_min, "|mu| scan start [gamma1+gamma2]");
    eps->add_option("--mu-max", ep_mu_max, "|mu| scan end [gamma1+gamma2]");
    eps->add_option("--mu-points", ep_mu_points, "coupling grid points");
    eps->add_option("--phi-points", ep_phi_points, "loop-phase grid points");

    auto* nr = app.add_subcommand("nonreciprocity",
                                  "I_delta(phi) sweep to CSV");
    int nr_phi_points = 73;
    double nr_mu_over_ep2 = 1.0, nr_tol = 1e-8;
    nr->add_option("--phi-points", nr_phi_points, "loop-phase samples");
    nr->add_option("--mu-over-ep2", nr_mu_over_ep2,
                   "|mu| in units of the second coalescence magnitude");
    nr->add_option("--tol", nr_tol, "quadrature tolerance");

    auto* sw = app.add_subcommand("sweep",
                                  "2D parameter sweep from a config block");

    auto* preset = app.add_subcommand("preset", "Regenerate figure data");
    std::string preset_name;
    preset->add_option("name", preset_name, "preset name (fig2a .. figA7)")
        ->required();

    for (CLI::App* sub : {ss, model, spectrum, eps, nr, sw, preset})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*ss) return cmd_steady_state(config);
        if (*model) return cmd_model(config, out_path);
        if (*spectrum)
            return cmd_spectrum(config, sp_quantity, sp_row, sp_col, sp_theta,
                                sp_omega_min, sp_omega_max, sp_points,
                                out_path);
        if (*eps)
            return cmd_eps(config, ep_mu_min, ep_mu_max, ep_mu_points,
                           ep_phi_points, out_path);
        if (*nr)
            return cmd_nonreciprocity(config, nr_phi_points, nr_mu_over_ep2,
                                      nr_tol, jobs, out_path);
        if (*sw) return cmd_sweep(config, jobs, out_path);
        if (*preset) return cmd_preset(config, preset_name, jobs, out_path);
    } catch (const omnoise::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const omnoise::invalid_parameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_usage;
}
