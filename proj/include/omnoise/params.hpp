#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "omnoise/constants.hpp"
#include "omnoise/errors.hpp"

namespace omnoise {

/// All physical parameters of the three-mode loop in angular-frequency
/// units [rad/s]. Immutable by convention once validated.
struct PhysicalParams {
    double omega_m = 0.0; ///< mechanical resonance [rad/s]
    double kappa = 0.0;   ///< cavity amplitude decay [rad/s]
    double gamma1 = 0.0;  ///< mechanical decay, resonator 1 [rad/s]
    double gamma2 = 0.0;  ///< mechanical decay, resonator 2 [rad/s]
    std::complex<double> g1{0.0, 0.0}; ///< single-photon coupling 1 [rad/s]
    std::complex<double> g2{0.0, 0.0}; ///< single-photon coupling 2 [rad/s]
    double mu_abs = 0.0;   ///< intermechanical coupling magnitude [rad/s]
    double phi_loop = 0.0; ///< loop phase, normalized to [0, 2pi)
    double delta = 0.0;    ///< laser-cavity detuning [rad/s]
    double eta = 0.0;      ///< cavity escape efficiency
    double power = 0.0;    ///< pump power [W]
    double lambda_laser = 0.0; ///< pump wavelength [m]
    double n_a = 0.0;          ///< optical bath occupancy
    double n_b1 = 0.0;         ///< mechanical bath occupancy 1
    double n_b2 = 0.0;         ///< mechanical bath occupancy 2

    /// mu = |mu| e^{i phi_loop}
    std::complex<double> mu() const {
        return std::polar(mu_abs, phi_loop);
    }

    double gamma_sum() const { return gamma1 + gamma2; }

    PhysicalParams with_phi(double phi) const {
        PhysicalParams q = *this;
        q.phi_loop = normalize_phase(phi);
        return q;
    }

    PhysicalParams with_mu_abs(double mu) const {
        PhysicalParams q = *this;
        q.mu_abs = mu;
        return q;
    }

    static double normalize_phase(double phi) {
        double r = std::fmod(phi, constants::two_pi);
        if (r < 0.0) r += constants::two_pi;
        return r;
    }

    void validate() const {
        auto require = [](bool ok, const char* msg) {
            if (!ok) throw invalid_parameter(msg);
        };
        require(omega_m > 0.0, "omega_m must be > 0");
        require(kappa > 0.0, "kappa must be > 0");
        require(gamma1 > 0.0, "gamma1 must be > 0");
        require(gamma2 > 0.0, "gamma2 must be > 0");
        require(mu_abs >= 0.0, "mu_abs must be >= 0");
        require(eta >= 0.0 && eta <= 1.0, "eta must be in [0, 1]");
        require(power >= 0.0, "power must be >= 0");
        require(lambda_laser > 0.0, "lambda_laser must be > 0");
        require(n_a >= 0.0, "n_a must be >= 0");
        require(n_b1 >= 0.0, "n_b1 must be >= 0");
        require(n_b2 >= 0.0, "n_b2 must be >= 0");
        require(phi_loop >= 0.0 && phi_loop < constants::two_pi,
                "phi_loop must be normalized to [0, 2pi)");
    }
};

/// Parameter set of the reference device: g1/(2pi) = g2/(2pi) = 800 kHz,
/// omega_m/(2pi) = 3.75 GHz, kappa/(2pi) = 900 MHz, gamma = 5e-4 omega_m,
/// eta = 0.5, P = 0.125 mW at 1550 nm, red-detuned (delta = omega_m),
/// vacuum optical bath, 100 thermal phonons. mu defaults to the nominal
/// second coalescence magnitude 41.6 (gamma1 + gamma2); sweeps that need
/// the refined value resolve it through the EP scanner.
inline PhysicalParams paper_defaults() {
    PhysicalParams p;
    p.omega_m = constants::two_pi * 3.75e9;
    p.kappa = constants::two_pi * 900e6;
    p.gamma1 = 5e-4 * p.omega_m;
    p.gamma2 = 5e-4 * p.omega_m;
    p.g1 = constants::two_pi * 800e3;
    p.g2 = constants::two_pi * 800e3;
    p.mu_abs = 41.6 * (p.gamma1 + p.gamma2);
    p.phi_loop = 0.0;
    p.delta = p.omega_m;
    p.eta = 0.5;
    p.power = 0.125e-3;
    p.lambda_laser = 1550e-9;
    p.n_a = 0.0;
    p.n_b1 = 100.0;
    p.n_b2 = 100.0;
    return p;
}

/// Pump laser angular frequency omega_L = 2 pi c / lambda.
inline double laser_frequency(const PhysicalParams& p) {
    if (p.lambda_laser <= 0.0)
        throw invalid_parameter("lambda_laser must be > 0");
    return constants::two_pi * constants::c_light / p.lambda_laser;
}

/// Pump drive amplitude eps_L = sqrt(2 P_L / (hbar nu_L)) [s^(-1/2)],
/// nu_L = c / lambda the ordinary (cyclic) laser frequency.
inline double drive_amplitude(const PhysicalParams& p) {
    if (p.power < 0.0) throw invalid_parameter("power must be >= 0");
    const double nu_l = constants::c_light / p.lambda_laser;
    if (!(nu_l > 0.0)) throw invalid_parameter("lambda_laser must be > 0");
    return std::sqrt(2.0 * p.power / (constants::hbar * nu_l));
}

/// Bose-Einstein mean occupancy 1/(exp(hbar omega / kB T) - 1).
inline double thermal_occupancy(double temperature, double omega) {
    if (temperature <= 0.0)
        throw invalid_parameter("temperature must be > 0");
    if (omega <= 0.0) throw invalid_parameter("omega must be > 0");
    const double x =
        constants::hbar * omega / (constants::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

namespace detail {

class config_reader {
public:
    explicit config_reader(const nlohmann::json& j) : j_(j) {
        if (!j.is_object())
            throw invalid_parameter("config root must be a JSON object");
    }

    double number(const std::string& key) {
        mark(key);
        if (!j_.contains(key))
            throw schema_error(key, "missing required field");
        if (!j_.at(key).is_number())
            throw schema_error(key, "expected a number");
        return j_.at(key).get<double>();
    }

    double number_or(const std::string& key, double fallback) {
        mark(key);
        if (!j_.contains(key)) return fallback;
        if (!j_.at(key).is_number())
            throw schema_error(key, "expected a number");
        return j_.at(key).get<double>();
    }

    bool has(const std::string& key) {
        mark(key);
        return j_.contains(key);
    }

    /// Exactly one of two alternative keys must be present.
    std::pair<std::string, double> one_of(const std::string& a,
                                          const std::string& b) {
        const bool ha = has(a), hb = has(b);
        if (ha && hb)
            throw schema_error(a, "mutually exclusive with '" + b + "'");
        if (!ha && !hb)
            throw schema_error(a, "either this or '" + b + "' is required");
        return ha ? std::pair{a, number(a)} : std::pair{b, number(b)};
    }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw schema_error(it.key(), "unknown key");
    }

private:
    void mark(const std::string& key) { seen_.insert(key); }

    const nlohmann::json& j_;
    std::set<std::string> seen_;
};

} // namespace detail

/// Parses a config JSON object. Frequency-like inputs arrive in Hz and are
/// converted to rad/s; unknown keys are rejected.
inline PhysicalParams params_from_json(const nlohmann::json& j) {
    detail::config_reader r(j);
    PhysicalParams p;

    const double tp = constants::two_pi;
    p.omega_m = tp * r.number("omega_m_hz");
    if (p.omega_m <= 0.0) throw schema_error("omega_m_hz", "must be > 0");
    p.kappa = tp * r.number("kappa_hz");

    auto [k1, v1] = r.one_of("gamma1_frac_of_omega_m", "gamma1_hz");
    p.gamma1 = (k1 == "gamma1_hz") ? tp * v1 : v1 * p.omega_m;
    auto [k2, v2] = r.one_of("gamma2_frac_of_omega_m", "gamma2_hz");
    p.gamma2 = (k2 == "gamma2_hz") ? tp * v2 : v2 * p.omega_m;

    p.g1 = std::polar(tp * r.number("g1_hz"), r.number_or("g1_phase_rad", 0.0));
    p.g2 = std::polar(tp * r.number("g2_hz"), r.number_or("g2_phase_rad", 0.0));

    auto [km, vm] = r.one_of("mu_abs_over_gamma_sum", "mu_abs_hz");
    p.mu_abs = (km == "mu_abs_hz") ? tp * vm : vm * (p.gamma1 + p.gamma2);

    p.phi_loop = PhysicalParams::normalize_phase(r.number("phi_loop_rad"));
    p.delta = r.number_or("delta_over_omega_m", 1.0) * p.omega_m;
    p.eta = r.number("eta");
    p.power = r.number("power_watt");
    p.lambda_laser = r.number("lambda_m");
    p.n_a = r.number("n_a");
    p.n_b1 = r.number("n_b1");
    p.n_b2 = r.number("n_b2");

    r.reject_unknown();
    p.validate();
    return p;
}

inline nlohmann::json params_to_json(const PhysicalParams& p) {
    const double tp = constants::two_pi;
    nlohmann::json j;
    j["omega_m_hz"] = p.omega_m / tp;
    j["kappa_hz"] = p.kappa / tp;
    j["gamma1_hz"] = p.gamma1 / tp;
    j["gamma2_hz"] = p.gamma2 / tp;
    j["g1_hz"] = std::abs(p.g1) / tp;
    j["g1_phase_rad"] = std::arg(p.g1);
    j["g2_hz"] = std::abs(p.g2) / tp;
    j["g2_phase_rad"] = std::arg(p.g2);
    j["mu_abs_hz"] = p.mu_abs / tp;
    j["phi_loop_rad"] = p.phi_loop;
    j["delta_over_omega_m"] = p.delta / p.omega_m;
    j["eta"] = p.eta;
    j["power_watt"] = p.power;
    j["lambda_m"] = p.lambda_laser;
    j["n_a"] = p.n_a;
    j["n_b1"] = p.n_b1;
    j["n_b2"] = p.n_b2;
    return j;
}

inline PhysicalParams load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_parameter("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw invalid_parameter("config parse error in " + path + ": " +
                                e.what());
    }
    return params_from_json(j);
}

inline void write_config(const PhysicalParams& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw invalid_parameter("cannot open for writing: " + path);
    out << params_to_json(p).dump(2) << "\n";
}

} // namespace omnoise
