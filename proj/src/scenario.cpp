#include "nfr/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "nfr/steering.hpp"

namespace nfr {

using nlohmann::json;

std::string to_string(ArrayMode m) {
    switch (m) {
        case ArrayMode::Conventional: return "conventional";
        case ArrayMode::UlaNearField: return "ula_nearfield";
        case ArrayMode::Separated: return "separated";
    }
    return "?";
}

std::string to_string(Fidelity f) { return f == Fidelity::Approx ? "approx" : "exact"; }

ArrayMode array_mode_from_string(const std::string& s) {
    if (s == "conventional") return ArrayMode::Conventional;
    if (s == "ula_nearfield") return ArrayMode::UlaNearField;
    if (s == "separated") return ArrayMode::Separated;
    throw ValidationError("unknown array mode: " + s);
}

Fidelity fidelity_from_string(const std::string& s) {
    if (s == "approx") return Fidelity::Approx;
    if (s == "exact") return Fidelity::Exact;
    throw ValidationError("unknown model fidelity: " + s);
}

std::vector<double> RadarConfig::sensor_positions() const {
    const int L = num_sensors_per_subarray;
    std::vector<double> d(L);
    const double half = wavelength() / 2.0;
    for (int l = 0; l < L; ++l) d[l] = half * (l - (L - 1) / 2.0);
    return d;
}

std::vector<double> RadarConfig::slow_time_grid() const {
    std::vector<double> t(num_chirps);
    for (int k = 0; k < num_chirps; ++k) t[k] = (k - (num_chirps - 1) / 2.0) * pri_s;
    return t;
}

std::vector<double> RadarConfig::fast_time_grid() const {
    std::vector<double> t(num_fast_samples);
    const double dt = chirp_duration_s / num_fast_samples;
    for (int n = 0; n < num_fast_samples; ++n)
        t[n] = dt * (n - (num_fast_samples - 1) / 2.0);
    return t;
}

void RadarConfig::validate() const {
    if (!(carrier_frequency_hz > 0)) throw ValidationError("carrier_frequency_hz must be > 0");
    if (!(bandwidth_hz > 0)) throw ValidationError("bandwidth_hz must be > 0");
    if (!(chirp_duration_s > 0)) throw ValidationError("chirp_duration_s must be > 0");
    if (!(pri_s > 0)) throw ValidationError("pri_s must be > 0");
    if (!(chirp_duration_s < pri_s))
        throw ValidationError("chirp duration T_c must be smaller than the PRI");
    if (num_chirps < 1) throw ValidationError("num_chirps must be >= 1");
    if (num_fast_samples < 1) throw ValidationError("num_fast_samples must be >= 1");
    if (num_sensors_per_subarray < 1)
        throw ValidationError("num_sensors_per_subarray must be >= 1");
    if (subarray_separation_m < 0) throw ValidationError("subarray_separation_m must be >= 0");
    if (!(wave_speed_mps > 0)) throw ValidationError("wave_speed_mps must be > 0");
}

void TargetState::validate() const {
    if (!(range_m > 0)) throw ValidationError("target range must be > 0");
    if (!(std::abs(doa_rad) < kPi / 2)) throw ValidationError("target DOA must satisfy |theta| < pi/2");
    if (!std::isfinite(radial_velocity_mps) || !std::isfinite(tangential_velocity_mps))
        throw ValidationError("target velocity must be finite");
}

void Scene::validate() const {
    radar.validate();
    for (const auto& t : targets) t.validate();
    if (!std::isfinite(snr_db)) throw ValidationError("snr_db must be finite");
    if (mode == ArrayMode::Separated && !radar.separated())
        throw ValidationError("separated mode requires subarray_separation_m > 0");
    if (mode != ArrayMode::Separated && radar.separated())
        throw ValidationError("single-array mode with nonzero subarray separation");
}

DerivedParams derive_params(const RadarConfig& cfg, const TargetState& tgt) {
    cfg.validate();
    DerivedParams out;
    out.wavelength_m = cfg.wavelength();
    out.range_resolution_m = cfg.range_resolution();
    out.range_ambiguity_m = cfg.range_ambiguity();
    out.nfsa_m = std::abs(tgt.tangential_velocity_mps) * cfg.observation_time();
    out.chirp_slope = cfg.chirp_slope();
    out.slow_time_grid = cfg.slow_time_grid();
    out.fast_time_grid = cfg.fast_time_grid();
    return out;
}

RadialTangential derive_geometry(double vx, double vy, double theta_rad) {
    const double s = std::sin(theta_rad), c = std::cos(theta_rad);
    return {vx * s + vy * c, vx * c - vy * s};
}

CartesianVelocity invert_geometry(double v_r, double v_theta, double theta_rad) {
    const double s = std::sin(theta_rad), c = std::cos(theta_rad);
    return {v_r * s + v_theta * c, v_r * c - v_theta * s};
}

const AssumptionEntry& AssumptionReport::operator[](const std::string& id) const {
    for (const auto& e : entries)
        if (e.id == id) return e;
    throw std::out_of_range("no assumption entry " + id);
}

bool AssumptionReport::all_pass(bool include_unevaluated) const {
    return std::all_of(entries.begin(), entries.end(), [&](const AssumptionEntry& e) {
        if (!e.evaluated) return !include_unevaluated;
        return e.pass;
    });
}

std::string AssumptionReport::table() const {
    std::ostringstream os;
    os << "assumption  ratio        sense  pass  description\n";
    for (const auto& e : entries) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-11s %-12.4g %-6s %-5s %s\n", e.id.c_str(),
                      e.ratio,
                      e.sense == AssumptionSense::MuchLess   ? "<<1"
                      : e.sense == AssumptionSense::MuchGreater ? ">>1"
                                                                : "<1",
                      !e.evaluated ? "n/a" : (e.pass ? "yes" : "WARN"),
                      e.description.c_str());
        os << buf;
    }
    return os.str();
}

namespace {

AssumptionEntry make_entry(std::string id, std::string desc, double ratio,
                           AssumptionSense sense, double margin) {
    AssumptionEntry e;
    e.id = std::move(id);
    e.description = std::move(desc);
    e.ratio = ratio;
    e.sense = sense;
    switch (sense) {
        case AssumptionSense::MuchLess:
            e.pass = ratio < 1.0 / margin;
            e.strict_pass = ratio < 1.0;
            break;
        case AssumptionSense::MuchGreater:
            e.pass = ratio > margin;
            e.strict_pass = ratio > 1.0;
            break;
        case AssumptionSense::Strict:
            e.strict_pass = ratio < 1.0;
            e.pass = e.strict_pass;
            break;
    }
    return e;
}

}  // namespace

AssumptionReport check_assumptions(const RadarConfig& cfg, const TargetState& tgt,
                                   double margin, const Scene* scene_for_a12) {
    cfg.validate();
    tgt.validate();
    AssumptionReport rep;
    rep.margin = margin;

    const double lambda = cfg.wavelength();
    const double dr = cfg.range_resolution();
    const double rmax = cfg.range_ambiguity();
    const double D = cfg.subarray_aperture();
    const double Tobs = cfg.observation_time();
    const double r = tgt.range_m;
    const double vT = tgt.speed();
    const double nfsa = std::abs(tgt.tangential_velocity_mps) * Tobs;

    auto& e = rep.entries;
    e.push_back(make_entry("A1", "slow-time range migration |v_r| K T_PRI / delta_r",
                           std::abs(tgt.radial_velocity_mps) * Tobs / dr,
                           AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A2", "aperture range migration D / delta_r", D / dr,
                           AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A3", "Fraunhofer for physical aperture D^2/(lambda r)",
                           D * D / (lambda * r), AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A4", "Fraunhofer for NFSA (v_theta K T_PRI)^2/(lambda r)",
                           nfsa * nfsa / (lambda * r), AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A5", "fast-time Doppler |v_r| T_c / lambda",
                           std::abs(tgt.radial_velocity_mps) * cfg.chirp_duration_s / lambda,
                           AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A6", "relaxed A1: v_T K T_PRI r / (delta_r r_max)",
                           vT * Tobs * r / (dr * rmax), AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A7", "relaxed A2: D r / (delta_r r_max)", D * r / (dr * rmax),
                           AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A8", "motion negligible vs range v_T K T_PRI / r", vT * Tobs / r,
                           AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A9", "aperture negligible vs range D / r", D / r,
                           AssumptionSense::MuchLess, margin));
    e.push_back(make_entry("A10", "relaxed A3: 5 D^2 / (2 delta_r r)",
                           5.0 * D * D / (2.0 * dr * r), AssumptionSense::Strict, margin));
    e.push_back(make_entry("A11", "relaxed A4: 5 NFSA^2 / (2 delta_r r)",
                           5.0 * nfsa * nfsa / (2.0 * dr * r), AssumptionSense::Strict,
                           margin));

    AssumptionEntry a12;
    a12.id = "A12";
    a12.description = "max pairwise |a^H(psi_i) a(psi_p)| / (L N K)";
    a12.sense = AssumptionSense::MuchLess;
    if (scene_for_a12 && scene_for_a12->targets.size() > 1) {
        const ModelKind kind = model_kind(scene_for_a12->mode);
        const int Q = scene_for_a12->mode == ArrayMode::Separated ? 2 : 1;
        const auto& targets = scene_for_a12->targets;
        const double norm = static_cast<double>(cfg.num_sensors_per_subarray) *
                            cfg.num_chirps * cfg.num_fast_samples;
        double worst = 0.0;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            for (std::size_t p = i + 1; p < targets.size(); ++p) {
                for (int q = 0; q < Q; ++q) {
                    auto ai = steering_vector(cfg, targets[i], kind, q);
                    auto ap = steering_vector(cfg, targets[p], kind, q);
                    cd acc{0, 0};
                    for (std::size_t s = 0; s < ai.size(); ++s)
                        acc += std::conj(ai[s]) * ap[s];
                    worst = std::max(worst, std::abs(acc) / norm);
                }
            }
        }
        a12.ratio = worst;
        a12.pass = worst < 1.0 / margin;
        a12.strict_pass = worst < 1.0;
        a12.evaluated = true;
    } else {
        a12.evaluated = false;
    }
    e.push_back(a12);
    return rep;
}

// --- JSON ---

namespace {

TargetState target_from_json(const json& j) {
    TargetState t;
    t.range_m = j.at("range_m").get<double>();
    if (j.contains("doa_deg"))
        t.doa_rad = j["doa_deg"].get<double>() * kPi / 180.0;
    else
        t.doa_rad = j.at("doa_rad").get<double>();
    const bool cart = j.contains("vx_mps") || j.contains("vy_mps");
    const bool polar = j.contains("radial_velocity_mps") || j.contains("tangential_velocity_mps");
    if (cart && polar)
        throw ValidationError("target velocity: give either (vx,vy) or (v_r,v_theta), not both");
    if (cart) {
        auto [vr, vth] = derive_geometry(j.value("vx_mps", 0.0), j.value("vy_mps", 0.0), t.doa_rad);
        t.radial_velocity_mps = vr;
        t.tangential_velocity_mps = vth;
    } else {
        t.radial_velocity_mps = j.value("radial_velocity_mps", 0.0);
        t.tangential_velocity_mps = j.value("tangential_velocity_mps", 0.0);
    }
    if (j.contains("amplitudes")) {
        const auto& a = j["amplitudes"];
        for (int q = 0; q < 2 && q < static_cast<int>(a.size()); ++q)
            t.amplitudes[q] = cd(a[q].at(0).get<double>(), a[q].at(1).get<double>());
        if (a.size() == 1) t.amplitudes[1] = t.amplitudes[0];
        t.amplitudes_set = true;
    }
    return t;
}

json target_to_json(const TargetState& t) {
    json j;
    j["range_m"] = t.range_m;
    j["doa_deg"] = t.doa_rad * 180.0 / kPi;
    j["radial_velocity_mps"] = t.radial_velocity_mps;
    j["tangential_velocity_mps"] = t.tangential_velocity_mps;
    j["amplitudes"] = {{t.amplitudes[0].real(), t.amplitudes[0].imag()},
                       {t.amplitudes[1].real(), t.amplitudes[1].imag()}};
    return j;
}

}  // namespace

Scene scene_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("scenario JSON parse error: ") + e.what());
    }
    Scene s;
    try {
        const auto& r = j.at("radar");
        s.radar.carrier_frequency_hz = r.at("carrier_frequency_hz").get<double>();
        s.radar.bandwidth_hz = r.at("bandwidth_hz").get<double>();
        s.radar.chirp_duration_s = r.at("chirp_duration_s").get<double>();
        s.radar.pri_s = r.at("pri_s").get<double>();
        s.radar.num_chirps = r.at("num_chirps").get<int>();
        s.radar.num_fast_samples = r.at("num_fast_samples").get<int>();
        s.radar.num_sensors_per_subarray = r.at("num_sensors_per_subarray").get<int>();
        s.radar.subarray_separation_m = r.value("subarray_separation_m", 0.0);
        s.radar.wave_speed_mps = r.value("wave_speed_mps", kDefaultWaveSpeed);
        for (const auto& tj : j.value("targets", json::array()))
            s.targets.push_back(target_from_json(tj));
        s.snr_db = j.value("snr_db", 20.0);
        s.seed = j.value("seed", std::uint64_t{0});
        s.mode = j.contains("mode") ? array_mode_from_string(j["mode"].get<std::string>())
                 : s.radar.separated() ? ArrayMode::Separated
                                       : ArrayMode::UlaNearField;
        s.fidelity = fidelity_from_string(j.value("fidelity", std::string("approx")));
        s.coherent_amplitudes = j.value("coherent_amplitudes", false);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("scenario JSON: ") + e.what());
    }
    s.validate();
    return s;
}

Scene scene_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scene_from_json_text(buf.str());
}

std::string scene_to_json_text(const Scene& s) {
    json j;
    j["radar"] = {{"carrier_frequency_hz", s.radar.carrier_frequency_hz},
                  {"bandwidth_hz", s.radar.bandwidth_hz},
                  {"chirp_duration_s", s.radar.chirp_duration_s},
                  {"pri_s", s.radar.pri_s},
                  {"num_chirps", s.radar.num_chirps},
                  {"num_fast_samples", s.radar.num_fast_samples},
                  {"num_sensors_per_subarray", s.radar.num_sensors_per_subarray},
                  {"subarray_separation_m", s.radar.subarray_separation_m},
                  {"wave_speed_mps", s.radar.wave_speed_mps}};
    j["targets"] = json::array();
    for (const auto& t : s.targets) j["targets"].push_back(target_to_json(t));
    j["snr_db"] = s.snr_db;
    j["seed"] = s.seed;
    j["mode"] = to_string(s.mode);
    j["fidelity"] = to_string(s.fidelity);
    j["coherent_amplitudes"] = s.coherent_amplitudes;
    return j.dump(2);
}

}  // namespace nfr
