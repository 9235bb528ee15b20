#include "nfr/harness.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "nfr/bounds.hpp"
#include "nfr/synth.hpp"

namespace nfr {

using nlohmann::json;

SweepParam sweep_param_from_string(const std::string& s) {
    if (s == "snr_db") return SweepParam::SnrDb;
    if (s == "dbar" || s == "subarray_separation_m") return SweepParam::Dbar;
    if (s == "vtheta" || s == "tangential_velocity_mps") return SweepParam::Vtheta;
    throw ValidationError("unknown sweep parameter: " + s);
}

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::SnrDb: return "snr_db";
        case SweepParam::Dbar: return "dbar";
        case SweepParam::Vtheta: return "vtheta";
    }
    return "?";
}

void SweepSpec::validate() const {
    base.validate();
    if (base.targets.size() != 1)
        throw ValidationError("sweeps run single-target scenes");
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (grid.size() < 1) throw ValidationError("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ValidationError("sweep grid must be strictly increasing");
}

namespace {

Scene scene_at(const SweepSpec& spec, double value) {
    Scene s = spec.base;
    switch (spec.param) {
        case SweepParam::SnrDb: s.snr_db = value; break;
        case SweepParam::Dbar:
            s.radar.subarray_separation_m = value;
            s.mode = value > 0 ? ArrayMode::Separated : ArrayMode::UlaNearField;
            break;
        case SweepParam::Vtheta: s.targets[0].tangential_velocity_mps = value; break;
    }
    return s;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    if (!spec.force) {
        // gate on the proposed model's assumptions A5-A11; A1-A4 are the
        // conventional model's and are expected to be violated here
        const auto rep = check_assumptions(spec.base.radar, spec.base.targets[0]);
        for (const char* id : {"A5", "A6", "A7", "A8", "A9", "A10", "A11"})
            if (!rep[id].strict_pass)
                throw ValidationError(std::string("scenario violates assumption ") + id +
                                      " (run with force to override)");
    }

    SweepResult out;
    out.spec = spec;
    for (std::size_t pi = 0; pi < spec.grid.size(); ++pi) {
        Scene point_scene = scene_at(spec, spec.grid[pi]);
        const TargetState& truth = point_scene.targets[0];

        SweepPoint pt;
        pt.value = spec.grid[pi];
        const auto closed = crb_vtheta_closed(
            point_scene.radar, truth,
            point_scene.mode, noise_variance_for_snr(point_scene.radar, point_scene.snr_db));
        pt.crb_vtheta = closed.value;

        double se_vth = 0, se_vr = 0, se_r = 0, se_th = 0;
        int sign_err = 0, converged = 0, ok = 0;
        const auto t0 = std::chrono::steady_clock::now();
        for (int trial = 0; trial < spec.trials; ++trial) {
            Scene s = point_scene;
            s.seed = substream(spec.seed, 0x73776565u /*"swee"*/, pi, trial);
            try {
                const DataCube cube = synthesize(s);
                const EstimationResult res = estimate_single(cube, spec.opts);
                const double dv = res.estimate.tangential_velocity_mps -
                                  truth.tangential_velocity_mps;
                se_vth += dv * dv;
                se_vr += std::pow(res.estimate.radial_velocity_mps -
                                      truth.radial_velocity_mps, 2);
                se_r += std::pow(res.estimate.range_m - truth.range_m, 2);
                se_th += std::pow(res.estimate.doa_rad - truth.doa_rad, 2);
                if (truth.tangential_velocity_mps != 0.0 &&
                    std::signbit(res.estimate.tangential_velocity_mps) !=
                        std::signbit(truth.tangential_velocity_mps))
                    ++sign_err;
                if (res.converged) ++converged;
                ++ok;
            } catch (const std::exception&) {
                ++pt.failures;
            }
        }
        pt.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        if (ok > 0) {
            pt.rmse_vtheta = std::sqrt(se_vth / ok);
            pt.rmse_vr = std::sqrt(se_vr / ok);
            pt.rmse_range = std::sqrt(se_r / ok);
            pt.rmse_theta = std::sqrt(se_th / ok);
            pt.sign_error_rate = static_cast<double>(sign_err) / ok;
            pt.convergence_rate = static_cast<double>(converged) / ok;
        }
        pt.degraded = pt.failures > spec.trials / 2;
        out.points.push_back(pt);
    }
    return out;
}

double threshold_snr_db(const SweepResult& result) {
    if (result.spec.param != SweepParam::SnrDb)
        throw ValidationError("threshold SNR applies to SNR sweeps");
    for (const auto& pt : result.points)
        if (pt.rmse_vtheta < 3.0 * std::sqrt(pt.crb_vtheta) && !pt.degraded) return pt.value;
    const double step = result.points.size() > 1
                            ? result.points[1].value - result.points[0].value
                            : 1.0;
    return result.points.back().value + step;
}

std::string SweepResult::csv() const {
    std::ostringstream os;
    os << "param,value,rmse_vtheta,rmse_vr,rmse_range,rmse_theta,crb_vtheta,sqrt_crb,"
          "sign_error_rate,convergence_rate,failures,wall_ms\n";
    for (const auto& p : points) {
        os << to_string(spec.param) << ',' << p.value << ',' << p.rmse_vtheta << ','
           << p.rmse_vr << ',' << p.rmse_range << ',' << p.rmse_theta << ',' << p.crb_vtheta
           << ',' << std::sqrt(p.crb_vtheta) << ',' << p.sign_error_rate << ','
           << p.convergence_rate << ',' << p.failures << ',' << p.wall_ms << "\n";
    }
    return os.str();
}

std::string SweepResult::json() const {
    nlohmann::json j;
    j["param"] = to_string(spec.param);
    j["trials"] = spec.trials;
    j["seed"] = spec.seed;
    j["points"] = nlohmann::json::array();
    for (const auto& p : points) {
        j["points"].push_back({{"value", p.value},
                               {"rmse_vtheta", p.rmse_vtheta},
                               {"rmse_vr", p.rmse_vr},
                               {"rmse_range", p.rmse_range},
                               {"rmse_theta", p.rmse_theta},
                               {"crb_vtheta", p.crb_vtheta},
                               {"sign_error_rate", p.sign_error_rate},
                               {"convergence_rate", p.convergence_rate},
                               {"failures", p.failures},
                               {"degraded", p.degraded},
                               {"wall_ms", p.wall_ms}});
    }
    return j.dump(2);
}

namespace {

// theta-maximized (range x doppler) image from a likelihood map
std::vector<double> theta_max_image(const LikelihoodMap& map) {
    const int La = map.axes[0].size, Ka = map.axes[1].size, Na = map.axes[2].size;
    std::vector<double> img(static_cast<std::size_t>(Na) * Ka, 0.0);
    for (int a = 0; a < La; ++a)
        for (int d = 0; d < Ka; ++d)
            for (int r = 0; r < Na; ++r) {
                double& out = img[static_cast<std::size_t>(r) * Ka + d];
                out = std::max(out, map.power[map.index(a, d, r)]);
            }
    return img;
}

// peak power over the window energy around (r0, vr0); the window absorbs the
// migration ridge, so an unsmeared response scores near 1
double smear_metric(const std::vector<double>& img, const LikelihoodMap& map, double r0,
                    double vr0) {
    const int Ka = map.axes[1].size, Na = map.axes[2].size;
    const int pr = map.pad[0], pd = map.pad[1];
    const int rb = static_cast<int>(std::lround(map.axes[2].bin_of(r0)));
    const int db = static_cast<int>(std::lround(map.axes[1].bin_of(vr0)));
    const int wr = 3 * pr;
    // Doppler window wide enough for the worst migration ridge
    const int wd = std::min(Ka / 2 - 1, 8 * pd);
    double peak = 0.0, energy = 0.0;
    for (int dr = -wr; dr <= wr; ++dr)
        for (int dd = -wd; dd <= wd; ++dd) {
            const int rr = ((rb + dr) % Na + Na) % Na;
            const int ddx = ((db + dd) % Ka + Ka) % Ka;
            const double v = img[static_cast<std::size_t>(rr) * Ka + ddx];
            peak = std::max(peak, v);
            energy += v;
        }
    return energy > 0 ? peak / energy : 0.0;
}

}  // namespace

MultiTargetDemo run_multitarget_demo(const Scene& scene, int M, const EstimateOptions& opts) {
    scene.validate();
    MultiTargetDemo demo;
    const DataCube cube = synthesize(scene);
    const RadarConfig& cfg = scene.radar;

    std::array<int, 3> map_pad{2, 2, 2};
    std::vector<LikelihoodMap> raw_maps;
    std::vector<const cd*> views;
    for (int q = 0; q < cube.num_subarrays; ++q) {
        raw_maps.push_back(likelihood_map({cube.subarray(q)}, cfg, map_pad, opts.map_budget_bins));
        demo.raw_subarray_maps.push_back(theta_max_image(raw_maps.back()));
        views.push_back(cube.subarray(q));
    }
    demo.n_range = raw_maps[0].axes[2].size;
    demo.n_doppler = raw_maps[0].axes[1].size;

    // noncoherent raw image for the before-metric
    LikelihoodMap raw_sum = likelihood_map(views, cfg, map_pad, opts.map_budget_bins);
    const auto raw_img = theta_max_image(raw_sum);

    demo.estimates = estimate_multi(cube, M, opts);

    const std::size_t sub = cube.subarray_size();
    std::vector<cd> scratch(cube.samples.size());
    for (std::size_t t = 0; t < demo.estimates.targets.size(); ++t) {
        const auto& est = demo.estimates.targets[t];
        TargetMapBundle bundle;
        bundle.target_index = static_cast<int>(t);
        bundle.estimate = est;
        bundle.raw_map = raw_img;

        std::copy(cube.samples.begin(), cube.samples.end(), scratch.begin());
        TargetState psi = est.estimate;
        psi.range_m = std::max(psi.range_m, 1e-3);
        std::vector<const cd*> comp_views;
        for (int q = 0; q < cube.num_subarrays; ++q) {
            compensate(scratch.data() + q * sub, cfg, psi,
                       cube.num_subarrays == 2 ? ArrayMode::Separated : ArrayMode::UlaNearField,
                       q, CompensationKind::BAndZ);
            comp_views.push_back(scratch.data() + q * sub);
        }
        LikelihoodMap comp = likelihood_map(comp_views, cfg, map_pad, opts.map_budget_bins);
        bundle.compensated_map = theta_max_image(comp);
        bundle.n_range = demo.n_range;
        bundle.n_doppler = demo.n_doppler;

        bundle.smear_before =
            smear_metric(raw_img, raw_sum, est.estimate.range_m,
                         est.estimate.radial_velocity_mps);
        bundle.smear_after = smear_metric(bundle.compensated_map, comp, est.estimate.range_m,
                                          est.estimate.radial_velocity_mps);
        bundle.improvement_db =
            10.0 * std::log10(std::max(bundle.smear_after, 1e-12) /
                              std::max(bundle.smear_before, 1e-12));
        demo.targets.push_back(std::move(bundle));
    }
    return demo;
}

std::string manifest_json(const Scene& scene, const std::string& command) {
    json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(scene_to_json_text(scene))));
    j["config_hash"] = hash;
    j["seed"] = scene.seed;
    j["version"] = kVersion;
    j["command"] = command;
    return j.dump(2);
}

}  // namespace nfr
