#include "nfr/synth.hpp"

#include <cmath>
#include <random>

namespace nfr {

double noise_variance_for_snr(const RadarConfig& cfg, double snr_db) {
    const double snr = std::pow(10.0, snr_db / 10.0);
    if (!(snr > 0)) throw ValidationError("SNR must be positive in linear scale");
    const double lnk = static_cast<double>(cfg.num_sensors_per_subarray) * cfg.num_chirps *
                       cfg.num_fast_samples;
    return cfg.num_subarrays() * lnk / snr;
}

namespace kernels {

void add_noise(DataCube& cube, double sigma_w2, std::uint64_t seed) {
    const int Q = cube.num_subarrays;
    const int K = cube.cfg.num_chirps;
    const int L = cube.cfg.num_sensors_per_subarray;
    const int N = cube.cfg.num_fast_samples;
    const double sd = std::sqrt(sigma_w2 / 2.0);
    const std::ptrdiff_t blocks = static_cast<std::ptrdiff_t>(Q) * K;
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t b = 0; b < blocks; ++b) {
        const int q = static_cast<int>(b / K);
        const int k = static_cast<int>(b % K);
        std::mt19937_64 rng(substream(seed, 0x6e6f6973u /*"nois"*/, q, k));
        std::normal_distribution<double> gauss(0.0, sd);
        for (int l = 0; l < L; ++l) {
            cd* row = &cube.at(q, l, k, 0);
            for (int n = 0; n < N; ++n) row[n] += cd(gauss(rng), gauss(rng));
        }
    }
}

}  // namespace kernels

namespace {

// Model amplitudes: user-specified, or unit magnitude with per-subarray random
// phases (noncoherent subarrays); coherent_amplitudes draws one phase per target.
std::vector<std::array<cd, 2>> resolve_amplitudes(const Scene& scene) {
    std::vector<std::array<cd, 2>> amps(scene.targets.size());
    const int Q = scene.mode == ArrayMode::Separated ? 2 : 1;
    for (std::size_t m = 0; m < scene.targets.size(); ++m) {
        const auto& t = scene.targets[m];
        if (t.amplitudes_set) {
            for (int q = 0; q < Q; ++q) {
                if (std::abs(t.amplitudes[q]) == 0.0)
                    throw ValidationError("target amplitude is zero");
                amps[m][q] = t.amplitudes[q];
            }
            if (Q == 1) amps[m][1] = amps[m][0];
            continue;
        }
        for (int q = 0; q < 2; ++q) {
            std::mt19937_64 rng(
                substream(scene.seed, 0x616d7000u /*"amp"*/, m, scene.coherent_amplitudes ? 0 : q));
            std::uniform_real_distribution<double> uni(0.0, kTwoPi);
            amps[m][q] = std::polar(1.0, uni(rng));
        }
    }
    return amps;
}

DataCube synthesize_impl(const Scene& scene, bool with_noise) {
    scene.validate();
    DataCube cube;
    cube.cfg = scene.radar;
    cube.num_subarrays = scene.mode == ArrayMode::Separated ? 2 : 1;
    cube.samples.assign(cube.subarray_size() * cube.num_subarrays, cd(0, 0));
    cube.noise_var = noise_variance_for_snr(scene.radar, scene.snr_db);
    cube.seed = scene.seed;
    cube.fidelity = scene.fidelity;

    const auto amps = resolve_amplitudes(scene);
    const ModelKind kind = model_kind(scene.mode);
    const bool separated = scene.mode == ArrayMode::Separated;

    for (int q = 0; q < cube.num_subarrays; ++q) {
        for (std::size_t m = 0; m < scene.targets.size(); ++m) {
            if (scene.fidelity == Fidelity::Approx) {
                kernels::accumulate_target(cube.subarray(q), scene.radar, scene.targets[m],
                                           kind, q, amps[m][q]);
            } else {
                const RadarConfig& cfg = scene.radar;
                const TargetState& tgt = scene.targets[m];
                const cd amp = amps[m][q];
                const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps,
                          N = cfg.num_fast_samples;
                cd* out = cube.subarray(q);
#pragma omp parallel for schedule(static) if (exec::parallel())
                for (int k = 0; k < K; ++k) {
                    for (int l = 0; l < L; ++l) {
                        cd* row = out + (static_cast<std::size_t>(l) * K + k) * N;
                        for (int n = 0; n < N; ++n)
                            row[n] += amp * exact_sample(cfg, tgt, q, l, k, n, separated);
                    }
                }
            }
        }
    }
    if (with_noise) kernels::add_noise(cube, cube.noise_var, scene.seed);
    return cube;
}

}  // namespace

DataCube synthesize(const Scene& scene) { return synthesize_impl(scene, true); }

DataCube synthesize_noiseless(const Scene& scene) { return synthesize_impl(scene, false); }

cd exact_sample(const RadarConfig& cfg, const TargetState& tgt, int q, int l, int k, int n,
                bool separated) {
    const double lambda = cfg.wavelength();
    const double c = cfg.wave_speed_mps;
    const double a = cfg.chirp_slope();
    const double omega_c = kTwoPi * cfg.carrier_frequency_hz;
    const double r = tgt.range_m;
    const double sinth = std::sin(tgt.doa_rad), costh = std::cos(tgt.doa_rad);

    const double Tk = (k - (cfg.num_chirps - 1) / 2.0) * cfg.pri_s;
    const double tn = cfg.chirp_duration_s / cfg.num_fast_samples *
                      (n - (cfg.num_fast_samples - 1) / 2.0);
    const double t = Tk + tn;

    const double Dq = separated ? cfg.subarray_center(q) : 0.0;
    const double xs = Dq + lambda / 2.0 * (l - (cfg.num_sensors_per_subarray - 1) / 2.0);

    const auto [vx, vy] =
        invert_geometry(tgt.radial_velocity_mps, tgt.tangential_velocity_mps, tgt.doa_rad);
    const double px = r * sinth + vx * t;
    const double py = r * costh + vy * t;
    const double r_tx = std::hypot(px, py);        // transmitter at the origin
    const double r_l = std::hypot(px - xs, py);    // l-th sensor
    const double tau = (r_tx + r_l) / c;

    // mixed chirp: exp(-j(2 pi a (t - T_k) + w_c) tau) * exp(j pi a tau^2)
    double phase = -(kTwoPi * a * (t - Tk) + omega_c) * tau + kPi * a * tau * tau;

    // fold the constants so that a unit model amplitude beta_q = 1 is
    // reproduced: beta = alpha exp(j 4 pi a r^2/c^2) exp(-j w_c 2r/c), and for
    // the separated array additionally
    // exp(j 2 pi D_q sin(theta)/lambda) exp(-j pi cos^2(theta) D_q^2/(r lambda))
    phase += -4.0 * kPi * a * r * r / (c * c) + omega_c * 2.0 * r / c;
    if (separated)
        phase += -kTwoPi * Dq * sinth / lambda + kPi * costh * costh * Dq * Dq / (r * lambda);
    return std::polar(1.0, phase);
}

ApproximationErrorReport approximation_error(const RadarConfig& cfg, const TargetState& tgt,
                                             double budget_rad) {
    cfg.validate();
    tgt.validate();
    ApproximationErrorReport rep;
    rep.budget_rad = budget_rad;

    const double lambda = cfg.wavelength();
    const double c = cfg.wave_speed_mps;
    const double dr = cfg.range_resolution();
    const double rmax = cfg.range_ambiguity();
    const double D = cfg.subarray_aperture();
    const double Tobs = cfg.observation_time();
    const double Tc = cfg.chirp_duration_s;
    const double BW = cfg.bandwidth_hz;
    const double r = tgt.range_m;
    const double vT = tgt.speed();
    const double vr = std::abs(tgt.radial_velocity_mps);
    const double nfsa = std::abs(tgt.tangential_velocity_mps) * Tobs;

    auto push = [&](std::vector<ApproximationBound>& v, std::string name, double item) {
        // appendix items bound phase/pi; report radians
        ApproximationBound b;
        b.name = std::move(name);
        b.value = kPi * item;
        b.pass = b.value < budget_rad;
        v.push_back(b);
    };

    // residual of exp(j pi a tau^2) vs the folded constant
    push(rep.appendix_a, "quad_residual_slow_time", 2.0 * vT * Tobs * r / (rmax * dr));
    push(rep.appendix_a, "quad_residual_quadratic",
         2.0 * vT * Tobs * r / (rmax * dr) * (vT * Tobs / (2.0 * r)));
    push(rep.appendix_a, "quad_residual_aperture_offset", 2.0 * D * r / (rmax * dr));
    push(rep.appendix_a, "quad_residual_aperture_motion", 2.0 * D * vT * Tobs / (rmax * dr));
    push(rep.appendix_a, "quad_residual_aperture_square", D * D / (rmax * dr));

    rep.appendix_c_bound =
        BW * nfsa * nfsa / (r * c) + BW * (nfsa + D) * (nfsa + D) / (r * c);

    push(rep.appendix_h, "fast_time_walk_square", 2.0 * vr * Tc / dr);
    push(rep.appendix_h, "fast_time_doppler", 4.0 * vT * Tc / lambda);
    push(rep.appendix_h, "fast_time_chirp_cross", 4.0 * vT * Tc / lambda * (vT * Tobs / r));
    push(rep.appendix_h, "fast_time_chirp_square", 4.0 * vT * Tc / lambda * (vT * Tobs / r));
    push(rep.appendix_h, "fast_time_spatial", 2.0 * vT * Tc / lambda * (D / r));

    // exact r_l(t) vs the second-order expansion, over the observation window
    // and the physical sensor positions (both subarrays when separated)
    const auto [vx, vy] = invert_geometry(tgt.radial_velocity_mps,
                                          tgt.tangential_velocity_mps, tgt.doa_rad);
    const double sinth = std::sin(tgt.doa_rad), costh = std::cos(tgt.doa_rad);
    std::vector<double> xs;
    for (int q = 0; q < cfg.num_subarrays(); ++q) {
        const double Dq = cfg.separated() ? cfg.subarray_center(q) : 0.0;
        for (double dl : cfg.sensor_positions()) xs.push_back(Dq + dl);
    }
    double worst = 0.0;
    const double tmax = (Tobs + Tc) / 2.0;
    const int steps = 201;
    for (int i = 0; i < steps; ++i) {
        const double t = -tmax + 2.0 * tmax * i / (steps - 1);
        for (double x : xs) {
            const double px = r * sinth + vx * t;
            const double py = r * costh + vy * t;
            const double exact = std::hypot(px - x, py);
            const double approx =
                r + tgt.radial_velocity_mps * t - x * sinth +
                0.5 / r * (tgt.tangential_velocity_mps * t - x * costh) *
                    (tgt.tangential_velocity_mps * t - x * costh);
            worst = std::max(worst, std::abs(exact - approx));
        }
    }
    rep.taylor_residual_m = worst;

    rep.all_pass = kPi * rep.appendix_c_bound < budget_rad &&
                   4.0 * kPi * worst / lambda < budget_rad;
    for (const auto& b : rep.appendix_a) rep.all_pass = rep.all_pass && b.pass;
    for (const auto& b : rep.appendix_h) rep.all_pass = rep.all_pass && b.pass;
    return rep;
}

double exact_vs_approx_max_phase(const Scene& scene) {
    if (scene.targets.size() != 1)
        throw ValidationError("exact-vs-approx comparison expects a single target");
    Scene approx = scene;
    approx.fidelity = Fidelity::Approx;
    Scene exact = scene;
    exact.fidelity = Fidelity::Exact;
    const DataCube xa = synthesize_noiseless(approx);
    const DataCube xe = synthesize_noiseless(exact);
    double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst) if (exec::parallel())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(xa.samples.size()); ++i) {
        const double d = std::abs(std::arg(xe.samples[i] * std::conj(xa.samples[i])));
        worst = std::max(worst, d);
    }
    return worst;
}

}  // namespace nfr
