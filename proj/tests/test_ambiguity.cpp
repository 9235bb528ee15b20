#include <doctest.h>

#include <cmath>

#include "nfr/ambiguity.hpp"
#include "nfr/bounds.hpp"
#include "nfr/estimate.hpp"
#include "nfr/synth.hpp"

using namespace nfr;

namespace {

RadarConfig fig3_config(double dbar = 0.0, int N = 4) {
    RadarConfig cfg;
    cfg.carrier_frequency_hz = 77e9;
    cfg.bandwidth_hz = 250e6;
    cfg.chirp_duration_s = 2e-6;
    cfg.pri_s = 20e-6;
    cfg.num_chirps = 2500;
    cfg.num_fast_samples = N;
    cfg.num_sensors_per_subarray = 50;
    cfg.subarray_separation_m = dbar;
    return cfg;
}

TargetState fig3_target() {
    TargetState t;
    t.range_m = 90.0;
    t.radial_velocity_mps = -20.0;
    t.tangential_velocity_mps = 10.0;
    t.doa_rad = 40.0 * kPi / 180.0;
    return t;
}

}  // namespace

TEST_CASE("af normalization and self-correlation") {
    auto cfg = fig3_config(0.0, 8);
    cfg.num_chirps = 128;  // small
    const auto t = fig3_target();
    const cd self = af_exact(cfg, t, t, ArrayMode::UlaNearField);
    CHECK(std::abs(self - cd(1, 0)) < 1e-12);

    auto scfg = fig3_config(1.0, 8);
    scfg.num_chirps = 128;
    const cd mself = af_exact(scfg, t, t, ArrayMode::Separated);
    CHECK(mself.real() == doctest::Approx(1.0).epsilon(1e-12));

    // separated magnitude stays in [0, 1]
    TargetState off = t;
    off.tangential_velocity_mps = -3.0;
    off.radial_velocity_mps += 0.05;
    const cd m = af_exact(scfg, off, t, ArrayMode::Separated);
    CHECK(m.real() <= 1.0 + 1e-12);
    CHECK(m.real() >= 0.0);
}

TEST_CASE("closed-form v_theta cut equals the exact AF") {
    auto cfg = fig3_config(0.0, 4);
    cfg.num_chirps = 400;  // keep the exact inner products affordable
    const auto t = fig3_target();
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(-20.0 + i * 1.0);
    const auto cut = af_cut_vtheta_ula(cfg, t, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        TargetState h = t;
        h.tangential_velocity_mps = grid[i];
        const cd exact = af_exact(cfg, h, t, ArrayMode::UlaNearField);
        CHECK(std::abs(cut.values[i] - exact) < 1e-10);
    }
}

TEST_CASE("mirror tangential velocity is ambiguous for the single array") {
    auto cfg = fig3_config();
    const auto t = fig3_target();
    const auto cut = af_cut_vtheta_ula(cfg, t, {-10.0, 10.0});
    const double mirror_db = 20.0 * std::log10(cut.magnitude[0] / cut.magnitude[1]);
    CHECK(cut.magnitude[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mirror_db > -1.0);  // within 1 dB of the main lobe
}

TEST_CASE("large-L sinc approximation of g_k") {
    auto cfg = fig3_config();
    const auto t = fig3_target();
    const auto grid = default_vtheta_grid(t, 128);
    const auto exact = af_cut_vtheta_ula(cfg, t, grid, false);
    const auto approx = af_cut_vtheta_ula(cfg, t, grid, true);
    double worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(exact.magnitude[i] - approx.magnitude[i]));
    CHECK(worst < 0.02);
}

TEST_CASE("separated-array v_r/v_theta cut") {
    auto cfg = fig3_config(1.5);
    const auto t = fig3_target();

    SUBCASE("ridge slopes are D_q cos(theta)/(2r)") {
        const auto res = af_cut_vr_vtheta(cfg, t, {t.radial_velocity_mps}, {10.0});
        CHECK(res.ridge_slope[0] ==
              doctest::Approx(-0.75 * std::cos(t.doa_rad) / 180.0).epsilon(1e-12));
        CHECK(res.ridge_slope[1] ==
              doctest::Approx(0.75 * std::cos(t.doa_rad) / 180.0).epsilon(1e-12));
    }

    SUBCASE("mirror point sits near -3 dB") {
        // ridge of subarray q at dv_r = slope_q * dv_theta, dv_theta = -2 v
        std::vector<double> vr1, vt1{-t.tangential_velocity_mps};
        const double slope = 0.75 * std::cos(t.doa_rad) / (2.0 * t.range_m);
        const double dvr = slope * (-2.0 * t.tangential_velocity_mps);
        for (int i = -8; i <= 8; ++i) vr1.push_back(t.radial_velocity_mps + dvr + i * 0.002);
        const auto res = af_cut_vr_vtheta(cfg, t, vr1, vt1);
        double best = 0;
        for (double m : res.combined.magnitude) best = std::max(best, m);
        const double db = 20.0 * std::log10(best);
        CHECK(db > -3.5);
        CHECK(db < -2.5);
    }

    SUBCASE("zero separation collapses to the single-array cut") {
        auto cfg0 = fig3_config(0.0);
        cfg0.num_chirps = 500;
        auto cfgd = cfg0;
        cfgd.subarray_separation_m = 1e-12;  // effectively zero
        const auto grid = default_vtheta_grid(fig3_target(), 64);
        const auto ula = af_cut_vtheta_ula(cfg0, t, grid);
        const auto sep = af_cut_vr_vtheta(cfgd, t, {t.radial_velocity_mps}, grid);
        for (std::size_t j = 0; j < grid.size(); ++j)
            CHECK(sep.combined.magnitude[sep.combined.index(0, j)] ==
                  doctest::Approx(ula.magnitude[j]).epsilon(1e-9));
    }
}

TEST_CASE("noncoherent objective equals SNR times |AF|^2 on noiseless data") {
    Scene s;
    s.radar = fig3_config(0.8, 8);
    s.radar.num_chirps = 96;
    s.radar.num_sensors_per_subarray = 6;
    s.mode = ArrayMode::Separated;
    s.snr_db = 18.0;
    TargetState t;
    t.range_m = 40.0;
    t.radial_velocity_mps = 3.0;
    t.tangential_velocity_mps = 6.0;
    t.doa_rad = 0.3;
    t.amplitudes = {std::polar(1.0, 0.7), std::polar(1.0, -0.4)};  // equal magnitudes
    t.amplitudes_set = true;
    s.targets = {t};
    const DataCube cube = synthesize_noiseless(s);
    const double lnk = static_cast<double>(s.radar.num_sensors_per_subarray) *
                       s.radar.num_chirps * s.radar.num_fast_samples;
    const double snr = snr_linear(s.radar, t, ArrayMode::Separated, cube.noise_var);

    for (double dvt : {0.0, -12.0, 2.5}) {
        TargetState h = t;
        h.tangential_velocity_mps += dvt;
        h.radial_velocity_mps += 0.01 * dvt;
        const double obj = ml_objective(cube, h) / (lnk * cube.noise_var);
        const double af = af_exact(s.radar, h, t, ArrayMode::Separated).real();
        CHECK(obj == doctest::Approx(snr * af * af).epsilon(1e-9));
    }
}

TEST_CASE("magnitude symmetry under mirrored geometry") {
    auto cfg = fig3_config(1.0);
    cfg.num_chirps = 300;
    const auto t = fig3_target();
    TargetState tm = t;
    tm.tangential_velocity_mps = -t.tangential_velocity_mps;
    tm.doa_rad = -t.doa_rad;
    for (double dvt : {1.0, -4.0}) {
        TargetState h = t, hm = tm;
        h.tangential_velocity_mps += dvt;
        hm.tangential_velocity_mps -= dvt;
        const double a = af_exact(cfg, h, t, ArrayMode::Separated).real();
        const double b = af_exact(cfg, hm, tm, ArrayMode::Separated).real();
        CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
}

TEST_CASE("db floor") {
    CHECK(magnitude_db(1.0) == doctest::Approx(0.0));
    CHECK(magnitude_db(0.0) == doctest::Approx(-60.0));
    CHECK(magnitude_db(1e-9) == doctest::Approx(-60.0));
}
