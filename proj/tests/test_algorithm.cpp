#include <doctest.h>

#include <cmath>
#include <random>

#include "nfr/estimate.hpp"
#include "nfr/synth.hpp"

using namespace nfr;

namespace {

// compact separated scene with visible migration, scaled so v_theta is
// identifiable at K=64: long PRI keeps K*T_PRI at 32 ms
Scene tve_scene() {
    Scene s;
    s.radar.bandwidth_hz = 250e6;
    s.radar.chirp_duration_s = 2e-6;
    s.radar.pri_s = 5e-4;
    s.radar.num_chirps = 64;
    s.radar.num_fast_samples = 32;
    s.radar.num_sensors_per_subarray = 8;
    s.radar.subarray_separation_m = 1.0;
    s.mode = ArrayMode::Separated;
    s.snr_db = 35.0;
    s.seed = 5;
    TargetState t;
    t.range_m = 8.0;
    t.radial_velocity_mps = 0.4;   // Doppler ambiguity is ~1.95 m/s here
    t.tangential_velocity_mps = 1.8;
    t.doa_rad = 0.5;
    s.targets = {t};
    return s;
}

}  // namespace

TEST_CASE("single-target estimation on noiseless data") {
    Scene s = tve_scene();
    const auto& t = s.targets[0];
    const DataCube cube = synthesize_noiseless(s);
    EstimateOptions opts;
    opts.vtheta_span = 4.0;
    const auto res = estimate_single(cube, opts);

    CHECK(res.converged);
    CHECK(res.vtheta_trace.size() >= 2);
    CHECK(std::abs(res.estimate.tangential_velocity_mps - t.tangential_velocity_mps) < 0.1);
    CHECK(std::abs(res.estimate.radial_velocity_mps - t.radial_velocity_mps) < 0.02);
    CHECK(std::abs(res.estimate.range_m - t.range_m) < 0.05);
    CHECK_FALSE(res.sign_ambiguous);

    SUBCASE("objective is nondecreasing over iterations") {
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
            CHECK(res.objective_trace[i] >=
                  res.objective_trace[i - 1] * (1.0 - 1e-9));
    }

    SUBCASE("triangulation initialization is reported in the trace") {
        // noiseless on-grid-ish: triangulation lands near the truth already
        CHECK(std::abs(res.vtheta_trace.front()) < 4.0);
    }
}

TEST_CASE("zero tangential velocity converges immediately") {
    Scene s = tve_scene();
    s.targets[0].tangential_velocity_mps = 0.0;
    const DataCube cube = synthesize_noiseless(s);
    EstimateOptions opts;
    opts.vtheta_span = 4.0;
    const auto res = estimate_single(cube, opts);
    CHECK(res.converged);
    CHECK(std::abs(res.vtheta_trace.front()) < 0.2);  // triangulation ~ 0
    const double bin = s.radar.wavelength() / (2.0 * s.radar.observation_time());
    CHECK(std::abs(res.estimate.radial_velocity_mps - s.targets[0].radial_velocity_mps) <
          bin / 10.0);
    CHECK(res.iterations <= 2);
}

TEST_CASE("single-array mode flags the tangential sign as ambiguous") {
    Scene s = tve_scene();
    s.radar.subarray_separation_m = 0.0;
    s.mode = ArrayMode::UlaNearField;
    // a larger v_theta so the slow-time chirp is identifiable at this small K
    s.targets[0].tangential_velocity_mps = 6.0;
    const DataCube cube = synthesize_noiseless(s);
    EstimateOptions opts;
    opts.vtheta_span = 8.0;
    const auto res = estimate_single(cube, opts);
    CHECK(res.sign_ambiguous);
    CHECK(res.estimate.tangential_velocity_mps >= 0.0);  // ties break nonnegative
    CHECK(std::abs(std::abs(res.estimate.tangential_velocity_mps) -
                   s.targets[0].tangential_velocity_mps) < 0.5);
}

TEST_CASE("compensation restores the stationary peak height") {
    // a migrating target, compensated at the truth, matches a stationary
    // target of equal SNR put through the same pipeline (a stationary target
    // still carries the position-dependent inter-subarray factors)
    Scene moving = tve_scene();
    moving.targets[0].radial_velocity_mps = 0.9;
    moving.targets[0].tangential_velocity_mps = 2.2;
    Scene still = moving;
    still.targets[0].radial_velocity_mps = 0.0;
    still.targets[0].tangential_velocity_mps = 0.0;

    const DataCube mc = synthesize_noiseless(moving);
    const DataCube sc = synthesize_noiseless(still);
    DataCube comp_m = mc, comp_s = sc;
    for (int q = 0; q < 2; ++q) {
        compensate(comp_m.subarray(q), moving.radar, moving.targets[0], ArrayMode::Separated,
                   q, CompensationKind::BAndZ);
        compensate(comp_s.subarray(q), still.radar, still.targets[0], ArrayMode::Separated, q,
                   CompensationKind::BAndZ);
    }
    EstimateOptions opts;
    std::vector<const cd*> vm{comp_m.subarray(0), comp_m.subarray(1)};
    std::vector<const cd*> vs{comp_s.subarray(0), comp_s.subarray(1)};
    const auto em = ml_conventional(vm, moving.radar, opts);
    const auto es = ml_conventional(vs, still.radar, opts);
    const double diff_db = 10.0 * std::log10(es.peak_power / em.peak_power);
    CHECK(std::abs(diff_db) < 0.1);
    // and both sit at the theoretical matched-filter level
    const double lnk = static_cast<double>(moving.radar.num_sensors_per_subarray) *
                       moving.radar.num_chirps * moving.radar.num_fast_samples;
    CHECK(em.peak_power == doctest::Approx(2.0 * lnk * lnk).epsilon(0.01));
}

TEST_CASE("multi-target estimation") {
    SUBCASE("M=1 reduces to the single-target path") {
        Scene s = tve_scene();
        const DataCube cube = synthesize(s);
        EstimateOptions opts;
        opts.vtheta_span = 4.0;
        const auto single = estimate_single(cube, opts);
        const auto multi = estimate_multi(cube, 1, opts);
        REQUIRE(multi.targets.size() == 1);
        CHECK(multi.targets[0].estimate.tangential_velocity_mps ==
              single.estimate.tangential_velocity_mps);
        CHECK(multi.targets[0].estimate.range_m == single.estimate.range_m);
    }

    SUBCASE("two separated targets both recovered") {
        Scene s = tve_scene();
        TargetState a = s.targets[0];
        TargetState b = a;
        b.range_m = 14.0;
        b.radial_velocity_mps = -0.6;
        b.tangential_velocity_mps = -1.2;
        b.doa_rad = -0.4;
        s.targets = {a, b};
        s.snr_db = 30.0;
        const DataCube cube = synthesize(s);
        EstimateOptions opts;
        opts.vtheta_span = 4.0;
        const auto multi = estimate_multi(cube, 2, opts);
        REQUIRE(multi.targets.size() == 2);
        CHECK_FALSE(multi.shortfall);
        // match by range
        const bool first_is_a =
            std::abs(multi.targets[0].estimate.range_m - a.range_m) <
            std::abs(multi.targets[0].estimate.range_m - b.range_m);
        const auto& ea = first_is_a ? multi.targets[0] : multi.targets[1];
        const auto& eb = first_is_a ? multi.targets[1] : multi.targets[0];
        CHECK(std::abs(ea.estimate.range_m - a.range_m) < 0.3);
        CHECK(std::abs(eb.estimate.range_m - b.range_m) < 0.3);
        CHECK(std::abs(ea.estimate.tangential_velocity_mps - a.tangential_velocity_mps) < 0.4);
        CHECK(std::abs(eb.estimate.tangential_velocity_mps - b.tangential_velocity_mps) < 0.4);
        CHECK(ea.paired);
        CHECK(eb.paired);
    }

    SUBCASE("colliding targets raise the shortfall flag") {
        Scene s = tve_scene();
        TargetState a = s.targets[0];
        TargetState b = a;  // same cell: indistinguishable, violates A12
        b.range_m += 1e-4;
        s.targets = {a, b};
        const DataCube cube = synthesize(s);
        EstimateOptions opts;
        opts.vtheta_span = 4.0;
        const auto multi = estimate_multi(cube, 2, opts);
        CHECK(multi.shortfall);
        CHECK(static_cast<int>(multi.targets.size()) < 2);
    }
}
