// Times the OpenMP kernels against the serial reference implementations on a
// mid-size configuration and prints a speedup table.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "nfr/bounds.hpp"
#include "nfr/estimate.hpp"
#include "nfr/reference.hpp"
#include "nfr/scenario.hpp"
#include "nfr/steering.hpp"
#include "nfr/synth.hpp"

using namespace nfr;

namespace {

double time_ms(const std::function<void()>& fn, int reps = 3) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count());
    }
    return best;
}

void row(const char* name, double ref_ms, double omp_ms) {
    std::printf("%-28s %10.1f ms %10.1f ms %8.2fx\n", name, ref_ms, omp_ms,
                ref_ms / omp_ms);
}

}  // namespace

int main() {
    RadarConfig cfg;
    cfg.num_chirps = 512;
    cfg.num_fast_samples = 256;
    cfg.num_sensors_per_subarray = 32;
    cfg.subarray_separation_m = 1.0;
    cfg.pri_s = 50e-6;

    TargetState tgt;
    tgt.range_m = 60.0;
    tgt.radial_velocity_mps = -8.0;
    tgt.tangential_velocity_mps = 10.0;
    tgt.doa_rad = 40.0 * kPi / 180.0;

    const std::size_t sz = static_cast<std::size_t>(cfg.num_sensors_per_subarray) *
                           cfg.num_chirps * cfg.num_fast_samples;
    std::vector<cd> a(sz), b(sz);
    std::printf("L=%d K=%d N=%d (%zu samples/subarray)\n", cfg.num_sensors_per_subarray,
                cfg.num_chirps, cfg.num_fast_samples, sz);
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial ref", "openmp", "speedup");

    row("steering fill",
        time_ms([&] {
            std::fill(a.begin(), a.end(), cd(0, 0));
            ref::accumulate_target(a.data(), cfg, tgt, ModelKind::Separated, 0, cd(1, 0));
        }),
        time_ms([&] {
            std::fill(b.begin(), b.end(), cd(0, 0));
            kernels::accumulate_target(b.data(), cfg, tgt, ModelKind::Separated, 0, cd(1, 0));
        }));

    row("migration compensation",
        time_ms([&] { ref::compensate_in_place(a.data(), cfg, tgt, ModelKind::Separated, 0, true); }),
        time_ms([&] {
            kernels::compensate_in_place(b.data(), cfg, tgt, ModelKind::Separated, 0, true);
        }));

    row("slow-time extraction",
        time_ms([&] { ref::extract_slow_time(a.data(), cfg, tgt.range_m, tgt.doa_rad); }),
        time_ms([&] { extract_slow_time(b.data(), cfg, tgt.range_m, tgt.doa_rad); }));

    {
        RadarConfig small = cfg;
        small.num_chirps = 128;
        small.num_fast_samples = 64;
        small.num_sensors_per_subarray = 16;
        const double nv = noise_variance_for_snr(small, 20.0);
        row("fisher information",
            time_ms([&] { (void)ref::fim(small, tgt, ArrayMode::Separated, nv); }),
            time_ms([&] { (void)fim_numeric(small, tgt, ArrayMode::Separated, nv); }));
    }

    {
        exec::set_parallel(false);
        const double serial_map = time_ms([&] {
            (void)likelihood_map({b.data()}, cfg, {2, 2, 2}, SIZE_MAX);
        });
        exec::set_parallel(true);
        const double omp_map = time_ms([&] {
            (void)likelihood_map({b.data()}, cfg, {2, 2, 2}, SIZE_MAX);
        });
        row("padded 3-D likelihood map", serial_map, omp_map);
    }
    return 0;
}
