#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nfr/common.hpp"
#include "nfr/estimate.hpp"
#include "nfr/scenario.hpp"

namespace nfr {

enum class SweepParam { SnrDb, Dbar, Vtheta };

SweepParam sweep_param_from_string(const std::string& s);
std::string to_string(SweepParam p);

struct SweepSpec {
    Scene base;
    SweepParam param = SweepParam::SnrDb;
    std::vector<double> grid;   // strictly monotone
    int trials = 100;
    std::uint64_t seed = 0;
    EstimateOptions opts;
    bool force = false;         // skip the assumption gate

    void validate() const;
};

struct SweepPoint {
    double value = 0.0;          // swept parameter value
    double rmse_vtheta = 0.0;
    double rmse_vr = 0.0;
    double rmse_range = 0.0;
    double rmse_theta = 0.0;
    double crb_vtheta = 0.0;     // closed form
    double sign_error_rate = 0.0;
    double convergence_rate = 0.0;
    int failures = 0;
    bool degraded = false;       // failure rate > 50%
    double wall_ms = 0.0;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepPoint> points;

    std::string csv() const;
    std::string json() const;
};

SweepResult run_sweep(const SweepSpec& spec);

/// First grid SNR (dB) at which RMSE < 3*sqrt(CRB); one past the grid end when
/// never reached.
double threshold_snr_db(const SweepResult& result);

struct TargetMapBundle {
    int target_index = 0;
    // theta-maximized (range x doppler) images, row-major doppler-fastest
    std::vector<double> raw_map;         // noncoherent sum of raw per-subarray maps
    std::vector<double> compensated_map; // after B&Z compensation, refined stage
    int n_range = 0, n_doppler = 0;
    double smear_before = 0.0;  // peak power / window energy, in (0,1]
    double smear_after = 0.0;
    double improvement_db = 0.0;
    EstimationResult estimate;
};

struct MultiTargetDemo {
    std::vector<TargetMapBundle> targets;
    MultiTargetResult estimates;
    // raw per-subarray theta-maximized maps (Fig.-9 style), one per q
    std::vector<std::vector<double>> raw_subarray_maps;
    int n_range = 0, n_doppler = 0;
};

MultiTargetDemo run_multitarget_demo(const Scene& scene, int M,
                                     const EstimateOptions& opts = {});

/// Output manifest: config hash, seed, version (written next to CSV/JSON).
std::string manifest_json(const Scene& scene, const std::string& command);

}  // namespace nfr
