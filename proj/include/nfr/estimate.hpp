#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nfr/common.hpp"
#include "nfr/scenario.hpp"
#include "nfr/synth.hpp"

namespace nfr {

/// Axis of a likelihood map: value(m) = start + m*step, wrapped into the
/// period (range wraps to [0,period), signed axes to [-period/2, period/2)).
struct MapAxis {
    std::string name;
    double start = 0.0;
    double step = 0.0;
    int size = 0;
    double period = 0.0;
    bool signed_wrap = false;

    double value(double frac_bin) const;
    double bin_of(double value) const;  // inverse, in [0, size)
};

/// Magnitude-squared matched-filter map over (angle, doppler, range) bins.
struct LikelihoodMap {
    std::array<MapAxis, 3> axes;  // [sin(theta), v_r, r], range fastest
    std::vector<double> power;
    std::array<int, 3> pad{1, 1, 1};
    bool noncoherent = false;

    std::size_t index(int a, int d, int r) const {
        return (static_cast<std::size_t>(a) * axes[1].size + d) * axes[2].size + r;
    }
};

struct EstimateOptions {
    std::array<int, 3> pad{4, 4, 8};     // zero-padding: range, doppler, angle
    bool interpolate = true;             // 3-point quadratic per axis
    std::size_t map_budget_bins = 1u << 25;  // materialize threshold (32M bins)
    double vtheta_span = 30.0;           // joint search: v_theta in +-span
    double vtheta_step = 0.0;            // 0 => quarter main-lobe width
    int vr_halfwin_bins = 3;             // joint search v_r window, native Doppler bins
    double vr_step_bins = 0.25;          // joint search v_r step, native bins
    double eps = 0.05;                   // Algorithm-1 termination, m/s
    int max_iter = 10;
    std::optional<std::vector<double>> vtheta_grid;  // explicit override
};

/// (r, v_r, theta) estimate from one map peak.
struct PeakEstimate {
    double range_m = 0.0;
    double radial_velocity_mps = 0.0;
    double sin_theta = 0.0;
    double doa_rad = 0.0;
    double peak_power = 0.0;
    std::array<double, 3> frac_bins{0, 0, 0};  // (angle, doppler, range) on the padded grid
};

/// Search window in physical units (for multi-target local estimation).
struct SearchWindow {
    double range_center = 0.0, range_halfwidth = 0.0;
    double vr_center = 0.0, vr_halfwidth = 0.0;
    double sin_center = 0.0, sin_halfwidth = 0.0;
};

/// Conventional ML over the zero-padded 3-D FFT grid for one subarray cube
/// slice (Q=1) or the noncoherent sum over slices (Q=2), with quadratic
/// interpolation. `map_out` receives the materialized map when requested.
PeakEstimate ml_conventional(const std::vector<const cd*>& cubes, const RadarConfig& cfg,
                             const EstimateOptions& opts,
                             const SearchWindow* window = nullptr,
                             LikelihoodMap* map_out = nullptr);

/// Materialized conventional likelihood map (pads clamped to the budget).
LikelihoodMap likelihood_map(const std::vector<const cd*>& cubes, const RadarConfig& cfg,
                             std::array<int, 3> pad, std::size_t budget_bins);

/// Eq.-style triangulation v_theta = 2 r (v_r0 - v_r1) / (D_bar cos theta).
/// Throws EstimatorShortfall when cos(theta) ~ 0 (caller falls back to 0).
double triangulate_vtheta(double vr0, double vr1, double r, double theta_rad, double dbar);

enum class CompensationKind { BAndZ, BOnly };

/// Elementwise multiply by conj(B_q) (and conj(Z_q) for BAndZ); exact inverse
/// of the migration factors at the true parameters.
void compensate(cd* cube_q, const RadarConfig& cfg, const TargetState& psi_hat,
                ArrayMode mode, int q, CompensationKind kind);

/// Beamform over sensors and matched-filter over fast time of a B-compensated
/// cube: y_q[k] = (1/(LN)) sum_{l,n} conj(eta3[l]) X[l,k,n] conj(eta1[n]).
std::vector<cd> extract_slow_time(const cd* cube_q, const RadarConfig& cfg, double r_hat,
                                  double theta_hat);

struct JointVelocityResult {
    double v_r = 0.0;
    double v_theta = 0.0;
    double objective = 0.0;
    bool sign_ambiguous = false;   // ULA mode: +-v_theta tie, positive reported
    bool grid_warning = false;     // grid coarse vs main-lobe width
    std::vector<double> vtheta_grid;
};

/// argmax over (v_r, v_theta) of sum_q |y_q^H (eta2(v_r) .* zbar_q(r,v_theta,theta))|^2.
JointVelocityResult joint_velocity_search(const std::vector<std::vector<cd>>& ybar,
                                          const RadarConfig& cfg, double r_hat,
                                          double theta_hat, double vr_center,
                                          const EstimateOptions& opts);

struct EstimationResult {
    TargetState estimate;                    // psi_hat (amplitudes untouched)
    std::vector<double> vtheta_trace;        // [triangulation, iter1, iter2, ...]
    std::vector<double> objective_trace;     // Eq.(75)-style objective per iteration
    int iterations = 0;
    bool converged = false;
    bool sign_ambiguous = false;
    bool paired = true;                      // multi-target: cross-subarray pairing ok
    double objective = 0.0;
    std::vector<PeakEstimate> per_subarray;  // step-1 estimates
    std::string warning;
};

/// Algorithm-1 single-target estimation on a cube (pair).
EstimationResult estimate_single(const DataCube& cube, const EstimateOptions& opts = {});

struct MultiTargetResult {
    std::vector<EstimationResult> targets;  // sorted by objective, descending
    bool shortfall = false;                 // fewer than M qualifying peaks
    int requested = 0;
};

/// Algorithm-2: M peaks per subarray with exclusion windows, nearest-neighbor
/// pairing across subarrays in (r, sin theta), then local Algorithm-1 per target.
MultiTargetResult estimate_multi(const DataCube& cube, int M,
                                 const EstimateOptions& opts = {});

/// Noncoherent ML objective sum_q |x_q^H a_q(psi)|^2 (the oracle objective).
double ml_objective(const DataCube& cube, const TargetState& psi);

}  // namespace nfr
