#pragma once

#include <vector>

#include "nfr/common.hpp"
#include "nfr/scenario.hpp"
#include "nfr/steering.hpp"

namespace nfr::ref {

// Serial reference implementations of the hot kernels: one std::polar per
// sample straight from the phase model, no factoring, no recurrences, no
// threading. The unit tests hold the OpenMP kernels to these, and the bench
// tool times the two side by side.

void accumulate_target(cd* cube, const RadarConfig& cfg, const TargetState& tgt,
                       ModelKind kind, int q, cd amplitude);

void compensate_in_place(cd* cube, const RadarConfig& cfg, const TargetState& psi_hat,
                         ModelKind kind, int q, bool include_z);

std::vector<cd> extract_slow_time(const cd* cube_q, const RadarConfig& cfg, double r_hat,
                                  double theta_hat);

/// Direct DFT of the conventional matched filter at one (r, v_r, sin_theta).
cd matched_filter_point(const cd* cube_q, const RadarConfig& cfg, double r, double v_r,
                        double sin_theta);

/// FIM accumulation by direct per-sample gradient sums.
std::vector<double> fim(const RadarConfig& cfg, const TargetState& tgt, ArrayMode mode,
                        double noise_var);

}  // namespace nfr::ref
