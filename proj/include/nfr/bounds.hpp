#pragma once

#include <string>
#include <vector>

#include "nfr/common.hpp"
#include "nfr/scenario.hpp"

namespace nfr {

/// Fisher information and CRB for one target. Parameter ordering:
/// ULA  [beta_r, beta_i, r, v_r, v_theta, theta]
/// Sep  [beta_0r, beta_0i, beta_1r, beta_1i, r, v_r, v_theta, theta]
struct FimReport {
    ArrayMode mode = ArrayMode::UlaNearField;
    std::vector<std::string> param_names;
    std::vector<double> J;   // row-major dim x dim
    std::vector<double> C;   // inverse (or pseudo-inverse)
    int dim = 0;
    int vtheta_index = 0;
    double crb_vtheta_numeric = 0.0;      // [J^-1]_{v_theta}
    double crb_vtheta_schur_beta = 0.0;   // beta-nuisance Schur reduction only
    double crb_vtheta_closed = 0.0;       // closed form below
    double P1 = 0.0, P2 = 0.0, P3 = 0.0, Ds2 = 0.0, snr_linear = 0.0;
    bool ill_conditioned = false;
    bool used_pseudo_inverse = false;

    double j_at(int i, int m) const { return J[static_cast<std::size_t>(i) * dim + m]; }
    double c_at(int i, int m) const { return C[static_cast<std::size_t>(i) * dim + m]; }
};

/// FIM from analytic steering derivatives (phase-linear factors), inverted for
/// the CRB. mode Conventional is not meaningful here (no v_theta information).
FimReport fim_numeric(const RadarConfig& cfg, const TargetState& tgt, ArrayMode mode,
                      double noise_var);

/// Central-difference FIM used as the test oracle for fim_numeric.
std::vector<double> fim_finite_difference(const RadarConfig& cfg, const TargetState& tgt,
                                          ArrayMode mode, double noise_var,
                                          double rel_step = 1e-6);

struct ClosedFormCrb {
    double value = 0.0;    // m^2/s^2; +inf when unbounded
    double P1 = 0.0, P2 = 0.0, P3 = 0.0, Ds2 = 0.0, snr_linear = 0.0;
    bool unbounded = false;
    bool asymptotic_warning = false;  // K < 100
};

/// Closed-form CRB of v_theta:
///   r^2 lambda^2 / (pi^2 (K T_PRI)^2 (P1 + P2 [+ P3]) SNR)
/// with P1 = 8 NFSA^2/45, P2 = 2 Ds^2 cos^2(theta)/(3L), P3 = D_bar^2 cos^2(theta)/6.
ClosedFormCrb crb_vtheta_closed(const RadarConfig& cfg, const TargetState& tgt,
                                ArrayMode mode, double noise_var);

/// SNR of Eq.-(57)/(60) form for the target's amplitudes.
double snr_linear(const RadarConfig& cfg, const TargetState& tgt, ArrayMode mode,
                  double noise_var);

}  // namespace nfr
