#pragma once

#include <vector>

#include "nfr/common.hpp"
#include "nfr/scenario.hpp"

namespace nfr {

/// Per-axis information vectors of the conventional model.
std::vector<cd> eta1_range(const RadarConfig& cfg, double r);        // length N
std::vector<cd> eta2_doppler(const RadarConfig& cfg, double v_r);    // length K
std::vector<cd> eta3_doa(const RadarConfig& cfg, double theta_rad);  // length L

/// Slow-time tangential-velocity vector of subarray q,
/// [z_bar_q]_k = exp(-j2pi v_theta^2 T_k^2 / (r lambda)) * exp(j2pi D_q v_theta cos(theta) T_k / (r lambda)).
std::vector<cd> zbar_q(const RadarConfig& cfg, double r, double v_theta, double theta_rad,
                       int q);

/// Which migration factors enter the model.
enum class ModelKind {
    Conventional,   // E only
    UlaNearField,   // E, B = slow-time range walk, Z with both Doppler-migration factors
    UlaGeneral,     // E, full B (adds spatial range walk + DOA migration), Z
    Separated,      // E, B_q, Z_q of the two-subarray model
};

ModelKind model_kind(ArrayMode mode, bool full_ula_model = false);

/// Total steering phase at one grid point; the steering entry is exp(j*phase).
/// q is ignored for single-array kinds.
double steering_phase(const RadarConfig& cfg, const TargetState& tgt, ModelKind kind, int q,
                      int l, int k, int n);

/// d(phase)/d(psi_i) for psi = [r, v_r, v_theta, theta]; same indexing as above.
std::array<double, 4> steering_phase_gradient(const RadarConfig& cfg, const TargetState& tgt,
                                              ModelKind kind, int q, int l, int k, int n);

/// Materialized steering tensors, each L*K*N row-major (n fastest).
/// Vectors left empty when the factor is identically one for the kind.
struct SteeringSet {
    int L = 0, K = 0, N = 0;
    std::vector<cd> e;  // conventional tensor E
    std::vector<cd> b;  // nuisance tensor B or B_q
    std::vector<cd> z;  // Doppler-migration tensor Z or Z_q
    std::vector<cd> a;  // flattened steering vector e.*b.*z

    std::size_t size() const { return static_cast<std::size_t>(L) * K * N; }
    std::size_t index(int l, int k, int n) const {
        return (static_cast<std::size_t>(l) * K + k) * N + n;
    }
};

/// E(r, v_r, theta) as the outer product eta3 o eta2 o eta1 (only `e` filled).
SteeringSet conventional_steering(const RadarConfig& cfg, double r, double v_r,
                                  double theta_rad);

/// B and Z of the single-ULA near-field model; full_model additionally keeps
/// the spatial range-walk and DOA-migration factors of the general model in B.
SteeringSet migration_tensors_ula(const RadarConfig& cfg, double r, double v_r,
                                  double v_theta, double theta_rad,
                                  bool full_model = false);

/// E, B_q, Z_q and a_q(psi) for subarray q of the separated model.
SteeringSet separated_steering(const RadarConfig& cfg, const TargetState& tgt, int q);

/// Flattened steering vector a(psi) (ULA kinds) or a_q(psi) (Separated), built
/// by the factored fast path; matches exp(j*steering_phase) to ~1e-12.
std::vector<cd> steering_vector(const RadarConfig& cfg, const TargetState& tgt,
                                ModelKind kind, int q);

namespace kernels {

/// cube += amplitude * a_q(psi), factored as C1[l,k]*C2[k,n] (times C3[l,n] for
/// the general ULA kind); parallel over chirps.
void accumulate_target(cd* cube, const RadarConfig& cfg, const TargetState& tgt,
                       ModelKind kind, int q, cd amplitude);

/// cube *= conj(B_q(psi_hat)) and optionally conj(Z_q(psi_hat)); the migration
/// compensation multiply. Unit-modulus factor, energy preserving.
void compensate_in_place(cd* cube, const RadarConfig& cfg, const TargetState& psi_hat,
                         ModelKind kind, int q, bool include_z);

}  // namespace kernels

}  // namespace nfr
