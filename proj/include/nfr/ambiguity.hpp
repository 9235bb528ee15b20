#pragma once

#include <string>
#include <vector>

#include "nfr/common.hpp"
#include "nfr/scenario.hpp"

namespace nfr {

struct AfAxis {
    std::string name;
    std::vector<double> values;
};

/// Sampled ambiguity surface; magnitudes normalized so |AF(psi,psi)| = 1.
struct AfSurface {
    std::vector<AfAxis> axes;            // 1 (cut) or 2 (surface) axes
    std::vector<double> magnitude;       // row-major over axes, in [0,1]
    std::vector<cd> values;              // complex samples when meaningful (ULA cut)
    std::string normalization = "af(psi,psi)=1";

    std::size_t index(std::size_t i, std::size_t j) const {
        return i * axes[1].values.size() + j;
    }
};

/// General AF between hypothesis psi1 and truth psi. ULA kinds return the
/// complex a^H(psi1) a(psi) / (L N K); Separated returns the noncoherent
/// magnitude sqrt(1/2 (|AF_0|^2 + |AF_1|^2)) in .real() with zero imag.
cd af_exact(const RadarConfig& cfg, const TargetState& psi1, const TargetState& psi,
            ArrayMode mode);

/// AF cut over v_theta at the true (r, v_r, theta) for the ULA model; exact
/// Dirichlet g_k by default, large-L sinc approximation optionally.
AfSurface af_cut_vtheta_ula(const RadarConfig& cfg, const TargetState& tgt,
                            const std::vector<double>& vtheta_grid,
                            bool sinc_approximation = false);

/// Per-subarray and combined AF over (v_r, v_theta) at the true (r, theta) for
/// the separated model, plus the two Delta f_{D,q} = 0 ridge slopes.
struct AfVrVthetaResult {
    AfSurface combined;               // noncoherent magnitude
    std::array<AfSurface, 2> per_subarray;
    std::array<double, 2> ridge_slope;  // d(Delta v_r)/d(Delta v_theta) = D_q cos(theta)/(2r)
};

AfVrVthetaResult af_cut_vr_vtheta(const RadarConfig& cfg, const TargetState& tgt,
                                  const std::vector<double>& vr_grid,
                                  const std::vector<double>& vtheta_grid);

/// Default grids framing the cut features (v_theta: +-(2|v|+5) at 512 pts;
/// v_r: +-1 m/s around the true value at 256 pts).
std::vector<double> default_vtheta_grid(const TargetState& tgt, int points = 512);
std::vector<double> default_vr_grid(const TargetState& tgt, int points = 256);

/// dB with a -60 dB floor, the reporting convention for surfaces.
double magnitude_db(double magnitude);

}  // namespace nfr
