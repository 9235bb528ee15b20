#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nfr/common.hpp"
#include "nfr/scenario.hpp"
#include "nfr/steering.hpp"

namespace nfr {

/// Complex baseband samples indexed (q, l, k, n), n fastest.
struct DataCube {
    RadarConfig cfg;
    int num_subarrays = 1;
    std::vector<cd> samples;
    double noise_var = 0.0;  // sigma_w^2
    std::uint64_t seed = 0;
    Fidelity fidelity = Fidelity::Approx;

    std::size_t subarray_size() const {
        return static_cast<std::size_t>(cfg.num_sensors_per_subarray) * cfg.num_chirps *
               cfg.num_fast_samples;
    }
    cd* subarray(int q) { return samples.data() + q * subarray_size(); }
    const cd* subarray(int q) const { return samples.data() + q * subarray_size(); }
    cd& at(int q, int l, int k, int n) {
        return samples[(static_cast<std::size_t>(q) * cfg.num_sensors_per_subarray + l) *
                           cfg.num_chirps * cfg.num_fast_samples +
                       static_cast<std::size_t>(k) * cfg.num_fast_samples + n];
    }
};

/// sigma_w^2 that realizes the requested SNR with unit target amplitudes:
/// LNK/SNR for a single array, 2LNK/SNR for the separated pair.
double noise_variance_for_snr(const RadarConfig& cfg, double snr_db);

/// Sum of amplitude-weighted steering vectors plus circular complex Gaussian
/// noise. Deterministic given (scene, scene.seed); per-(q,k) chirp blocks use
/// independent counter-derived substreams, so any worker count gives the same
/// cube. Scene amplitudes get uniformly random phases per subarray unless
/// scene.coherent_amplitudes is set.
DataCube synthesize(const Scene& scene);

/// Noiseless version (no noise draw, sigma_w^2 still recorded).
DataCube synthesize_noiseless(const Scene& scene);

/// Exact-propagation sample: mixed signal with the exact square-root range,
/// tau_l(t) = (r(t)+r_l(t))/c, including the exp(j*pi*a*tau^2) residual; the
/// constant phases are folded so a unit model amplitude matches the
/// approximate model's beta_q = 1 convention.
cd exact_sample(const RadarConfig& cfg, const TargetState& tgt, int q, int l, int k, int n,
                bool separated);

/// Phase-error bounds of the model approximations for one target.
struct ApproximationBound {
    std::string name;
    double value = 0.0;  // radians (or the paper's dimensionless bound; see name)
    bool pass = false;   // value < budget
};

struct ApproximationErrorReport {
    std::vector<ApproximationBound> appendix_a;  // 5 terms, exp(j pi a tau^2) residual
    double appendix_c_bound = 0.0;  // BW*NFSA^2/(r c) + BW*(NFSA+D)^2/(r c)
    std::vector<ApproximationBound> appendix_h;  // 5 sampled-model terms
    double taylor_residual_m = 0.0;  // max |exact r_l(t) - 2nd order expansion| over (t, l)
    double budget_rad = 0.1;
    bool all_pass = false;
};

ApproximationErrorReport approximation_error(const RadarConfig& cfg, const TargetState& tgt,
                                             double budget_rad = 0.1);

/// Max per-sample phase discrepancy |arg(x_exact * conj(x_approx))| over the
/// noiseless cube; the empirical counterpart of the bounds above.
double exact_vs_approx_max_phase(const Scene& scene);

namespace kernels {
void add_noise(DataCube& cube, double sigma_w2, std::uint64_t seed);
}

}  // namespace nfr
