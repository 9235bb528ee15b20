#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nfr/common.hpp"

namespace nfr {

enum class ArrayMode { Conventional, UlaNearField, Separated };
enum class Fidelity { Approx, Exact };

std::string to_string(ArrayMode m);
std::string to_string(Fidelity f);
ArrayMode array_mode_from_string(const std::string& s);
Fidelity fidelity_from_string(const std::string& s);

/// FMCW waveform, timing and array geometry. Two identical lambda/2-spaced
/// subarrays whose centers sit D_bar apart; D_bar == 0 selects single-ULA mode.
struct RadarConfig {
    double carrier_frequency_hz = 77e9;   // f_c
    double bandwidth_hz = 250e6;          // BW
    double chirp_duration_s = 2e-6;       // T_c
    double pri_s = 20e-6;                 // T_PRI
    int num_chirps = 2500;                // K
    int num_fast_samples = 500;           // N
    int num_sensors_per_subarray = 50;    // L
    double subarray_separation_m = 0.0;   // D_bar; 0 => single ULA
    double wave_speed_mps = kDefaultWaveSpeed;  // c

    double wavelength() const { return wave_speed_mps / carrier_frequency_hz; }
    double chirp_slope() const { return bandwidth_hz / chirp_duration_s; }  // a, a*T_c = BW
    double range_resolution() const { return wave_speed_mps / (2.0 * bandwidth_hz); }  // delta_r
    double range_ambiguity() const { return wave_speed_mps * chirp_duration_s / 2.0; } // r_max
    double doppler_velocity_ambiguity() const { return wavelength() / (4.0 * pri_s); }
    double observation_time() const { return num_chirps * pri_s; }  // K*T_PRI

    /// Physical aperture of one subarray, max(d_l) - min(d_l).
    double subarray_aperture() const {
        return wavelength() / 2.0 * (num_sensors_per_subarray - 1);
    }
    /// x-position of subarray center q (q in {0,1}): D_bar*(q - 1/2).
    double subarray_center(int q) const { return subarray_separation_m * (q - 0.5); }
    int num_subarrays() const { return subarray_separation_m > 0.0 ? 2 : 1; }
    bool separated() const { return num_subarrays() == 2; }

    /// Sensor x-positions d_l relative to the subarray center; sum is zero.
    std::vector<double> sensor_positions() const;
    /// Centered slow-time grid T_k = (k - (K-1)/2) * T_PRI.
    std::vector<double> slow_time_grid() const;
    /// Centered fast-time grid t_n = (T_c/N) * (n - (N-1)/2).
    std::vector<double> fast_time_grid() const;

    /// Throws ValidationError naming the violated invariant.
    void validate() const;
};

/// One target: parameters of interest psi = [r, v_r, v_theta, theta] plus
/// complex amplitudes (beta for ULA mode, beta_0/beta_1 for separated mode).
struct TargetState {
    double range_m = 0.0;                 // r
    double radial_velocity_mps = 0.0;     // v_r
    double tangential_velocity_mps = 0.0; // v_theta
    double doa_rad = 0.0;                 // theta, |theta| < pi/2
    std::array<cd, 2> amplitudes{cd(1.0, 0.0), cd(1.0, 0.0)};  // beta_q
    bool amplitudes_set = false;  // synthesis randomizes phases unless set

    double speed() const {  // v_T
        return std::hypot(radial_velocity_mps, tangential_velocity_mps);
    }
    void validate() const;
};

/// Quantities derived from a config (and target where tangential motion enters).
struct DerivedParams {
    double wavelength_m = 0.0;
    double range_resolution_m = 0.0;
    double range_ambiguity_m = 0.0;
    double nfsa_m = 0.0;                  // |v_theta| * K * T_PRI
    double chirp_slope = 0.0;
    std::vector<double> slow_time_grid;   // length K
    std::vector<double> fast_time_grid;   // length N
};

DerivedParams derive_params(const RadarConfig& cfg, const TargetState& tgt);

/// Cartesian velocity -> (v_r, v_theta) at DOA theta and back.
struct RadialTangential {
    double v_r;
    double v_theta;
};
RadialTangential derive_geometry(double vx, double vy, double theta_rad);
struct CartesianVelocity {
    double vx;
    double vy;
};
CartesianVelocity invert_geometry(double v_r, double v_theta, double theta_rad);

enum class AssumptionSense { MuchLess, MuchGreater, Strict };

struct AssumptionEntry {
    std::string id;           // "A1".."A12"
    std::string description;
    double ratio = 0.0;       // dimensionless; pass sense below
    AssumptionSense sense = AssumptionSense::MuchLess;
    bool evaluated = true;    // A12 needs a multi-target scene
    bool pass = false;        // at the report's margin
    bool strict_pass = false; // inequality as written (margin 1)
};

struct AssumptionReport {
    double margin = 10.0;
    std::vector<AssumptionEntry> entries;

    const AssumptionEntry& operator[](const std::string& id) const;
    bool all_pass(bool include_unevaluated = false) const;
    std::string table() const;  // human-readable, for the CLI echo
};

/// Full scene: radar + targets + noise level + RNG seed.
struct Scene {
    RadarConfig radar;
    std::vector<TargetState> targets;
    double snr_db = 20.0;
    std::uint64_t seed = 0;
    ArrayMode mode = ArrayMode::Separated;
    Fidelity fidelity = Fidelity::Approx;
    bool coherent_amplitudes = false;  // force equal amplitude phases across subarrays

    void validate() const;
};

/// A1..A11 from config + target; A12 from the scene's pairwise steering
/// correlations when it has more than one target (else "not evaluated").
AssumptionReport check_assumptions(const RadarConfig& cfg, const TargetState& tgt,
                                   double margin = 10.0,
                                   const Scene* scene_for_a12 = nullptr);

Scene scene_from_json_text(const std::string& text);
Scene scene_from_json_file(const std::string& path);
std::string scene_to_json_text(const Scene& scene);

}  // namespace nfr
