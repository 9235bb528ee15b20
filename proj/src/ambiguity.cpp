#include "nfr/ambiguity.hpp"

#include <cmath>

#include "nfr/steering.hpp"

namespace nfr {

namespace {

// sum_{l=0}^{L-1} exp(j phi (l-(L-1)/2)) = sin(L phi/2)/sin(phi/2), real
double dirichlet(int L, double phi) {
    const double s = std::sin(phi / 2.0);
    if (std::abs(s) < 1e-12) {
        const double m = std::round(phi / kTwoPi);
        return L * std::cos(kPi * m * (L - 1));
    }
    return std::sin(L * phi / 2.0) / s;
}

double norm_sinc(double x) {  // sin(pi x)/(pi x)
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// sum over one row of exp(j (phase(psi) - phase(psi1))); the difference is
// affine in n, so a geometric recurrence does the fast-time sum
cd steering_inner_product(const RadarConfig& cfg, const TargetState& psi1,
                          const TargetState& psi, ModelKind kind, int q) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(L) * K;
    std::vector<cd> partial(rows);
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        const int l = static_cast<int>(row / K);
        const int k = static_cast<int>(row % K);
        const double p0 = steering_phase(cfg, psi, kind, q, l, k, 0) -
                          steering_phase(cfg, psi1, kind, q, l, k, 0);
        double p1 = 0.0;
        if (N > 1)
            p1 = (steering_phase(cfg, psi, kind, q, l, k, 1) -
                  steering_phase(cfg, psi1, kind, q, l, k, 1)) -
                 p0;
        cd e = std::polar(1.0, p0);
        const cd mul = std::polar(1.0, p1);
        cd acc(0, 0);
        for (int n = 0; n < N; ++n) {
            if ((n & 63) == 0) e = std::polar(1.0, p0 + p1 * n);
            acc += e;
            e *= mul;
        }
        partial[row] = acc;
    }
    cd total(0, 0);
    for (const cd& v : partial) total += v;
    return total;
}

}  // namespace

cd af_exact(const RadarConfig& cfg, const TargetState& psi1, const TargetState& psi,
            ArrayMode mode) {
    cfg.validate();
    const double lnk = static_cast<double>(cfg.num_sensors_per_subarray) * cfg.num_chirps *
                       cfg.num_fast_samples;
    if (mode == ArrayMode::Separated) {
        double acc = 0.0;
        for (int q = 0; q < 2; ++q) {
            const cd v = steering_inner_product(cfg, psi1, psi, ModelKind::Separated, q);
            acc += std::norm(v / lnk);
        }
        return cd(std::sqrt(acc / 2.0), 0.0);
    }
    return steering_inner_product(cfg, psi1, psi, model_kind(mode), 0) / lnk;
}

AfSurface af_cut_vtheta_ula(const RadarConfig& cfg, const TargetState& tgt,
                            const std::vector<double>& vtheta_grid, bool sinc_approximation) {
    cfg.validate();
    const int K = cfg.num_chirps, L = cfg.num_sensors_per_subarray;
    const double lambda = cfg.wavelength();
    const double r = tgt.range_m;
    const double vth = tgt.tangential_velocity_mps;
    const double costh = std::cos(tgt.doa_rad);
    const auto Tk = cfg.slow_time_grid();

    AfSurface s;
    s.axes.push_back({"v_theta_mps", vtheta_grid});
    s.values.resize(vtheta_grid.size());
    s.magnitude.resize(vtheta_grid.size());

#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(vtheta_grid.size()); ++i) {
        const double v1 = vtheta_grid[i];
        const double dv = v1 - vth;
        cd acc(0, 0);
        for (int k = 0; k < K; ++k) {
            double g;
            if (sinc_approximation)
                g = norm_sinc(L * dv * costh * Tk[k] / (2.0 * r));
            else
                g = dirichlet(L, kPi * dv * costh * Tk[k] / r) / L;
            acc += g * std::polar(1.0, kTwoPi * (v1 * v1 - vth * vth) / (r * lambda) * Tk[k] *
                                           Tk[k]);
        }
        s.values[i] = acc / static_cast<double>(K);
        s.magnitude[i] = std::abs(s.values[i]);
    }
    return s;
}

AfVrVthetaResult af_cut_vr_vtheta(const RadarConfig& cfg, const TargetState& tgt,
                                  const std::vector<double>& vr_grid,
                                  const std::vector<double>& vtheta_grid) {
    cfg.validate();
    if (!cfg.separated())
        throw ValidationError("v_r-v_theta AF cut requires the separated configuration");
    const int K = cfg.num_chirps, L = cfg.num_sensors_per_subarray,
              N = cfg.num_fast_samples;
    const double lambda = cfg.wavelength();
    const double dr = cfg.range_resolution();
    const double r = tgt.range_m;
    const double vr = tgt.radial_velocity_mps, vth = tgt.tangential_velocity_mps;
    const double costh = std::cos(tgt.doa_rad);
    const auto Tk = cfg.slow_time_grid();

    AfVrVthetaResult out;
    for (int q = 0; q < 2; ++q) {
        out.ridge_slope[q] = cfg.subarray_center(q) * costh / (2.0 * r);
        auto& s = out.per_subarray[q];
        s.axes.push_back({"v_r_mps", vr_grid});
        s.axes.push_back({"v_theta_mps", vtheta_grid});
        s.magnitude.assign(vr_grid.size() * vtheta_grid.size(), 0.0);
    }
    out.combined.axes = out.per_subarray[0].axes;
    out.combined.magnitude.assign(vr_grid.size() * vtheta_grid.size(), 0.0);

#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(vr_grid.size()); ++i) {
        const double dvr = vr_grid[i] - vr;
        for (std::size_t j = 0; j < vtheta_grid.size(); ++j) {
            const double v1 = vtheta_grid[j];
            const double dvth = v1 - vth;
            double mags[2];
            for (int q = 0; q < 2; ++q) {
                const double dfq =
                    2.0 * dvr / lambda - cfg.subarray_center(q) * dvth * costh / (r * lambda);
                cd acc(0, 0);
                for (int k = 0; k < K; ++k) {
                    const double g = dirichlet(L, kPi * dvth * costh * Tk[k] / r) / L *
                                     dirichlet(N, kTwoPi * dvr * Tk[k] / (dr * N)) / N;
                    acc += g * std::polar(1.0, kTwoPi * (v1 * v1 - vth * vth) / (r * lambda) *
                                                       Tk[k] * Tk[k] +
                                                   kTwoPi * dfq * Tk[k]);
                }
                mags[q] = std::abs(acc) / K;
                out.per_subarray[q].magnitude[out.per_subarray[q].index(i, j)] = mags[q];
            }
            out.combined.magnitude[out.combined.index(i, j)] =
                std::sqrt(0.5 * (mags[0] * mags[0] + mags[1] * mags[1]));
        }
    }
    return out;
}

std::vector<double> default_vtheta_grid(const TargetState& tgt, int points) {
    const double span = 2.0 * std::abs(tgt.tangential_velocity_mps) + 5.0;
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = -span + 2.0 * span * i / (points - 1);
    return g;
}

std::vector<double> default_vr_grid(const TargetState& tgt, int points) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = tgt.radial_velocity_mps - 1.0 + 2.0 * i / (points - 1);
    return g;
}

double magnitude_db(double magnitude) {
    const double floor_db = -60.0;
    if (!(magnitude > 0)) return floor_db;
    return std::max(20.0 * std::log10(magnitude), floor_db);
}

}  // namespace nfr
