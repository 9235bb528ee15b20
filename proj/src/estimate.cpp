#include "nfr/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "nfr/fft.hpp"
#include "nfr/steering.hpp"

namespace nfr {

namespace {

double wrap_unit(double x) {  // into [-0.5, 0.5)
    x -= std::floor(x);
    return x >= 0.5 ? x - 1.0 : x;
}

double wrap_period(double x, double period) {  // into [0, period)
    x = std::fmod(x, period);
    return x < 0 ? x + period : x;
}

// 3-point parabola vertex offset in [-0.5, 0.5]
double quad_offset(double pm, double p0, double pp) {
    const double denom = pm - 2.0 * p0 + pp;
    if (!(denom < 0.0)) return 0.0;
    return std::clamp(0.5 * (pm - pp) / denom, -0.5, 0.5);
}

}  // namespace

double MapAxis::value(double frac_bin) const {
    double v = start + frac_bin * step;
    if (period > 0) {
        v = wrap_period(v, period);
        if (signed_wrap && v >= period / 2.0) v -= period;
    }
    return v;
}

double MapAxis::bin_of(double v) const {
    double b = (v - start) / step;
    const double span = period > 0 ? period / step : size;
    b = std::fmod(b, span);
    if (b < 0) b += span;
    return b;
}

// --- normalized matched-filter coordinates -------------------------------
// p  = r / delta_r in [0, N)          (range bins)
// nu = 2 v_r T_PRI / lambda in [-.5,.5) per-chirp Doppler
// u  = sin(theta) / 2 in [-.5, .5)    per-sensor spatial frequency

namespace {

struct Coord {
    double p, nu, u;
};

Coord to_coord(const RadarConfig& cfg, double r, double v_r, double sin_theta) {
    return {r / cfg.range_resolution(), 2.0 * v_r * cfg.pri_s / cfg.wavelength(),
            sin_theta / 2.0};
}

PeakEstimate from_coord(const RadarConfig& cfg, const Coord& c, double power) {
    PeakEstimate e;
    e.range_m = wrap_period(c.p, cfg.num_fast_samples) * cfg.range_resolution();
    e.radial_velocity_mps = wrap_unit(c.nu) * cfg.wavelength() / (2.0 * cfg.pri_s);
    e.sin_theta = 2.0 * wrap_unit(c.u);
    e.doa_rad = std::asin(std::clamp(e.sin_theta, -1.0, 1.0));
    e.peak_power = power;
    return e;
}

std::array<int, 3> clamp_pads(const RadarConfig& cfg, std::array<int, 3> pad,
                              std::size_t budget) {
    auto bins = [&](const std::array<int, 3>& p) {
        return static_cast<std::size_t>(p[0]) * cfg.num_fast_samples *
               static_cast<std::size_t>(p[1]) * cfg.num_chirps *
               static_cast<std::size_t>(p[2]) * cfg.num_sensors_per_subarray;
    };
    while (bins(pad) > budget) {
        int* largest = &pad[0];
        for (int i = 1; i < 3; ++i)
            if (pad[i] > *largest) largest = &pad[i];
        if (*largest == 1) break;
        *largest /= 2;
    }
    return pad;
}

}  // namespace

LikelihoodMap likelihood_map(const std::vector<const cd*>& cubes, const RadarConfig& cfg,
                             std::array<int, 3> pad, std::size_t budget_bins) {
    pad = clamp_pads(cfg, pad, budget_bins);
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const int Lf = L * pad[2], Kf = K * pad[1], Nf = N * pad[0];

    LikelihoodMap map;
    map.pad = pad;
    map.noncoherent = cubes.size() > 1;
    map.axes[0] = {"sin_theta", 0.0, 2.0 / Lf, Lf, 2.0, true};
    map.axes[1] = {"radial_velocity_mps", 0.0, cfg.wavelength() / (2.0 * cfg.pri_s) / Kf, Kf,
                   cfg.wavelength() / (2.0 * cfg.pri_s), true};
    map.axes[2] = {"range_m", 0.0, cfg.range_resolution() * N / Nf, Nf,
                   cfg.range_resolution() * N, false};
    map.power.assign(static_cast<std::size_t>(Lf) * Kf * Nf, 0.0);

    for (const cd* cube : cubes) {
        std::vector<cd> stage(cube, cube + static_cast<std::size_t>(L) * K * N);
        stage = fft_axis(stage, {L, K, N}, 2, Nf, +1);       // range, backward
        stage = fft_axis(stage, {L, K, Nf}, 1, Kf, +1);      // doppler, backward
        stage = fft_axis(stage, {L, Kf, Nf}, 0, Lf, -1);     // angle, forward
#pragma omp parallel for schedule(static) if (exec::parallel())
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(map.power.size()); ++i)
            map.power[i] += std::norm(stage[i]);
    }
    return map;
}

// --- zoomed separable evaluation of the matched filter --------------------

namespace {

// |sum_q A_q|^2 on the lattice grids (pu x pnu x pp); grids hold normalized
// coordinates. Output row-major (u, nu, p).
std::vector<double> zoom_power(const std::vector<const cd*>& cubes, const RadarConfig& cfg,
                               const std::vector<double>& pu, const std::vector<double>& pnu,
                               const std::vector<double>& pp) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const int nu_n = static_cast<int>(pnu.size()), p_n = static_cast<int>(pp.size()),
              u_n = static_cast<int>(pu.size());

    std::vector<cd> e1(static_cast<std::size_t>(p_n) * N);
    for (int ip = 0; ip < p_n; ++ip)
        for (int n = 0; n < N; ++n)
            e1[static_cast<std::size_t>(ip) * N + n] = std::polar(1.0, kTwoPi * pp[ip] * n / N);
    std::vector<cd> e2(static_cast<std::size_t>(nu_n) * K);
    for (int iv = 0; iv < nu_n; ++iv)
        for (int k = 0; k < K; ++k)
            e2[static_cast<std::size_t>(iv) * K + k] = std::polar(1.0, kTwoPi * pnu[iv] * k);
    std::vector<cd> e3(static_cast<std::size_t>(u_n) * L);
    for (int iu = 0; iu < u_n; ++iu)
        for (int l = 0; l < L; ++l)
            e3[static_cast<std::size_t>(iu) * L + l] = std::polar(1.0, -kTwoPi * pu[iu] * l);

    std::vector<double> power(static_cast<std::size_t>(u_n) * nu_n * p_n, 0.0);
    std::vector<cd> t1(static_cast<std::size_t>(L) * K * p_n);
    std::vector<cd> t2(static_cast<std::size_t>(L) * nu_n * p_n);

    for (const cd* cube : cubes) {
        // stage 1: contract fast time
        const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(L) * K;
#pragma omp parallel for schedule(static) if (exec::parallel())
        for (std::ptrdiff_t row = 0; row < rows; ++row) {
            const cd* x = cube + row * N;
            cd* out = t1.data() + row * p_n;
            for (int ip = 0; ip < p_n; ++ip) {
                const cd* w = e1.data() + static_cast<std::size_t>(ip) * N;
                cd acc(0, 0);
                for (int n = 0; n < N; ++n) acc += x[n] * w[n];
                out[ip] = acc;
            }
        }
        // stage 2: contract slow time
#pragma omp parallel for schedule(static) if (exec::parallel())
        for (std::ptrdiff_t l = 0; l < L; ++l) {
            for (int iv = 0; iv < nu_n; ++iv) {
                const cd* w = e2.data() + static_cast<std::size_t>(iv) * K;
                cd* out = t2.data() + (static_cast<std::size_t>(l) * nu_n + iv) * p_n;
                std::fill(out, out + p_n, cd(0, 0));
                const cd* in = t1.data() + static_cast<std::size_t>(l) * K * p_n;
                for (int k = 0; k < K; ++k) {
                    const cd wk = w[k];
                    const cd* row = in + static_cast<std::size_t>(k) * p_n;
                    for (int ip = 0; ip < p_n; ++ip) out[ip] += wk * row[ip];
                }
            }
        }
        // stage 3: contract sensors, accumulate power
#pragma omp parallel for schedule(static) if (exec::parallel())
        for (std::ptrdiff_t iu = 0; iu < u_n; ++iu) {
            const cd* w = e3.data() + static_cast<std::size_t>(iu) * L;
            for (int iv = 0; iv < nu_n; ++iv) {
                for (int ip = 0; ip < p_n; ++ip) {
                    cd acc(0, 0);
                    for (int l = 0; l < L; ++l)
                        acc += w[l] * t2[(static_cast<std::size_t>(l) * nu_n + iv) * p_n + ip];
                    power[(static_cast<std::size_t>(iu) * nu_n + iv) * p_n + ip] +=
                        std::norm(acc);
                }
            }
        }
    }
    return power;
}

std::vector<double> linspace_around(double center, double step, int half) {
    std::vector<double> g(2 * half + 1);
    for (int i = 0; i <= 2 * half; ++i) g[i] = center + (i - half) * step;
    return g;
}

struct LatticePeak {
    Coord coord;
    double power;
};

// argmax + per-axis quadratic interpolation over the zoom lattice around
// `center`, re-centering while the peak hits the lattice edge
LatticePeak zoom_peak(const std::vector<const cd*>& cubes, const RadarConfig& cfg,
                      Coord center, std::array<int, 3> pad, bool interpolate,
                      const SearchWindow* window) {
    const std::array<double, 3> step{1.0 / pad[2], 1.0 / pad[1],
                                     1.0 / pad[0]};  // (u-bins, nu-bins, p-bins) in native
    // half extents: +-1 native bin per axis; edge hits re-center the lattice
    const int hu = pad[2], hv = pad[1], hp = pad[0];

    // native-bin units for u and nu as well: u native bin = 1/L, nu = 1/K
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const double ub = 1.0 / L, vb = 1.0 / K;

    for (int round = 0; round < 4; ++round) {
        auto gu = linspace_around(center.u, step[0] * ub, hu);
        auto gv = linspace_around(center.nu, step[1] * vb, hv);
        auto gp = linspace_around(center.p, step[2], hp);
        auto power = zoom_power(cubes, cfg, gu, gv, gp);

        std::size_t best = 0;
        for (std::size_t i = 1; i < power.size(); ++i)
            if (power[i] > power[best]) best = i;
        const int np = static_cast<int>(gp.size()), nv = static_cast<int>(gv.size());
        int iu = static_cast<int>(best / (static_cast<std::size_t>(nv) * np));
        int iv = static_cast<int>(best / np % nv);
        int ip = static_cast<int>(best % np);

        const bool edge_u = (L > 1) && (iu == 0 || iu == 2 * hu);
        const bool edge_v = (K > 1) && (iv == 0 || iv == 2 * hv);
        const bool edge_p = (N > 1) && (ip == 0 || ip == 2 * hp);
        if ((edge_u || edge_v || edge_p) && round < 3 && !window) {
            center = {gp[ip], gv[iv], gu[iu]};
            continue;
        }

        Coord out{gp[ip], gv[iv], gu[iu]};
        double value = power[best];
        if (interpolate) {
            auto at = [&](int a, int b, int c) {
                return power[(static_cast<std::size_t>(a) * nv + b) * np + c];
            };
            if (iu > 0 && iu < 2 * hu)
                out.u += step[0] * ub *
                         quad_offset(at(iu - 1, iv, ip), at(iu, iv, ip), at(iu + 1, iv, ip));
            if (iv > 0 && iv < 2 * hv)
                out.nu += step[1] * vb *
                          quad_offset(at(iu, iv - 1, ip), at(iu, iv, ip), at(iu, iv + 1, ip));
            if (ip > 0 && ip < 2 * hp)
                out.p += step[2] *
                         quad_offset(at(iu, iv, ip - 1), at(iu, iv, ip), at(iu, iv, ip + 1));
            // report the objective at the interpolated argmax, not the lattice max
            value = zoom_power(cubes, cfg, {out.u}, {out.nu}, {out.p})[0];
        }
        return {out, value};
    }
    return {center, 0.0};  // unreachable
}

}  // namespace

PeakEstimate ml_conventional(const std::vector<const cd*>& cubes, const RadarConfig& cfg,
                             const EstimateOptions& opts, const SearchWindow* window,
                             LikelihoodMap* map_out) {
    if (cubes.empty()) throw ValidationError("ml_conventional: no cube slices");
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    double energy = 0.0;
    const std::size_t total = static_cast<std::size_t>(L) * K * N;
    const std::size_t stride = std::max<std::size_t>(1, total / 4096);
    for (const cd* c : cubes)
        for (std::size_t i = 0; i < total; i += stride) energy += std::norm(c[i]);
    if (energy == 0.0) throw ValidationError("ml_conventional: all-zero cube");

    // coarse stage: unpadded map (or the requested pads when they fit and a
    // materialized map is wanted anyway)
    const std::array<int, 3> coarse_pad{1, 1, 1};
    LikelihoodMap coarse = likelihood_map(cubes, cfg, coarse_pad, SIZE_MAX);
    if (map_out) *map_out = likelihood_map(cubes, cfg, opts.pad, opts.map_budget_bins);

    const int Lf = coarse.axes[0].size, Kf = coarse.axes[1].size, Nf = coarse.axes[2].size;
    std::size_t best = SIZE_MAX;
    double best_val = -1.0;
    Coord wc{};
    std::array<double, 3> whalf{};  // (u, nu, p) half widths in native bins
    if (window) {
        wc = to_coord(cfg, window->range_center, window->vr_center, window->sin_center);
        whalf = {window->sin_halfwidth / 2.0 * L, window->vr_halfwidth * 2.0 * cfg.pri_s /
                                                      cfg.wavelength() * K,
                 window->range_halfwidth / cfg.range_resolution()};
    }
    for (int a = 0; a < Lf; ++a)
        for (int d = 0; d < Kf; ++d)
            for (int r = 0; r < Nf; ++r) {
                if (window) {
                    const double du = std::abs(wrap_unit(static_cast<double>(a) / Lf -
                                                         wrap_unit(wc.u))) * L;
                    const double dv = std::abs(wrap_unit(static_cast<double>(d) / Kf -
                                                         wrap_unit(wc.nu))) * K;
                    double dp = std::abs(wrap_period(static_cast<double>(r) - wc.p, N));
                    dp = std::min(dp, N - dp);
                    if (du > whalf[0] || dv > whalf[1] || dp > whalf[2]) continue;
                }
                const double v = coarse.power[coarse.index(a, d, r)];
                if (v > best_val) {
                    best_val = v;
                    best = coarse.index(a, d, r);
                }
            }
    if (best == SIZE_MAX) throw EstimatorShortfall("ml_conventional: empty search window");

    const int a0 = static_cast<int>(best / (static_cast<std::size_t>(Kf) * Nf));
    const int d0 = static_cast<int>(best / Nf % Kf);
    const int r0 = static_cast<int>(best % Nf);
    Coord center{static_cast<double>(r0) * N / Nf, wrap_unit(static_cast<double>(d0) / Kf),
                 wrap_unit(static_cast<double>(a0) / Lf)};

    const auto peak =
        zoom_peak(cubes, cfg, center, opts.pad, opts.interpolate, window);
    PeakEstimate est = from_coord(cfg, peak.coord, peak.power);
    est.frac_bins = {peak.coord.u * L * opts.pad[2], peak.coord.nu * K * opts.pad[1],
                     peak.coord.p * opts.pad[0]};
    return est;
}

double triangulate_vtheta(double vr0, double vr1, double r, double theta_rad, double dbar) {
    if (!(dbar > 0)) throw ValidationError("triangulation requires D_bar > 0");
    const double c = std::cos(theta_rad);
    if (std::abs(c) < 1e-3)
        throw EstimatorShortfall("triangulation unavailable: cos(theta) ~ 0");
    return 2.0 * r * (vr0 - vr1) / (dbar * c);
}

void compensate(cd* cube_q, const RadarConfig& cfg, const TargetState& psi_hat,
                ArrayMode mode, int q, CompensationKind kind) {
    kernels::compensate_in_place(cube_q, cfg, psi_hat, model_kind(mode), q,
                                 kind == CompensationKind::BAndZ);
}

namespace {

// multiply back by the Z factor: turns X .* conj(B) .* conj(Z) into X .* conj(B)
void restore_z(cd* cube_q, const RadarConfig& cfg, const TargetState& psi, ArrayMode mode,
               int q) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const double lambda = cfg.wavelength();
    const double r = psi.range_m, vth = psi.tangential_velocity_mps;
    const double costh = std::cos(psi.doa_rad);
    const auto Tk = cfg.slow_time_grid();
    const auto d = cfg.sensor_positions();
    const double Dq = mode == ArrayMode::Separated ? cfg.subarray_center(q) : 0.0;
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(L) * K;
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t row = 0; row < rows; ++row) {
        const int l = static_cast<int>(row / K);
        const int k = static_cast<int>(row % K);
        double zp = -kTwoPi * vth * vth / (r * lambda) * Tk[k] * Tk[k];
        if (mode == ArrayMode::Separated)
            zp += kTwoPi * Dq * vth * costh / (r * lambda) * Tk[k];
        else
            zp += kTwoPi * vth * costh / (r * lambda) * d[l] * Tk[k];
        const cd z = std::polar(1.0, zp);
        cd* out = cube_q + row * N;
        for (int n = 0; n < N; ++n) out[n] *= z;
    }
}

}  // namespace

std::vector<cd> extract_slow_time(const cd* cube_q, const RadarConfig& cfg, double r_hat,
                                  double theta_hat) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const auto h1 = eta1_range(cfg, r_hat);
    const auto h3 = eta3_doa(cfg, theta_hat);
    std::vector<cd> y(K);
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (int k = 0; k < K; ++k) {
        cd acc(0, 0);
        for (int l = 0; l < L; ++l) {
            const cd* row = cube_q + (static_cast<std::size_t>(l) * K + k) * N;
            cd inner(0, 0);
            for (int n = 0; n < N; ++n) inner += row[n] * std::conj(h1[n]);
            acc += std::conj(h3[l]) * inner;
        }
        y[k] = acc / (static_cast<double>(L) * N);
    }
    return y;
}

JointVelocityResult joint_velocity_search(const std::vector<std::vector<cd>>& ybar,
                                          const RadarConfig& cfg, double r_hat,
                                          double theta_hat, double vr_center,
                                          const EstimateOptions& opts) {
    const int K = cfg.num_chirps;
    const int Q = static_cast<int>(ybar.size());
    const double lambda = cfg.wavelength();
    const double dbar = cfg.subarray_separation_m;
    const double Tobs = cfg.observation_time();

    JointVelocityResult res;

    // v_theta grid: explicit override, or span at a quarter of the main-lobe
    // width r*lambda / (2 D_bar cos(theta) K T_PRI); ULA fallback derives the
    // width from the slow-time quadratic term.
    std::vector<double> vgrid;
    if (opts.vtheta_grid) {
        vgrid = *opts.vtheta_grid;
    } else {
        double step = opts.vtheta_step;
        double width;
        if (dbar > 0) {
            width = r_hat * lambda / (2.0 * dbar * std::max(std::abs(std::cos(theta_hat)), 0.05) * Tobs);
        } else {
            // main lobe of the slow-time chirp term at the far end of the span
            const double vs = std::max(opts.vtheta_span, 1.0);
            width = r_hat * lambda / (vs * Tobs * Tobs);
        }
        if (step <= 0) step = width / 4.0;
        res.grid_warning = step > width;
        const int half = static_cast<int>(std::ceil(opts.vtheta_span / step));
        vgrid.resize(2 * half + 1);
        for (int i = 0; i <= 2 * half; ++i) vgrid[i] = (i - half) * step;
    }
    res.vtheta_grid = vgrid;

    // v_r grid: +-vr_halfwin_bins native Doppler bins around the center
    const double vr_bin = lambda / (2.0 * Tobs);
    const double vr_step = vr_bin * opts.vr_step_bins;
    const int vr_half = static_cast<int>(std::lround(opts.vr_halfwin_bins / opts.vr_step_bins));
    std::vector<double> vr_grid = linspace_around(vr_center, vr_step, vr_half);

    const auto Tk = cfg.slow_time_grid();
    const int nv = static_cast<int>(vgrid.size());
    const int nr = static_cast<int>(vr_grid.size());
    std::vector<double> obj(static_cast<std::size_t>(nv) * nr, 0.0);

#pragma omp parallel for schedule(static) if (exec::parallel())
    for (int iv = 0; iv < nv; ++iv) {
        std::vector<cd> w(K);
        std::vector<cd> step_mul(nr);
        for (int q = 0; q < Q; ++q) {
            const auto z = zbar_q(cfg, r_hat, vgrid[iv], theta_hat, q);
            for (int k = 0; k < K; ++k) w[k] = std::conj(ybar[q][k]) * z[k];
            for (int ir = 0; ir < nr; ++ir) {
                cd acc(0, 0);
                const double coef = -kTwoPi * 2.0 * vr_grid[ir] / lambda;
                // eta2(v_r)[k] = exp(j coef T_k); T_k is affine in k
                const cd mul = std::polar(1.0, coef * cfg.pri_s);
                cd e = std::polar(1.0, coef * Tk[0]);
                for (int k = 0; k < K; ++k) {
                    if ((k & 63) == 0) e = std::polar(1.0, coef * Tk[k]);
                    acc += w[k] * e;
                    e *= mul;
                }
                obj[static_cast<std::size_t>(iv) * nr + ir] += std::norm(acc);
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < obj.size(); ++i)
        if (obj[i] > obj[best]) best = i;
    int biv = static_cast<int>(best / nr), bir = static_cast<int>(best % nr);

    // ULA: the slow-time chirp is even in v_theta, report the nonnegative peak
    if (dbar <= 0 && !opts.vtheta_grid) {
        const int mirror = nv - 1 - biv;
        if (std::abs(obj[static_cast<std::size_t>(mirror) * nr + bir] - obj[best]) <=
            1e-6 * obj[best]) {
            res.sign_ambiguous = true;
            if (vgrid[biv] < 0) biv = mirror;
        }
    }

    res.v_theta = vgrid[biv];
    res.v_r = vr_grid[bir];
    res.objective = obj[static_cast<std::size_t>(biv) * nr + bir];
    auto at = [&](int i, int j) { return obj[static_cast<std::size_t>(i) * nr + j]; };
    if (biv > 0 && biv < nv - 1 && vgrid.size() > 2) {
        const double d = vgrid[biv + 1] - vgrid[biv];
        res.v_theta += d * quad_offset(at(biv - 1, bir), at(biv, bir), at(biv + 1, bir));
    }
    if (bir > 0 && bir < nr - 1) {
        res.v_r += vr_step * quad_offset(at(biv, bir - 1), at(biv, bir), at(biv, bir + 1));
    }
    return res;
}

double ml_objective(const DataCube& cube, const TargetState& psi) {
    const RadarConfig& cfg = cube.cfg;
    const ModelKind kind =
        model_kind(cube.num_subarrays == 2 ? ArrayMode::Separated : ArrayMode::UlaNearField);
    double total = 0.0;
    for (int q = 0; q < cube.num_subarrays; ++q) {
        // x_q^H a_q via the factored tables, chunked deterministically
        const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps,
                  N = cfg.num_fast_samples;
        const cd* x = cube.subarray(q);
        const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(L) * K;
        std::vector<cd> partial(rows);
        std::vector<cd> a_rows;  // reuse steering fill row by row via phases
#pragma omp parallel for schedule(static) if (exec::parallel())
        for (std::ptrdiff_t row = 0; row < rows; ++row) {
            const int l = static_cast<int>(row / K);
            const int k = static_cast<int>(row % K);
            // phase is affine in n within a row
            const double p0 = steering_phase(cfg, psi, kind, q, l, k, 0);
            const double p1 =
                N > 1 ? steering_phase(cfg, psi, kind, q, l, k, 1) - p0 : 0.0;
            cd e = std::polar(1.0, p0);
            const cd mul = std::polar(1.0, p1);
            const cd* xr = x + row * N;
            cd acc(0, 0);
            for (int n = 0; n < N; ++n) {
                if ((n & 63) == 0) e = std::polar(1.0, p0 + p1 * n);
                acc += std::conj(xr[n]) * e;
                e *= mul;
            }
            partial[row] = acc;
        }
        cd inner(0, 0);
        for (const cd& v : partial) inner += v;
        total += std::norm(inner);
    }
    return total;
}

namespace {

struct InitEstimate {
    double r, vr, sin_theta, theta;
    double vtheta_init;
    bool triangulated;
    std::vector<PeakEstimate> per_subarray;
};

InitEstimate initial_stage(const DataCube& cube, const EstimateOptions& opts,
                           const SearchWindow* window) {
    const RadarConfig& cfg = cube.cfg;
    InitEstimate init{};
    double r_acc = 0, vr_acc = 0, sin_acc = 0;
    for (int q = 0; q < cube.num_subarrays; ++q) {
        auto est = ml_conventional({cube.subarray(q)}, cfg, opts, window);
        r_acc += est.range_m;
        vr_acc += est.radial_velocity_mps;
        sin_acc += est.sin_theta;
        init.per_subarray.push_back(est);
    }
    const int Q = cube.num_subarrays;
    init.r = r_acc / Q;
    init.vr = vr_acc / Q;
    init.sin_theta = sin_acc / Q;
    init.theta = std::asin(std::clamp(init.sin_theta, -1.0, 1.0));
    init.triangulated = false;
    init.vtheta_init = 0.0;
    if (Q == 2) {
        try {
            init.vtheta_init = triangulate_vtheta(
                init.per_subarray[0].radial_velocity_mps,
                init.per_subarray[1].radial_velocity_mps, init.r, init.theta,
                cfg.subarray_separation_m);
            init.triangulated = true;
        } catch (const EstimatorShortfall&) {
            init.vtheta_init = 0.0;
        }
    }
    return init;
}

EstimationResult run_tve(const DataCube& cube, const EstimateOptions& opts,
                         const InitEstimate& init, const SearchWindow* window) {
    const RadarConfig& cfg = cube.cfg;
    const ArrayMode mode =
        cube.num_subarrays == 2 ? ArrayMode::Separated : ArrayMode::UlaNearField;
    const std::size_t sub = cube.subarray_size();

    EstimationResult res;
    res.per_subarray = init.per_subarray;
    res.vtheta_trace.push_back(init.vtheta_init);

    double r_hat = init.r, vr_hat = init.vr, theta_hat = init.theta;
    double vtheta_tilde = init.vtheta_init;
    bool ambiguous = false;

    std::vector<cd> scratch(cube.samples.size());
    TargetState psi;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        psi.range_m = std::max(r_hat, 1e-3);
        psi.radial_velocity_mps = vr_hat;
        psi.tangential_velocity_mps = vtheta_tilde;
        psi.doa_rad = theta_hat;

        // steps 4-5: compensate B and Z, refine (r, v_r, theta)
        std::copy(cube.samples.begin(), cube.samples.end(), scratch.begin());
        for (int q = 0; q < cube.num_subarrays; ++q)
            kernels::compensate_in_place(scratch.data() + q * sub, cfg, psi, model_kind(mode),
                                         q, true);
        std::vector<const cd*> views;
        for (int q = 0; q < cube.num_subarrays; ++q) views.push_back(scratch.data() + q * sub);
        const auto refined = ml_conventional(views, cfg, opts, window);
        r_hat = refined.range_m;
        vr_hat = refined.radial_velocity_mps;
        theta_hat = refined.doa_rad;

        // step 6: restore Z to get the B-only compensated cube, then collapse
        // sensors and fast time
        std::vector<std::vector<cd>> ybar;
        for (int q = 0; q < cube.num_subarrays; ++q) {
            restore_z(scratch.data() + q * sub, cfg, psi, mode, q);
            ybar.push_back(extract_slow_time(scratch.data() + q * sub, cfg, r_hat, theta_hat));
        }

        // step 7: joint (v_r, v_theta)
        const auto joint = joint_velocity_search(ybar, cfg, r_hat, theta_hat, vr_hat, opts);
        vr_hat = joint.v_r;
        ambiguous = ambiguous || joint.sign_ambiguous;
        if (joint.grid_warning && res.warning.empty())
            res.warning = "joint velocity grid coarser than the main lobe";

        res.vtheta_trace.push_back(joint.v_theta);
        res.iterations = iter;

        TargetState now;
        now.range_m = std::max(r_hat, 1e-3);
        now.radial_velocity_mps = vr_hat;
        now.tangential_velocity_mps = joint.v_theta;
        now.doa_rad = theta_hat;
        res.objective_trace.push_back(ml_objective(cube, now));

        if (std::abs(joint.v_theta - vtheta_tilde) < opts.eps) {
            vtheta_tilde = joint.v_theta;
            res.converged = true;
            break;
        }
        vtheta_tilde = joint.v_theta;
    }

    res.estimate.range_m = r_hat;
    res.estimate.radial_velocity_mps = vr_hat;
    res.estimate.tangential_velocity_mps = vtheta_tilde;
    res.estimate.doa_rad = theta_hat;
    res.sign_ambiguous = ambiguous || (cube.num_subarrays == 1);
    res.objective = res.objective_trace.empty() ? 0.0 : res.objective_trace.back();
    return res;
}

}  // namespace

EstimationResult estimate_single(const DataCube& cube, const EstimateOptions& opts) {
    const InitEstimate init = initial_stage(cube, opts, nullptr);
    return run_tve(cube, opts, init, nullptr);
}

MultiTargetResult estimate_multi(const DataCube& cube, int M, const EstimateOptions& opts) {
    if (M < 1) throw ValidationError("estimate_multi: M must be >= 1");
    MultiTargetResult out;
    out.requested = M;
    if (M == 1) {
        out.targets.push_back(estimate_single(cube, opts));
        return out;
    }

    const RadarConfig& cfg = cube.cfg;
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const double dr = cfg.range_resolution();

    // exclusion window in native bins; the Doppler extent absorbs the range
    // walk of the fastest unambiguous target
    const double vmax = cfg.doppler_velocity_ambiguity();
    const int excl_r = 3;
    const int excl_d = 3 + static_cast<int>(std::ceil(vmax * cfg.observation_time() / dr));
    const int excl_a = 3;

    struct RawPeak {
        double r, vr, sin_theta, power;
    };
    std::vector<std::vector<RawPeak>> peaks(cube.num_subarrays);

    for (int q = 0; q < cube.num_subarrays; ++q) {
        LikelihoodMap map = likelihood_map({cube.subarray(q)}, cfg, opts.pad,
                                           opts.map_budget_bins);
        const int La = map.axes[0].size, Ka = map.axes[1].size, Na = map.axes[2].size;
        const int pr = map.pad[0], pd = map.pad[1], pa = map.pad[2];
        std::vector<double>& p = map.power;
        // noise scale for the qualification gate: median over a strided sample
        std::vector<double> sample;
        sample.reserve(65536);
        const std::size_t stride = std::max<std::size_t>(1, p.size() / 65536);
        for (std::size_t i = 0; i < p.size(); i += stride) sample.push_back(p[i]);
        std::nth_element(sample.begin(), sample.begin() + sample.size() / 2, sample.end());
        const double floor = sample[sample.size() / 2];

        for (int m = 0; m < M; ++m) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < p.size(); ++i)
                if (p[i] > p[best]) best = i;
            if (!(p[best] > 8.0 * floor) || p[best] <= 0) break;  // nothing credible left
            const int a0 = static_cast<int>(best / (static_cast<std::size_t>(Ka) * Na));
            const int d0 = static_cast<int>(best / Na % Ka);
            const int r0 = static_cast<int>(best % Na);
            RawPeak pk;
            pk.r = map.axes[2].value(r0);
            pk.vr = map.axes[1].value(d0);
            pk.sin_theta = map.axes[0].value(a0);
            pk.power = p[best];
            peaks[q].push_back(pk);
            // carve out the exclusion window (wrap-aware)
            for (int da = -excl_a * pa; da <= excl_a * pa; ++da)
                for (int dd = -excl_d * pd; dd <= excl_d * pd; ++dd)
                    for (int drr = -excl_r * pr; drr <= excl_r * pr; ++drr) {
                        const int aa = ((a0 + da) % La + La) % La;
                        const int ddd = ((d0 + dd) % Ka + Ka) % Ka;
                        const int rr = ((r0 + drr) % Na + Na) % Na;
                        p[(static_cast<std::size_t>(aa) * Ka + ddd) * Na + rr] = 0.0;
                    }
        }
    }

    // pair subarray peaks on (r, sin theta) with gating
    struct Pair {
        RawPeak a, b;
        bool paired;
        double power;
    };
    std::vector<Pair> assoc;
    if (cube.num_subarrays == 2) {
        std::vector<bool> used(peaks[1].size(), false);
        for (const auto& p0 : peaks[0]) {
            int best = -1;
            double best_d = 1e300;
            for (std::size_t j = 0; j < peaks[1].size(); ++j) {
                if (used[j]) continue;
                const double dr_gate = std::abs(peaks[1][j].r - p0.r);
                const double ds_gate = std::abs(peaks[1][j].sin_theta - p0.sin_theta);
                if (dr_gate > 3.0 * dr || ds_gate > 3.0 * 2.0 / L) continue;
                const double d = dr_gate / dr + ds_gate * L / 2.0;
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(j);
                }
            }
            if (best >= 0) {
                used[best] = true;
                assoc.push_back({p0, peaks[1][best], true, p0.power + peaks[1][best].power});
            } else {
                assoc.push_back({p0, p0, false, p0.power});
            }
        }
        for (std::size_t j = 0; j < peaks[1].size(); ++j)
            if (!used[j]) assoc.push_back({peaks[1][j], peaks[1][j], false, peaks[1][j].power});
    } else {
        for (const auto& p0 : peaks[0]) assoc.push_back({p0, p0, true, p0.power});
    }
    std::sort(assoc.begin(), assoc.end(),
              [](const Pair& x, const Pair& y) { return x.power > y.power; });
    if (static_cast<int>(assoc.size()) > M) assoc.resize(M);
    out.shortfall = static_cast<int>(assoc.size()) < M;

    for (const auto& pr : assoc) {
        InitEstimate init{};
        init.r = 0.5 * (pr.a.r + pr.b.r);
        init.vr = 0.5 * (pr.a.vr + pr.b.vr);
        init.sin_theta = 0.5 * (pr.a.sin_theta + pr.b.sin_theta);
        init.theta = std::asin(std::clamp(init.sin_theta, -1.0, 1.0));
        init.triangulated = false;
        init.vtheta_init = 0.0;
        PeakEstimate pa, pb;
        pa.range_m = pr.a.r;
        pa.radial_velocity_mps = pr.a.vr;
        pa.sin_theta = pr.a.sin_theta;
        pa.peak_power = pr.a.power;
        pb.range_m = pr.b.r;
        pb.radial_velocity_mps = pr.b.vr;
        pb.sin_theta = pr.b.sin_theta;
        pb.peak_power = pr.b.power;
        init.per_subarray = {pa, pb};
        if (pr.paired && cube.num_subarrays == 2) {
            try {
                init.vtheta_init = triangulate_vtheta(pr.a.vr, pr.b.vr, init.r, init.theta,
                                                      cfg.subarray_separation_m);
                init.triangulated = true;
            } catch (const EstimatorShortfall&) {
            }
        }

        SearchWindow win;
        win.range_center = init.r;
        win.range_halfwidth = (excl_r + 1) * dr;
        win.vr_center = init.vr;
        win.vr_halfwidth = (excl_d + 1) * cfg.wavelength() / (2.0 * cfg.observation_time());
        win.sin_center = init.sin_theta;
        win.sin_halfwidth = (excl_a + 1) * 2.0 / L;

        EstimationResult res = run_tve(cube, opts, init, &win);
        res.paired = pr.paired;
        if (!pr.paired) res.sign_ambiguous = true;
        out.targets.push_back(std::move(res));
    }
    std::sort(out.targets.begin(), out.targets.end(),
              [](const EstimationResult& x, const EstimationResult& y) {
                  return x.objective > y.objective;
              });

    // overlapping-target guard: two extraction peaks that converge into the
    // same cell are one physical target (A12 violated); keep the stronger
    const double vr_bin = cfg.wavelength() / (2.0 * cfg.observation_time());
    std::vector<EstimationResult> dedup;
    for (auto& cand : out.targets) {
        bool dup = false;
        for (const auto& kept : dedup) {
            if (std::abs(cand.estimate.range_m - kept.estimate.range_m) < 3.0 * dr &&
                std::abs(std::sin(cand.estimate.doa_rad) - std::sin(kept.estimate.doa_rad)) <
                    3.0 * 2.0 / L &&
                std::abs(cand.estimate.radial_velocity_mps -
                         kept.estimate.radial_velocity_mps) < excl_d * vr_bin)
                dup = true;
        }
        if (!dup) dedup.push_back(std::move(cand));
    }
    out.targets = std::move(dedup);
    out.shortfall = static_cast<int>(out.targets.size()) < M;
    return out;
}

}  // namespace nfr
