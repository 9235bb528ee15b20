#include "nfr/steering.hpp"

#include <cmath>

namespace nfr {

std::vector<cd> eta1_range(const RadarConfig& cfg, double r) {
    const int N = cfg.num_fast_samples;
    const double dr = cfg.range_resolution();
    std::vector<cd> v(N);
    for (int n = 0; n < N; ++n) {
        const double tf = (n - (N - 1) / 2.0) / N;  // t_n / T_c
        v[n] = std::polar(1.0, -kTwoPi * (r / dr) * tf);
    }
    return v;
}

std::vector<cd> eta2_doppler(const RadarConfig& cfg, double v_r) {
    const int K = cfg.num_chirps;
    std::vector<cd> v(K);
    const double lambda = cfg.wavelength();
    for (int k = 0; k < K; ++k) {
        const double Tk = (k - (K - 1) / 2.0) * cfg.pri_s;
        v[k] = std::polar(1.0, -kTwoPi * (2.0 * v_r / lambda) * Tk);
    }
    return v;
}

std::vector<cd> eta3_doa(const RadarConfig& cfg, double theta_rad) {
    const int L = cfg.num_sensors_per_subarray;
    std::vector<cd> v(L);
    const double lambda = cfg.wavelength();
    const double s = std::sin(theta_rad);
    const auto d = cfg.sensor_positions();
    for (int l = 0; l < L; ++l) v[l] = std::polar(1.0, kTwoPi * s / lambda * d[l]);
    return v;
}

std::vector<cd> zbar_q(const RadarConfig& cfg, double r, double v_theta, double theta_rad,
                       int q) {
    const int K = cfg.num_chirps;
    const double lambda = cfg.wavelength();
    const double Dq = cfg.subarray_center(q);
    const double c1 = -kTwoPi * v_theta * v_theta / (r * lambda);
    const double c2 = kTwoPi * Dq * v_theta * std::cos(theta_rad) / (r * lambda);
    std::vector<cd> v(K);
    for (int k = 0; k < K; ++k) {
        const double Tk = (k - (K - 1) / 2.0) * cfg.pri_s;
        v[k] = std::polar(1.0, c1 * Tk * Tk + c2 * Tk);
    }
    return v;
}

ModelKind model_kind(ArrayMode mode, bool full_ula_model) {
    switch (mode) {
        case ArrayMode::Conventional: return ModelKind::Conventional;
        case ArrayMode::UlaNearField:
            return full_ula_model ? ModelKind::UlaGeneral : ModelKind::UlaNearField;
        case ArrayMode::Separated: return ModelKind::Separated;
    }
    return ModelKind::Conventional;
}

namespace {

struct Geom {
    double lambda, dr, Dq;
    double sinth, costh;
    double Tk, tf, dl;  // slow time, fast-time fraction t_n/T_c, sensor position
};

Geom geom_at(const RadarConfig& cfg, const TargetState& tgt, int q, int l, int k, int n) {
    Geom g;
    g.lambda = cfg.wavelength();
    g.dr = cfg.range_resolution();
    g.Dq = cfg.subarray_center(q);
    g.sinth = std::sin(tgt.doa_rad);
    g.costh = std::cos(tgt.doa_rad);
    g.Tk = (k - (cfg.num_chirps - 1) / 2.0) * cfg.pri_s;
    g.tf = (n - (cfg.num_fast_samples - 1) / 2.0) / cfg.num_fast_samples;
    g.dl = cfg.wavelength() / 2.0 * (l - (cfg.num_sensors_per_subarray - 1) / 2.0);
    return g;
}

}  // namespace

double steering_phase(const RadarConfig& cfg, const TargetState& tgt, ModelKind kind, int q,
                      int l, int k, int n) {
    const Geom g = geom_at(cfg, tgt, q, l, k, n);
    const double r = tgt.range_m, vr = tgt.radial_velocity_mps,
                 vth = tgt.tangential_velocity_mps;
    // conventional factors
    double phase = -kTwoPi * (r / g.dr) * g.tf - kTwoPi * (2.0 * vr / g.lambda) * g.Tk +
                   kTwoPi * g.sinth / g.lambda * g.dl;
    if (kind == ModelKind::Conventional) return phase;

    // slow-time range walk + slow-time Doppler migration, common to all
    // near-field kinds
    phase += -kTwoPi * (vr * g.Tk / g.dr) * g.tf;
    phase += -kTwoPi * vth * vth / (r * g.lambda) * g.Tk * g.Tk;
    // spatial Doppler migration
    phase += kTwoPi * vth * g.costh / (r * g.lambda) * g.dl * g.Tk;

    if (kind == ModelKind::UlaGeneral) {
        phase += kTwoPi * g.dl * g.sinth / (2.0 * g.dr) * g.tf;
        phase += -kTwoPi * g.costh * g.costh / (2.0 * r * g.lambda) * g.dl * g.dl;
    }
    if (kind == ModelKind::Separated) {
        phase += kTwoPi * g.Dq * g.sinth / (2.0 * g.dr) * g.tf;
        phase += -kTwoPi * g.Dq * g.costh * g.costh / (r * g.lambda) * g.dl;
        phase += kTwoPi * g.Dq * vth * g.costh / (r * g.lambda) * g.Tk;
    }
    return phase;
}

std::array<double, 4> steering_phase_gradient(const RadarConfig& cfg, const TargetState& tgt,
                                              ModelKind kind, int q, int l, int k, int n) {
    const Geom g = geom_at(cfg, tgt, q, l, k, n);
    const double r = tgt.range_m, vth = tgt.tangential_velocity_mps;
    std::array<double, 4> grad{};  // d/d[r, v_r, v_theta, theta]

    grad[0] = -kTwoPi / g.dr * g.tf;
    grad[1] = -kTwoPi * 2.0 / g.lambda * g.Tk;
    grad[2] = 0.0;
    grad[3] = kTwoPi * g.costh / g.lambda * g.dl;
    if (kind == ModelKind::Conventional) return grad;

    grad[1] += -kTwoPi * g.Tk / g.dr * g.tf;

    const double rl = r * g.lambda;
    grad[0] += kTwoPi * vth * vth / (r * rl) * g.Tk * g.Tk;
    grad[2] += -kTwoPi * 2.0 * vth / rl * g.Tk * g.Tk;

    grad[0] += -kTwoPi * vth * g.costh / (r * rl) * g.dl * g.Tk;
    grad[2] += kTwoPi * g.costh / rl * g.dl * g.Tk;
    grad[3] += -kTwoPi * vth * g.sinth / rl * g.dl * g.Tk;

    if (kind == ModelKind::UlaGeneral) {
        grad[3] += kTwoPi * g.dl * g.costh / (2.0 * g.dr) * g.tf;
        grad[0] += kTwoPi * g.costh * g.costh / (2.0 * r * rl) * g.dl * g.dl;
        grad[3] += kPi * std::sin(2.0 * tgt.doa_rad) / rl * g.dl * g.dl;
    }
    if (kind == ModelKind::Separated) {
        grad[3] += kTwoPi * g.Dq * g.costh / (2.0 * g.dr) * g.tf;
        grad[0] += kTwoPi * g.Dq * g.costh * g.costh / (r * rl) * g.dl;
        grad[3] += kTwoPi * g.Dq * std::sin(2.0 * tgt.doa_rad) / rl * g.dl;
        grad[0] += -kTwoPi * g.Dq * vth * g.costh / (r * rl) * g.Tk;
        grad[2] += kTwoPi * g.Dq * g.costh / rl * g.Tk;
        grad[3] += -kTwoPi * g.Dq * vth * g.sinth / rl * g.Tk;
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Factored fast path. Every model phase splits into
//   phase(l,k,n) = W[l,k] + s_k * tf_n  (+ d_l * c * tf_n + V[l] for UlaGeneral)
// so a cube fill is one table lookup and one complex multiply per sample, with
// the (k,n) table built by per-row geometric recurrence.

namespace {

struct Factored {
    int L, K, N;
    std::vector<cd> lk;  // L*K
    std::vector<cd> kn;  // K*N
    std::vector<cd> ln;  // L*N (UlaGeneral only, else empty)
};

// phase recurrence along one row: out[i] = exp(j(base + step*i)), resynced
// against drift every 64 samples
void fill_row(cd* out, int count, double base, double step) {
    cd w = std::polar(1.0, base);
    const cd mul = std::polar(1.0, step);
    for (int i = 0; i < count; ++i) {
        if ((i & 63) == 0) w = std::polar(1.0, base + step * i);
        out[i] = w;
        w *= mul;
    }
}

Factored build_factored(const RadarConfig& cfg, const TargetState& tgt, ModelKind kind,
                        int q, cd amplitude, bool include_e, bool include_b, bool include_z,
                        bool conjugate) {
    Factored f;
    f.L = cfg.num_sensors_per_subarray;
    f.K = cfg.num_chirps;
    f.N = cfg.num_fast_samples;
    f.lk.resize(static_cast<std::size_t>(f.L) * f.K);
    f.kn.resize(static_cast<std::size_t>(f.K) * f.N);

    const double lambda = cfg.wavelength();
    const double dr = cfg.range_resolution();
    const double Dq = kind == ModelKind::Separated ? cfg.subarray_center(q) : 0.0;
    const double sinth = std::sin(tgt.doa_rad), costh = std::cos(tgt.doa_rad);
    const double r = tgt.range_m, vr = tgt.radial_velocity_mps,
                 vth = tgt.tangential_velocity_mps;
    const bool nearfield = kind != ModelKind::Conventional;
    const double sign = conjugate ? -1.0 : 1.0;

    const auto d = cfg.sensor_positions();
    const auto Tk = cfg.slow_time_grid();

    // (k,n) bilinear slopes: eta1 range phase and the fast-time range walks
    for (int k = 0; k < f.K; ++k) {
        double s_k = 0.0;
        if (include_e) s_k += -kTwoPi * r / dr;
        if (include_b && nearfield) {
            s_k += -kTwoPi * vr * Tk[k] / dr;
            if (kind == ModelKind::Separated) s_k += kTwoPi * Dq * sinth / (2.0 * dr);
        }
        s_k *= sign;
        // tf_n = (n - (N-1)/2)/N
        fill_row(f.kn.data() + static_cast<std::size_t>(k) * f.N, f.N,
                 s_k * (-(f.N - 1) / 2.0) / f.N, s_k / f.N);
    }

    // (l,k) table with everything that has no fast-time dependence
    for (int l = 0; l < f.L; ++l) {
        for (int k = 0; k < f.K; ++k) {
            double p = 0.0;
            if (include_e)
                p += -kTwoPi * (2.0 * vr / lambda) * Tk[k] + kTwoPi * sinth / lambda * d[l];
            if (nearfield) {
                const bool spatial_in_b = kind == ModelKind::Separated;
                if ((spatial_in_b && include_b) || (!spatial_in_b && include_z))
                    p += kTwoPi * vth * costh / (r * lambda) * d[l] * Tk[k];
                if (include_z) p += -kTwoPi * vth * vth / (r * lambda) * Tk[k] * Tk[k];
                if (kind == ModelKind::Separated) {
                    if (include_b) p += -kTwoPi * Dq * costh * costh / (r * lambda) * d[l];
                    if (include_z) p += kTwoPi * Dq * vth * costh / (r * lambda) * Tk[k];
                }
                if (kind == ModelKind::UlaGeneral && include_b)
                    p += -kTwoPi * costh * costh / (2.0 * r * lambda) * d[l] * d[l];
            }
            f.lk[static_cast<std::size_t>(l) * f.K + k] =
                amplitude * std::polar(1.0, sign * p);
        }
    }

    if (kind == ModelKind::UlaGeneral && include_b) {
        f.ln.resize(static_cast<std::size_t>(f.L) * f.N);
        for (int l = 0; l < f.L; ++l) {
            const double c_l = sign * kTwoPi * d[l] * sinth / (2.0 * dr);
            fill_row(f.ln.data() + static_cast<std::size_t>(l) * f.N, f.N,
                     c_l * (-(f.N - 1) / 2.0) / f.N, c_l / f.N);
        }
    }
    return f;
}

}  // namespace

namespace kernels {

void accumulate_target(cd* cube, const RadarConfig& cfg, const TargetState& tgt,
                       ModelKind kind, int q, cd amplitude) {
    const Factored f =
        build_factored(cfg, tgt, kind, q, amplitude, true, true, true, false);
    const std::size_t rows = static_cast<std::size_t>(f.L) * f.K;
    const bool general = !f.ln.empty();
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t row = 0; row < static_cast<std::ptrdiff_t>(rows); ++row) {
        const int l = static_cast<int>(row / f.K);
        const int k = static_cast<int>(row % f.K);
        cd* out = cube + row * f.N;
        const cd c1 = f.lk[row];
        const cd* c2 = f.kn.data() + static_cast<std::size_t>(k) * f.N;
        if (general) {
            const cd* c3 = f.ln.data() + static_cast<std::size_t>(l) * f.N;
            for (int n = 0; n < f.N; ++n) out[n] += c1 * c2[n] * c3[n];
        } else {
            for (int n = 0; n < f.N; ++n) out[n] += c1 * c2[n];
        }
    }
}

void compensate_in_place(cd* cube, const RadarConfig& cfg, const TargetState& psi_hat,
                         ModelKind kind, int q, bool include_z) {
    const Factored f = build_factored(cfg, psi_hat, kind, q, cd(1.0, 0.0), false, true,
                                      include_z, true);
    const std::size_t rows = static_cast<std::size_t>(f.L) * f.K;
    const bool general = !f.ln.empty();
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (std::ptrdiff_t row = 0; row < static_cast<std::ptrdiff_t>(rows); ++row) {
        const int l = static_cast<int>(row / f.K);
        const int k = static_cast<int>(row % f.K);
        cd* out = cube + row * f.N;
        const cd c1 = f.lk[row];
        const cd* c2 = f.kn.data() + static_cast<std::size_t>(k) * f.N;
        if (general) {
            const cd* c3 = f.ln.data() + static_cast<std::size_t>(l) * f.N;
            for (int n = 0; n < f.N; ++n) out[n] *= c1 * c2[n] * c3[n];
        } else {
            for (int n = 0; n < f.N; ++n) out[n] *= c1 * c2[n];
        }
    }
}

}  // namespace kernels

std::vector<cd> steering_vector(const RadarConfig& cfg, const TargetState& tgt,
                                ModelKind kind, int q) {
    std::vector<cd> a(static_cast<std::size_t>(cfg.num_sensors_per_subarray) *
                          cfg.num_chirps * cfg.num_fast_samples,
                      cd(0.0, 0.0));
    kernels::accumulate_target(a.data(), cfg, tgt, kind, q, cd(1.0, 0.0));
    return a;
}

SteeringSet conventional_steering(const RadarConfig& cfg, double r, double v_r,
                                  double theta_rad) {
    cfg.validate();
    SteeringSet s;
    s.L = cfg.num_sensors_per_subarray;
    s.K = cfg.num_chirps;
    s.N = cfg.num_fast_samples;
    const auto h1 = eta1_range(cfg, r);
    const auto h2 = eta2_doppler(cfg, v_r);
    const auto h3 = eta3_doa(cfg, theta_rad);
    s.e.resize(s.size());
    for (int l = 0; l < s.L; ++l)
        for (int k = 0; k < s.K; ++k)
            for (int n = 0; n < s.N; ++n) s.e[s.index(l, k, n)] = h3[l] * h2[k] * h1[n];
    s.a = s.e;
    return s;
}

namespace {

SteeringSet materialize(const RadarConfig& cfg, const TargetState& tgt, ModelKind kind,
                        int q) {
    SteeringSet s;
    s.L = cfg.num_sensors_per_subarray;
    s.K = cfg.num_chirps;
    s.N = cfg.num_fast_samples;
    s.e.resize(s.size());
    s.b.resize(s.size());
    s.z.resize(s.size());
    s.a.resize(s.size());
    const auto h1 = eta1_range(cfg, tgt.range_m);
    const auto h2 = eta2_doppler(cfg, tgt.radial_velocity_mps);
    const auto h3 = eta3_doa(cfg, tgt.doa_rad);
    const auto d = cfg.sensor_positions();
    const auto Tk = cfg.slow_time_grid();
    const double lambda = cfg.wavelength();
    const double dr = cfg.range_resolution();
    const double Dq = kind == ModelKind::Separated ? cfg.subarray_center(q) : 0.0;
    const double sinth = std::sin(tgt.doa_rad), costh = std::cos(tgt.doa_rad);
    const double r = tgt.range_m, vr = tgt.radial_velocity_mps,
                 vth = tgt.tangential_velocity_mps;

#pragma omp parallel for schedule(static) if (exec::parallel())
    for (int l = 0; l < s.L; ++l) {
        for (int k = 0; k < s.K; ++k) {
            // z: slow-time Doppler migration; spatial part lives here for ULA
            // kinds per Eq.-(32) grouping, in b for the separated model
            double zp = -kTwoPi * vth * vth / (r * lambda) * Tk[k] * Tk[k];
            double bp_lk = 0.0;
            if (kind == ModelKind::Separated) {
                zp += kTwoPi * Dq * vth * costh / (r * lambda) * Tk[k];
                bp_lk += kTwoPi * vth * costh / (r * lambda) * d[l] * Tk[k] -
                         kTwoPi * Dq * costh * costh / (r * lambda) * d[l];
            } else {
                zp += kTwoPi * vth * costh / (r * lambda) * d[l] * Tk[k];
            }
            if (kind == ModelKind::UlaGeneral)
                bp_lk += -kTwoPi * costh * costh / (2.0 * r * lambda) * d[l] * d[l];
            const cd zv = std::polar(1.0, zp);
            for (int n = 0; n < s.N; ++n) {
                const double tf = (n - (s.N - 1) / 2.0) / s.N;
                double bp = bp_lk - kTwoPi * vr * Tk[k] / dr * tf;
                if (kind == ModelKind::Separated)
                    bp += kTwoPi * Dq * sinth / (2.0 * dr) * tf;
                if (kind == ModelKind::UlaGeneral)
                    bp += kTwoPi * d[l] * sinth / (2.0 * dr) * tf;
                const auto idx = s.index(l, k, n);
                s.e[idx] = h3[l] * h2[k] * h1[n];
                s.b[idx] = std::polar(1.0, bp);
                s.z[idx] = zv;
                s.a[idx] = s.e[idx] * s.b[idx] * s.z[idx];
            }
        }
    }
    return s;
}

}  // namespace

SteeringSet migration_tensors_ula(const RadarConfig& cfg, double r, double v_r,
                                  double v_theta, double theta_rad, bool full_model) {
    cfg.validate();
    TargetState t;
    t.range_m = r;
    t.radial_velocity_mps = v_r;
    t.tangential_velocity_mps = v_theta;
    t.doa_rad = theta_rad;
    return materialize(cfg, t, full_model ? ModelKind::UlaGeneral : ModelKind::UlaNearField,
                       0);
}

SteeringSet separated_steering(const RadarConfig& cfg, const TargetState& tgt, int q) {
    cfg.validate();
    if (q < 0 || q > 1) throw ValidationError("subarray index q must be 0 or 1");
    return materialize(cfg, tgt, ModelKind::Separated, q);
}

}  // namespace nfr
