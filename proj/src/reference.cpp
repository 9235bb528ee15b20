#include "nfr/reference.hpp"

#include <cmath>

#include "nfr/bounds.hpp"

namespace nfr::ref {

void accumulate_target(cd* cube, const RadarConfig& cfg, const TargetState& tgt,
                       ModelKind kind, int q, cd amplitude) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    std::size_t i = 0;
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n, ++i)
                cube[i] += amplitude * std::polar(1.0, steering_phase(cfg, tgt, kind, q, l, k, n));
}

void compensate_in_place(cd* cube, const RadarConfig& cfg, const TargetState& psi_hat,
                         ModelKind kind, int q, bool include_z) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    // conj(B [* Z]) = conj(full phase minus the conventional factors [minus Z])
    TargetState conv = psi_hat;
    std::size_t i = 0;
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n, ++i) {
                double p = steering_phase(cfg, psi_hat, kind, q, l, k, n) -
                           steering_phase(cfg, conv, ModelKind::Conventional, q, l, k, n);
                if (!include_z && kind != ModelKind::Conventional) {
                    // remove the Z phase: slow-time chirp, spatial Doppler
                    // migration (ULA kinds) and the D_q Doppler offset
                    const double lambda = cfg.wavelength();
                    const double Tk = (k - (K - 1) / 2.0) * cfg.pri_s;
                    const double dl = lambda / 2.0 * (l - (L - 1) / 2.0);
                    const double r = psi_hat.range_m, vth = psi_hat.tangential_velocity_mps;
                    double zp = -kTwoPi * vth * vth / (r * lambda) * Tk * Tk;
                    if (kind == ModelKind::Separated)
                        zp += kTwoPi * cfg.subarray_center(q) * vth * std::cos(psi_hat.doa_rad) /
                              (r * lambda) * Tk;
                    else
                        zp += kTwoPi * vth * std::cos(psi_hat.doa_rad) / (r * lambda) * dl * Tk;
                    p -= zp;
                }
                cube[i] *= std::polar(1.0, -p);
            }
}

std::vector<cd> extract_slow_time(const cd* cube_q, const RadarConfig& cfg, double r_hat,
                                  double theta_hat) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const auto h1 = eta1_range(cfg, r_hat);
    const auto h3 = eta3_doa(cfg, theta_hat);
    std::vector<cd> y(K, cd(0, 0));
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k)
            for (int n = 0; n < N; ++n)
                y[k] += std::conj(h3[l]) *
                        cube_q[(static_cast<std::size_t>(l) * K + k) * N + n] *
                        std::conj(h1[n]);
    for (auto& v : y) v /= static_cast<double>(L) * N;
    return y;
}

cd matched_filter_point(const cd* cube_q, const RadarConfig& cfg, double r, double v_r,
                        double sin_theta) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const double lambda = cfg.wavelength();
    const double dr = cfg.range_resolution();
    cd acc(0, 0);
    std::size_t i = 0;
    for (int l = 0; l < L; ++l) {
        const double dl = lambda / 2.0 * (l - (L - 1) / 2.0);
        const cd e3 = std::polar(1.0, kTwoPi * sin_theta / lambda * dl);
        for (int k = 0; k < K; ++k) {
            const double Tk = (k - (K - 1) / 2.0) * cfg.pri_s;
            const cd e2 = std::polar(1.0, -kTwoPi * 2.0 * v_r / lambda * Tk);
            for (int n = 0; n < N; ++n, ++i) {
                const double tf = (n - (N - 1) / 2.0) / N;
                const cd e1 = std::polar(1.0, -kTwoPi * r / dr * tf);
                acc += cube_q[i] * std::conj(e3 * e2 * e1);
            }
        }
    }
    return acc;
}

std::vector<double> fim(const RadarConfig& cfg, const TargetState& tgt, ArrayMode mode,
                        double noise_var) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    const ModelKind kind = model_kind(mode);
    const int Q = mode == ArrayMode::Separated ? 2 : 1;
    const int nb = 2 * Q;      // real amplitude parameters
    const int dim = nb + 4;
    std::vector<double> J(static_cast<std::size_t>(dim) * dim, 0.0);

    // mu = beta_q a_q(psi); d mu/d psi_i = j*phase_grad * mu,
    // d mu/d beta_{q,r} = a_q, d mu/d beta_{q,i} = j a_q.
    for (int qq = 0; qq < Q; ++qq) {
        const cd beta = tgt.amplitudes[qq];
        double sg[4][4] = {};  // sum of grad_i*grad_m
        double s1[4] = {};     // sum of grad_i
        for (int l = 0; l < L; ++l)
            for (int k = 0; k < K; ++k)
                for (int n = 0; n < N; ++n) {
                    const auto g = steering_phase_gradient(cfg, tgt, kind, qq, l, k, n);
                    for (int i = 0; i < 4; ++i) {
                        s1[i] += g[i];
                        for (int m = i; m < 4; ++m) sg[i][m] += g[i] * g[m];
                    }
                }
        const double lnk = static_cast<double>(L) * K * N;
        const double c = 2.0 / noise_var;
        const double b2 = std::norm(beta);
        // beta block
        J[(nb + 0) * dim + (nb + 0)] += 0;  // psi block filled below
        J[(2 * qq) * dim + (2 * qq)] += c * lnk;
        J[(2 * qq + 1) * dim + (2 * qq + 1)] += c * lnk;
        for (int i = 0; i < 4; ++i) {
            // cross beta-psi: Re{a^H (j g_i) beta a} = -Im{beta}*sum(g_i) etc.
            J[(2 * qq) * dim + (nb + i)] += c * (-beta.imag()) * s1[i];
            J[(nb + i) * dim + (2 * qq)] = J[(2 * qq) * dim + (nb + i)];
            J[(2 * qq + 1) * dim + (nb + i)] += c * beta.real() * s1[i];
            J[(nb + i) * dim + (2 * qq + 1)] = J[(2 * qq + 1) * dim + (nb + i)];
            for (int m = i; m < 4; ++m) {
                J[(nb + i) * dim + (nb + m)] += c * b2 * sg[i][m];
                J[(nb + m) * dim + (nb + i)] = J[(nb + i) * dim + (nb + m)];
            }
        }
    }
    return J;
}

}  // namespace nfr::ref
