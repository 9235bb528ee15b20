#include "nfr/bounds.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "nfr/steering.hpp"

namespace nfr {

double snr_linear(const RadarConfig& cfg, const TargetState& tgt, ArrayMode mode,
                  double noise_var) {
    const double lnk = static_cast<double>(cfg.num_sensors_per_subarray) * cfg.num_chirps *
                       cfg.num_fast_samples;
    double amp2 = std::norm(tgt.amplitudes[0]);
    if (mode == ArrayMode::Separated) amp2 += std::norm(tgt.amplitudes[1]);
    return lnk * amp2 / noise_var;
}

ClosedFormCrb crb_vtheta_closed(const RadarConfig& cfg, const TargetState& tgt,
                                ArrayMode mode, double noise_var) {
    cfg.validate();
    tgt.validate();
    if (!(noise_var > 0)) throw ValidationError("noise variance must be positive");
    ClosedFormCrb out;
    out.asymptotic_warning = cfg.num_chirps < 100;

    const double lambda = cfg.wavelength();
    const double costh = std::cos(tgt.doa_rad);
    const double nfsa = std::abs(tgt.tangential_velocity_mps) * cfg.observation_time();
    for (double d : cfg.sensor_positions()) out.Ds2 += d * d;

    out.P1 = 8.0 * nfsa * nfsa / 45.0;
    out.P2 = 2.0 * out.Ds2 * costh * costh / (3.0 * cfg.num_sensors_per_subarray);
    out.P3 = mode == ArrayMode::Separated
                 ? cfg.subarray_separation_m * cfg.subarray_separation_m * costh * costh / 6.0
                 : 0.0;
    out.snr_linear = snr_linear(cfg, tgt, mode, noise_var);

    const double psum = out.P1 + out.P2 + out.P3;
    if (psum <= 0.0) {
        out.unbounded = true;
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    const double kt = cfg.observation_time();
    out.value = tgt.range_m * tgt.range_m * lambda * lambda /
                (kPi * kPi * kt * kt * psum * out.snr_linear);
    return out;
}

namespace {

// deterministic accumulation of the per-subarray gradient moments:
// sums of grad_i and grad_i*grad_m over the (l,k,n) grid, chunked over chirps
struct GradientMoments {
    std::array<double, 4> first{};
    std::array<std::array<double, 4>, 4> second{};
};

GradientMoments accumulate_moments(const RadarConfig& cfg, const TargetState& tgt,
                                   ModelKind kind, int q) {
    const int L = cfg.num_sensors_per_subarray, K = cfg.num_chirps, N = cfg.num_fast_samples;
    std::vector<GradientMoments> per_k(K);
#pragma omp parallel for schedule(static) if (exec::parallel())
    for (int k = 0; k < K; ++k) {
        GradientMoments m;
        for (int l = 0; l < L; ++l)
            for (int n = 0; n < N; ++n) {
                const auto g = steering_phase_gradient(cfg, tgt, kind, q, l, k, n);
                for (int i = 0; i < 4; ++i) {
                    m.first[i] += g[i];
                    for (int j = i; j < 4; ++j) m.second[i][j] += g[i] * g[j];
                }
            }
        per_k[k] = m;
    }
    GradientMoments total;
    for (const auto& m : per_k) {
        for (int i = 0; i < 4; ++i) {
            total.first[i] += m.first[i];
            for (int j = i; j < 4; ++j) total.second[i][j] += m.second[i][j];
        }
    }
    return total;
}

std::vector<std::string> param_names_for(ArrayMode mode) {
    if (mode == ArrayMode::Separated)
        return {"beta0_re", "beta0_im", "beta1_re", "beta1_im", "r", "v_r", "v_theta", "theta"};
    return {"beta_re", "beta_im", "r", "v_r", "v_theta", "theta"};
}

}  // namespace

FimReport fim_numeric(const RadarConfig& cfg, const TargetState& tgt, ArrayMode mode,
                      double noise_var) {
    cfg.validate();
    tgt.validate();
    if (!(noise_var > 0)) throw ValidationError("noise variance must be positive");
    if (mode == ArrayMode::Conventional)
        throw ValidationError("FIM for the conventional model carries no v_theta information");
    for (int q = 0; q < (mode == ArrayMode::Separated ? 2 : 1); ++q)
        if (std::abs(tgt.amplitudes[q]) == 0.0)
            throw ValidationError("FIM requires nonzero amplitudes");

    const ModelKind kind = model_kind(mode);
    const int Q = mode == ArrayMode::Separated ? 2 : 1;
    const int nb = 2 * Q;
    const int dim = nb + 4;

    FimReport rep;
    rep.mode = mode;
    rep.param_names = param_names_for(mode);
    rep.dim = dim;
    rep.vtheta_index = nb + 2;
    rep.J.assign(static_cast<std::size_t>(dim) * dim, 0.0);

    const double lnk = static_cast<double>(cfg.num_sensors_per_subarray) * cfg.num_chirps *
                       cfg.num_fast_samples;
    const double c = 2.0 / noise_var;
    for (int q = 0; q < Q; ++q) {
        const cd beta = tgt.amplitudes[q];
        const auto m = accumulate_moments(cfg, tgt, kind, q);
        auto J = [&](int i, int j) -> double& { return rep.J[static_cast<std::size_t>(i) * dim + j]; };
        J(2 * q, 2 * q) += c * lnk;
        J(2 * q + 1, 2 * q + 1) += c * lnk;
        for (int i = 0; i < 4; ++i) {
            J(2 * q, nb + i) += -c * beta.imag() * m.first[i];
            J(nb + i, 2 * q) = J(2 * q, nb + i);
            J(2 * q + 1, nb + i) += c * beta.real() * m.first[i];
            J(nb + i, 2 * q + 1) = J(2 * q + 1, nb + i);
            for (int j = i; j < 4; ++j) {
                J(nb + i, nb + j) += c * std::norm(beta) * m.second[i][j];
                J(nb + j, nb + i) = J(nb + i, nb + j);
            }
        }
    }

    // invert
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        Jm(rep.J.data(), dim, dim);
    Eigen::MatrixXd Jd = Jm;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Jd);
    Eigen::MatrixXd Cinv;
    const double rcond = lu.rcond();
    if (lu.isInvertible() && rcond > 1e-14) {
        Cinv = lu.inverse();
    } else {
        rep.used_pseudo_inverse = true;
        Cinv = Jd.completeOrthogonalDecomposition().pseudoInverse();
    }
    rep.ill_conditioned = rcond < 1e-12;
    rep.C.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) rep.C[static_cast<std::size_t>(i) * dim + j] = Cinv(i, j);
    rep.crb_vtheta_numeric = Cinv(rep.vtheta_index, rep.vtheta_index);

    // beta-nuisance Schur complement only (the paper's reduction)
    {
        Eigen::MatrixXd Jbb = Jd.topLeftCorner(nb, nb);
        Eigen::VectorXd jv = Jd.block(0, rep.vtheta_index, nb, 1);
        const double correction = jv.dot(Jbb.ldlt().solve(jv));
        const double denom = Jd(rep.vtheta_index, rep.vtheta_index) - correction;
        rep.crb_vtheta_schur_beta = denom > 0 ? 1.0 / denom
                                              : std::numeric_limits<double>::infinity();
    }

    const auto closed = crb_vtheta_closed(cfg, tgt, mode, noise_var);
    rep.crb_vtheta_closed = closed.value;
    rep.P1 = closed.P1;
    rep.P2 = closed.P2;
    rep.P3 = closed.P3;
    rep.Ds2 = closed.Ds2;
    rep.snr_linear = closed.snr_linear;
    return rep;
}

std::vector<double> fim_finite_difference(const RadarConfig& cfg, const TargetState& tgt,
                                          ArrayMode mode, double noise_var, double rel_step) {
    const ModelKind kind = model_kind(mode);
    const int Q = mode == ArrayMode::Separated ? 2 : 1;
    const int nb = 2 * Q;
    const int dim = nb + 4;
    const std::size_t sz = static_cast<std::size_t>(cfg.num_sensors_per_subarray) *
                           cfg.num_chirps * cfg.num_fast_samples;

    // mu stacked over subarrays; parameters [beta..., r, v_r, v_theta, theta]
    auto mu = [&](const TargetState& t) {
        std::vector<cd> m(sz * Q, cd(0, 0));
        for (int q = 0; q < Q; ++q)
            kernels::accumulate_target(m.data() + q * sz, cfg, t, kind, q, t.amplitudes[q]);
        return m;
    };

    auto perturb = [&](int i, double h, int sign) {
        TargetState t = tgt;
        if (i < nb) {
            cd& b = t.amplitudes[i / 2];
            if (i % 2 == 0)
                b = cd(b.real() + sign * h, b.imag());
            else
                b = cd(b.real(), b.imag() + sign * h);
        } else {
            switch (i - nb) {
                case 0: t.range_m += sign * h; break;
                case 1: t.radial_velocity_mps += sign * h; break;
                case 2: t.tangential_velocity_mps += sign * h; break;
                case 3: t.doa_rad += sign * h; break;
            }
        }
        return t;
    };

    std::vector<double> steps(dim);
    for (int i = 0; i < dim; ++i) {
        double scale = 1.0;
        if (i >= nb) {
            switch (i - nb) {
                case 0: scale = std::max(std::abs(tgt.range_m), 1.0); break;
                case 1: scale = std::max(std::abs(tgt.radial_velocity_mps), 1.0); break;
                case 2: scale = std::max(std::abs(tgt.tangential_velocity_mps), 1.0); break;
                case 3: scale = 1.0; break;
            }
        }
        steps[i] = rel_step * scale;
    }

    std::vector<std::vector<cd>> diffs(dim);
    for (int i = 0; i < dim; ++i) {
        const auto hi = mu(perturb(i, steps[i], +1));
        const auto lo = mu(perturb(i, steps[i], -1));
        diffs[i].resize(sz * Q);
        for (std::size_t s = 0; s < sz * Q; ++s)
            diffs[i][s] = (hi[s] - lo[s]) / (2.0 * steps[i]);
    }

    std::vector<double> J(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i)
        for (int m = i; m < dim; ++m) {
            cd acc(0, 0);
            for (std::size_t s = 0; s < sz * Q; ++s)
                acc += std::conj(diffs[i][s]) * diffs[m][s];
            J[static_cast<std::size_t>(i) * dim + m] = 2.0 / noise_var * acc.real();
            J[static_cast<std::size_t>(m) * dim + i] = J[static_cast<std::size_t>(i) * dim + m];
        }
    return J;
}

}  // namespace nfr
