#include "nfr/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace nfr {

namespace {

// Cached FFTW plans. Creation is serialized (the planner is not thread-safe);
// fftw_execute_dft on distinct buffers is safe. All plans are ESTIMATE and
// UNALIGNED so they run on any pointer.
class PlanCache {
public:
    // W transforms of length n on a contiguous (n x W) tile, distance 1
    fftw_plan tile(int n, int w, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(n, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cd> s(static_cast<std::size_t>(n) * w);
        fftw_plan p = fftw_plan_many_dft(1, &n, w, reinterpret_cast<fftw_complex*>(s.data()),
                                         nullptr, w, 1,
                                         reinterpret_cast<fftw_complex*>(s.data()), nullptr,
                                         w, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[key] = p;
        return p;
    }

    fftw_plan line(int n, int sign) { return tile(n, 1, sign); }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

constexpr int kTileWidth = 64;

}  // namespace

std::vector<cd> fft_axis(const std::vector<cd>& in, std::array<int, 3> dims, int axis,
                         int padded, int sign) {
    const int len = dims[axis];
    if (padded < len) throw std::invalid_argument("fft_axis: padded length below data length");
    std::array<int, 3> odims = dims;
    odims[axis] = padded;
    std::vector<cd> out(static_cast<std::size_t>(odims[0]) * odims[1] * odims[2]);
    const int fftw_sign = sign == -1 ? FFTW_FORWARD : FFTW_BACKWARD;

    if (axis == 2) {
        // contiguous lines, zero-padded in place in the output
        const std::size_t lines = static_cast<std::size_t>(dims[0]) * dims[1];
        fftw_plan plan = cache().line(padded, fftw_sign);
#pragma omp parallel for schedule(static) if (exec::parallel())
        for (std::ptrdiff_t ln = 0; ln < static_cast<std::ptrdiff_t>(lines); ++ln) {
            const cd* src = in.data() + ln * len;
            cd* dst = out.data() + ln * padded;
            std::memcpy(dst, src, sizeof(cd) * len);
            std::fill(dst + len, dst + padded, cd(0, 0));
            fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(dst),
                             reinterpret_cast<fftw_complex*>(dst));
        }
        return out;
    }

    // strided axis: gather (len x W) tiles into contiguous scratch, transform
    // the W columns in one batched call, scatter the padded result
    const std::size_t in_inner = axis == 1 ? static_cast<std::size_t>(dims[2])
                                           : static_cast<std::size_t>(dims[1]) * dims[2];
    const std::size_t out_inner = axis == 1 ? static_cast<std::size_t>(odims[2])
                                            : static_cast<std::size_t>(odims[1]) * odims[2];
    const int outers = axis == 1 ? dims[0] : 1;
    const std::size_t ntiles = (in_inner + kTileWidth - 1) / kTileWidth;

#pragma omp parallel if (exec::parallel())
    {
        std::vector<cd> scratch(static_cast<std::size_t>(padded) * kTileWidth);
#pragma omp for schedule(static) collapse(2)
        for (int o = 0; o < outers; ++o) {
            for (std::ptrdiff_t tile = 0; tile < static_cast<std::ptrdiff_t>(ntiles); ++tile) {
                const std::size_t col0 = tile * kTileWidth;
                const int w = static_cast<int>(std::min<std::size_t>(kTileWidth,
                                                                     in_inner - col0));
                const cd* src = in.data() + static_cast<std::size_t>(o) * len * in_inner + col0;
                cd* dst = out.data() + static_cast<std::size_t>(o) * padded * out_inner + col0;
                if (w == kTileWidth) {
                    for (int i = 0; i < len; ++i)
                        std::memcpy(scratch.data() + static_cast<std::size_t>(i) * kTileWidth,
                                    src + static_cast<std::size_t>(i) * in_inner,
                                    sizeof(cd) * kTileWidth);
                    std::fill(scratch.begin() + static_cast<std::size_t>(len) * kTileWidth,
                              scratch.end(), cd(0, 0));
                    fftw_plan p = cache().tile(padded, kTileWidth, fftw_sign);
                    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(scratch.data()),
                                     reinterpret_cast<fftw_complex*>(scratch.data()));
                    for (int i = 0; i < padded; ++i)
                        std::memcpy(dst + static_cast<std::size_t>(i) * out_inner,
                                    scratch.data() + static_cast<std::size_t>(i) * kTileWidth,
                                    sizeof(cd) * kTileWidth);
                } else {
                    // ragged tail: per-column line transforms
                    std::vector<cd> col(padded);
                    fftw_plan p = cache().line(padded, fftw_sign);
                    for (int c = 0; c < w; ++c) {
                        for (int i = 0; i < len; ++i)
                            col[i] = src[static_cast<std::size_t>(i) * in_inner + c];
                        std::fill(col.begin() + len, col.end(), cd(0, 0));
                        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(col.data()),
                                         reinterpret_cast<fftw_complex*>(col.data()));
                        for (int i = 0; i < padded; ++i)
                            dst[static_cast<std::size_t>(i) * out_inner + c] = col[i];
                    }
                }
            }
        }
    }
    return out;
}

std::vector<cd> fft_1d(const std::vector<cd>& in, int padded, int sign) {
    return fft_axis(in, {1, 1, static_cast<int>(in.size())}, 2, padded, sign);
}

}  // namespace nfr
