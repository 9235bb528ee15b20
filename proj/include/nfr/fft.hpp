#pragma once

#include <array>
#include <vector>

#include "nfr/common.hpp"

namespace nfr {

/// Batched 1-D transform along `axis` of a row-major (d0,d1,d2) array,
/// zero-padded to `padded` points. sign=-1 forward (exp(-j2pi mn/M)),
/// sign=+1 backward, both unnormalized. Lines run in parallel; each line is a
/// single FFTW execution, so output is independent of the worker count.
std::vector<cd> fft_axis(const std::vector<cd>& in, std::array<int, 3> dims, int axis,
                         int padded, int sign);

/// 1-D convenience wrapper.
std::vector<cd> fft_1d(const std::vector<cd>& in, int padded, int sign);

}  // namespace nfr
