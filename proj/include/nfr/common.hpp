#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nfr {

using cd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kDefaultWaveSpeed = 2.998e8;  // m/s

inline constexpr const char* kVersion = "0.1.0";

/// Thrown on invalid configuration or scenario input (CLI exit code 2).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an estimator cannot deliver what was asked for (CLI exit code 3).
class EstimatorShortfall : public std::runtime_error {
public:
    explicit EstimatorShortfall(const std::string& what) : std::runtime_error(what) {}
};

namespace exec {

// Runtime switch between the OpenMP kernels and their serial execution.
// Every parallel loop is `schedule(static)` with per-chunk serial reduction,
// so results are identical for any worker count.
void set_parallel(bool on);
bool parallel();
int num_threads();

}  // namespace exec

/// SplitMix64 step; used to derive independent RNG substreams from a key.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combine a seed with stream indices into a substream seed.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ (b + 0x9e3779b97f4a7c15ULL));
    s = splitmix64(s ^ (c + 0x3c6ef372fe94f82bULL));
    return s;
}

/// FNV-1a over bytes; stable across builds, used for output manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace nfr
