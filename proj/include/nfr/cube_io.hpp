#pragma once

#include <string>

#include "nfr/scenario.hpp"
#include "nfr/synth.hpp"

namespace nfr {

/// Binary cube dump, little-endian:
///   magic "NFRC", version u32, Q u32, L u32, K u32, N u32,
///   fidelity u8, sigma_w^2 f64, seed u64,
/// then row-major (q,l,k,n) complex64 or complex128 payload (precision is
/// inferred from the payload size on read). A JSON sidecar with the full
/// scene is written as <path>.scene.json.
void write_cube(const std::string& path, const DataCube& cube, const Scene& scene,
                bool single_precision = false);

struct LoadedCube {
    DataCube cube;
    Scene scene;
};

LoadedCube read_cube(const std::string& path);

}  // namespace nfr
