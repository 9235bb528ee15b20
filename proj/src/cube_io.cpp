#include "nfr/cube_io.hpp"

#include <cstring>
#include <fstream>

namespace nfr {

namespace {
constexpr char kMagic[4] = {'N', 'F', 'R', 'C'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
}  // namespace

void write_cube(const std::string& path, const DataCube& cube, const Scene& scene,
                bool single_precision) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open cube file for writing: " + path);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kFormatVersion);
    put<std::uint32_t>(os, cube.num_subarrays);
    put<std::uint32_t>(os, cube.cfg.num_sensors_per_subarray);
    put<std::uint32_t>(os, cube.cfg.num_chirps);
    put<std::uint32_t>(os, cube.cfg.num_fast_samples);
    put<std::uint8_t>(os, cube.fidelity == Fidelity::Exact ? 1 : 0);
    put<double>(os, cube.noise_var);
    put<std::uint64_t>(os, cube.seed);
    if (single_precision) {
        std::vector<float> buf(2 * cube.samples.size());
        for (std::size_t i = 0; i < cube.samples.size(); ++i) {
            buf[2 * i] = static_cast<float>(cube.samples[i].real());
            buf[2 * i + 1] = static_cast<float>(cube.samples[i].imag());
        }
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
        os.write(reinterpret_cast<const char*>(cube.samples.data()),
                 static_cast<std::streamsize>(cube.samples.size() * sizeof(cd)));
    }
    if (!os) throw ValidationError("short write: " + path);
    std::ofstream sidecar(path + ".scene.json");
    sidecar << scene_to_json_text(scene) << "\n";
}

LoadedCube read_cube(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open cube file: " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw ValidationError("bad cube magic: " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kFormatVersion) throw ValidationError("unsupported cube version");
    LoadedCube out;
    const auto Q = get<std::uint32_t>(is);
    const auto L = get<std::uint32_t>(is);
    const auto K = get<std::uint32_t>(is);
    const auto N = get<std::uint32_t>(is);
    const auto fid = get<std::uint8_t>(is);
    const double noise_var = get<double>(is);
    const auto seed = get<std::uint64_t>(is);
    if (!is) throw ValidationError("truncated cube header: " + path);

    const std::size_t count = static_cast<std::size_t>(Q) * L * K * N;
    const auto header_end = is.tellg();
    is.seekg(0, std::ios::end);
    const std::size_t payload = static_cast<std::size_t>(is.tellg() - header_end);
    is.seekg(header_end);
    const bool single = payload == count * 2 * sizeof(float);
    if (!single && payload != count * sizeof(cd))
        throw ValidationError("cube payload size does not match header dims");

    out.scene = scene_from_json_file(path + ".scene.json");
    out.cube.cfg = out.scene.radar;
    out.cube.num_subarrays = static_cast<int>(Q);
    out.cube.noise_var = noise_var;
    out.cube.seed = seed;
    out.cube.fidelity = fid ? Fidelity::Exact : Fidelity::Approx;
    out.cube.samples.resize(count);
    if (single) {
        std::vector<float> buf(2 * count);
        is.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        for (std::size_t i = 0; i < count; ++i)
            out.cube.samples[i] = cd(buf[2 * i], buf[2 * i + 1]);
    } else {
        is.read(reinterpret_cast<char*>(out.cube.samples.data()),
                static_cast<std::streamsize>(count * sizeof(cd)));
    }
    if (!is) throw ValidationError("truncated cube payload: " + path);
    if (static_cast<int>(L) != out.scene.radar.num_sensors_per_subarray ||
        static_cast<int>(K) != out.scene.radar.num_chirps ||
        static_cast<int>(N) != out.scene.radar.num_fast_samples)
        throw ValidationError("cube dims disagree with the scene sidecar");
    return out;
}

}  // namespace nfr
