#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rte/case_sampling.hpp"
#include "rte/furnace_mesh.hpp"

namespace rte {

// ---------------------------------------------------------------------------
// Tensor files: "RTEN", u32 version, u32 rank, u32 dims[rank], f32 payload,
// all little-endian, payload row-major.

inline constexpr std::uint32_t tensor_format_version = 1;

struct TensorF32 {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
};

std::vector<std::byte> encode_tensor(const TensorF32& t);
TensorF32 decode_tensor(std::span<const std::byte> bytes);
void write_tensor(const std::filesystem::path& path, const TensorF32& t);
TensorF32 read_tensor(const std::filesystem::path& path);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);

// ---------------------------------------------------------------------------
// Case views.

// [eps(B), T0(B), T(cells, row-major from cell (0,0))], B = 2(nx+ny).
std::vector<double> mlp_view(std::span<const double> emissivity, std::span<const double> wall_temperature,
                             std::span<const double> gas_temperature, const FurnaceMesh& mesh);

struct CaseFields {
    std::vector<double> emissivity;
    std::vector<double> wall_temperature;
    std::vector<double> gas_temperature;
};

CaseFields decode_mlp_view(std::span<const double> flat, const FurnaceMesh& mesh);

// Three channels of (ny+2) x (nx+2) pixels, channel-major. Row 0 is the south
// frame row, column 0 the west frame column. Channel 0 holds emissivity and
// channel 1 wall temperature on the frame; channel 2 holds gas temperature in
// the interior. Everything else, including the four corners, is zero.
struct Image {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    double& at(std::size_t c, std::size_t row, std::size_t col) { return pixels[(c * height + row) * width + col]; }
    double at(std::size_t c, std::size_t row, std::size_t col) const {
        return pixels[(c * height + row) * width + col];
    }
};

struct Pixel {
    std::size_t row = 0;
    std::size_t col = 0;
};

// Frame pixel of a boundary point.
Pixel frame_pixel(const FurnaceMesh& mesh, std::size_t boundary_index);

Image cnn_view(std::span<const double> emissivity, std::span<const double> wall_temperature,
               std::span<const double> gas_temperature, const FurnaceMesh& mesh);
Image cnn_view_from_flat(std::span<const double> flat, const FurnaceMesh& mesh);
CaseFields decode_cnn_view(const Image& image, const FurnaceMesh& mesh);

// ---------------------------------------------------------------------------
// Normalization.

// x' = (x - min) / (max - min); a constant block uses scale 1.
struct Scaler {
    double min = 0.0;
    double max = 1.0;

    double scale() const noexcept { return max > min ? max - min : 1.0; }
    double forward(double x) const noexcept { return (x - min) / scale(); }
    double inverse(double x) const noexcept { return x * scale() + min; }
    bool degenerate() const noexcept { return !(max > min); }
};

struct Scalers {
    Scaler emissivity;
    Scaler wall_temperature;
    Scaler gas_temperature;
    Scaler irradiation;
};

struct NormalizedDataset {
    FurnaceMesh mesh{1, 1, 1.0, 1.0};
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<std::vector<double>> inputs;   // normalized flat view
    std::vector<std::vector<double>> outputs;  // normalized H
    Scalers scalers;
    std::vector<std::string> warnings;
};

// Fits scalers on the training rows only.
Scalers fit_scalers(const RawDataset& raw, std::vector<std::string>* warnings = nullptr);
NormalizedDataset normalize(const RawDataset& raw);
NormalizedDataset normalize(const RawDataset& raw, const Scalers& scalers);
std::vector<double> normalize_inputs(std::span<const double> flat, const Scalers& s, const FurnaceMesh& mesh);
std::vector<double> denormalize_inputs(std::span<const double> flat, const Scalers& s, const FurnaceMesh& mesh);
std::vector<double> denormalize_outputs(std::span<const double> h, const Scalers& s);

// Output slice selected by target: "all" or a wall name.
IndexRange target_range(const FurnaceMesh& mesh, const std::string& target);

// ---------------------------------------------------------------------------
// On-disk dataset: manifest.json + inputs.rten + outputs.rten.

struct DatasetManifest {
    std::uint64_t seed = 0;
    nlohmann::json distribution;
    std::size_t nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    Scalers scalers;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::string solver_config_hash;
    std::vector<std::string> warnings;
    // filename -> sha256
    std::vector<std::pair<std::string, std::string>> files;
};

nlohmann::json scalers_to_json(const Scalers& s);
Scalers scalers_from_json(const nlohmann::json& j);

struct DatasetProvenance {
    std::uint64_t seed = 0;
    nlohmann::json distribution;
    std::string solver_config_hash;
};

DatasetManifest save_dataset(const std::filesystem::path& dir, const RawDataset& raw, const DatasetProvenance& prov);

struct LoadedDataset {
    DatasetManifest manifest;
    RawDataset raw;
};

// Verifies checksums.
LoadedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace rte
