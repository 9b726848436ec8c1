#include "rte/dataset_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "rte/errors.hpp"
#include "rte/hash.hpp"

namespace rte {

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
    return v;
}

constexpr char tensor_magic[4] = {'R', 'T', 'E', 'N'};

}  // namespace

std::size_t TensorF32::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::byte> encode_tensor(const TensorF32& t) {
    if (t.element_count() != t.data.size()) throw ShapeError("tensor payload does not match its dims");
    std::vector<std::byte> out;
    out.reserve(12 + 4 * t.dims.size() + 4 * t.data.size());
    for (char c : tensor_magic) out.push_back(static_cast<std::byte>(c));
    put_u32(out, tensor_format_version);
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

TensorF32 decode_tensor(std::span<const std::byte> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), tensor_magic, 4) != 0) {
        throw IoError("not an RTEN tensor (bad magic)");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != tensor_format_version) throw IoError("unsupported RTEN version " + std::to_string(version));
    const std::uint32_t rank = get_u32(bytes, 8);
    if (bytes.size() < 12 + 4 * static_cast<std::size_t>(rank)) throw IoError("truncated RTEN header");
    TensorF32 t;
    for (std::uint32_t r = 0; r < rank; ++r) t.dims.push_back(get_u32(bytes, 12 + 4 * r));
    const std::size_t header = 12 + 4 * static_cast<std::size_t>(rank);
    const std::size_t count = t.element_count();
    if (bytes.size() != header + 4 * count) {
        throw IoError("RTEN payload is " + std::to_string(bytes.size() - header) + " bytes, expected " +
                      std::to_string(4 * count));
    }
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
    return t;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (!in) throw IoError("short read on " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed on " + path.string());
}

void write_tensor(const std::filesystem::path& path, const TensorF32& t) { write_file_bytes(path, encode_tensor(t)); }

TensorF32 read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file_bytes(path)); }

// ---------------------------------------------------------------------------

std::vector<double> mlp_view(std::span<const double> emissivity, std::span<const double> wall_temperature,
                             std::span<const double> gas_temperature, const FurnaceMesh& mesh) {
    const std::size_t b = mesh.boundary_count();
    if (emissivity.size() != b || wall_temperature.size() != b || gas_temperature.size() != mesh.cell_count()) {
        throw ShapeError("case field lengths do not match the mesh");
    }
    std::vector<double> out;
    out.reserve(2 * b + mesh.cell_count());
    out.insert(out.end(), emissivity.begin(), emissivity.end());
    out.insert(out.end(), wall_temperature.begin(), wall_temperature.end());
    out.insert(out.end(), gas_temperature.begin(), gas_temperature.end());
    return out;
}

CaseFields decode_mlp_view(std::span<const double> flat, const FurnaceMesh& mesh) {
    const std::size_t b = mesh.boundary_count();
    if (flat.size() != 2 * b + mesh.cell_count()) throw ShapeError("flat view length does not match the mesh");
    CaseFields f;
    f.emissivity.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(b));
    f.wall_temperature.assign(flat.begin() + static_cast<std::ptrdiff_t>(b),
                              flat.begin() + static_cast<std::ptrdiff_t>(2 * b));
    f.gas_temperature.assign(flat.begin() + static_cast<std::ptrdiff_t>(2 * b), flat.end());
    return f;
}

Pixel frame_pixel(const FurnaceMesh& mesh, std::size_t index) {
    const std::size_t nx = mesh.nx();
    const std::size_t ny = mesh.ny();
    switch (mesh.boundary_point(index).wall) {
        case Wall::south: return {0, index + 1};
        case Wall::east: return {index - nx + 1, nx + 1};
        case Wall::north: return {ny + 1, nx - (index - nx - ny)};
        case Wall::west: return {ny - (index - 2 * nx - ny), 0};
    }
    return {};
}

Image cnn_view(std::span<const double> emissivity, std::span<const double> wall_temperature,
               std::span<const double> gas_temperature, const FurnaceMesh& mesh) {
    const std::size_t b = mesh.boundary_count();
    if (emissivity.size() != b || wall_temperature.size() != b || gas_temperature.size() != mesh.cell_count()) {
        throw ShapeError("case field lengths do not match the mesh");
    }
    Image img{3, mesh.ny() + 2, mesh.nx() + 2, {}};
    img.pixels.assign(img.channels * img.height * img.width, 0.0);
    for (std::size_t p = 0; p < b; ++p) {
        const Pixel px = frame_pixel(mesh, p);
        img.at(0, px.row, px.col) = emissivity[p];
        img.at(1, px.row, px.col) = wall_temperature[p];
    }
    for (std::size_t j = 0; j < mesh.ny(); ++j) {
        for (std::size_t i = 0; i < mesh.nx(); ++i) img.at(2, j + 1, i + 1) = gas_temperature[j * mesh.nx() + i];
    }
    return img;
}

Image cnn_view_from_flat(std::span<const double> flat, const FurnaceMesh& mesh) {
    const std::size_t b = mesh.boundary_count();
    if (flat.size() != 2 * b + mesh.cell_count()) throw ShapeError("flat view length does not match the mesh");
    return cnn_view(flat.subspan(0, b), flat.subspan(b, b), flat.subspan(2 * b), mesh);
}

CaseFields decode_cnn_view(const Image& img, const FurnaceMesh& mesh) {
    if (img.channels != 3 || img.height != mesh.ny() + 2 || img.width != mesh.nx() + 2) {
        throw ShapeError("image dimensions do not match the mesh");
    }
    CaseFields f;
    const std::size_t b = mesh.boundary_count();
    f.emissivity.resize(b);
    f.wall_temperature.resize(b);
    for (std::size_t p = 0; p < b; ++p) {
        const Pixel px = frame_pixel(mesh, p);
        f.emissivity[p] = img.at(0, px.row, px.col);
        f.wall_temperature[p] = img.at(1, px.row, px.col);
    }
    f.gas_temperature.resize(mesh.cell_count());
    for (std::size_t j = 0; j < mesh.ny(); ++j) {
        for (std::size_t i = 0; i < mesh.nx(); ++i) f.gas_temperature[j * mesh.nx() + i] = img.at(2, j + 1, i + 1);
    }
    return f;
}

// ---------------------------------------------------------------------------

namespace {

Scaler fit(const RawDataset& raw, bool outputs, std::size_t begin, std::size_t end) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < raw.n_train; ++s) {
        const auto& row = outputs ? raw.outputs[s] : raw.inputs[s];
        for (std::size_t k = begin; k < end; ++k) {
            lo = std::min(lo, row[k]);
            hi = std::max(hi, row[k]);
        }
    }
    return {lo, hi};
}

template <class F>
std::vector<double> map_blocks(std::span<const double> flat, const Scalers& s, const FurnaceMesh& mesh, F&& f) {
    const std::size_t b = mesh.boundary_count();
    if (flat.size() != 2 * b + mesh.cell_count()) throw ShapeError("flat view length does not match the mesh");
    std::vector<double> out(flat.size());
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const Scaler& sc = k < b ? s.emissivity : (k < 2 * b ? s.wall_temperature : s.gas_temperature);
        out[k] = f(sc, flat[k]);
    }
    return out;
}

}  // namespace

Scalers fit_scalers(const RawDataset& raw, std::vector<std::string>* warnings) {
    if (raw.n_train == 0 || raw.inputs.size() < raw.n_train) throw ShapeError("dataset has no training rows");
    const std::size_t b = raw.mesh.boundary_count();
    Scalers s;
    s.emissivity = fit(raw, false, 0, b);
    s.wall_temperature = fit(raw, false, b, 2 * b);
    s.gas_temperature = fit(raw, false, 2 * b, 2 * b + raw.mesh.cell_count());
    s.irradiation = fit(raw, true, 0, b);
    if (warnings != nullptr) {
        const std::pair<const char*, const Scaler*> blocks[] = {{"eps", &s.emissivity},
                                                                {"T0", &s.wall_temperature},
                                                                {"T", &s.gas_temperature},
                                                                {"H", &s.irradiation}};
        for (const auto& [name, sc] : blocks) {
            if (sc->degenerate()) warnings->push_back(std::string("constant block ") + name + ": identity scale");
        }
    }
    return s;
}

std::vector<double> normalize_inputs(std::span<const double> flat, const Scalers& s, const FurnaceMesh& mesh) {
    return map_blocks(flat, s, mesh, [](const Scaler& sc, double x) { return sc.forward(x); });
}

std::vector<double> denormalize_inputs(std::span<const double> flat, const Scalers& s, const FurnaceMesh& mesh) {
    return map_blocks(flat, s, mesh, [](const Scaler& sc, double x) { return sc.inverse(x); });
}

std::vector<double> denormalize_outputs(std::span<const double> h, const Scalers& s) {
    std::vector<double> out(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) out[k] = s.irradiation.inverse(h[k]);
    return out;
}

NormalizedDataset normalize(const RawDataset& raw, const Scalers& scalers) {
    NormalizedDataset ds;
    ds.mesh = raw.mesh;
    ds.n_train = raw.n_train;
    ds.n_test = raw.n_test;
    ds.scalers = scalers;
    ds.inputs.reserve(raw.size());
    ds.outputs.reserve(raw.size());
    for (std::size_t s = 0; s < raw.size(); ++s) {
        ds.inputs.push_back(normalize_inputs(raw.inputs[s], scalers, raw.mesh));
        std::vector<double> h(raw.outputs[s].size());
        for (std::size_t k = 0; k < h.size(); ++k) h[k] = scalers.irradiation.forward(raw.outputs[s][k]);
        ds.outputs.push_back(std::move(h));
    }
    return ds;
}

NormalizedDataset normalize(const RawDataset& raw) {
    if (raw.size() == 0) throw ShapeError("cannot normalize an empty dataset");
    std::vector<std::string> warnings;
    const Scalers s = fit_scalers(raw, &warnings);
    NormalizedDataset ds = normalize(raw, s);
    ds.warnings = std::move(warnings);
    return ds;
}

IndexRange target_range(const FurnaceMesh& mesh, const std::string& target) {
    if (target == "all") return {0, mesh.boundary_count()};
    return mesh.wall_range(parse_wall(target));
}

// ---------------------------------------------------------------------------

nlohmann::json scalers_to_json(const Scalers& s) {
    auto one = [](const Scaler& sc) { return nlohmann::json{{"min", sc.min}, {"max", sc.max}}; };
    return {{"eps", one(s.emissivity)},
            {"T0", one(s.wall_temperature)},
            {"T", one(s.gas_temperature)},
            {"H", one(s.irradiation)}};
}

Scalers scalers_from_json(const nlohmann::json& j) {
    auto one = [&](const char* key) {
        const auto& e = j.at(key);
        return Scaler{e.at("min").get<double>(), e.at("max").get<double>()};
    };
    return {one("eps"), one("T0"), one("T"), one("H")};
}

namespace {

TensorF32 to_tensor(const std::vector<std::vector<double>>& rows) {
    TensorF32 t;
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    t.dims = {static_cast<std::uint32_t>(rows.size()), static_cast<std::uint32_t>(cols)};
    t.data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw ShapeError("ragged dataset rows");
        for (double v : r) t.data.push_back(static_cast<float>(v));
    }
    return t;
}

std::vector<std::vector<double>> from_tensor(const TensorF32& t) {
    if (t.dims.size() != 2) throw IoError("dataset tensor must be rank 2");
    std::vector<std::vector<double>> rows(t.dims[0], std::vector<double>(t.dims[1]));
    for (std::size_t r = 0; r < t.dims[0]; ++r) {
        for (std::size_t c = 0; c < t.dims[1]; ++c) rows[r][c] = t.data[r * t.dims[1] + c];
    }
    return rows;
}

}  // namespace

DatasetManifest save_dataset(const std::filesystem::path& dir, const RawDataset& raw, const DatasetProvenance& prov) {
    std::filesystem::create_directories(dir);
    DatasetManifest m;
    m.seed = prov.seed;
    m.distribution = prov.distribution;
    m.nx = raw.mesh.nx();
    m.ny = raw.mesh.ny();
    m.lx = raw.mesh.lx();
    m.ly = raw.mesh.ly();
    m.scalers = fit_scalers(raw, &m.warnings);
    m.n_train = raw.n_train;
    m.n_test = raw.n_test;
    m.solver_config_hash = prov.solver_config_hash;

    const std::pair<const char*, const std::vector<std::vector<double>>*> files[] = {{"inputs.rten", &raw.inputs},
                                                                                      {"outputs.rten", &raw.outputs}};
    for (const auto& [name, rows] : files) {
        const auto bytes = encode_tensor(to_tensor(*rows));
        write_file_bytes(dir / name, bytes);
        m.files.emplace_back(name, sha256_hex(bytes));
    }

    nlohmann::json j;
    j["format"] = "rte-dataset/1";
    j["seed"] = m.seed;
    j["distribution"] = m.distribution;
    j["mesh"] = {{"nx", m.nx}, {"ny", m.ny}, {"Lx", m.lx}, {"Ly", m.ly}};
    j["scalers"] = scalers_to_json(m.scalers);
    j["normalization"] = "per-block min-max fitted on training rows";
    j["counts"] = {{"n_train", m.n_train}, {"n_test", m.n_test}};
    j["layout"] = {{"rows", "train rows first, then test rows"},
                   {"inputs", "eps[2(nx+ny)], T0[2(nx+ny)], T[nx*ny] row-major"},
                   {"outputs", "H[2(nx+ny)] W/m^2, counter-clockwise from the west end of the south wall"}};
    j["solver_config_hash"] = m.solver_config_hash;
    j["warnings"] = m.warnings;
    j["files"] = nlohmann::json::array();
    for (const auto& [name, sum] : m.files) j["files"].push_back({{"path", name}, {"sha256", sum}});
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
    return m;
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no manifest.json in " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what(), "manifest");
    }
    LoadedDataset out;
    DatasetManifest& m = out.manifest;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.distribution = j.at("distribution");
        m.nx = j.at("mesh").at("nx").get<std::size_t>();
        m.ny = j.at("mesh").at("ny").get<std::size_t>();
        m.lx = j.at("mesh").at("Lx").get<double>();
        m.ly = j.at("mesh").at("Ly").get<double>();
        m.scalers = scalers_from_json(j.at("scalers"));
        m.n_train = j.at("counts").at("n_train").get<std::size_t>();
        m.n_test = j.at("counts").at("n_test").get<std::size_t>();
        m.solver_config_hash = j.at("solver_config_hash").get<std::string>();
        m.warnings = j.value("warnings", std::vector<std::string>{});
        for (const auto& f : j.at("files")) {
            m.files.emplace_back(f.at("path").get<std::string>(), f.at("sha256").get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what(), "manifest");
    }

    std::vector<TensorF32> tensors;
    for (const auto& [name, sum] : m.files) {
        const auto bytes = read_file_bytes(dir / name);
        if (sha256_hex(bytes) != sum) throw IoError("checksum mismatch for " + (dir / name).string());
        tensors.push_back(decode_tensor(bytes));
    }
    if (tensors.size() != 2) throw IoError("dataset must list inputs and outputs tensors");

    RawDataset& raw = out.raw;
    raw.mesh = FurnaceMesh(m.nx, m.ny, m.lx, m.ly);
    raw.n_train = m.n_train;
    raw.n_test = m.n_test;
    raw.inputs = from_tensor(tensors[0]);
    raw.outputs = from_tensor(tensors[1]);
    if (raw.inputs.size() != m.n_train + m.n_test || raw.outputs.size() != raw.inputs.size()) {
        throw IoError("dataset row count does not match the manifest counts");
    }
    if (!raw.inputs.empty() && (raw.inputs[0].size() != 2 * raw.mesh.boundary_count() + raw.mesh.cell_count() ||
                                raw.outputs[0].size() != raw.mesh.boundary_count())) {
        throw IoError("dataset tensor widths do not match the mesh");
    }
    return out;
}

}  // namespace rte
