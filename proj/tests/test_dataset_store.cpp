#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "rte/dataset_store.hpp"
#include "rte/errors.hpp"
#include "rte/rng.hpp"

using namespace rte;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rte_test_dataset_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Random raw dataset with physical ranges.
RawDataset random_raw(const FurnaceMesh& mesh, std::size_t n_train, std::size_t n_test, std::uint64_t seed) {
    Rng rng(seed);
    RawDataset raw;
    raw.mesh = mesh;
    raw.n_train = n_train;
    raw.n_test = n_test;
    const std::size_t b = mesh.boundary_count();
    for (std::size_t s = 0; s < n_train + n_test; ++s) {
        std::vector<double> in;
        for (std::size_t k = 0; k < b; ++k) in.push_back(rng.uniform(0.3, 1.0));
        for (std::size_t k = 0; k < b; ++k) in.push_back(rng.uniform(800.0, 1800.0));
        for (std::size_t k = 0; k < mesh.cell_count(); ++k) in.push_back(rng.uniform(900.0, 2000.0));
        std::vector<double> out;
        for (std::size_t k = 0; k < b; ++k) out.push_back(rng.uniform(1e4, 5e5));
        raw.inputs.push_back(std::move(in));
        raw.outputs.push_back(std::move(out));
    }
    return raw;
}

}  // namespace

TEST_CASE("tensor encode and decode round trip") {
    TensorF32 t{{3, 4}, {}};
    for (int k = 0; k < 12; ++k) t.data.push_back(0.5f * static_cast<float>(k) - 1.25f);
    const auto bytes = encode_tensor(t);
    CHECK(bytes.size() == 4 + 4 + 4 + 8 + 48);
    CHECK(std::memcmp(bytes.data(), "RTEN", 4) == 0);
    const TensorF32 back = decode_tensor(bytes);
    CHECK(back.dims == t.dims);
    CHECK(back.data == t.data);

    const fs::path dir = scratch("tensor");
    write_tensor(dir / "t.rten", t);
    CHECK(read_tensor(dir / "t.rten").data == t.data);
}

TEST_CASE("malformed tensors are rejected") {
    TensorF32 t{{2, 2}, {1, 2, 3, 4}};
    auto bytes = encode_tensor(t);
    auto bad_magic = bytes;
    bad_magic[0] = std::byte{'X'};
    CHECK_THROWS_AS(decode_tensor(bad_magic), IoError);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_tensor(truncated), IoError);
    auto bad_version = bytes;
    bad_version[4] = std::byte{9};
    CHECK_THROWS_AS(decode_tensor(bad_version), IoError);
    TensorF32 wrong{{2, 3}, {1, 2}};
    CHECK_THROWS_AS(encode_tensor(wrong), ShapeError);
    CHECK_THROWS_AS(read_tensor("/nonexistent/x.rten"), IoError);
}

TEST_CASE("scaler maps the training range onto the unit interval") {
    const Scaler s{800.0, 1800.0};
    CHECK(s.forward(800.0) == 0.0);
    CHECK(s.forward(1800.0) == 1.0);
    CHECK(s.forward(1300.0) == doctest::Approx(0.5));
    CHECK(s.forward(1900.0) == doctest::Approx(1.1));
    CHECK(s.forward(700.0) == doctest::Approx(-0.1));
    const Scaler flat{5.0, 5.0};
    CHECK(flat.degenerate());
    CHECK(flat.forward(7.0) == 2.0);
    CHECK(flat.inverse(2.0) == 7.0);
}

TEST_CASE("normalization fits on training rows and round trips") {
    const FurnaceMesh mesh(30, 10, 12.0, 2.0);
    RawDataset raw = random_raw(mesh, 20, 5, 11);
    // A test value outside the training range must survive unclipped.
    raw.inputs[22][100] = 5000.0;
    const NormalizedDataset ds = normalize(raw);
    CHECK(ds.warnings.empty());
    for (std::size_t s = 0; s < ds.n_train; ++s) {
        for (double v : ds.inputs[s]) CHECK((v >= 0.0 && v <= 1.0));
        for (double v : ds.outputs[s]) CHECK((v >= 0.0 && v <= 1.0));
    }
    CHECK(ds.inputs[22][100] > 1.0);
    double worst = 0.0;
    for (std::size_t s = 0; s < raw.size(); ++s) {
        const auto back = denormalize_inputs(ds.inputs[s], ds.scalers, mesh);
        for (std::size_t k = 0; k < back.size(); ++k)
            worst = std::max(worst, std::abs(back[k] - raw.inputs[s][k]) / std::abs(raw.inputs[s][k]));
        const auto h = denormalize_outputs(ds.outputs[s], ds.scalers);
        for (std::size_t k = 0; k < h.size(); ++k)
            worst = std::max(worst, std::abs(h[k] - raw.outputs[s][k]) / raw.outputs[s][k]);
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("constant blocks get identity scale and a warning") {
    const FurnaceMesh mesh(4, 2, 4.0, 2.0);
    RawDataset raw = random_raw(mesh, 6, 2, 3);
    const std::size_t b = mesh.boundary_count();
    for (auto& row : raw.inputs)
        for (std::size_t k = 0; k < b; ++k) row[k] = 0.8;
    const NormalizedDataset ds = normalize(raw);
    REQUIRE(ds.warnings.size() == 1);
    CHECK(ds.warnings[0].find("eps") != std::string::npos);
    CHECK(ds.scalers.emissivity.degenerate());
    for (const auto& row : ds.inputs)
        for (std::size_t k = 0; k < b; ++k) CHECK(std::isfinite(row[k]));
}

TEST_CASE("flat view layout") {
    const FurnaceMesh mesh(120, 20, 12.0, 2.0);
    std::vector<double> eps(280), t0(280), t(2400);
    for (std::size_t k = 0; k < 280; ++k) {
        eps[k] = static_cast<double>(k);
        t0[k] = 1000.0 + static_cast<double>(k);
    }
    for (std::size_t k = 0; k < 2400; ++k) t[k] = 5000.0 + static_cast<double>(k);
    const auto flat = mlp_view(eps, t0, t, mesh);
    REQUIRE(flat.size() == 2960);
    CHECK(flat[280] == 1000.0);
    CHECK(flat[560] == 5000.0);
    CHECK(flat[2959] == 5000.0 + 2399.0);
    const CaseFields back = decode_mlp_view(flat, mesh);
    CHECK(back.emissivity == eps);
    CHECK(back.wall_temperature == t0);
    CHECK(back.gas_temperature == t);
}

TEST_CASE("flat view rejects mismatched fields") {
    const FurnaceMesh mesh(30, 10, 12.0, 2.0);
    std::vector<double> eps(80), t0(80), t(300);
    CHECK(mlp_view(eps, t0, t, mesh).size() == 460);
    t.pop_back();
    CHECK_THROWS_AS(mlp_view(eps, t0, t, mesh), ShapeError);
    CHECK_THROWS_AS(decode_mlp_view(std::vector<double>(459), mesh), ShapeError);
}

TEST_CASE("image view places frame and interior pixels") {
    const FurnaceMesh mesh(120, 20, 12.0, 2.0);
    Rng rng(4);
    std::vector<double> eps(280), t0(280), t(2400);
    for (auto& v : eps) v = rng.uniform(0.3, 1.0);
    for (auto& v : t0) v = rng.uniform(800.0, 1800.0);
    for (auto& v : t) v = rng.uniform(900.0, 2000.0);
    const Image img = cnn_view(eps, t0, t, mesh);
    CHECK(img.channels == 3);
    CHECK(img.height == 22);
    CHECK(img.width == 122);
    // South point 0 sits under cell (0,0); first east point right of cell (nx-1, 0).
    CHECK(frame_pixel(mesh, 0).row == 0);
    CHECK(frame_pixel(mesh, 0).col == 1);
    CHECK(frame_pixel(mesh, 120).row == 1);
    CHECK(frame_pixel(mesh, 120).col == 121);
    CHECK(frame_pixel(mesh, 140).row == 21);
    CHECK(frame_pixel(mesh, 140).col == 120);
    CHECK(frame_pixel(mesh, 260).row == 20);
    CHECK(frame_pixel(mesh, 260).col == 0);
    CHECK(img.at(0, 0, 1) == eps[0]);
    CHECK(img.at(1, 0, 1) == t0[0]);
    CHECK(img.at(2, 1, 1) == t[0]);
    CHECK(img.at(2, 20, 120) == t[2399]);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(img.at(c, 0, 0) == 0.0);
        CHECK(img.at(c, 0, 121) == 0.0);
        CHECK(img.at(c, 21, 0) == 0.0);
        CHECK(img.at(c, 21, 121) == 0.0);
    }
    // Frame holds no gas; interior holds no wall data.
    for (std::size_t p = 0; p < 280; ++p) {
        const Pixel px = frame_pixel(mesh, p);
        CHECK(img.at(2, px.row, px.col) == 0.0);
    }
    for (std::size_t r = 1; r <= 20; ++r)
        for (std::size_t col = 1; col <= 120; ++col) {
            CHECK(img.at(0, r, col) == 0.0);
            CHECK(img.at(1, r, col) == 0.0);
        }
    const CaseFields back = decode_cnn_view(img, mesh);
    CHECK(back.emissivity == eps);
    CHECK(back.wall_temperature == t0);
    CHECK(back.gas_temperature == t);
    const Image same = cnn_view_from_flat(mlp_view(eps, t0, t, mesh), mesh);
    CHECK(same.pixels == img.pixels);
}

TEST_CASE("target ranges") {
    const FurnaceMesh mesh(120, 20, 12.0, 2.0);
    CHECK(target_range(mesh, "all").begin == 0);
    CHECK(target_range(mesh, "all").end == 280);
    CHECK(target_range(mesh, "east").begin == 120);
    CHECK(target_range(mesh, "east").end == 140);
    CHECK_THROWS_AS(target_range(mesh, "up"), ConfigError);
}

TEST_CASE("dataset save and load round trip with checksums") {
    const FurnaceMesh mesh(30, 10, 12.0, 2.0);
    const RawDataset raw = random_raw(mesh, 8, 3, 21);
    const fs::path dir = scratch("roundtrip");
    DatasetProvenance prov{17, {{"note", "unit"}}, "abc"};
    const DatasetManifest m = save_dataset(dir, raw, prov);
    CHECK(m.files.size() == 2);
    for (const auto& [name, sum] : m.files) CHECK(sum.size() == 64);

    const LoadedDataset back = load_dataset(dir);
    CHECK(back.manifest.seed == 17);
    CHECK(back.manifest.n_train == 8);
    CHECK(back.manifest.n_test == 3);
    CHECK(back.manifest.distribution == prov.distribution);
    CHECK(back.manifest.solver_config_hash == "abc");
    CHECK(back.manifest.scalers.gas_temperature.min == m.scalers.gas_temperature.min);
    REQUIRE(back.raw.size() == 11);
    for (std::size_t s = 0; s < 11; ++s) {
        for (std::size_t k = 0; k < raw.inputs[s].size(); ++k)
            CHECK(back.raw.inputs[s][k] == static_cast<double>(static_cast<float>(raw.inputs[s][k])));
    }

    // Saving the same data twice yields identical bytes.
    const fs::path dir2 = scratch("roundtrip2");
    save_dataset(dir2, raw, prov);
    for (const char* f : {"manifest.json", "inputs.rten", "outputs.rten"})
        CHECK(read_file_bytes(dir / f) == read_file_bytes(dir2 / f));
}

TEST_CASE("corrupted dataset files fail to load") {
    const FurnaceMesh mesh(4, 2, 4.0, 2.0);
    const fs::path dir = scratch("corrupt");
    save_dataset(dir, random_raw(mesh, 3, 1, 2), {});
    auto bytes = read_file_bytes(dir / "outputs.rten");
    bytes.back() ^= std::byte{1};
    write_file_bytes(dir / "outputs.rten", bytes);
    CHECK_THROWS_AS(load_dataset(dir), IoError);

    const fs::path dir2 = scratch("nomanifest");
    CHECK_THROWS_AS(load_dataset(dir2), IoError);
    std::ofstream(dir2 / "manifest.json") << "{not json";
    CHECK_THROWS_AS(load_dataset(dir2), ConfigError);
}
