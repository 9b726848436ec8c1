#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rte/case_sampling.hpp"
#include "rte/errors.hpp"
#include "rte/rng.hpp"

using namespace rte;

namespace {

const FurnaceMesh desk(30, 10, 12.0, 2.0);

std::shared_ptr<const BandGrid> desk_bands() { return std::make_shared<const BandGrid>(150.0, 9150.0, 225.0); }

std::vector<double> filled(std::size_t n, double v) { return std::vector<double>(n, v); }

}  // namespace

TEST_CASE("lhs strata for a small design") {
    const SampleMatrix m = lhs(4, 2, 7);
    REQUIRE(m.rows == 4);
    REQUIRE(m.cols == 2);
    for (std::size_t d = 0; d < 2; ++d) {
        std::set<int> strata;
        for (std::size_t s = 0; s < 4; ++s) strata.insert(static_cast<int>(std::floor(m(s, d) * 4)));
        CHECK(strata == std::set<int>{0, 1, 2, 3});
    }
    CHECK(is_latin_hypercube(m));
}

TEST_CASE("lhs with one sample") {
    const SampleMatrix m = lhs(1, 5, 3);
    REQUIRE(m.values.size() == 5);
    for (double v : m.values) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("lhs is deterministic per seed and differs across seeds") {
    CHECK(lhs(10, 3, 42).values == lhs(10, 3, 42).values);
    std::set<std::vector<std::size_t>> permutations;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const SampleMatrix m = lhs(10, 3, seed);
        std::vector<std::size_t> strata;
        for (double v : m.values) strata.push_back(static_cast<std::size_t>(v * 10));
        permutations.insert(strata);
    }
    CHECK(permutations.size() == 100);
}

TEST_CASE("lhs stratification holds for random designs") {
    Rng rng(123);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 400));
        const auto d = static_cast<std::size_t>(rng.uniform_int(1, 50));
        CHECK(is_latin_hypercube(lhs(n, d, rng.next())));
    }
}

TEST_CASE("stratification checker rejects non-designs") {
    SampleMatrix m{2, 1, {0.1, 0.2}};
    CHECK_FALSE(is_latin_hypercube(m));
    m.values = {0.1, 0.7};
    CHECK(is_latin_hypercube(m));
    m.values = {0.1, 1.0};
    CHECK_FALSE(is_latin_hypercube(m));
}

TEST_CASE("realized fields at the range endpoints and midpoints") {
    const CaseDistribution dist;
    auto g = desk_bands();
    const FurnaceCase lo = realize_case(filled(dist.dimensions(), 0.0), dist, desk, g, nullptr);
    for (double e : lo.emissivity) CHECK(e == 0.3);
    for (double t : lo.wall_temperature) CHECK(t == 800.0);
    for (double t : lo.gas_temperature) CHECK(t == doctest::Approx(900.0).epsilon(1e-14));
    const FurnaceCase mid = realize_case(filled(dist.dimensions(), 0.5), dist, desk, g, nullptr);
    for (double e : mid.emissivity) CHECK(e == doctest::Approx(0.65));
    for (double t : mid.wall_temperature) CHECK(t == doctest::Approx(1300.0));
    for (double t : mid.gas_temperature) CHECK(t == doctest::Approx(1450.0));
    CHECK(dist.dimensions() == 8 * 4 + 18);
    CHECK_THROWS_AS(realize_case(filled(5, 0.5), dist, desk, g, nullptr), ShapeError);
}

TEST_CASE("gas field is bilinear between corner controls") {
    CaseDistribution dist;
    dist.wall_controls = 2;
    dist.grid_controls_x = 2;
    dist.grid_controls_y = 2;
    const FurnaceMesh m(4, 3, 4.0, 3.0);
    std::vector<double> s(dist.dimensions(), 0.5);
    // Controls (x, y): (0,0)=0, (1,0)=0.75, (0,1)=0.25, (1,1)=0.5.
    s[16] = 0.0;
    s[17] = 0.75;
    s[18] = 0.25;
    s[19] = 0.5;
    const FurnaceCase c = realize_case(s, dist, m, desk_bands(), nullptr);
    // Hand evaluation: u = i/3, v = j/2 over the cell-centre extremes.
    auto T = [&](std::size_t i, std::size_t j) { return c.gas_temperature[j * 4 + i]; };
    CHECK(T(0, 0) == doctest::Approx(900.0));
    CHECK(T(3, 2) == doctest::Approx(900.0 + 1100.0 * 0.5));
    CHECK(T(1, 1) == doctest::Approx(900.0 + 1100.0 * (0.5 * 0.75 / 3.0 + 0.5 * 0.25 * 2.0 / 3.0 + 0.5 * 0.5 / 3.0)));
    CHECK(T(2, 0) == doctest::Approx(900.0 + 1100.0 * 0.75 * 2.0 / 3.0));
    CHECK(T(0, 1) == doctest::Approx(900.0 + 1100.0 * 0.125));
}

TEST_CASE("wall controls interpolate along each wall") {
    CaseDistribution dist;
    dist.wall_controls = 2;
    const FurnaceMesh m(5, 3, 5.0, 3.0);
    std::vector<double> s(dist.dimensions(), 0.0);
    s[0] = 0.0;  // south eps from 0.3 ...
    s[1] = 0.5;  // ... to 0.65
    const FurnaceCase c = realize_case(s, dist, m, desk_bands(), nullptr);
    for (std::size_t i = 0; i < 5; ++i) CHECK(c.emissivity[i] == doctest::Approx(0.3 + 0.35 * i / 4.0));
    CHECK(c.emissivity[5] == doctest::Approx(0.3));
}

TEST_CASE("realized fields stay inside their ranges") {
    const CaseDistribution dist;
    const SampleMatrix m = lhs(200, dist.dimensions(), 9);
    auto g = desk_bands();
    for (std::size_t r = 0; r < m.rows; ++r) {
        const FurnaceCase c = realize_case(m.row(r), dist, desk, g, nullptr);
        for (double e : c.emissivity) CHECK((e >= 0.3 && e <= 1.0));
        for (double t : c.wall_temperature) CHECK((t >= 800.0 && t <= 1800.0));
        for (double t : c.gas_temperature) CHECK((t >= 900.0 && t <= 2000.0));
    }
}

TEST_CASE("distribution validation") {
    CaseDistribution d;
    d.emissivity = {0.5, 0.4};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = {};
    d.wall_controls = 1;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = {};
    d.gas_temperature = {0.0, 100.0};
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = {};
    d.grid_controls_y = 1;
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("tiny dataset has the expected shapes and is reproducible") {
    const CaseDistribution dist;
    auto g = desk_bands();
    auto table = std::make_shared<const AbsorptionTable>(synthetic_absorption_table(*g));
    const DtrmSolver solver(std::make_shared<const RayTable>(desk, make_quadrature(16)));
    const RawDataset a = generate_dataset(dist, 2, 1, 5, solver, g, table);
    REQUIRE(a.size() == 3);
    CHECK(a.n_train == 2);
    CHECK(a.n_test == 1);
    for (const auto& row : a.inputs) CHECK(row.size() == 460);
    for (const auto& row : a.outputs) CHECK(row.size() == 80);
    const RawDataset b = generate_dataset(dist, 2, 1, 5, solver, g, table, 3);
    CHECK(a.inputs == b.inputs);
    CHECK(a.outputs == b.outputs);
    const RawDataset c = generate_dataset(dist, 2, 1, 6, solver, g, table);
    CHECK(a.inputs != c.inputs);
}

TEST_CASE("generation failures name the sample") {
    CaseDistribution dist;
    dist.emissivity = {0.01, 0.02};
    auto g = desk_bands();
    auto table = std::make_shared<const AbsorptionTable>(synthetic_absorption_table(*g));
    SolverConfig cfg;
    cfg.max_iters = 2;
    const DtrmSolver solver(std::make_shared<const RayTable>(desk, make_quadrature(4)), cfg);
    try {
        (void)generate_dataset(dist, 2, 1, 5, solver, g, table);
        FAIL("expected GenerationError");
    } catch (const GenerationError& e) {
        CHECK(e.sample_index == 0);
    }
}

TEST_CASE("reference dataset shapes") {
    const FurnaceMesh m(120, 20, 12.0, 2.0);
    CHECK(2 * m.boundary_count() + m.cell_count() == 2960);
    CHECK(m.boundary_count() == 280);
}
