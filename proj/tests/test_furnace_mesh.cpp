#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "rte/errors.hpp"
#include "rte/furnace_mesh.hpp"
#include "rte/rng.hpp"

using namespace rte;

namespace {

const FurnaceMesh reference_mesh(120, 20, 12.0, 2.0);

// Distance to the first wall along the ray, from the slab intersection.
double chord(const FurnaceMesh& m, Vec2 o, Vec2 d) {
    double t = std::numeric_limits<double>::infinity();
    if (d.x > 0) t = std::min(t, (m.lx() - o.x) / d.x);
    if (d.x < 0) t = std::min(t, -o.x / d.x);
    if (d.y > 0) t = std::min(t, (m.ly() - o.y) / d.y);
    if (d.y < 0) t = std::min(t, -o.y / d.y);
    return t;
}

Vec2 random_inward(Rng& rng, Vec2 n) {
    const double a = rng.uniform(-1.55, 1.55);
    return {std::cos(a) * n.x - std::sin(a) * n.y, std::cos(a) * n.y + std::sin(a) * n.x};
}

}  // namespace

TEST_CASE("boundary points on the reference furnace") {
    const auto pts = reference_mesh.boundary_points();
    REQUIRE(pts.size() == 280);
    CHECK(reference_mesh.cell_count() == 2400);
    CHECK(pts[0].position.x == doctest::Approx(0.05));
    CHECK(pts[0].position.y == 0.0);
    CHECK(pts[0].wall == Wall::south);
    CHECK(pts[119].wall == Wall::south);
    CHECK(pts[120].wall == Wall::east);
    CHECK(pts[140].wall == Wall::north);
    CHECK(pts[260].wall == Wall::west);
    CHECK(pts[279].wall == Wall::west);
    for (std::size_t i = 0; i < 120; ++i) {
        CHECK(pts[i].inward_normal.x == 0.0);
        CHECK(pts[i].inward_normal.y == 1.0);
    }
    CHECK(pts[120].inward_normal.x == -1.0);
    CHECK(pts[140].inward_normal.y == -1.0);
    CHECK(pts[260].inward_normal.x == 1.0);
}

TEST_CASE("single cell mesh has one point per wall") {
    const FurnaceMesh m(1, 1, 1.0, 1.0);
    const auto pts = m.boundary_points();
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].wall == Wall::south);
    CHECK(pts[1].wall == Wall::east);
    CHECK(pts[2].wall == Wall::north);
    CHECK(pts[3].wall == Wall::west);
}

TEST_CASE("boundary ordering winds counter-clockwise") {
    for (auto [nx, ny] : {std::pair{3, 2}, std::pair{30, 10}, std::pair{120, 20}}) {
        const FurnaceMesh m(nx, ny, 12.0, 2.0);
        const auto pts = m.boundary_points();
        double area2 = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vec2 a = pts[i].position;
            const Vec2 b = pts[(i + 1) % pts.size()].position;
            area2 += a.x * b.y - b.x * a.y;
        }
        CHECK(area2 > 0.0);
    }
}

TEST_CASE("wall ranges") {
    const FurnaceMesh m(30, 10, 12.0, 2.0);
    CHECK(m.wall_range(Wall::south).begin == 0);
    CHECK(m.wall_range(Wall::east).begin == 30);
    CHECK(m.wall_range(Wall::north).begin == 40);
    CHECK(m.wall_range(Wall::west).begin == 70);
    CHECK(m.wall_range(Wall::west).end == 80);
    CHECK(parse_wall("east") == Wall::east);
    CHECK_THROWS(parse_wall("up"));
}

TEST_CASE("vertical ray from the south wall") {
    const RayPath p = reference_mesh.traverse_ray(0, {0.0, 1.0});
    REQUIRE(p.segments.size() == 20);
    for (std::size_t k = 0; k < 20; ++k) {
        CHECK(p.segments[k].cell == k * 120);
        CHECK(p.segments[k].length == doctest::Approx(0.1).epsilon(1e-12));
    }
    CHECK(p.length() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(reference_mesh.boundary_point(p.terminal).wall == Wall::north);
    CHECK(p.terminal == 120 + 20 + 119);
}

TEST_CASE("diagonal in a single cell") {
    const FurnaceMesh m(1, 1, 1.0, 1.0);
    const Vec2 d{std::sqrt(0.5), std::sqrt(0.5)};
    const RayPath p = m.traverse_ray(0, d);
    REQUIRE(p.segments.size() == 1);
    CHECK(p.segments[0].cell == 0);
    CHECK(p.length() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(p.length() == doctest::Approx(chord(m, {0.5, 0.0}, d)).epsilon(1e-12));
}

TEST_CASE("segment lengths sum to the analytic chord") {
    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, 279));
        const BoundaryPoint bp = reference_mesh.boundary_point(idx);
        const Vec2 d = random_inward(rng, bp.inward_normal);
        const RayPath p = reference_mesh.traverse_ray(idx, d);
        CHECK(std::abs(p.length() - chord(reference_mesh, bp.position, d)) < 1e-9);
        std::set<std::size_t> seen;
        for (const auto& s : p.segments) {
            CHECK(s.cell < reference_mesh.cell_count());
            CHECK(s.length > 0.0);
            CHECK(seen.insert(s.cell).second);
        }
    }
}

TEST_CASE("traversal is reversible") {
    Rng rng(9);
    const FurnaceMesh m(30, 10, 12.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, 79));
        const BoundaryPoint bp = m.boundary_point(idx);
        const Vec2 d = random_inward(rng, bp.inward_normal);
        const RayPath fwd = m.traverse_ray(bp.position, d);
        const RayPath back = m.traverse_ray(fwd.exit_point, {-d.x, -d.y});
        REQUIRE(back.segments.size() == fwd.segments.size());
        const std::size_t n = fwd.segments.size();
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(back.segments[k].cell == fwd.segments[n - 1 - k].cell);
            CHECK(std::abs(back.segments[k].length - fwd.segments[n - 1 - k].length) < 1e-9);
        }
    }
}

TEST_CASE("rays through cell corners") {
    // 45 degrees from a face centre on a square grid hits corners exactly.
    const FurnaceMesh m(4, 4, 4.0, 4.0);
    const Vec2 d{std::sqrt(0.5), std::sqrt(0.5)};
    const RayPath p = m.traverse_ray(Vec2{0.0, 0.5}, d);
    CHECK(p.length() == doctest::Approx(chord(m, {0.0, 0.5}, d)).epsilon(1e-12));
    for (const auto& s : p.segments) CHECK(s.length > 0.0);
    const RayPath corner = m.traverse_ray(Vec2{1.0, 0.0}, d);
    REQUIRE(corner.segments.size() == 3);
    CHECK(corner.segments[0].cell == 1);
    CHECK(corner.segments[1].cell == 6);
    CHECK(corner.segments[2].cell == 11);
}

TEST_CASE("degenerate directions are rejected") {
    CHECK_THROWS_AS(reference_mesh.traverse_ray(0, {1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(reference_mesh.traverse_ray(0, {0.0, -1.0}), DomainError);
    CHECK_THROWS_AS(reference_mesh.traverse_ray(0, {0.0, 0.0}), DomainError);
}

TEST_CASE("exit point rounding") {
    CHECK(reference_mesh.exit_point_rounding({0.05, 0.0}) == 0);
    CHECK(reference_mesh.exit_point_rounding({0.1, 0.0}) == 0);
    CHECK(reference_mesh.exit_point_rounding({0.1000001, 0.0}) == 1);
    CHECK(reference_mesh.exit_point_rounding({12.0, 0.05}) == 120);
    CHECK(reference_mesh.exit_point_rounding({11.95, 2.0}) == 140);
    // West wall runs top to bottom: y = 1.95 is its first point, y = 0.05 its last.
    CHECK(reference_mesh.exit_point_rounding({0.0, 1.95}) == 260);
    CHECK(reference_mesh.exit_point_rounding({0.0, 0.05}) == 279);
    // Corners go to the lower index.
    CHECK(reference_mesh.exit_point_rounding({12.0, 0.0}) == 119);
    CHECK(reference_mesh.exit_point_rounding({0.0, 0.0}) == 0);
    CHECK_THROWS_AS(reference_mesh.exit_point_rounding({5.0, 1e-6}), DomainError);
    CHECK_THROWS_AS(reference_mesh.exit_point_rounding({5.0, 1.0}), DomainError);
}

TEST_CASE("mesh validation") {
    CHECK_THROWS(FurnaceMesh(0, 1, 1.0, 1.0));
    CHECK_THROWS(FurnaceMesh(1, 1, 0.0, 1.0));
    CHECK_THROWS(FurnaceMesh(1, 1, 1.0, -1.0));
}
