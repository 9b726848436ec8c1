#include "rte/furnace_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rte/errors.hpp"

namespace rte {

namespace {

constexpr double on_wall_tolerance = 1e-9;

}  // namespace

std::string_view wall_name(Wall w) {
    switch (w) {
        case Wall::south: return "south";
        case Wall::east: return "east";
        case Wall::north: return "north";
        case Wall::west: return "west";
    }
    return "?";
}

Wall parse_wall(std::string_view name) {
    for (Wall w : all_walls) {
        if (wall_name(w) == name) return w;
    }
    throw ConfigError("unknown wall '" + std::string(name) + "'", "target");
}

double RayPath::length() const {
    double sum = 0.0;
    for (const auto& s : segments) sum += s.length;
    return sum;
}

FurnaceMesh::FurnaceMesh(std::size_t nx, std::size_t ny, double lx, double ly) : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (nx < 1 || ny < 1) throw ConfigError("nx and ny must be at least 1", "mesh");
    if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("Lx and Ly must be positive", "mesh");
}

IndexRange FurnaceMesh::wall_range(Wall w) const {
    switch (w) {
        case Wall::south: return {0, nx_};
        case Wall::east: return {nx_, nx_ + ny_};
        case Wall::north: return {nx_ + ny_, 2 * nx_ + ny_};
        case Wall::west: return {2 * nx_ + ny_, 2 * (nx_ + ny_)};
    }
    return {};
}

BoundaryPoint FurnaceMesh::boundary_point(std::size_t index) const {
    if (index >= boundary_count()) throw std::out_of_range("boundary index out of range");
    BoundaryPoint p;
    p.index = index;
    if (index < nx_) {
        p.wall = Wall::south;
        p.position = {(static_cast<double>(index) + 0.5) * dx(), 0.0};
        p.inward_normal = {0.0, 1.0};
    } else if (index < nx_ + ny_) {
        const std::size_t j = index - nx_;
        p.wall = Wall::east;
        p.position = {lx_, (static_cast<double>(j) + 0.5) * dy()};
        p.inward_normal = {-1.0, 0.0};
    } else if (index < 2 * nx_ + ny_) {
        const std::size_t i = nx_ - 1 - (index - nx_ - ny_);
        p.wall = Wall::north;
        p.position = {(static_cast<double>(i) + 0.5) * dx(), ly_};
        p.inward_normal = {0.0, -1.0};
    } else {
        const std::size_t j = ny_ - 1 - (index - 2 * nx_ - ny_);
        p.wall = Wall::west;
        p.position = {0.0, (static_cast<double>(j) + 0.5) * dy()};
        p.inward_normal = {1.0, 0.0};
    }
    return p;
}

std::vector<BoundaryPoint> FurnaceMesh::boundary_points() const {
    std::vector<BoundaryPoint> out;
    out.reserve(boundary_count());
    for (std::size_t i = 0; i < boundary_count(); ++i) out.push_back(boundary_point(i));
    return out;
}

std::size_t FurnaceMesh::exit_point_rounding(Vec2 loc) const {
    const bool inside_x = loc.x >= -on_wall_tolerance && loc.x <= lx_ + on_wall_tolerance;
    const bool inside_y = loc.y >= -on_wall_tolerance && loc.y <= ly_ + on_wall_tolerance;
    auto clamp_index = [](double v, std::size_t n) {
        if (v < 0.0) return std::size_t{0};
        return std::min(static_cast<std::size_t>(v), n - 1);
    };
    std::size_t best = std::numeric_limits<std::size_t>::max();
    if (inside_x && std::abs(loc.y) <= on_wall_tolerance) {
        // South: index grows with x, an edge belongs to the face on its left.
        const double s = std::ceil(loc.x / dx()) - 1.0;
        best = std::min(best, clamp_index(s, nx_));
    }
    if (inside_y && std::abs(loc.x - lx_) <= on_wall_tolerance) {
        const double s = std::ceil(loc.y / dy()) - 1.0;
        best = std::min(best, nx_ + clamp_index(s, ny_));
    }
    if (inside_x && std::abs(loc.y - ly_) <= on_wall_tolerance) {
        // North: index grows as x decreases, so an edge belongs to the face on its right.
        const std::size_t i = clamp_index(std::floor(loc.x / dx()), nx_);
        best = std::min(best, nx_ + ny_ + (nx_ - 1 - i));
    }
    if (inside_y && std::abs(loc.x) <= on_wall_tolerance) {
        const std::size_t j = clamp_index(std::floor(loc.y / dy()), ny_);
        best = std::min(best, 2 * nx_ + ny_ + (ny_ - 1 - j));
    }
    if (best == std::numeric_limits<std::size_t>::max()) {
        throw DomainError("exit location (" + std::to_string(loc.x) + ", " + std::to_string(loc.y) +
                          ") is not on the enclosure boundary");
    }
    return best;
}

RayPath FurnaceMesh::traverse_ray(std::size_t origin_index, Vec2 direction) const {
    const BoundaryPoint p = boundary_point(origin_index);
    if (std::abs(dot(direction, p.inward_normal)) < 1e-12) {
        throw DomainError("ray direction is tangent to the wall");
    }
    RayPath path = traverse_ray(p.position, direction);
    path.origin = origin_index;
    return path;
}

RayPath FurnaceMesh::traverse_ray(Vec2 origin, Vec2 direction) const {
    const double norm = std::hypot(direction.x, direction.y);
    if (!(norm > 0.0)) throw DomainError("ray direction must be non-zero");
    const Vec2 d{direction.x / norm, direction.y / norm};

    RayPath path;
    path.origin = exit_point_rounding(origin);
    path.direction = d;

    const BoundaryPoint from = boundary_point(path.origin);
    if (dot(d, from.inward_normal) < 1e-12) {
        throw DomainError("ray must point into the domain");
    }

    const double cx = dx();
    const double cy = dy();
    const auto nxi = static_cast<long>(nx_);
    const auto nyi = static_cast<long>(ny_);

    // Starting cell: the cell the ray enters, picked by the direction at the
    // wall so points on cell edges resolve consistently.
    auto start_index = [](double coord, double cell, double dir, long n) {
        const double s = coord / cell;
        long i = dir >= 0.0 ? static_cast<long>(std::floor(s)) : static_cast<long>(std::ceil(s)) - 1;
        return std::clamp(i, 0L, n - 1);
    };
    long i = start_index(origin.x, cx, d.x, nxi);
    long j = start_index(origin.y, cy, d.y, nyi);

    const double inf = std::numeric_limits<double>::infinity();
    const long step_i = d.x > 0.0 ? 1 : (d.x < 0.0 ? -1 : 0);
    const long step_j = d.y > 0.0 ? 1 : (d.y < 0.0 ? -1 : 0);
    const double delta_x = step_i != 0 ? cx / std::abs(d.x) : inf;
    const double delta_y = step_j != 0 ? cy / std::abs(d.y) : inf;

    // Parametric distance to the next vertical/horizontal grid line.
    auto first_crossing = [&](double o, double dir, long idx, double cell, long step) {
        if (step == 0) return inf;
        const double line = (step > 0 ? static_cast<double>(idx + 1) : static_cast<double>(idx)) * cell;
        return std::max(0.0, (line - o) / dir);
    };
    double t_x = first_crossing(origin.x, d.x, i, cx, step_i);
    double t_y = first_crossing(origin.y, d.y, j, cy, step_j);

    // Crossings closer than this are one corner crossing.
    const double corner_eps = 1e-12 * std::max(cx, cy);
    double t = 0.0;
    for (;;) {
        const double t_next = std::min(t_x, t_y);
        const double len = t_next - t;
        if (len > 0.0) {
            path.segments.push_back({static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i), len});
        }
        t = t_next;
        const bool cross_x = t_x - t_next <= corner_eps;
        const bool cross_y = t_y - t_next <= corner_eps;
        bool leaving = false;
        if (cross_x) {
            i += step_i;
            t_x += delta_x;
            leaving = leaving || i < 0 || i >= nxi;
        }
        if (cross_y) {
            j += step_j;
            t_y += delta_y;
            leaving = leaving || j < 0 || j >= nyi;
        }
        if (leaving) break;
    }

    Vec2 exit{origin.x + t * d.x, origin.y + t * d.y};
    // Snap onto the wall that was crossed.
    if (i < 0) exit.x = 0.0;
    if (i >= nxi) exit.x = lx_;
    if (j < 0) exit.y = 0.0;
    if (j >= nyi) exit.y = ly_;
    exit.x = std::clamp(exit.x, 0.0, lx_);
    exit.y = std::clamp(exit.y, 0.0, ly_);
    path.exit_point = exit;
    path.terminal = exit_point_rounding(exit);
    return path;
}

}  // namespace rte
