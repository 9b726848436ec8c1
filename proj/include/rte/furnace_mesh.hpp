#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace rte {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

enum class Wall { south = 0, east = 1, north = 2, west = 3 };
inline constexpr std::array<Wall, 4> all_walls{Wall::south, Wall::east, Wall::north, Wall::west};
std::string_view wall_name(Wall w);
Wall parse_wall(std::string_view name);

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const noexcept { return end - begin; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }
};

struct BoundaryPoint {
    std::size_t index = 0;
    Wall wall = Wall::south;
    Vec2 position;
    Vec2 inward_normal;
};

struct CellSegment {
    std::size_t cell = 0;  // row-major, j * nx + i
    double length = 0.0;   // m
};

struct RayPath {
    std::size_t origin = 0;
    Vec2 direction;
    std::vector<CellSegment> segments;  // in marching order from the origin
    Vec2 exit_point;
    std::size_t terminal = 0;

    double length() const;
};

// Cartesian nx x ny enclosure of size Lx x Ly. Boundary points sit at the wall
// faces of the wall-adjacent cells and are numbered counter-clockwise starting
// at the west end of the south wall: south [0,nx), east [nx,nx+ny),
// north [nx+ny,2nx+ny), west [2nx+ny,2(nx+ny)).
class FurnaceMesh {
public:
    FurnaceMesh(std::size_t nx, std::size_t ny, double lx, double ly);

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    double lx() const noexcept { return lx_; }
    double ly() const noexcept { return ly_; }
    double dx() const noexcept { return lx_ / static_cast<double>(nx_); }
    double dy() const noexcept { return ly_ / static_cast<double>(ny_); }
    std::size_t cell_count() const noexcept { return nx_ * ny_; }
    std::size_t boundary_count() const noexcept { return 2 * (nx_ + ny_); }

    IndexRange wall_range(Wall w) const;
    BoundaryPoint boundary_point(std::size_t index) const;
    std::vector<BoundaryPoint> boundary_points() const;

    // Boundary point whose face interval contains `location`; ties at face
    // edges and corners go to the lower index.
    std::size_t exit_point_rounding(Vec2 location) const;

    // Exact grid traversal (Amanatides-Woo) from a boundary point into the
    // domain until the ray leaves through a wall. A ray crossing a cell corner
    // steps diagonally, so no zero-length segments are produced.
    RayPath traverse_ray(std::size_t origin_index, Vec2 direction) const;
    RayPath traverse_ray(Vec2 origin, Vec2 direction) const;

    bool operator==(const FurnaceMesh&) const = default;

private:
    std::size_t nx_;
    std::size_t ny_;
    double lx_;
    double ly_;
};

}  // namespace rte
