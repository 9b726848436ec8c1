#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rte/furnace_mesh.hpp"
#include "rte/spectral.hpp"

namespace rte {

struct GasComposition {
    double pressure = 1.0;  // atm
    double x_co2 = 0.1;
    double x_h2o = 0.2;
    double x_co = 0.0;
};

// One solver input. Emissivity is gray and given per boundary point.
struct FurnaceCase {
    FurnaceMesh mesh;
    std::vector<double> emissivity;        // per boundary point, [0, 1]
    std::vector<double> wall_temperature;  // per boundary point, K
    std::vector<double> gas_temperature;   // per cell (row-major), K
    GasComposition gas;
    std::shared_ptr<const BandGrid> bands;
    std::shared_ptr<const AbsorptionTable> table;

    void validate() const;
};

// In-plane directions about the inward normal: n equal bins of the half-plane,
// rays at bin centres, weights (pi/2)(sin(edge_{i+1}) - sin(edge_i)) which
// carry the cosine factor and sum to pi.
struct AngularQuadrature {
    std::vector<double> angles;   // rad, from the inward normal
    std::vector<double> weights;  // sum = pi

    std::size_t size() const noexcept { return angles.size(); }
};

AngularQuadrature make_quadrature(std::size_t n_rays);

// Direction of ray `angle` at a wall with the given inward normal.
Vec2 ray_direction(Vec2 inward_normal, double angle);

struct WallIrradiation {
    std::vector<double> H;                    // W m^-2, one per boundary point
    std::vector<std::vector<double>> per_band;  // [band][point], last row is out-of-band; empty unless requested
    std::size_t iterations = 0;             // max radiosity updates over bands
};

struct SolverConfig {
    double tolerance = 1e-6;
    std::size_t max_iters = 100;
    unsigned threads = 1;
    bool keep_per_band = false;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double residual, std::size_t band)
        : std::runtime_error(msg), residual_(residual), band_(band) {}
    double residual() const noexcept { return residual_; }
    std::size_t band() const noexcept { return band_; }

private:
    double residual_;
    std::size_t band_;
};

// Geometry of every (boundary point, direction) ray; independent of the case
// fields, so it can be shared by all cases on the same mesh and quadrature.
class RayTable {
public:
    RayTable(const FurnaceMesh& mesh, const AngularQuadrature& quadrature);

    const FurnaceMesh& mesh() const noexcept { return mesh_; }
    const AngularQuadrature& quadrature() const noexcept { return quadrature_; }
    std::size_t ray_count() const noexcept { return terminal_.size(); }

    // Ray r = point * n_rays + direction.
    std::span<const CellSegment> segments(std::size_t ray) const {
        return {segments_.data() + offsets_[ray], offsets_[ray + 1] - offsets_[ray]};
    }
    std::size_t terminal(std::size_t ray) const noexcept { return terminal_[ray]; }

private:
    FurnaceMesh mesh_;
    AngularQuadrature quadrature_;
    std::vector<std::size_t> offsets_;
    std::vector<CellSegment> segments_;
    std::vector<std::size_t> terminal_;
};

// Intensity arriving at the ray origin in one band: marches from the source
// wall (the path terminal) back to the origin with
// I <- I exp(-k ds) + Ib_cell (1 - exp(-k ds)), starting from the source
// wall's leaving intensity.
double ray_arriving_intensity(const RayPath& path, std::span<const double> kappa_per_cell,
                              std::span<const double> blackbody_per_cell, std::span<const double> leaving_intensity);

class DtrmSolver {
public:
    DtrmSolver(std::shared_ptr<const RayTable> rays, SolverConfig config = {});

    WallIrradiation solve(const FurnaceCase& c) const;

    const RayTable& rays() const noexcept { return *rays_; }
    const SolverConfig& config() const noexcept { return config_; }

private:
    struct BandResult {
        std::vector<double> H;
        std::size_t iterations = 0;
    };
    BandResult solve_band(std::size_t band, std::span<const double> kappa, std::span<const double> cell_blackbody,
                          std::span<const double> wall_emission, std::span<const double> reflectivity) const;

    std::shared_ptr<const RayTable> rays_;
    SolverConfig config_;
};

// Convenience wrapper building the ray table on the fly.
WallIrradiation solve(const FurnaceCase& c, const AngularQuadrature& quadrature, double tolerance,
                      std::size_t max_iters);

// Median wall-clock seconds per solve over `repetitions` runs.
double solver_timing(const DtrmSolver& solver, const FurnaceCase& c, std::size_t repetitions);

}  // namespace rte
