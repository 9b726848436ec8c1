#include "rte/dtrm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rte/errors.hpp"
#include "rte/parallel.hpp"

namespace rte {

void FurnaceCase::validate() const {
    if (emissivity.size() != mesh.boundary_count()) {
        throw ShapeError("emissivity has " + std::to_string(emissivity.size()) + " entries, mesh has " +
                         std::to_string(mesh.boundary_count()) + " boundary points");
    }
    if (wall_temperature.size() != mesh.boundary_count()) {
        throw ShapeError("wall temperature length does not match the boundary point count");
    }
    if (gas_temperature.size() != mesh.cell_count()) {
        throw ShapeError("gas temperature length does not match the cell count");
    }
    for (double e : emissivity) {
        if (!(e >= 0.0 && e <= 1.0)) throw DomainError("emissivity outside [0, 1]");
    }
    for (double t : wall_temperature) {
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("wall temperature must be positive");
    }
    for (double t : gas_temperature) {
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("gas temperature must be positive");
    }
    if (!bands) throw ConfigError("case has no band grid", "bands");
    if (!table) throw ConfigError("case has no absorption table", "absorption_table");
    GasState{1.0, gas.pressure, gas.x_co2, gas.x_h2o, gas.x_co}.validate();
}

AngularQuadrature make_quadrature(std::size_t n_rays) {
    if (n_rays < 1) throw ConfigError("at least one ray is required", "quadrature.n_rays");
    AngularQuadrature q;
    q.angles.resize(n_rays);
    q.weights.resize(n_rays);
    const double n = static_cast<double>(n_rays);
    for (std::size_t i = 0; i < n_rays; ++i) {
        const double lo = -phys::pi / 2 + static_cast<double>(i) * phys::pi / n;
        const double hi = -phys::pi / 2 + static_cast<double>(i + 1) * phys::pi / n;
        q.angles[i] = 0.5 * (lo + hi);
        q.weights[i] = 0.5 * phys::pi * (std::sin(hi) - std::sin(lo));
    }
    return q;
}

Vec2 ray_direction(Vec2 n, double angle) {
    // Tangent is the normal rotated a quarter turn counter-clockwise.
    const Vec2 t{-n.y, n.x};
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * n.x + s * t.x, c * n.y + s * t.y};
}

RayTable::RayTable(const FurnaceMesh& mesh, const AngularQuadrature& quadrature)
    : mesh_(mesh), quadrature_(quadrature) {
    const std::size_t n_points = mesh.boundary_count();
    const std::size_t n_dirs = quadrature.size();
    offsets_.reserve(n_points * n_dirs + 1);
    offsets_.push_back(0);
    terminal_.reserve(n_points * n_dirs);
    for (std::size_t p = 0; p < n_points; ++p) {
        const BoundaryPoint bp = mesh.boundary_point(p);
        for (std::size_t d = 0; d < n_dirs; ++d) {
            const RayPath path = mesh.traverse_ray(p, ray_direction(bp.inward_normal, quadrature.angles[d]));
            segments_.insert(segments_.end(), path.segments.begin(), path.segments.end());
            offsets_.push_back(segments_.size());
            terminal_.push_back(path.terminal);
        }
    }
}

double ray_arriving_intensity(const RayPath& path, std::span<const double> kappa, std::span<const double> blackbody,
                              std::span<const double> leaving) {
    if (path.terminal >= leaving.size()) throw ShapeError("leaving intensity does not cover the path terminal");
    double intensity = leaving[path.terminal];
    for (auto it = path.segments.rbegin(); it != path.segments.rend(); ++it) {
        if (it->cell >= kappa.size() || it->cell >= blackbody.size()) {
            throw ShapeError("cell field does not cover the path");
        }
        const double tau = kappa[it->cell] * it->length;
        intensity = intensity * std::exp(-tau) - blackbody[it->cell] * std::expm1(-tau);
    }
    return intensity;
}

namespace {

// Species columns resolved once per case.
struct ResolvedGas {
    std::vector<std::pair<const SpeciesTable*, double>> columns;  // (table, mole fraction)
    double pressure = 1.0;
};

ResolvedGas resolve_gas(const FurnaceCase& c) {
    ResolvedGas r;
    r.pressure = c.gas.pressure;
    const std::array<double, 3> fractions{c.gas.x_co2, c.gas.x_h2o, c.gas.x_co};
    for (std::size_t g = 0; g < fractions.size(); ++g) {
        if (fractions[g] == 0.0) continue;
        const SpeciesTable* s = c.table->find(species_names[g]);
        if (s == nullptr) {
            throw ConfigError(std::string("no absorption data for species ") + species_names[g], "absorption_table");
        }
        r.columns.emplace_back(s, fractions[g]);
    }
    return r;
}

}  // namespace

DtrmSolver::DtrmSolver(std::shared_ptr<const RayTable> rays, SolverConfig config)
    : rays_(std::move(rays)), config_(config) {
    if (!rays_) throw std::invalid_argument("DtrmSolver needs a ray table");
    if (!(config_.tolerance > 0.0)) throw ConfigError("tolerance must be positive", "solver.tolerance");
}

DtrmSolver::BandResult DtrmSolver::solve_band(std::size_t band, std::span<const double> kappa,
                                              std::span<const double> cell_blackbody,
                                              std::span<const double> wall_emission,
                                              std::span<const double> reflectivity) const {
    const RayTable& rt = *rays_;
    const std::size_t n_points = rt.mesh().boundary_count();
    const std::size_t n_dirs = rt.quadrature().size();
    const auto& weights = rt.quadrature().weights;

    // Per ray: transmissivity to the source wall and gas emission reaching the origin.
    std::vector<double> transmissivity(rt.ray_count());
    std::vector<double> emission(rt.ray_count());
    for (std::size_t r = 0; r < rt.ray_count(); ++r) {
        double tau = 1.0;
        double source = 0.0;
        const auto segs = rt.segments(r);
        for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
            const double depth = kappa[it->cell] * it->length;
            const double attenuation = std::exp(-depth);
            source = source * attenuation - cell_blackbody[it->cell] * std::expm1(-depth);
            tau *= attenuation;
        }
        transmissivity[r] = tau;
        emission[r] = source;
    }

    std::vector<double> leaving(wall_emission.begin(), wall_emission.end());
    std::vector<double> H(n_points, 0.0);
    std::vector<double> H_new(n_points, 0.0);
    BandResult result;
    for (std::size_t pass = 0;; ++pass) {
        for (std::size_t p = 0; p < n_points; ++p) {
            double acc = 0.0;
            for (std::size_t d = 0; d < n_dirs; ++d) {
                const std::size_t r = p * n_dirs + d;
                acc += weights[d] * (transmissivity[r] * leaving[rt.terminal(r)] + emission[r]);
            }
            H_new[p] = acc;
        }
        if (pass > 0) {
            double residual = 0.0;
            for (std::size_t p = 0; p < n_points; ++p) {
                const double diff = std::abs(H_new[p] - H[p]);
                if (diff == 0.0) continue;
                residual = std::max(residual, H_new[p] > 0.0 ? diff / H_new[p] : std::numeric_limits<double>::infinity());
            }
            if (residual < config_.tolerance) {
                result.H = std::move(H_new);
                return result;
            }
            if (result.iterations >= config_.max_iters) {
                throw ConvergenceError("radiosity iteration did not converge in band " + std::to_string(band) +
                                           " (residual " + std::to_string(residual) + ")",
                                       residual, band);
            }
        }
        std::swap(H, H_new);
        for (std::size_t p = 0; p < n_points; ++p) {
            leaving[p] = wall_emission[p] + reflectivity[p] * H[p] / phys::pi;
        }
        ++result.iterations;
    }
}

WallIrradiation DtrmSolver::solve(const FurnaceCase& c) const {
    c.validate();
    if (!(c.mesh == rays_->mesh())) throw ConfigError("case mesh differs from the solver ray table", "mesh");
    c.table->check_grid(*c.bands);

    const BandGrid& grid = *c.bands;
    const std::size_t n_bands = grid.size();
    const std::size_t n_cells = c.mesh.cell_count();
    const std::size_t n_points = c.mesh.boundary_count();
    const ResolvedGas gas = resolve_gas(c);

    // Band n_bands is the out-of-band remainder, exchanged through transparent paths.
    const std::size_t n_slots = n_bands + 1;
    std::vector<std::vector<double>> kappa(n_slots, std::vector<double>(n_cells, 0.0));
    std::vector<std::vector<double>> cell_bb(n_slots, std::vector<double>(n_cells, 0.0));
    std::vector<std::vector<double>> wall_emission(n_slots, std::vector<double>(n_points, 0.0));
    std::vector<double> reflectivity(n_points);
    for (std::size_t p = 0; p < n_points; ++p) reflectivity[p] = 1.0 - c.emissivity[p];

    parallel_for(n_cells, config_.threads, [&](std::size_t cell) {
        const double t = c.gas_temperature[cell];
        const BandBlackbody bb = band_blackbody(t, grid);
        for (std::size_t b = 0; b < n_bands; ++b) {
            double k = 0.0;
            for (const auto& [table, x] : gas.columns) k += x * table->interpolate(b, t);
            kappa[b][cell] = gas.pressure * k;
            cell_bb[b][cell] = bb.in_band[b];
        }
        cell_bb[n_bands][cell] = bb.out_of_band;
    });
    parallel_for(n_points, config_.threads, [&](std::size_t p) {
        const BandBlackbody bb = band_blackbody(c.wall_temperature[p], grid);
        for (std::size_t b = 0; b < n_bands; ++b) wall_emission[b][p] = c.emissivity[p] * bb.in_band[b];
        wall_emission[n_bands][p] = c.emissivity[p] * bb.out_of_band;
    });

    std::vector<BandResult> bands(n_slots);
    parallel_for(n_slots, config_.threads, [&](std::size_t b) {
        bands[b] = solve_band(b, kappa[b], cell_bb[b], wall_emission[b], reflectivity);
    });

    WallIrradiation out;
    out.H.assign(n_points, 0.0);
    for (std::size_t b = 0; b < n_slots; ++b) {
        for (std::size_t p = 0; p < n_points; ++p) out.H[p] += bands[b].H[p];
        out.iterations = std::max(out.iterations, bands[b].iterations);
    }
    if (config_.keep_per_band) {
        out.per_band.reserve(n_slots);
        for (auto& b : bands) out.per_band.push_back(std::move(b.H));
    }
    return out;
}

WallIrradiation solve(const FurnaceCase& c, const AngularQuadrature& quadrature, double tolerance,
                      std::size_t max_iters) {
    SolverConfig cfg;
    cfg.tolerance = tolerance;
    cfg.max_iters = max_iters;
    DtrmSolver solver(std::make_shared<RayTable>(c.mesh, quadrature), cfg);
    return solver.solve(c);
}

double solver_timing(const DtrmSolver& solver, const FurnaceCase& c, std::size_t repetitions) {
    if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
    std::vector<double> seconds;
    seconds.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const WallIrradiation h = solver.solve(c);
        const auto t1 = std::chrono::steady_clock::now();
        if (h.H.empty()) throw std::logic_error("empty solve");
        seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(seconds.begin(), seconds.end());
    const std::size_t m = seconds.size() / 2;
    return seconds.size() % 2 == 1 ? seconds[m] : 0.5 * (seconds[m - 1] + seconds[m]);
}

}  // namespace rte
