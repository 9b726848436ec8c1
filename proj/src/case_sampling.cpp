#include "rte/case_sampling.hpp"

#include <algorithm>
#include <cmath>

#include "rte/dataset_store.hpp"
#include "rte/errors.hpp"
#include "rte/parallel.hpp"
#include "rte/rng.hpp"

namespace rte {

void CaseDistribution::validate() const {
    if (!(0.0 <= emissivity.lo && emissivity.lo < emissivity.hi && emissivity.hi <= 1.0)) {
        throw ConfigError("need 0 <= lo < hi <= 1", "sampling.emissivity");
    }
    if (!(0.0 < wall_temperature.lo && wall_temperature.lo < wall_temperature.hi)) {
        throw ConfigError("need 0 < lo < hi", "sampling.wall_temperature");
    }
    if (!(0.0 < gas_temperature.lo && gas_temperature.lo < gas_temperature.hi)) {
        throw ConfigError("need 0 < lo < hi", "sampling.gas_temperature");
    }
    if (wall_controls < 2) throw ConfigError("need at least 2 control points per wall", "sampling.wall_controls");
    if (grid_controls_x < 2 || grid_controls_y < 2) {
        throw ConfigError("need at least a 2 x 2 control grid", "sampling.grid_controls");
    }
}

SampleMatrix lhs(std::size_t n_samples, std::size_t n_dims, std::uint64_t seed) {
    if (n_samples < 1 || n_dims < 1) throw std::invalid_argument("lhs needs at least one sample and dimension");
    SampleMatrix m{n_samples, n_dims, std::vector<double>(n_samples * n_dims)};
    const double n = static_cast<double>(n_samples);
    for (std::size_t d = 0; d < n_dims; ++d) {
        Rng rng(derive_seed(seed, d));
        const std::vector<std::size_t> strata = rng.permutation(n_samples);
        for (std::size_t s = 0; s < n_samples; ++s) {
            double v = (static_cast<double>(strata[s]) + rng.uniform()) / n;
            // Rounding can land exactly on the upper stratum edge.
            const double upper = (static_cast<double>(strata[s]) + 1.0) / n;
            if (v >= upper) v = std::nextafter(upper, 0.0);
            m.values[s * n_dims + d] = v;
        }
    }
    return m;
}

bool is_latin_hypercube(const SampleMatrix& m) {
    const double n = static_cast<double>(m.rows);
    for (std::size_t d = 0; d < m.cols; ++d) {
        std::vector<bool> seen(m.rows, false);
        for (std::size_t s = 0; s < m.rows; ++s) {
            const double v = m(s, d);
            if (!(v >= 0.0 && v < 1.0)) return false;
            // floor(v * n) can be off by one after rounding; settle on k/n <= v < (k+1)/n.
            auto k = std::min(static_cast<std::size_t>(v * n), m.rows - 1);
            while (k > 0 && v < static_cast<double>(k) / n) --k;
            while (k + 1 < m.rows && v >= static_cast<double>(k + 1) / n) ++k;
            if (seen[k]) return false;
            seen[k] = true;
        }
    }
    return true;
}

namespace {

// Linear interpolation of c control values (evenly spaced from the first to the
// last point) onto n points.
double along(std::span<const double> controls, std::size_t k, std::size_t n) {
    const std::size_t c = controls.size();
    if (n == 1) return controls[0] + 0.5 * (controls[c - 1] - controls[0]);
    const double s = static_cast<double>(k) / static_cast<double>(n - 1) * static_cast<double>(c - 1);
    const auto lo = std::min(static_cast<std::size_t>(s), c - 2);
    const double w = s - static_cast<double>(lo);
    return controls[lo] + w * (controls[lo + 1] - controls[lo]);
}

}  // namespace

FurnaceCase realize_case(std::span<const double> sample, const CaseDistribution& dist, const FurnaceMesh& mesh,
                         std::shared_ptr<const BandGrid> bands, std::shared_ptr<const AbsorptionTable> table) {
    dist.validate();
    if (sample.size() != dist.dimensions()) {
        throw ShapeError("sample has " + std::to_string(sample.size()) + " values, distribution needs " +
                         std::to_string(dist.dimensions()));
    }
    const std::size_t cb = dist.wall_controls;
    FurnaceCase c{mesh, {}, {}, {}, dist.gas, std::move(bands), std::move(table)};
    c.emissivity.resize(mesh.boundary_count());
    c.wall_temperature.resize(mesh.boundary_count());
    c.gas_temperature.resize(mesh.cell_count());

    std::vector<double> eps_ctrl(cb);
    std::vector<double> t0_ctrl(cb);
    for (std::size_t w = 0; w < all_walls.size(); ++w) {
        for (std::size_t k = 0; k < cb; ++k) {
            eps_ctrl[k] = dist.emissivity.at(sample[w * cb + k]);
            t0_ctrl[k] = dist.wall_temperature.at(sample[4 * cb + w * cb + k]);
        }
        const IndexRange range = mesh.wall_range(all_walls[w]);
        for (std::size_t p = range.begin; p < range.end; ++p) {
            c.emissivity[p] = std::clamp(along(eps_ctrl, p - range.begin, range.size()), dist.emissivity.lo,
                                         dist.emissivity.hi);
            c.wall_temperature[p] = std::clamp(along(t0_ctrl, p - range.begin, range.size()),
                                               dist.wall_temperature.lo, dist.wall_temperature.hi);
        }
    }

    // Control nodes sit at the extreme cell centres.
    const std::size_t cx = dist.grid_controls_x;
    const std::size_t cy = dist.grid_controls_y;
    const std::span<const double> grid = sample.subspan(8 * cb);
    auto control = [&](std::size_t a, std::size_t b) { return dist.gas_temperature.at(grid[b * cx + a]); };
    auto locate = [](std::size_t idx, std::size_t n, std::size_t controls, std::size_t& lo, double& w) {
        const double s = n == 1 ? 0.5 * static_cast<double>(controls - 1)
                                : static_cast<double>(idx) / static_cast<double>(n - 1) *
                                      static_cast<double>(controls - 1);
        lo = std::min(static_cast<std::size_t>(s), controls - 2);
        w = s - static_cast<double>(lo);
    };
    for (std::size_t j = 0; j < mesh.ny(); ++j) {
        std::size_t b0;
        double wy;
        locate(j, mesh.ny(), cy, b0, wy);
        for (std::size_t i = 0; i < mesh.nx(); ++i) {
            std::size_t a0;
            double wx;
            locate(i, mesh.nx(), cx, a0, wx);
            const double v = (1 - wx) * (1 - wy) * control(a0, b0) + wx * (1 - wy) * control(a0 + 1, b0) +
                             (1 - wx) * wy * control(a0, b0 + 1) + wx * wy * control(a0 + 1, b0 + 1);
            c.gas_temperature[j * mesh.nx() + i] = std::clamp(v, dist.gas_temperature.lo, dist.gas_temperature.hi);
        }
    }
    return c;
}

RawDataset generate_dataset(const CaseDistribution& dist, std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                            const DtrmSolver& solver, std::shared_ptr<const BandGrid> bands,
                            std::shared_ptr<const AbsorptionTable> table, unsigned threads) {
    if (n_train < 1 || n_test < 1) throw ConfigError("n_train and n_test must be at least 1", "dataset");
    dist.validate();
    const FurnaceMesh& mesh = solver.rays().mesh();
    const SampleMatrix train = lhs(n_train, dist.dimensions(), seed);
    const SampleMatrix test = lhs(n_test, dist.dimensions(), seed + 1);
    if (!is_latin_hypercube(train) || !is_latin_hypercube(test)) {
        throw std::logic_error("generated design is not a Latin hypercube");
    }

    RawDataset ds;
    ds.mesh = mesh;
    ds.n_train = n_train;
    ds.n_test = n_test;
    const std::size_t total = n_train + n_test;
    ds.inputs.resize(total);
    ds.outputs.resize(total);
    parallel_for(total, threads, [&](std::size_t s) {
        const auto row = s < n_train ? train.row(s) : test.row(s - n_train);
        const FurnaceCase c = realize_case(row, dist, mesh, bands, table);
        try {
            ds.outputs[s] = solver.solve(c).H;
        } catch (const ConvergenceError& e) {
            throw GenerationError("sample " + std::to_string(s) + ": " + e.what(), s);
        }
        ds.inputs[s] = mlp_view(c.emissivity, c.wall_temperature, c.gas_temperature, mesh);
    });
    return ds;
}

}  // namespace rte
