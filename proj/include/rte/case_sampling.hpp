#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rte/dtrm.hpp"

namespace rte {

struct Range {
    double lo = 0.0;
    double hi = 1.0;
    double at(double u) const noexcept { return lo + (hi - lo) * u; }
};

// Smooth parameterization of the sampled fields: per wall, c_b control values
// for emissivity and for wall temperature interpolated along the wall, and a
// c_x x c_y control grid bilinearly interpolated over the gas cells.
struct CaseDistribution {
    Range emissivity{0.3, 1.0};
    Range wall_temperature{800.0, 1800.0};
    Range gas_temperature{900.0, 2000.0};
    std::size_t wall_controls = 4;
    std::size_t grid_controls_x = 6;
    std::size_t grid_controls_y = 3;
    GasComposition gas;

    void validate() const;
    // 8 * c_b + c_x * c_y
    std::size_t dimensions() const noexcept {
        return 8 * wall_controls + grid_controls_x * grid_controls_y;
    }
};

// Row-major n_samples x n_dims values in [0, 1).
struct SampleMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

SampleMatrix lhs(std::size_t n_samples, std::size_t n_dims, std::uint64_t seed);

// True when every column has exactly one value in each stratum [i/n, (i+1)/n).
bool is_latin_hypercube(const SampleMatrix& m);

// Sample layout: [eps controls: 4 walls x c_b][T0 controls: 4 walls x c_b][gas grid c_y rows x c_x].
// Wall controls run in boundary index order along each wall.
FurnaceCase realize_case(std::span<const double> sample, const CaseDistribution& dist, const FurnaceMesh& mesh,
                         std::shared_ptr<const BandGrid> bands, std::shared_ptr<const AbsorptionTable> table);

struct RawDataset {
    FurnaceMesh mesh{1, 1, 1.0, 1.0};
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    // Rows [0, n_train) are training cases, the rest test cases. Inputs are in
    // flat layout [eps(B), T0(B), T(cells)], outputs are H(B).
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> outputs;

    std::size_t size() const noexcept { return inputs.size(); }
};

struct GenerationError : std::runtime_error {
    GenerationError(const std::string& msg, std::size_t sample) : std::runtime_error(msg), sample_index(sample) {}
    std::size_t sample_index;
};

// Train and test are independent LHS designs with seeds `seed` and `seed + 1`.
RawDataset generate_dataset(const CaseDistribution& dist, std::size_t n_train, std::size_t n_test, std::uint64_t seed,
                            const DtrmSolver& solver, std::shared_ptr<const BandGrid> bands,
                            std::shared_ptr<const AbsorptionTable> table, unsigned threads = 1);

}  // namespace rte
