#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "rte/case_sampling.hpp"
#include "rte/eval_bench.hpp"
#include "rte/hyper_tuner.hpp"
#include "rte/neural/network.hpp"
#include "rte/neural/train.hpp"

namespace rte::cli {

// Defaults reproduce the reference furnace: 120 x 20 cells over 12 m x 2 m,
// 32 rays, 150-9300 cm^-1 in 25 cm^-1 bands.
nlohmann::json default_config();

// "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Recursive merge of `patch` into `base`; unknown keys are rejected.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& path = {});

// Defaults <- file <- overrides.
nlohmann::json load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

// SHA-256 of the resolved config, excluding settings that do not change
// results (thread count).
std::string config_hash(const nlohmann::json& config);

struct RunSettings {
    FurnaceMesh mesh{120, 20, 12.0, 2.0};
    std::size_t n_rays = 32;
    std::shared_ptr<const BandGrid> bands;
    std::shared_ptr<const AbsorptionTable> table;
    SolverConfig solver;
    CaseDistribution distribution;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::uint64_t dataset_seed = 0;
    nn::NetworkSpec network;
    nn::TrainConfig train;
    std::string target = "all";
    StudyConfig tune;
    std::size_t bench_cases = 10;
    std::size_t bench_repetitions = 3;
    PhysicsSettings physics;
    unsigned threads = 1;
    std::string hash;
    nlohmann::json resolved;
};

// Validates every field; errors carry the JSON path.
RunSettings resolve(const nlohmann::json& config, const std::filesystem::path& base_dir = {});

// Entry point; returns the process exit code. Errors are written to `err` as a
// JSON object.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace rte::cli
