#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rte/dataset_store.hpp"
#include "rte/neural/network.hpp"
#include "rte/neural/train.hpp"

namespace rte {

struct IntRange {
    std::int64_t lo;
    std::int64_t hi;
};

// Integer-uniform search bounds.
struct SearchSpace {
    nn::NetworkKind kind = nn::NetworkKind::cnn;
    IntRange mlp_layers{1, 3};
    IntRange mlp_nodes{1000, 10000};
    IntRange dense_layers{1, 3};
    IntRange dense_nodes{20, 1000};
    IntRange conv_layers{1, 3};
    IntRange filters{3, 27};
    IntRange filter_size{1, 6};
    IntRange pool_size{1, 6};

    void validate() const;
};

nlohmann::json search_space_to_json(const SearchSpace& s);
SearchSpace search_space_from_json(const nlohmann::json& j, nn::NetworkKind kind);

// Draws are keyed by (seed, trial_id) only, so trial k never depends on
// earlier trials.
nn::NetworkSpec sample_spec(const SearchSpace& space, std::uint64_t seed, std::size_t trial_id);

enum class TrialStatus { complete, pruned, failed };
std::string status_name(TrialStatus s);

struct TrialRecord {
    std::size_t id = 0;
    nn::NetworkSpec spec;
    std::size_t budget_epochs = 0;
    std::vector<std::pair<std::size_t, double>> val_mae;  // checkpoint trajectory
    std::optional<double> objective;                      // present iff complete
    TrialStatus status = TrialStatus::failed;
    std::optional<std::size_t> pruned_at;
    std::string error;
};

nlohmann::json trial_to_json(const TrialRecord& t);
TrialRecord trial_from_json(const nlohmann::json& j);

// Reports a validation MAE at a checkpoint epoch; returns false when the
// trial should stop (pruned).
using CheckpointReporter = std::function<bool(std::size_t epoch, double val_mae)>;

struct TrialOutcome {
    double objective = 0.0;  // final validation MAE
};

// Trains `spec` for `budget_epochs`, calling `report` at the checkpoints it is
// given. Throwing marks the trial failed.
using TrialEvaluator = std::function<TrialOutcome(const nn::NetworkSpec& spec, std::size_t budget_epochs,
                                                  const std::vector<std::size_t>& checkpoints,
                                                  const CheckpointReporter& report)>;

struct StudyConfig {
    SearchSpace space;
    std::size_t n_trials = 50;
    std::size_t budget_epochs = 500;
    std::size_t checkpoints = 4;       // evenly spaced validation checkpoints
    std::size_t startup_trials = 2;    // no pruning before this many finished trials
    std::uint64_t seed = 0;
    std::filesystem::path ledger;      // JSON lines; empty disables persistence
    std::filesystem::path timing_log;  // optional wall-clock sidecar
};

struct StudyResult {
    std::vector<TrialRecord> ledger;
    std::size_t best_trial = 0;
    nn::NetworkSpec best_spec;
    double best_objective = 0.0;
    std::size_t evaluated = 0;  // trials run by this call (not replayed)
};

class StudyError : public std::runtime_error {
public:
    StudyError(const std::string& msg, std::vector<TrialRecord> ledger)
        : std::runtime_error(msg), ledger_(std::move(ledger)) {}
    const std::vector<TrialRecord>& ledger() const noexcept { return ledger_; }

private:
    std::vector<TrialRecord> ledger_;
};

std::vector<std::size_t> checkpoint_epochs(std::size_t budget, std::size_t count);

// Random search with median pruning. Trials already present in the ledger file
// are replayed instead of re-run.
StudyResult run_study(const StudyConfig& cfg, const TrialEvaluator& evaluate);

// Reads complete ledger lines; a torn trailing line is ignored.
std::vector<TrialRecord> read_ledger(const std::filesystem::path& path);

// Evaluator that trains on 90% of the training rows and validates on the
// remaining 10% (seeded split); the test rows are never touched.
TrialEvaluator make_training_evaluator(const NormalizedDataset& ds, IndexRange target, const nn::TrainConfig& base,
                                       std::uint64_t split_seed);

}  // namespace rte
