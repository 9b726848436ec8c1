#include "rte/hyper_tuner.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <memory>

#include "rte/errors.hpp"
#include "rte/neural/model.hpp"
#include "rte/rng.hpp"

namespace rte {

namespace {

void check(const IntRange& r, const char* name) {
    if (r.lo < 1 || r.hi < r.lo) throw ConfigError("invalid range", std::string("tune.space.") + name);
}

nlohmann::json range_json(const IntRange& r) { return nlohmann::json::array({r.lo, r.hi}); }

IntRange range_from(const nlohmann::json& j, const char* key, IntRange fallback) {
    if (!j.contains(key)) return fallback;
    return {j[key].at(0).get<std::int64_t>(), j[key].at(1).get<std::int64_t>()};
}

std::size_t draw(Rng& rng, const IntRange& r) { return static_cast<std::size_t>(rng.uniform_int(r.lo, r.hi)); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void SearchSpace::validate() const {
    check(mlp_layers, "mlp_layers");
    check(mlp_nodes, "mlp_nodes");
    check(dense_layers, "dense_layers");
    check(dense_nodes, "dense_nodes");
    check(conv_layers, "conv_layers");
    check(filters, "filters");
    check(filter_size, "filter_size");
    check(pool_size, "pool_size");
}

nlohmann::json search_space_to_json(const SearchSpace& s) {
    return {{"kind", nn::kind_name(s.kind)},         {"mlp_layers", range_json(s.mlp_layers)},
            {"mlp_nodes", range_json(s.mlp_nodes)},   {"dense_layers", range_json(s.dense_layers)},
            {"dense_nodes", range_json(s.dense_nodes)}, {"conv_layers", range_json(s.conv_layers)},
            {"filters", range_json(s.filters)},       {"filter_size", range_json(s.filter_size)},
            {"pool_size", range_json(s.pool_size)}};
}

SearchSpace search_space_from_json(const nlohmann::json& j, nn::NetworkKind kind) {
    SearchSpace s;
    s.kind = kind;
    s.mlp_layers = range_from(j, "mlp_layers", s.mlp_layers);
    s.mlp_nodes = range_from(j, "mlp_nodes", s.mlp_nodes);
    s.dense_layers = range_from(j, "dense_layers", s.dense_layers);
    s.dense_nodes = range_from(j, "dense_nodes", s.dense_nodes);
    s.conv_layers = range_from(j, "conv_layers", s.conv_layers);
    s.filters = range_from(j, "filters", s.filters);
    s.filter_size = range_from(j, "filter_size", s.filter_size);
    s.pool_size = range_from(j, "pool_size", s.pool_size);
    s.validate();
    return s;
}

nn::NetworkSpec sample_spec(const SearchSpace& space, std::uint64_t seed, std::size_t trial_id) {
    space.validate();
    Rng rng(derive_seed(seed, trial_id));
    nn::NetworkSpec s;
    s.kind = space.kind;
    if (space.kind == nn::NetworkKind::mlp) {
        s.hidden_layers = draw(rng, space.mlp_layers);
        s.nodes = draw(rng, space.mlp_nodes);
    } else {
        s.conv_layers = draw(rng, space.conv_layers);
        s.filters = draw(rng, space.filters);
        s.filter_h = draw(rng, space.filter_size);
        s.filter_w = draw(rng, space.filter_size);
        s.pool_h = draw(rng, space.pool_size);
        s.pool_w = draw(rng, space.pool_size);
        s.dense_layers = draw(rng, space.dense_layers);
        s.dense_nodes = draw(rng, space.dense_nodes);
    }
    s.seed = rng.next();
    return s;
}

std::string status_name(TrialStatus s) {
    switch (s) {
        case TrialStatus::complete: return "complete";
        case TrialStatus::pruned: return "pruned";
        case TrialStatus::failed: return "failed";
    }
    return "?";
}

nlohmann::json trial_to_json(const TrialRecord& t) {
    nlohmann::json j;
    j["trial"] = t.id;
    j["status"] = status_name(t.status);
    j["spec"] = nn::spec_to_json(t.spec);
    j["budget_epochs"] = t.budget_epochs;
    j["val_mae"] = nlohmann::json::array();
    for (const auto& [e, v] : t.val_mae) j["val_mae"].push_back({e, v});
    j["objective"] = t.objective ? nlohmann::json(*t.objective) : nlohmann::json(nullptr);
    j["pruned_at"] = t.pruned_at ? nlohmann::json(*t.pruned_at) : nlohmann::json(nullptr);
    if (!t.error.empty()) j["error"] = t.error;
    return j;
}

TrialRecord trial_from_json(const nlohmann::json& j) {
    TrialRecord t;
    t.id = j.at("trial").get<std::size_t>();
    const auto status = j.at("status").get<std::string>();
    if (status == "complete") {
        t.status = TrialStatus::complete;
    } else if (status == "pruned") {
        t.status = TrialStatus::pruned;
    } else if (status == "failed") {
        t.status = TrialStatus::failed;
    } else {
        throw ConfigError("unknown trial status '" + status + "'", "ledger");
    }
    t.spec = nn::spec_from_json(j.at("spec"));
    t.budget_epochs = j.at("budget_epochs").get<std::size_t>();
    for (const auto& p : j.at("val_mae")) t.val_mae.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<double>());
    if (!j.at("objective").is_null()) t.objective = j["objective"].get<double>();
    if (!j.at("pruned_at").is_null()) t.pruned_at = j["pruned_at"].get<std::size_t>();
    t.error = j.value("error", std::string{});
    if (t.objective.has_value() != (t.status == TrialStatus::complete)) {
        throw ConfigError("objective must be present exactly for complete trials", "ledger");
    }
    return t;
}

std::vector<TrialRecord> read_ledger(const std::filesystem::path& path) {
    std::vector<TrialRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) break;  // torn write from an interrupted run
        out.push_back(trial_from_json(j));
    }
    return out;
}

std::vector<std::size_t> checkpoint_epochs(std::size_t budget, std::size_t count) {
    std::vector<std::size_t> out;
    count = std::max<std::size_t>(1, std::min(count, budget));
    for (std::size_t k = 1; k <= count; ++k) {
        const std::size_t e = (budget * k) / count;
        if (out.empty() || e != out.back()) out.push_back(e);
    }
    return out;
}

StudyResult run_study(const StudyConfig& cfg, const TrialEvaluator& evaluate) {
    if (cfg.n_trials < 1) throw ConfigError("n_trials must be at least 1", "tune.n_trials");
    if (cfg.budget_epochs < 1) throw ConfigError("budget must be at least 1 epoch", "tune.budget_epochs");
    cfg.space.validate();

    StudyResult result;
    std::vector<TrialRecord> previous;
    if (!cfg.ledger.empty()) {
        previous = read_ledger(cfg.ledger);
        // Rewrite so that a torn trailing line is dropped before appending.
        std::ofstream out(cfg.ledger, std::ios::trunc);
        if (!out) throw IoError("cannot write ledger " + cfg.ledger.string());
        for (const auto& t : previous) {
            if (t.id >= cfg.n_trials) break;
            out << trial_to_json(t).dump() << '\n';
        }
    }

    const std::vector<std::size_t> checkpoints = checkpoint_epochs(cfg.budget_epochs, cfg.checkpoints);
    for (std::size_t id = 0; id < cfg.n_trials; ++id) {
        const nn::NetworkSpec spec = sample_spec(cfg.space, cfg.seed, id);
        if (id < previous.size()) {
            const TrialRecord& rec = previous[id];
            if (rec.id != id || !(rec.spec == spec) || rec.budget_epochs != cfg.budget_epochs) {
                throw StudyError("ledger entry " + std::to_string(id) + " does not match this study's settings",
                                 previous);
            }
            result.ledger.push_back(rec);
            continue;
        }

        // Snapshot of earlier trials' checkpoint values for median pruning.
        const std::vector<TrialRecord> snapshot = result.ledger;
        const std::size_t finished = static_cast<std::size_t>(
            std::count_if(snapshot.begin(), snapshot.end(),
                          [](const TrialRecord& t) { return t.status != TrialStatus::failed; }));

        TrialRecord rec;
        rec.id = id;
        rec.spec = spec;
        rec.budget_epochs = cfg.budget_epochs;
        auto report = [&](std::size_t epoch, double val) {
            rec.val_mae.emplace_back(epoch, val);
            if (finished < cfg.startup_trials) return true;
            std::vector<double> peers;
            for (const auto& t : snapshot) {
                for (const auto& [e, v] : t.val_mae) {
                    if (e == epoch) peers.push_back(v);
                }
            }
            if (peers.empty() || epoch >= cfg.budget_epochs) return true;
            if (val > median(peers)) {
                rec.pruned_at = epoch;
                return false;
            }
            return true;
        };

        const auto t0 = std::chrono::steady_clock::now();
        try {
            const TrialOutcome outcome = evaluate(spec, cfg.budget_epochs, checkpoints, report);
            if (rec.pruned_at) {
                rec.status = TrialStatus::pruned;
            } else {
                rec.status = TrialStatus::complete;
                rec.objective = outcome.objective;
            }
        } catch (const std::exception& e) {
            rec.status = TrialStatus::failed;
            rec.objective.reset();
            rec.pruned_at.reset();
            rec.error = e.what();
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++result.evaluated;

        if (!cfg.ledger.empty()) {
            std::ofstream out(cfg.ledger, std::ios::app);
            out << trial_to_json(rec).dump() << '\n';
            out.flush();
            if (!out) throw IoError("cannot append to ledger " + cfg.ledger.string());
        }
        if (!cfg.timing_log.empty()) {
            std::ofstream out(cfg.timing_log, std::ios::app);
            out << nlohmann::json{{"trial", id}, {"wall_seconds", seconds}}.dump() << '\n';
        }
        result.ledger.push_back(std::move(rec));
    }

    bool found = false;
    for (const auto& t : result.ledger) {
        if (t.status != TrialStatus::complete) continue;
        if (!found || *t.objective < result.best_objective) {
            found = true;
            result.best_trial = t.id;
            result.best_objective = *t.objective;
            result.best_spec = t.spec;
        }
    }
    if (!found) throw StudyError("no trial completed", result.ledger);
    return result;
}

TrialEvaluator make_training_evaluator(const NormalizedDataset& ds, IndexRange target, const nn::TrainConfig& base,
                                       std::uint64_t split_seed) {
    if (ds.n_train < 2) throw ConfigError("need at least 2 training rows for a validation fold", "dataset.n_train");
    Rng rng(split_seed);
    std::vector<std::size_t> rows = rng.permutation(ds.n_train);
    const std::size_t n_val = std::max<std::size_t>(1, ds.n_train / 10);
    std::vector<std::size_t> val_rows(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit_rows(rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(fit_rows.begin(), fit_rows.end());

    // Both encodings are built once and shared by all trials.
    struct Sets {
        nn::Samples<float> fit, val;
    };
    auto by_kind = std::make_shared<std::array<std::optional<Sets>, 2>>();
    auto data = std::make_shared<NormalizedDataset>(ds);

    return [=](const nn::NetworkSpec& spec, std::size_t budget, const std::vector<std::size_t>& checkpoints,
               const CheckpointReporter& report) {
        auto& slot = (*by_kind)[spec.kind == nn::NetworkKind::mlp ? 0 : 1];
        if (!slot) {
            slot = Sets{nn::make_samples<float>(*data, std::span<const std::size_t>(fit_rows), spec.kind, target),
                        nn::make_samples<float>(*data, std::span<const std::size_t>(val_rows), spec.kind, target)};
        }
        nn::Network<float> net = nn::build_network<float>(spec, slot->fit.sample_shape, target.size());
        nn::TrainConfig cfg = base;
        cfg.epochs = budget;
        cfg.shuffle_seed = derive_seed(spec.seed, 1);
        cfg.val_every = 0;
        std::size_t next = 0;
        double last = 0.0;
        nn::train<float>(net, slot->fit, nullptr, cfg, [&](std::size_t epoch, double, std::optional<double>) {
            if (next < checkpoints.size() && epoch == checkpoints[next]) {
                ++next;
                last = nn::mean_absolute_error(net, slot->val);
                return report(epoch, last);
            }
            return true;
        });
        return TrialOutcome{last};
    };
}

}  // namespace rte
