#include "rte/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rte/dataset_store.hpp"
#include "rte/errors.hpp"
#include "rte/hash.hpp"
#include "rte/neural/model.hpp"
#include "rte/parallel.hpp"

namespace rte::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Objects whose contents are replaced wholesale instead of merged key by key.
bool replaced_wholesale(const std::string& path) { return path == "network"; }

template <class T>
T get(const json& j, const std::string& path) {
    const json* node = &j;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key)) throw ConfigError("missing", path);
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    try {
        return node->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("wrong type: ") + e.what(), path);
    }
}

Range get_range(const json& j, const std::string& path) {
    const auto v = get<std::vector<double>>(j, path);
    if (v.size() != 2) throw ConfigError("expected [lo, hi]", path);
    if (!(v[0] <= v[1])) throw ConfigError("lo must not exceed hi", path);
    return {v[0], v[1]};
}

std::size_t positive(const json& j, const std::string& path) {
    const auto v = get<std::int64_t>(j, path);
    if (v < 1) throw ConfigError("must be at least 1", path);
    return static_cast<std::size_t>(v);
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("cannot write " + p.string());
}

json parse_json_file(const fs::path& p) {
    try {
        return json::parse(read_text(p));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what(), p.string());
    }
}

std::vector<double> field_values(const json& c, const std::string& key, std::size_t n) {
    if (!c.contains(key)) throw ConfigError("missing", "case." + key);
    const json& v = c[key];
    if (v.is_number()) return std::vector<double>(n, v.get<double>());
    auto out = v.get<std::vector<double>>();
    if (out.size() != n) {
        throw ConfigError("expected " + std::to_string(n) + " values, got " + std::to_string(out.size()), "case." + key);
    }
    return out;
}

nn::NetworkSpec best_from_ledger(const fs::path& ledger) {
    const auto records = read_ledger(ledger);
    const TrialRecord* best = nullptr;
    for (const auto& t : records) {
        if (t.status == TrialStatus::complete && (best == nullptr || *t.objective < *best->objective)) best = &t;
    }
    if (best == nullptr) throw ConfigError("ledger has no complete trial", "network_source");
    return best->spec;
}

json mesh_json(const FurnaceMesh& m) { return {{"nx", m.nx()}, {"ny", m.ny()}, {"lx", m.lx()}, {"ly", m.ly()}}; }

struct Loaded {
    LoadedDataset data;
    NormalizedDataset normalized;
    std::string manifest_sha;
};

Loaded load_data(const fs::path& dir) {
    Loaded l{load_dataset(dir), {}, {}};
    l.normalized = normalize(l.data.raw, l.data.manifest.scalers);
    l.manifest_sha = sha256_hex(read_text(dir / "manifest.json"));
    return l;
}

IndexRange model_target(const nn::TrainedModel& m) {
    const auto p = m.metadata.at("target_points").get<std::vector<std::size_t>>();
    return {p.at(0), p.at(1)};
}

FurnaceCase case_from_row(const std::vector<double>& flat, const FurnaceMesh& mesh, const RunSettings& s) {
    CaseFields f = decode_mlp_view(flat, mesh);
    return FurnaceCase{mesh,
                       std::move(f.emissivity),
                       std::move(f.wall_temperature),
                       std::move(f.gas_temperature),
                       s.distribution.gas,
                       s.bands,
                       s.table};
}

// ---------------------------------------------------------------------------
// Subcommands

json cmd_solve(const RunSettings& s, const fs::path& case_path, const fs::path& out_dir) {
    if (case_path.empty()) throw ConfigError("solve needs --case", "case");
    const json c = parse_json_file(case_path);
    GasComposition gas = s.distribution.gas;
    if (c.contains("gas")) {
        gas.pressure = c["gas"].value("pressure", gas.pressure);
        gas.x_co2 = c["gas"].value("x_co2", gas.x_co2);
        gas.x_h2o = c["gas"].value("x_h2o", gas.x_h2o);
        gas.x_co = c["gas"].value("x_co", gas.x_co);
    }
    FurnaceCase fc{s.mesh,
                   field_values(c, "emissivity", s.mesh.boundary_count()),
                   field_values(c, "wall_temperature", s.mesh.boundary_count()),
                   field_values(c, "gas_temperature", s.mesh.cell_count()),
                   gas,
                   s.bands,
                   s.table};
    SolverConfig cfg = s.solver;
    cfg.threads = s.threads;
    auto rays = std::make_shared<const RayTable>(s.mesh, make_quadrature(s.n_rays));
    const WallIrradiation w = DtrmSolver(rays, cfg).solve(fc);

    json result{{"format", "rte-irradiation/1"},
                {"config_hash", s.hash},
                {"case_sha256", sha256_hex(read_text(case_path))},
                {"mesh", mesh_json(s.mesh)},
                {"iterations", w.iterations},
                {"H", w.H}};
    json walls = json::object();
    for (const auto& [wall, range] : wall_segments(s.mesh)) walls[std::string(wall_name(wall))] = {range.begin, range.end};
    result["walls"] = walls;
    if (!out_dir.empty()) write_text(out_dir / "irradiation.json", result.dump(2) + "\n");
    return {{"iterations", w.iterations}, {"points", w.H.size()}};
}

json cmd_gen_dataset(const RunSettings& s, const fs::path& out_dir) {
    if (out_dir.empty()) throw ConfigError("gen-dataset needs --out", "out");
    SolverConfig cfg = s.solver;
    cfg.threads = 1;  // parallelism goes over cases
    auto rays = std::make_shared<const RayTable>(s.mesh, make_quadrature(s.n_rays));
    const DtrmSolver solver(rays, cfg);
    const RawDataset raw =
        generate_dataset(s.distribution, s.n_train, s.n_test, s.dataset_seed, solver, s.bands, s.table, s.threads);
    DatasetProvenance prov;
    prov.seed = s.dataset_seed;
    prov.distribution = {{"sampling", s.resolved["sampling"]},
                         {"gas", s.resolved["gas"]},
                         {"mesh", s.resolved["mesh"]},
                         {"quadrature", s.resolved["quadrature"]},
                         {"bands", s.resolved["bands"]},
                         {"absorption_table", s.resolved["absorption_table"]}};
    prov.solver_config_hash = s.hash;
    const DatasetManifest m = save_dataset(out_dir, raw, prov);
    return {{"n_train", m.n_train}, {"n_test", m.n_test}, {"warnings", m.warnings}};
}

json cmd_train(const RunSettings& s, const fs::path& data_dir, const fs::path& out_dir) {
    if (data_dir.empty()) throw ConfigError("train needs --data", "data");
    if (out_dir.empty()) throw ConfigError("train needs --out", "out");
    const Loaded l = load_data(data_dir);
    const NormalizedDataset& ds = l.normalized;
    const IndexRange target = target_range(ds.mesh, s.target);

    nn::NetworkSpec spec = s.network;
    spec.output_dim = target.size();
    const nn::Samples<float> set = nn::make_samples<float>(ds, 0, ds.n_train, spec.kind, target);
    nn::Network<float> net = nn::build_network<float>(spec, set.sample_shape, target.size());
    const nn::TrainHistory h = nn::train<float>(net, set, nullptr, s.train);

    std::ostringstream csv;
    csv.precision(9);
    csv << "epoch,train_mae\n";
    for (std::size_t e = 0; e < h.train_loss.size(); ++e) csv << e + 1 << ',' << h.train_loss[e] << '\n';
    write_text(out_dir / "loss_history.csv", csv.str());

    nn::TrainedModel model{spec, std::move(net), json::object()};
    model.metadata = {{"config_hash", s.hash},
                      {"dataset_manifest_sha256", l.manifest_sha},
                      {"target", s.target},
                      {"target_points", {target.begin, target.end}},
                      {"mesh", mesh_json(ds.mesh)},
                      {"scalers", scalers_to_json(ds.scalers)},
                      {"train", s.resolved["train"]},
                      {"epochs_run", h.epochs_run},
                      {"final_train_mae", h.train_loss.empty() ? 0.0 : h.train_loss.back()}};
    nn::save_model(out_dir / "model.rtm", model);
    // Wall-clock lives in its own file so the model stays reproducible.
    write_text(out_dir / "train_report.json",
               json{{"wall_seconds", h.wall_seconds}, {"epochs_run", h.epochs_run}, {"config_hash", s.hash}}.dump(2) +
                   "\n");
    return {{"epochs_run", h.epochs_run},
            {"final_train_mae", model.metadata["final_train_mae"]},
            {"parameters", model.net.parameter_count()},
            {"wall_seconds", h.wall_seconds}};
}

json cmd_tune(const RunSettings& s, const fs::path& data_dir, const fs::path& out_dir) {
    if (data_dir.empty()) throw ConfigError("tune needs --data", "data");
    if (out_dir.empty()) throw ConfigError("tune needs --out", "out");
    const Loaded l = load_data(data_dir);
    const IndexRange target = target_range(l.normalized.mesh, s.target);
    StudyConfig cfg = s.tune;
    fs::create_directories(out_dir);
    cfg.ledger = out_dir / "ledger.jsonl";
    cfg.timing_log = out_dir / "ledger_timing.jsonl";
    const TrialEvaluator eval = make_training_evaluator(l.normalized, target, s.train, derive_seed(cfg.seed, 0xF01D));
    const StudyResult r = run_study(cfg, eval);
    json best = nn::spec_to_json(r.best_spec);
    best["output_dim"] = target.size();
    write_text(out_dir / "best_spec.json", json{{"trial", r.best_trial},
                                                {"objective", r.best_objective},
                                                {"spec", best},
                                                {"config_hash", s.hash},
                                                {"dataset_manifest_sha256", l.manifest_sha}}
                                                   .dump(2) +
                                               "\n");
    std::size_t pruned = 0, failed = 0;
    for (const auto& t : r.ledger) {
        pruned += t.status == TrialStatus::pruned ? 1 : 0;
        failed += t.status == TrialStatus::failed ? 1 : 0;
    }
    return {{"best_trial", r.best_trial}, {"best_objective", r.best_objective}, {"evaluated", r.evaluated},
            {"pruned", pruned},           {"failed", failed}};
}

std::vector<std::vector<double>> predict_rows(const nn::Network<float>& net, const nn::Samples<float>& set,
                                              const Scalers& scalers) {
    std::vector<std::vector<double>> out;
    const std::size_t batch = 64;
    const std::size_t per = set.sample_size();
    for (std::size_t b = 0; b < set.size(); b += batch) {
        const std::size_t n = std::min(batch, set.size() - b);
        nn::Shape shape{n};
        shape.insert(shape.end(), set.sample_shape.begin(), set.sample_shape.end());
        nn::Tensor<float> x(shape);
        std::copy_n(set.x.begin() + static_cast<std::ptrdiff_t>(b * per), n * per, x.data.begin());
        const nn::Tensor<float> y = net.predict(x);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = y.sample(i);
            const std::vector<double> h(row.begin(), row.end());
            out.push_back(denormalize_outputs(h, scalers));
        }
    }
    return out;
}

json cmd_eval(const RunSettings&, const fs::path& data_dir, const fs::path& model_path, const fs::path& out_dir) {
    if (data_dir.empty()) throw ConfigError("eval needs --data", "data");
    if (model_path.empty()) throw ConfigError("eval needs --model", "model");
    if (out_dir.empty()) throw ConfigError("eval needs --out", "out");
    const Loaded l = load_data(data_dir);
    const nn::TrainedModel model = nn::load_model(model_path);
    const IndexRange target = model_target(model);
    const NormalizedDataset& ds = l.normalized;
    if (target.end > ds.mesh.boundary_count()) throw ConfigError("model target does not fit the dataset mesh", "model");
    const auto set = nn::make_samples<float>(ds, ds.n_train, ds.n_train + ds.n_test, model.spec.kind, target);
    const auto pred = predict_rows(model.net, set, ds.scalers);
    std::vector<std::vector<double>> ref;
    for (std::size_t r = ds.n_train; r < ds.n_train + ds.n_test; ++r) {
        const auto& row = l.data.raw.outputs[r];
        ref.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(target.begin),
                         row.begin() + static_cast<std::ptrdiff_t>(target.end));
    }
    ErrorReport rep = relative_error(pred, ref, ds.mesh, target);
    rep.metadata["dataset_manifest_sha256"] = l.manifest_sha;
    rep.metadata["model_sha256"] = sha256_hex(read_text(model_path));
    rep.metadata["model_kind"] = nn::kind_name(model.spec.kind);
    rep.metadata["target"] = model.metadata.value("target", std::string("all"));
    write_text(out_dir / "error_report.json", report_to_json(rep).dump(2) + "\n");
    emit_plot_data(rep, ds.mesh, out_dir);
    json walls = json::object();
    for (const auto& w : rep.walls) walls[std::string(wall_name(w.wall))] = w.mean;
    return {{"mean_pct", rep.mean}, {"std_pct", rep.std}, {"walls_mean_pct", walls}};
}

json cmd_bench(const RunSettings& s, const fs::path& data_dir, const fs::path& model_path, const fs::path& out_dir) {
    if (data_dir.empty()) throw ConfigError("bench needs --data", "data");
    if (model_path.empty()) throw ConfigError("bench needs --model", "model");
    if (out_dir.empty()) throw ConfigError("bench needs --out", "out");
    const Loaded l = load_data(data_dir);
    const nn::TrainedModel model = nn::load_model(model_path);
    const NormalizedDataset& ds = l.normalized;
    if (!(ds.mesh.nx() == s.mesh.nx() && ds.mesh.ny() == s.mesh.ny())) {
        throw ConfigError("dataset mesh differs from the configured mesh", "mesh");
    }
    const auto set = nn::make_samples<float>(ds, ds.n_train, ds.n_train + ds.n_test, model.spec.kind,
                                             model_target(model));
    std::vector<FurnaceCase> cases;
    for (std::size_t r = ds.n_train; r < ds.n_train + std::min(ds.n_test, s.bench_cases); ++r) {
        cases.push_back(case_from_row(l.data.raw.inputs[r], ds.mesh, s));
    }
    SolverConfig cfg = s.solver;
    cfg.threads = s.threads;
    auto rays = std::make_shared<const RayTable>(s.mesh, make_quadrature(s.n_rays));
    TimingReport t = speedup_benchmark(model.net, set, DtrmSolver(rays, cfg), cases, s.bench_repetitions);
    const fs::path report = model_path.parent_path() / "train_report.json";
    if (fs::exists(report)) t.training_seconds = parse_json_file(report).value("wall_seconds", 0.0);
    json j = timing_to_json(t);
    j["config_hash"] = s.hash;
    j["model_sha256"] = sha256_hex(read_text(model_path));
    write_text(out_dir / "timing_report.json", j.dump(2) + "\n");
    return {{"solver_seconds", t.solver_seconds}, {"inference_seconds", t.inference_seconds}, {"speedup", t.speedup}};
}

json cmd_validate(const RunSettings& s, const fs::path& out_dir, bool& passed) {
    const PhysicsReport r = validate_physics(s.physics);
    json j = physics_to_json(r);
    j["config_hash"] = s.hash;
    if (!out_dir.empty()) write_text(out_dir / "physics_report.json", j.dump(2) + "\n");
    passed = r.passed();
    return j;
}

int error_exit(std::ostream& err, const std::string& type, const std::string& message, const json& extra, int code) {
    json e{{"error", {{"type", type}, {"message", message}}}};
    for (auto it = extra.begin(); it != extra.end(); ++it) e["error"][it.key()] = it.value();
    err << e.dump() << '\n';
    return code;
}

}  // namespace

json default_config() {
    SearchSpace space;
    json space_json = search_space_to_json(space);
    space_json.erase("kind");
    return {
        {"mesh", {{"nx", 120}, {"ny", 20}, {"lx", 12.0}, {"ly", 2.0}}},
        {"quadrature", {{"n_rays", 32}}},
        {"bands", {{"nu_min", 150.0}, {"nu_max", 9300.0}, {"delta_nu", 25.0}}},
        {"gas", {{"pressure", 1.0}, {"x_co2", 0.1}, {"x_h2o", 0.2}, {"x_co", 0.0}}},
        {"absorption_table", "synthetic"},
        {"solver", {{"tolerance", 1e-6}, {"max_iters", 100}}},
        {"sampling",
         {{"emissivity", {0.3, 1.0}},
          {"wall_temperature", {800.0, 1800.0}},
          {"gas_temperature", {900.0, 2000.0}},
          {"wall_controls", 4},
          {"grid_controls", {6, 3}}}},
        {"dataset", {{"n_train", 600}, {"n_test", 200}, {"seed", 0}}},
        {"network", nn::spec_to_json(nn::reference_cnn_spec())},
        {"network_source", ""},
        {"train", {{"learning_rate", 1e-3}, {"epochs", 20000}, {"batch_size", 32}, {"l2", 0.0011}, {"seed", 0}}},
        {"target", "all"},
        {"tune",
         {{"kind", "cnn"},
          {"n_trials", 50},
          {"budget_epochs", 500},
          {"checkpoints", 4},
          {"startup_trials", 2},
          {"seed", 0},
          {"space", space_json}}},
        {"bench", {{"cases", 10}, {"repetitions", 3}}},
        {"validate", {{"view_factor_rays", 512}, {"monte_carlo_rays", 10000000}, {"seed", 0}}},
        {"threads", 1},
    };
}

void merge_config(json& base, const json& patch, const std::string& path) {
    if (!patch.is_object()) throw ConfigError("expected an object", path.empty() ? "<root>" : path);
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown setting", key);
        json& slot = base[it.key()];
        if (slot.is_object() && !replaced_wholesale(key)) {
            merge_config(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected KEY=VALUE, got '" + assignment + "'", "--set");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
        const std::size_t dot = key.find('.', start);
        parts.push_back(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    // Leaves of a wholesale-replaced object are patched in place.
    if (parts.size() == 2 && replaced_wholesale(parts[0])) {
        if (!config[parts[0]].is_object()) throw ConfigError("not an object", parts[0]);
        config[parts[0]][parts[1]] = value;
        return;
    }
    json patch = value;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge_config(config, patch);
}

json load_config(const fs::path& file, const std::vector<std::string>& overrides) {
    json config = default_config();
    if (!file.empty()) merge_config(config, parse_json_file(file));
    for (const auto& o : overrides) apply_override(config, o);
    return config;
}

std::string config_hash(const json& config) {
    json copy = config;
    copy.erase("threads");
    return sha256_hex(copy.dump());
}

RunSettings resolve(const json& c, const fs::path& base_dir) {
    RunSettings s;
    s.resolved = c;
    s.hash = config_hash(c);

    const double lx = get<double>(c, "mesh.lx");
    const double ly = get<double>(c, "mesh.ly");
    if (!(lx > 0.0)) throw ConfigError("must be positive", "mesh.lx");
    if (!(ly > 0.0)) throw ConfigError("must be positive", "mesh.ly");
    s.mesh = FurnaceMesh(positive(c, "mesh.nx"), positive(c, "mesh.ny"), lx, ly);
    s.n_rays = positive(c, "quadrature.n_rays");

    try {
        s.bands = std::make_shared<const BandGrid>(get<double>(c, "bands.nu_min"), get<double>(c, "bands.nu_max"),
                                                   get<double>(c, "bands.delta_nu"));
    } catch (const DomainError& e) {
        throw ConfigError(e.what(), "bands");
    }
    const auto table_src = get<std::string>(c, "absorption_table");
    if (table_src == "synthetic") {
        s.table = std::make_shared<const AbsorptionTable>(synthetic_absorption_table(*s.bands));
    } else {
        fs::path p(table_src);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        s.table = std::make_shared<const AbsorptionTable>(AbsorptionTable::load(p));
    }
    s.table->check_grid(*s.bands);

    s.solver.tolerance = get<double>(c, "solver.tolerance");
    if (!(s.solver.tolerance > 0.0)) throw ConfigError("must be positive", "solver.tolerance");
    s.solver.max_iters = positive(c, "solver.max_iters");

    GasComposition gas{get<double>(c, "gas.pressure"), get<double>(c, "gas.x_co2"), get<double>(c, "gas.x_h2o"),
                       get<double>(c, "gas.x_co")};
    try {
        GasState{1000.0, gas.pressure, gas.x_co2, gas.x_h2o, gas.x_co}.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what(), "gas");
    }
    s.distribution.emissivity = get_range(c, "sampling.emissivity");
    s.distribution.wall_temperature = get_range(c, "sampling.wall_temperature");
    s.distribution.gas_temperature = get_range(c, "sampling.gas_temperature");
    s.distribution.wall_controls = positive(c, "sampling.wall_controls");
    const auto grid = get<std::vector<std::size_t>>(c, "sampling.grid_controls");
    if (grid.size() != 2) throw ConfigError("expected [c_x, c_y]", "sampling.grid_controls");
    s.distribution.grid_controls_x = grid[0];
    s.distribution.grid_controls_y = grid[1];
    s.distribution.gas = gas;
    try {
        s.distribution.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what(), "sampling");
    }

    s.n_train = positive(c, "dataset.n_train");
    s.n_test = positive(c, "dataset.n_test");
    s.dataset_seed = get<std::uint64_t>(c, "dataset.seed");

    const auto source = get<std::string>(c, "network_source");
    if (!source.empty()) {
        fs::path p(source);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        s.network = best_from_ledger(p);
    } else {
        s.network = nn::spec_from_json(c.at("network"));
    }

    s.train.learning_rate = get<double>(c, "train.learning_rate");
    if (!(s.train.learning_rate > 0.0)) throw ConfigError("must be positive", "train.learning_rate");
    s.train.epochs = positive(c, "train.epochs");
    s.train.batch_size = positive(c, "train.batch_size");
    s.train.l2 = get<double>(c, "train.l2");
    if (!(s.train.l2 >= 0.0)) throw ConfigError("must be non-negative", "train.l2");
    s.train.shuffle_seed = get<std::uint64_t>(c, "train.seed");

    s.target = get<std::string>(c, "target");
    try {
        (void)target_range(s.mesh, s.target);
    } catch (const std::exception& e) {
        throw ConfigError(e.what(), "target");
    }

    s.tune.space = search_space_from_json(c.at("tune").at("space"), nn::parse_kind(get<std::string>(c, "tune.kind")));
    s.tune.n_trials = positive(c, "tune.n_trials");
    s.tune.budget_epochs = positive(c, "tune.budget_epochs");
    s.tune.checkpoints = positive(c, "tune.checkpoints");
    s.tune.startup_trials = get<std::size_t>(c, "tune.startup_trials");
    s.tune.seed = get<std::uint64_t>(c, "tune.seed");

    s.bench_cases = positive(c, "bench.cases");
    s.bench_repetitions = positive(c, "bench.repetitions");

    const auto threads = get<std::int64_t>(c, "threads");
    if (threads < 0) throw ConfigError("must be non-negative (0 = all hardware threads)", "threads");
    s.threads = threads == 0 ? default_threads() : static_cast<unsigned>(threads);

    s.physics.mesh = s.mesh;
    s.physics.n_rays = s.n_rays;
    s.physics.bands = s.bands;
    s.physics.table = s.table;
    s.physics.view_factor_rays = positive(c, "validate.view_factor_rays");
    s.physics.monte_carlo_rays = positive(c, "validate.monte_carlo_rays");
    s.physics.seed = get<std::uint64_t>(c, "validate.seed");
    s.physics.threads = s.threads;
    return s;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral DTRM furnace solver and neural surrogates"};
    app.require_subcommand(1);
    fs::path config_path, out_dir, case_path, data_dir, model_path;
    std::vector<std::string> sets;
    std::int64_t threads = -1;
    bool deterministic = false;
    std::optional<std::uint64_t> seed;

    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--set", sets, "Override a setting, KEY=VALUE with a dotted key")->take_all();
    app.add_option("--threads", threads, "Worker threads for the solver and dataset generation");
    app.add_flag("--deterministic", deterministic, "Single worker for bit-exact runs");
    app.add_option("--seed", seed, "Master seed for dataset, initialization, shuffling and tuning");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--case", case_path, "Case file (solve)");
    app.add_option("--data", data_dir, "Dataset directory");
    app.add_option("--model", model_path, "Model file");
    app.fallthrough();

    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve", "Solve one case and write wall irradiation"},
        {"gen-dataset", "Sample cases, solve them and store a dataset"},
        {"train", "Train a surrogate on a dataset"},
        {"tune", "Random search with median pruning"},
        {"eval", "Relative error of a model on the test rows"},
        {"bench", "Solver versus one-by-one inference timing"},
        {"validate", "Analytic physics checks"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        return error_exit(err, "usage", e.what(), json::object(), 2);
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        std::vector<std::string> overrides = sets;
        if (seed) {
            for (const char* key : {"dataset.seed", "train.seed", "network.seed", "tune.seed", "validate.seed"}) {
                overrides.push_back(std::string(key) + "=" + std::to_string(*seed));
            }
        }
        if (threads >= 0) overrides.push_back("threads=" + std::to_string(threads));
        if (deterministic) overrides.push_back("threads=1");
        const json config = load_config(config_path, overrides);
        const RunSettings s = resolve(config, config_path.empty() ? fs::path{} : config_path.parent_path());

        json summary;
        bool passed = true;
        if (command == "solve") {
            summary = cmd_solve(s, case_path, out_dir);
        } else if (command == "gen-dataset") {
            summary = cmd_gen_dataset(s, out_dir);
        } else if (command == "train") {
            summary = cmd_train(s, data_dir, out_dir);
        } else if (command == "tune") {
            summary = cmd_tune(s, data_dir, out_dir);
        } else if (command == "eval") {
            summary = cmd_eval(s, data_dir, model_path, out_dir);
        } else if (command == "bench") {
            summary = cmd_bench(s, data_dir, model_path, out_dir);
        } else {
            summary = cmd_validate(s, out_dir, passed);
        }
        summary["command"] = command;
        summary["config_hash"] = s.hash;
        out << summary.dump() << '\n';
        if (!passed) return error_exit(err, "validation", "physics checks failed", json::object(), 5);
        return 0;
    } catch (const ConfigError& e) {
        return error_exit(err, "config", e.what(), {{"field", e.field()}}, 2);
    } catch (const IoError& e) {
        return error_exit(err, "io", e.what(), json::object(), 3);
    } catch (const fs::filesystem_error& e) {
        return error_exit(err, "io", e.what(), json::object(), 3);
    } catch (const ConvergenceError& e) {
        return error_exit(err, "convergence", e.what(), {{"residual", e.residual()}, {"band", e.band()}}, 4);
    } catch (const GenerationError& e) {
        return error_exit(err, "generation", e.what(), {{"sample", e.sample_index}}, 4);
    } catch (const StudyError& e) {
        return error_exit(err, "study", e.what(), {{"trials", e.ledger().size()}}, 1);
    } catch (const std::exception& e) {
        return error_exit(err, "runtime", e.what(), json::object(), 1);
    }
}

}  // namespace rte::cli
