#include "reachkit/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "reachkit/serialize.hpp"
#include "reachkit/svg.hpp"

namespace reachkit {

using nlohmann::json;

namespace {

std::uint64_t stage_seed(std::uint64_t master, std::uint64_t stage) {
    return Rng(master).fork(stage).next_u64();
}

json arc_to_json(const ArcSpec& arc) {
    return json{{"center", {arc.center.x(), arc.center.y(), arc.center.z()}},
                {"radius", arc.radius},
                {"normal", {arc.normal.x(), arc.normal.y(), arc.normal.z()}},
                {"theta_lo", arc.theta_lo},
                {"theta_hi", arc.theta_hi}};
}

Eigen::Vector3d vec3_from_json(const json& a) {
    if (!a.is_array() || a.size() != 3)
        throw ConfigError("config: expected a 3-element array");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

ArcSpec arc_from_json(const json& j, const std::string& where) {
    static const std::set<std::string> allowed = {"center", "radius", "normal", "theta_lo",
                                                  "theta_hi"};
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + where + "." + key + "'");
    ArcSpec arc;
    arc.center = vec3_from_json(j.at("center"));
    arc.radius = j.at("radius").get<double>();
    arc.normal = vec3_from_json(j.at("normal"));
    arc.theta_lo = j.at("theta_lo").get<double>();
    arc.theta_hi = j.at("theta_hi").get<double>();
    return arc;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + where + key + "'");
}

} // namespace

ExperimentConfig::ExperimentConfig() {
    // Spreading needs time to reach across long bundles before the walk
    // starts; the op-level default stays 0.
    planner.warmup_steps = 250;
}

ArmConfig ExperimentConfig::arm() const {
    if (arm_preset == "humanoid5") return ArmConfig::humanoid5();
    if (arm_preset == "planar2") return ArmConfig::planar2();
    throw ConfigError("config: unknown arm preset '" + arm_preset + "'");
}

ArcSpec ExperimentConfig::resolved_task_arc() const {
    if (task_arc) return *task_arc;
    ArcSpec arc;
    arc.normal = Eigen::Vector3d::UnitZ();
    if (arm_preset == "planar2") {
        arc.center = {1.0, 0.0, 0.0};
        arc.radius = 0.6;
        arc.theta_lo = -std::numbers::pi / 2;
        arc.theta_hi = std::numbers::pi / 2;
    } else {
        arc.center = {0.45, 0.0, 0.0};
        arc.radius = 0.35;
        arc.theta_lo = -std::numbers::pi / 3;
        arc.theta_hi = std::numbers::pi / 3;
    }
    return arc;
}

ArcSpec ExperimentConfig::resolved_start_arc() const {
    if (start_arc) return *start_arc;
    ArcSpec arc;
    arc.normal = Eigen::Vector3d::UnitZ();
    if (arm_preset == "planar2") {
        arc.center = {0.8, 0.0, 0.0};
        arc.radius = 0.5;
    } else {
        arc.center = {0.40, 0.0, 0.0};
        arc.radius = 0.30;
    }
    arc.theta_lo = -std::numbers::pi / 2;
    arc.theta_hi = std::numbers::pi / 2;
    return arc;
}

BabbleProtocol ExperimentConfig::protocol() const {
    ArmConfig a = arm();
    BabbleProtocol p;
    if (n_starts == 1) {
        p.starts = {JointState::zeros(a.n_joints)};
    } else {
        p.starts = poses_on_arc(resolved_start_arc(), n_starts, a, JointState::zeros(a.n_joints));
    }
    p.arc = resolved_task_arc();
    p.n_train_per_start = n_train;
    p.n_test_per_start = n_test;
    p.steps_per_trajectory = steps_per_trajectory;
    p.timestep = timestep;
    p.rng_seed = stage_seed(seed, 1);
    return p;
}

void ExperimentConfig::validate() const {
    arm().validate();
    if (n_starts < 1) throw ConfigError("config: n_starts must be >= 1");
    if (n_train < 1) throw ConfigError("config: n_train must be >= 1");
    if (n_test < 0) throw ConfigError("config: n_test must be >= 0");
    if (steps_per_trajectory < 2) throw ConfigError("config: steps_per_trajectory must be >= 2");
    if (!(timestep > 0.0)) throw ConfigError("config: timestep must be positive");
    if (bottleneck < 1) throw ConfigError("config: bottleneck must be >= 1");
    if (train.hidden < 1) throw ConfigError("config: train.hidden must be >= 1");
    if (train.max_epochs < 1) throw ConfigError("config: train.max_epochs must be >= 1");
    if (!(train.learning_rate > 0.0))
        throw ConfigError("config: train.learning_rate must be positive");
    if (train.validation_fraction < 0.0 || train.validation_fraction > 0.5)
        throw ConfigError("config: train.validation_fraction must be in [0, 0.5]");
    if (train.patience < 1) throw ConfigError("config: train.patience must be >= 1");
    if (!(res_multiplier > 0.0)) throw ConfigError("config: res_multiplier must be positive");
    resolved_task_arc().validate();
    if (n_starts > 1) resolved_start_arc().validate();
    bundle.validate();
    planner.validate();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    static const std::set<std::string> top = {
        "arm",        "n_starts",  "n_train", "n_test", "steps_per_trajectory",
        "timestep",   "task_arc",  "start_arc", "bottleneck", "train",
        "res_multiplier", "bundle", "planner", "seed"};
    reject_unknown(j, top, "");

    ExperimentConfig cfg;
    try {
        cfg.arm_preset = j.value("arm", cfg.arm_preset);
        cfg.n_starts = j.value("n_starts", cfg.n_starts);
        cfg.n_train = j.value("n_train", cfg.n_train);
        cfg.n_test = j.value("n_test", cfg.n_test);
        cfg.steps_per_trajectory = j.value("steps_per_trajectory", cfg.steps_per_trajectory);
        cfg.timestep = j.value("timestep", cfg.timestep);
        if (j.contains("task_arc")) cfg.task_arc = arc_from_json(j["task_arc"], "task_arc");
        if (j.contains("start_arc")) cfg.start_arc = arc_from_json(j["start_arc"], "start_arc");
        cfg.bottleneck = j.value("bottleneck", cfg.bottleneck);
        if (j.contains("train")) {
            const json& t = j["train"];
            reject_unknown(t,
                           {"hidden", "max_epochs", "learning_rate", "validation_fraction",
                            "patience", "min_delta", "min_learning_rate"},
                           "train.");
            cfg.train.hidden = t.value("hidden", cfg.train.hidden);
            cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.validation_fraction =
                t.value("validation_fraction", cfg.train.validation_fraction);
            cfg.train.patience = t.value("patience", cfg.train.patience);
            cfg.train.min_delta = t.value("min_delta", cfg.train.min_delta);
            cfg.train.min_learning_rate =
                t.value("min_learning_rate", cfg.train.min_learning_rate);
        }
        cfg.res_multiplier = j.value("res_multiplier", cfg.res_multiplier);
        if (j.contains("bundle")) {
            const json& b = j["bundle"];
            reject_unknown(b, {"phi", "eta_f", "tau_f", "variant"}, "bundle.");
            cfg.bundle.phi = b.value("phi", cfg.bundle.phi);
            cfg.bundle.eta_f = b.value("eta_f", cfg.bundle.eta_f);
            cfg.bundle.tau_f = b.value("tau_f", cfg.bundle.tau_f);
            if (b.contains("variant"))
                cfg.bundle.variant = bundle_variant_from_string(b["variant"].get<std::string>());
        }
        if (j.contains("planner")) {
            const json& p = j["planner"];
            reject_unknown(p,
                           {"eta_b", "tau_b", "lambda", "max_step", "warmup_steps",
                            "stochastic_ties"},
                           "planner.");
            cfg.planner.eta_b = p.value("eta_b", cfg.planner.eta_b);
            cfg.planner.tau_b = p.value("tau_b", cfg.planner.tau_b);
            cfg.planner.lambda = p.value("lambda", cfg.planner.lambda);
            cfg.planner.max_step = p.value("max_step", cfg.planner.max_step);
            cfg.planner.warmup_steps = p.value("warmup_steps", cfg.planner.warmup_steps);
            cfg.planner.stochastic_ties =
                p.value("stochastic_ties", cfg.planner.stochastic_ties);
        }
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    json j{{"arm", cfg.arm_preset},
           {"n_starts", cfg.n_starts},
           {"n_train", cfg.n_train},
           {"n_test", cfg.n_test},
           {"steps_per_trajectory", cfg.steps_per_trajectory},
           {"timestep", cfg.timestep},
           {"bottleneck", cfg.bottleneck},
           {"train",
            {{"hidden", cfg.train.hidden},
             {"max_epochs", cfg.train.max_epochs},
             {"learning_rate", cfg.train.learning_rate},
             {"validation_fraction", cfg.train.validation_fraction},
             {"patience", cfg.train.patience},
             {"min_delta", cfg.train.min_delta},
             {"min_learning_rate", cfg.train.min_learning_rate}}},
           {"res_multiplier", cfg.res_multiplier},
           {"bundle",
            {{"phi", cfg.bundle.phi},
             {"eta_f", cfg.bundle.eta_f},
             {"tau_f", cfg.bundle.tau_f},
             {"variant", to_string(cfg.bundle.variant)}}},
           {"planner",
            {{"eta_b", cfg.planner.eta_b},
             {"tau_b", cfg.planner.tau_b},
             {"lambda", cfg.planner.lambda},
             {"max_step", cfg.planner.max_step},
             {"warmup_steps", cfg.planner.warmup_steps},
             {"stochastic_ties", cfg.planner.stochastic_ties}}},
           {"seed", cfg.seed}};
    if (cfg.task_arc) j["task_arc"] = arc_to_json(*cfg.task_arc);
    if (cfg.start_arc) j["start_arc"] = arc_to_json(*cfg.start_arc);
    std::ofstream out(path);
    if (!out) throw SerializationError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

struct StageCache {
    struct CodecEntry {
        Codec codec;
        TrainReport report;
        std::vector<std::vector<Eigen::VectorXd>> encoded;
    };
    std::string fingerprint;
    std::map<int, Dataset> datasets;                  // by n_train
    std::map<std::pair<int, int>, CodecEntry> codecs; // by (n_train, bottleneck)
};

std::shared_ptr<StageCache> make_stage_cache() { return std::make_shared<StageCache>(); }

namespace {

// Everything the cached stages depend on, minus the swept knobs.
std::string cache_fingerprint(const ExperimentConfig& cfg) {
    json j{{"arm", cfg.arm_preset},
           {"n_starts", cfg.n_starts},
           {"n_test", cfg.n_test},
           {"steps", cfg.steps_per_trajectory},
           {"timestep", cfg.timestep},
           {"task_arc", arc_to_json(cfg.resolved_task_arc())},
           {"hidden", cfg.train.hidden},
           {"max_epochs", cfg.train.max_epochs},
           {"learning_rate", cfg.train.learning_rate},
           {"validation_fraction", cfg.train.validation_fraction},
           {"patience", cfg.train.patience},
           {"min_delta", cfg.train.min_delta},
           {"seed", cfg.seed}};
    if (cfg.n_starts > 1) j["start_arc"] = arc_to_json(cfg.resolved_start_arc());
    return j.dump();
}

StageCache& resolve_cache(StageCache& local, StageCache* shared, const ExperimentConfig& cfg) {
    StageCache& c = shared ? *shared : local;
    std::string fp = cache_fingerprint(cfg);
    if (c.fingerprint != fp) {
        c.datasets.clear();
        c.codecs.clear();
        c.fingerprint = fp;
    }
    return c;
}

const Dataset& get_dataset(const ExperimentConfig& cfg, StageCache& c) {
    auto it = c.datasets.find(cfg.n_train);
    if (it == c.datasets.end())
        it = c.datasets.emplace(cfg.n_train, generate_dataset(cfg.protocol(), cfg.arm())).first;
    return it->second;
}

const StageCache::CodecEntry& get_codec(const ExperimentConfig& cfg, StageCache& c) {
    auto key = std::make_pair(cfg.n_train, cfg.bottleneck);
    auto it = c.codecs.find(key);
    if (it == c.codecs.end()) {
        const Dataset& ds = get_dataset(cfg, c);
        StageCache::CodecEntry entry;
        TrainOptions opts = cfg.train;
        opts.rng_seed = stage_seed(cfg.seed, 2);
        entry.codec = train_codec(ds, cfg.bottleneck, opts, &entry.report);
        entry.encoded = encode_dataset(entry.codec, ds);
        it = c.codecs.emplace(key, std::move(entry)).first;
    }
    return it->second;
}

GoalOutcome evaluate_goal(const NeuralMap& map, const TestGoal& tg, const PlannerConfig& pcfg,
                          const Codec& codec, const ArmConfig& arm) {
    GoalOutcome o;
    o.goal = tg.goal;
    auto t0 = std::chrono::steady_clock::now();
    bool planned = false;
    try {
        PlanResult pr = plan(map, tg.start, tg.goal, pcfg, codec, arm);
        o.success = pr.success;
        o.steps_used = pr.steps_used;
        o.metrics = evaluate_reach(pr.joint_trajectory, tg.goal, arm);
        planned = true;
    } catch (const PlanningError&) {
    } catch (const ReachabilityError&) {
    } catch (const ConvergenceError&) {
    }
    if (!planned) {
        // The arm never moved; score the reach against the start pose.
        o.metrics.ee_error = end_effector_error(tg.goal, tg.start, arm);
        o.metrics.goal_y = tg.goal.y();
        o.metrics.degenerate = true;
    }
    o.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    return o;
}

void write_csv_header(std::ostream& out) {
    out << "sweep_kind,param_value,trial,goal_x,goal_y,goal_z,success,norm_jerk,ee_error,"
           "steps_used,wall_ms\n";
}

void append_csv_rows(std::ostream& out, const std::string& kind, double param_value,
                     const std::vector<GoalOutcome>& outcomes) {
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const GoalOutcome& o = outcomes[i];
        out << kind << ',' << format_double(param_value) << ',' << i << ','
            << format_double(o.goal.x()) << ',' << format_double(o.goal.y()) << ','
            << format_double(o.goal.z()) << ',' << (o.success ? 1 : 0) << ','
            << format_double(o.metrics.norm_jerk) << ',' << format_double(o.metrics.ee_error)
            << ',' << o.steps_used << ',' << format_double(o.wall_ms) << '\n';
    }
}

json stat_to_json(const StatLine& s) {
    return json{{"mean", s.mean}, {"stddev", s.stddev}, {"median", s.median}, {"q1", s.q1},
                {"q3", s.q3}};
}

json summary_to_json(const MetricSummary& s) {
    json bins = json::array();
    for (const GoalYBin& b : s.by_goal_y)
        bins.push_back(json{{"y_lo", b.y_lo},
                            {"y_hi", b.y_hi},
                            {"count", b.count},
                            {"mean_jerk", b.mean_jerk},
                            {"mean_error", b.mean_error},
                            {"stddev_jerk", b.stddev_jerk},
                            {"stddev_error", b.stddev_error}});
    return json{{"norm_jerk", stat_to_json(s.norm_jerk)},
                {"ee_error", stat_to_json(s.ee_error)},
                {"by_goal_y", std::move(bins)}};
}

void write_manifest(const std::filesystem::path& dir) {
    json files;
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) files[p.filename().string()] = file_hash(p);
    std::ofstream out(dir / "manifest.json");
    out << json{{"format", "reachkit.manifest"}, {"version", kFormatVersion},
                {"files", std::move(files)}}
               .dump(2)
        << '\n';
}

} // namespace

PipelineResult run_pipeline(const ExperimentConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir,
                            StageCache* cache) {
    cfg.validate();
    StageCache local;
    StageCache& stages = resolve_cache(local, cache, cfg);

    ArmConfig arm = cfg.arm();
    PipelineResult result;
    bool have_dataset = false;
    bool have_codec = false;
    bool have_map = false;
    std::string stage = "babble";
    try {
        result.dataset = get_dataset(cfg, stages);
        have_dataset = true;

        stage = "train";
        const StageCache::CodecEntry& entry = get_codec(cfg, stages);
        result.codec = entry.codec;
        result.train_report = entry.report;
        have_codec = true;

        stage = "build-map";
        std::vector<double> resolution = compute_resolution(entry.encoded);
        result.map = build_map(entry.encoded, resolution, cfg.res_multiplier);
        have_map = true;

        stage = "bundle";
        form_bundles(result.map, entry.encoded, cfg.bundle);

        stage = "plan";
        PlannerConfig pcfg = cfg.planner;
        pcfg.trajectory_timestep = cfg.timestep;
        pcfg.tie_seed = stage_seed(cfg.seed, 3);

        std::vector<MetricReport> successes;
        for (const TestGoal& tg : result.dataset.test_goals) {
            GoalOutcome o = evaluate_goal(result.map, tg, pcfg, result.codec, arm);
            if (o.success) successes.push_back(o.metrics);
            result.outcomes.push_back(std::move(o));
        }
        result.success_rate = result.outcomes.empty()
                                  ? 0.0
                                  : static_cast<double>(successes.size()) /
                                        static_cast<double>(result.outcomes.size());
        result.summary = summarize(successes);
    } catch (const std::exception& e) {
        // Persist whatever finished so a failed run can still be inspected.
        if (out_dir) {
            std::filesystem::create_directories(*out_dir);
            save_experiment_config(cfg, *out_dir / "config.json");
            if (have_dataset) save_dataset(result.dataset, *out_dir / "dataset.json");
            if (have_codec) save_codec(result.codec, *out_dir / "codec.json");
            if (have_map) save_map(result.map, *out_dir / "map.json");
            std::ofstream err(*out_dir / "error.json");
            err << json{{"stage", stage}, {"error", e.what()}}.dump(2) << '\n';
            err.close();
            write_manifest(*out_dir);
        }
        throw PipelineError(stage, e.what());
    }

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        save_experiment_config(cfg, *out_dir / "config.json");
        save_dataset(result.dataset, *out_dir / "dataset.json");
        save_codec(result.codec, *out_dir / "codec.json");
        save_map(result.map, *out_dir / "map.json");
        std::ofstream csv(*out_dir / "results.csv");
        write_csv_header(csv);
        append_csv_rows(csv, "single", 0.0, result.outcomes);
        csv.close();
        json summary{{"success_rate", result.success_rate},
                     {"n_goals", result.outcomes.size()},
                     {"codec",
                      {{"train_rmse", result.train_report.train_rmse},
                       {"validation_rmse", result.train_report.validation_rmse},
                       {"epochs_run", result.train_report.epochs_run}}},
                     {"map", {{"neurons", result.map.size()}, {"edges", result.map.edge_count()}}},
                     {"metrics", summary_to_json(result.summary)}};
        std::ofstream sj(*out_dir / "summary.json");
        sj << summary.dump(2) << '\n';
        sj.close();
        write_manifest(*out_dir);
    }
    return result;
}

std::string to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::TrainSize: return "train_size";
        case SweepKind::Dim: return "dim";
        case SweepKind::Phi: return "phi";
        case SweepKind::Resolution: return "resolution";
        case SweepKind::BundleVariant: return "bundle_variant";
    }
    throw std::logic_error("unknown sweep kind");
}

SweepKind sweep_kind_from_string(const std::string& name) {
    if (name == "train_size") return SweepKind::TrainSize;
    if (name == "dim") return SweepKind::Dim;
    if (name == "phi") return SweepKind::Phi;
    if (name == "resolution") return SweepKind::Resolution;
    if (name == "bundle_variant") return SweepKind::BundleVariant;
    throw ConfigError("unknown sweep kind '" + name +
                      "' (expected train_size, dim, phi, resolution or bundle_variant)");
}

std::vector<double> default_sweep_values(SweepKind kind) {
    switch (kind) {
        case SweepKind::TrainSize: return {100, 200, 300, 500, 700};
        case SweepKind::Dim: return {3, 4, 5};
        case SweepKind::Phi: return {1, 3, 6, 10};
        case SweepKind::Resolution: return {1, 2, 3};
        case SweepKind::BundleVariant: return {0, 1, 2}; // lnr, fix, par
    }
    throw std::logic_error("unknown sweep kind");
}

namespace {

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepKind kind, double value) {
    ExperimentConfig cfg = base;
    switch (kind) {
        case SweepKind::TrainSize: cfg.n_train = static_cast<int>(value); break;
        case SweepKind::Dim: cfg.bottleneck = static_cast<int>(value); break;
        case SweepKind::Phi: cfg.bundle.phi = static_cast<int>(value); break;
        case SweepKind::Resolution: cfg.res_multiplier = value; break;
        case SweepKind::BundleVariant: {
            int v = static_cast<int>(value);
            if (v < 0 || v > 2)
                throw ConfigError("bundle_variant sweep values must be 0 (lnr), 1 (fix) or "
                                  "2 (par)");
            cfg.bundle.variant = static_cast<BundleVariant>(v);
            break;
        }
    }
    return cfg;
}

std::string sweep_value_label(SweepKind kind, double value) {
    if (kind == SweepKind::BundleVariant)
        return to_string(static_cast<BundleVariant>(static_cast<int>(value)));
    return format_double(value);
}

} // namespace

SweepResult run_sweep(const ExperimentConfig& base, SweepKind kind,
                      const std::vector<double>& values, const std::filesystem::path& out_dir,
                      StageCache* cache) {
    if (values.empty()) throw ConfigError("run_sweep: no parameter values");
    std::filesystem::create_directories(out_dir);

    StageCache local;
    StageCache& stages = resolve_cache(local, cache, base);

    SweepResult result;
    result.kind = kind;
    std::filesystem::path csv_path = out_dir / "results.csv";
    std::ofstream csv(csv_path);
    write_csv_header(csv);

    std::vector<std::string> labels;
    std::vector<std::vector<double>> jerk_groups, err_groups;
    json cells = json::array();
    std::vector<svg::Series> y_series;

    for (double value : values) {
        ExperimentConfig cfg = apply_sweep_value(base, kind, value);
        PipelineResult pr = run_pipeline(cfg, {}, &stages);
        append_csv_rows(csv, to_string(kind), value, pr.outcomes);

        SweepCell cell;
        cell.param_value = value;
        cell.success_rate = pr.success_rate;
        cell.summary = pr.summary;
        cell.codec_train_rmse = pr.train_report.train_rmse;
        result.cells.push_back(cell);

        labels.push_back(sweep_value_label(kind, value));
        std::vector<double> jerks, errs;
        for (const GoalOutcome& o : pr.outcomes)
            if (o.success) {
                jerks.push_back(o.metrics.norm_jerk);
                errs.push_back(o.metrics.ee_error);
            }
        jerk_groups.push_back(std::move(jerks));
        err_groups.push_back(std::move(errs));

        svg::Series series;
        series.label = sweep_value_label(kind, value);
        for (const GoalYBin& b : pr.summary.by_goal_y)
            if (b.count > 0) {
                series.x.push_back(0.5 * (b.y_lo + b.y_hi));
                series.mean.push_back(b.mean_error);
                series.stddev.push_back(b.stddev_error);
            }
        y_series.push_back(std::move(series));

        cells.push_back(json{{"param_value", value},
                             {"label", sweep_value_label(kind, value)},
                             {"success_rate", cell.success_rate},
                             {"codec_train_rmse", cell.codec_train_rmse},
                             {"metrics", summary_to_json(cell.summary)}});
    }
    csv.close();
    result.csv_path = csv_path.string();

    std::ofstream sj(out_dir / "summary.json");
    sj << json{{"format", "reachkit.sweep_summary"},
               {"version", kFormatVersion},
               {"kind", to_string(kind)},
               {"cells", std::move(cells)}}
              .dump(2)
       << '\n';
    sj.close();
    save_experiment_config(base, out_dir / "config.json");

    std::string kind_name = to_string(kind);
    svg::write_box_plot(out_dir / "norm_jerk.svg", "normalized jerk by " + kind_name,
                        "norm jerk", labels, jerk_groups);
    svg::write_box_plot(out_dir / "ee_error.svg", "end-effector error by " + kind_name,
                        "error [m]", labels, err_groups);
    svg::write_line_plot(out_dir / "error_by_goal_y.svg", "error vs goal y (" + kind_name + ")",
                         "goal y [m]", "error [m]", y_series);
    write_manifest(out_dir);
    return result;
}

std::vector<ReconstructionRow> reconstruction_table(const ExperimentConfig& base,
                                                    const std::vector<int>& sizes,
                                                    StageCache* cache) {
    if (sizes.empty()) throw ConfigError("reconstruction_table: no sizes");
    StageCache local;
    StageCache& stages = resolve_cache(local, cache, base);
    ArmConfig arm = base.arm();

    // Held-out reaches: trajectories to the test goals of the largest set.
    ExperimentConfig big = base;
    big.n_train = *std::max_element(sizes.begin(), sizes.end());
    const Dataset& ds = get_dataset(big, stages);
    std::vector<Eigen::VectorXd> test_raw;
    for (const TestGoal& tg : ds.test_goals) {
        Trajectory t = generate_trajectory(tg.start, tg.goal, base.steps_per_trajectory,
                                           base.timestep, arm);
        for (const JointState& s : t.samples) test_raw.push_back(state_features(s));
    }

    std::vector<ReconstructionRow> table;
    for (int size : sizes) {
        ExperimentConfig cfg = base;
        cfg.n_train = size;
        const StageCache::CodecEntry& entry = get_codec(cfg, stages);

        std::vector<Eigen::VectorXd> test_unit;
        test_unit.reserve(test_raw.size());
        for (const Eigen::VectorXd& raw : test_raw)
            test_unit.push_back(normalize(raw, entry.codec.stats));

        ReconstructionRow row;
        row.train_size = size;
        row.test_rmse = reconstruction_rmse(entry.codec.net, test_unit);

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(test_unit.front().size());
        for (const Eigen::VectorXd& x : test_unit) mean += x;
        mean /= static_cast<double>(test_unit.size());
        double sse = 0.0, sst = 0.0;
        for (const Eigen::VectorXd& x : test_unit) {
            sse += (entry.codec.net.forward(x) - x).squaredNorm();
            sst += (x - mean).squaredNorm();
        }
        row.explained_variance = sst > 0.0 ? 1.0 - sse / sst : 0.0;
        table.push_back(row);
    }
    return table;
}

void write_report(const ExperimentConfig& base, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& sweep_dir, StageCache* cache,
                  const std::vector<int>& sizes) {
    std::filesystem::create_directories(out_dir);
    std::vector<ReconstructionRow> table = reconstruction_table(base, sizes, cache);

    std::ofstream md(out_dir / "report.md");
    md << "# Reaching toolkit report\n\n";
    md << "## Reconstruction quality vs training-set size\n\n";
    md << "Autoencoder with " << base.train.hidden << " hidden units, |A'| = " << base.bottleneck
       << ", evaluated on trajectories to the held-out test goals.\n\n";
    md << "| training reaches | test RMSE | explained variance |\n";
    md << "|---:|---:|---:|\n";
    for (const ReconstructionRow& r : table)
        md << "| " << r.train_size << " | " << format_double(r.test_rmse) << " | "
           << format_double(r.explained_variance) << " |\n";
    md << '\n';

    svg::Series rmse_series{"test RMSE", {}, {}, {}};
    svg::Series ev_series{"explained variance", {}, {}, {}};
    for (const ReconstructionRow& r : table) {
        rmse_series.x.push_back(r.train_size);
        rmse_series.mean.push_back(r.test_rmse);
        ev_series.x.push_back(r.train_size);
        ev_series.mean.push_back(r.explained_variance);
    }
    svg::write_line_plot(out_dir / "reconstruction.svg", "codec quality vs training size",
                         "training reaches", "value", {rmse_series, ev_series});
    md << "![reconstruction](reconstruction.svg)\n\n";

    if (sweep_dir) {
        for (const char* kind : {"train_size", "dim", "phi", "resolution", "bundle_variant"}) {
            std::filesystem::path summary_path = *sweep_dir / kind / "summary.json";
            if (!std::filesystem::exists(summary_path)) continue;
            std::ifstream in(summary_path);
            json j;
            try {
                in >> j;
            } catch (const json::exception&) {
                continue;
            }
            md << "## Sweep: " << kind << "\n\n";
            md << "| value | success rate | median jerk | median error |\n";
            md << "|---:|---:|---:|---:|\n";
            for (const json& cell : j.value("cells", json::array()))
                md << "| " << cell.value("label", "") << " | "
                   << format_double(cell.value("success_rate", 0.0)) << " | "
                   << format_double(
                          cell.at("metrics").at("norm_jerk").value("median", 0.0))
                   << " | "
                   << format_double(cell.at("metrics").at("ee_error").value("median", 0.0))
                   << " |\n";
            md << '\n';
        }
    }
    md.close();
    write_manifest(out_dir);
}

} // namespace reachkit
