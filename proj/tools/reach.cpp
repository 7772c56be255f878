#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reachkit/harness.hpp"
#include "reachkit/serialize.hpp"

namespace {

using namespace reachkit;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts, const std::string& out_desc,
                bool out_required = true) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "override the config seed");
    auto* out = cmd->add_option("--out", opts.out, out_desc);
    if (out_required) out->required();
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
    ExperimentConfig cfg =
        opts.config_path.empty() ? ExperimentConfig{} : load_experiment_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"motor-babbling reaching toolkit"};
    app.require_subcommand(1);

    CommonOpts babble_opts;
    auto* cmd_babble = app.add_subcommand("babble", "generate a babbling dataset");
    add_common(cmd_babble, babble_opts, "dataset JSON to write");

    CommonOpts train_opts;
    std::string train_dataset;
    auto* cmd_train = app.add_subcommand("train", "train the motor-sensory codec");
    add_common(cmd_train, train_opts, "codec JSON to write");
    cmd_train->add_option("--dataset", train_dataset, "dataset JSON (babbled anew if omitted)")
        ->check(CLI::ExistingFile);

    CommonOpts map_opts;
    std::string map_dataset, map_codec;
    auto* cmd_map = app.add_subcommand("build-map", "quantize reduced trajectories into a map");
    add_common(cmd_map, map_opts, "map JSON to write");
    cmd_map->add_option("--dataset", map_dataset, "dataset JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_map->add_option("--codec", map_codec, "codec JSON")->required()->check(CLI::ExistingFile);

    CommonOpts bundle_opts;
    std::string bundle_dataset, bundle_codec, bundle_map;
    auto* cmd_bundle = app.add_subcommand("bundle", "form trajectory bundles on a map");
    add_common(cmd_bundle, bundle_opts, "bundled map JSON to write");
    cmd_bundle->add_option("--dataset", bundle_dataset, "dataset JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_bundle->add_option("--codec", bundle_codec, "codec JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_bundle->add_option("--map", bundle_map, "map JSON")->required()->check(CLI::ExistingFile);

    CommonOpts plan_opts;
    std::string plan_codec, plan_map, plan_trace;
    std::vector<double> plan_goal, plan_start;
    auto* cmd_plan = app.add_subcommand("plan", "plan a reach to a 3-D goal");
    add_common(cmd_plan, plan_opts, "plan JSON to write");
    cmd_plan->add_option("--codec", plan_codec, "codec JSON")->required()->check(CLI::ExistingFile);
    cmd_plan->add_option("--map", plan_map, "bundled map JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_plan->add_option("--goal", plan_goal, "goal point x y z")->required()->expected(3);
    cmd_plan->add_option("--start", plan_start, "start joint positions (default: zeros)");
    cmd_plan->add_option("--trace", plan_trace, "per-step trace CSV to write");

    CommonOpts sweep_opts;
    std::string sweep_kind;
    std::vector<double> sweep_values;
    auto* cmd_sweep = app.add_subcommand("sweep", "run a parameter sweep");
    add_common(cmd_sweep, sweep_opts, "output directory");
    cmd_sweep
        ->add_option("--kind", sweep_kind,
                     "train_size, dim, phi, resolution or bundle_variant")
        ->required();
    cmd_sweep->add_option("--values", sweep_values, "override the swept values");

    CommonOpts report_opts;
    std::string report_sweep_dir;
    auto* cmd_report = app.add_subcommand("report", "write reconstruction table and figures");
    add_common(cmd_report, report_opts, "output directory");
    cmd_report->add_option("--sweep-dir", report_sweep_dir, "directory holding sweep outputs")
        ->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_babble->parsed()) {
            ExperimentConfig cfg = resolve_config(babble_opts);
            Dataset ds = generate_dataset(cfg.protocol(), cfg.arm());
            save_dataset(ds, babble_opts.out);
            std::cout << "wrote " << babble_opts.out << ": " << ds.train.size()
                      << " training reaches, " << ds.test_goals.size() << " test goals\n";
        } else if (cmd_train->parsed()) {
            ExperimentConfig cfg = resolve_config(train_opts);
            Dataset ds = train_dataset.empty() ? generate_dataset(cfg.protocol(), cfg.arm())
                                               : load_dataset(train_dataset);
            TrainOptions opts = cfg.train;
            opts.rng_seed = Rng(cfg.seed).fork(2).next_u64();
            TrainReport report;
            Codec codec;
            codec.stats = fit_norm_stats(ds);
            codec.net = train_on_points(collect_unit_points(ds, codec.stats), cfg.bottleneck,
                                        opts, &report);
            save_codec(codec, train_opts.out);
            std::cout << "wrote " << train_opts.out << ": train rmse "
                      << format_double(report.train_rmse) << ", validation rmse "
                      << format_double(report.validation_rmse) << ", " << report.epochs_run
                      << " epochs\n";
        } else if (cmd_map->parsed()) {
            ExperimentConfig cfg = resolve_config(map_opts);
            Dataset ds = load_dataset(map_dataset);
            Codec codec = load_codec(map_codec);
            auto encoded = encode_dataset(codec, ds);
            NeuralMap map = build_map(encoded, compute_resolution(encoded), cfg.res_multiplier);
            save_map(map, map_opts.out);
            std::cout << "wrote " << map_opts.out << ": " << map.size() << " neurons\n";
        } else if (cmd_bundle->parsed()) {
            ExperimentConfig cfg = resolve_config(bundle_opts);
            Dataset ds = load_dataset(bundle_dataset);
            Codec codec = load_codec(bundle_codec);
            NeuralMap map = load_map(bundle_map);
            form_bundles(map, encode_dataset(codec, ds), cfg.bundle);
            save_map(map, bundle_opts.out);
            std::cout << "wrote " << bundle_opts.out << ": " << map.edge_count()
                      << " bundle connections\n";
        } else if (cmd_plan->parsed()) {
            ExperimentConfig cfg = resolve_config(plan_opts);
            ArmConfig arm = cfg.arm();
            Codec codec = load_codec(plan_codec);
            NeuralMap map = load_map(plan_map);
            JointState start = JointState::zeros(arm.n_joints);
            if (!plan_start.empty()) {
                if (static_cast<int>(plan_start.size()) != arm.n_joints)
                    throw ConfigError("--start needs one value per joint");
                start.positions =
                    Eigen::Map<const Eigen::VectorXd>(plan_start.data(), arm.n_joints);
            }
            Eigen::Vector3d goal(plan_goal[0], plan_goal[1], plan_goal[2]);
            PlannerConfig pcfg = cfg.planner;
            pcfg.trajectory_timestep = cfg.timestep;
            pcfg.tie_seed = Rng(cfg.seed).fork(3).next_u64();
            std::ofstream trace;
            std::ostream* trace_ptr = nullptr;
            if (!plan_trace.empty()) {
                trace.open(plan_trace);
                trace << "step,winner,chi_max,beta_goal\n";
                trace_ptr = &trace;
            }
            PlanResult result = plan(map, start, goal, pcfg, codec, arm, trace_ptr);
            save_plan(result, plan_opts.out);
            std::cout << "wrote " << plan_opts.out << ": "
                      << (result.success ? "reached" : "failed") << " in " << result.steps_used
                      << " steps, path length " << result.neuron_path.size() << "\n";
        } else if (cmd_sweep->parsed()) {
            ExperimentConfig cfg = resolve_config(sweep_opts);
            SweepKind kind = sweep_kind_from_string(sweep_kind);
            std::vector<double> values =
                sweep_values.empty() ? default_sweep_values(kind) : sweep_values;
            SweepResult result = run_sweep(cfg, kind, values, sweep_opts.out);
            std::cout << "wrote " << result.csv_path << " (" << result.cells.size()
                      << " parameter values)\n";
            for (const SweepCell& cell : result.cells)
                std::cout << "  " << to_string(kind) << "=" << format_double(cell.param_value)
                          << ": success " << format_double(cell.success_rate) << ", median err "
                          << format_double(cell.summary.ee_error.median) << "\n";
        } else if (cmd_report->parsed()) {
            ExperimentConfig cfg = resolve_config(report_opts);
            std::optional<std::filesystem::path> sweep_dir;
            if (!report_sweep_dir.empty()) sweep_dir = report_sweep_dir;
            write_report(cfg, report_opts.out, sweep_dir);
            std::cout << "wrote " << (std::filesystem::path(report_opts.out) / "report.md").string()
                      << "\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
