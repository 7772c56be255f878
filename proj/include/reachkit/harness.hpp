#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reachkit/arm_model.hpp"
#include "reachkit/babble.hpp"
#include "reachkit/bundles.hpp"
#include "reachkit/codec.hpp"
#include "reachkit/metrics.hpp"
#include "reachkit/neural_map.hpp"
#include "reachkit/planner.hpp"

namespace reachkit {

/// Wraps any stage failure inside run_pipeline; partial artifacts are
/// persisted (with an error.json) before this is thrown.
struct PipelineError : std::runtime_error {
    PipelineError(const std::string& stage, const std::string& msg)
        : std::runtime_error("pipeline stage '" + stage + "': " + msg), stage(stage) {}
    std::string stage;
};

/// Everything one experiment needs; JSON-loadable, unknown keys rejected.
struct ExperimentConfig {
    std::string arm_preset = "humanoid5"; // or "planar2"
    int n_starts = 1;
    int n_train = 700;
    int n_test = 300;
    int steps_per_trajectory = 50;
    double timestep = 0.1;
    std::optional<ArcSpec> task_arc;  // preset-specific default when absent
    std::optional<ArcSpec> start_arc; // hand positions of the extra starts
    int bottleneck = 5;
    TrainOptions train;
    double res_multiplier = 1.0;
    BundleConfig bundle;
    PlannerConfig planner;
    std::uint64_t seed = 1;

    ExperimentConfig();

    ArmConfig arm() const;
    ArcSpec resolved_task_arc() const;
    ArcSpec resolved_start_arc() const;
    BabbleProtocol protocol() const;
    void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

struct GoalOutcome {
    Eigen::Vector3d goal;
    bool success = false;
    MetricReport metrics;
    int steps_used = 0;
    double wall_ms = 0.0;
};

struct PipelineResult {
    Dataset dataset;
    Codec codec;
    TrainReport train_report;
    NeuralMap map;
    std::vector<GoalOutcome> outcomes;
    double success_rate = 0.0;
    MetricSummary summary; // successful reaches only
};

// Memoizes the slow stages (dataset, codec) across pipeline runs that share
// a base configuration; sweeps and the acceptance suite pass one around.
struct StageCache;
std::shared_ptr<StageCache> make_stage_cache();

// Babble -> codec -> map -> bundles -> evaluate every test goal. When
// out_dir is set, artifacts plus a hash manifest land there.
PipelineResult run_pipeline(const ExperimentConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir = {},
                            StageCache* cache = nullptr);

enum class SweepKind { TrainSize, Dim, Phi, Resolution, BundleVariant };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& name);
std::vector<double> default_sweep_values(SweepKind kind);

struct SweepCell {
    double param_value = 0.0;
    double success_rate = 0.0;
    MetricSummary summary;
    double codec_train_rmse = 0.0;
};

struct SweepResult {
    SweepKind kind = SweepKind::TrainSize;
    std::vector<SweepCell> cells;
    std::string csv_path;
};

// One pipeline per parameter value; stages that the parameter cannot affect
// are shared across values. Rows for every test goal go to results.csv.
SweepResult run_sweep(const ExperimentConfig& base, SweepKind kind,
                      const std::vector<double>& values, const std::filesystem::path& out_dir,
                      StageCache* cache = nullptr);

struct ReconstructionRow {
    int train_size = 0;
    double test_rmse = 0.0;
    double explained_variance = 0.0;
};

// Codec quality against held-out reaches, per training-set size.
std::vector<ReconstructionRow> reconstruction_table(const ExperimentConfig& base,
                                                    const std::vector<int>& sizes,
                                                    StageCache* cache = nullptr);

// Renders the reconstruction table (and sweep summaries when present in
// sweep_dir) into report.md plus SVG figures.
void write_report(const ExperimentConfig& base, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& sweep_dir = {},
                  StageCache* cache = nullptr,
                  const std::vector<int>& sizes = {100, 200, 300, 500, 700});

} // namespace reachkit
