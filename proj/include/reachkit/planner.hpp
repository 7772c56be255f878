#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "reachkit/arm_model.hpp"
#include "reachkit/babble.hpp"
#include "reachkit/codec.hpp"
#include "reachkit/neural_map.hpp"

namespace reachkit {

struct PlannerConfig {
    double eta_b = 0.1;
    double tau_b = 1e3;
    double lambda = 1e3; // beta weight in the competition function
    int max_step = 80;
    int warmup_steps = 0; // spread-only steps before the walk starts
    bool stochastic_ties = false;
    std::uint64_t tie_seed = 0;
    double trajectory_timestep = 0.1; // stamped onto decoded trajectories

    void validate() const;
};

/// Spreading-activation state over one map. gamma is the indicator of
/// goal_neuron; chi holds the last step's competition values for the
/// inspected candidates.
struct PlannerState {
    std::vector<double> beta;
    int goal_neuron = -1;
    int current = -1;
    std::vector<std::uint8_t> fired;
    std::vector<int> path;

    // Sparse frontier: ids with beta > 0 (plus the goal).
    std::vector<int> active;
    std::vector<double> inflow; // scratch, one slot per neuron
    std::vector<int> touched;   // scratch, inflow slots in use
    std::vector<std::uint8_t> in_active;

    static PlannerState init(const NeuralMap& map, int start_neuron, int goal_neuron);
};

// One synchronous Eq.-3 update: every neuron sees the pre-step beta of its
// temporal successors plus its goal drive.
void spread_step(PlannerState& state, const NeuralMap& map, const PlannerConfig& cfg);

// Nearest neuron to the encoding of the IK solution at the goal point.
int select_goal_neuron(const NeuralMap& map, const Eigen::Vector3d& goal, const ArmConfig& arm,
                       const Codec& codec, const JointState& seed,
                       double* encode_distance = nullptr);

struct PlanResult {
    bool success = false;
    std::vector<int> neuron_path;
    std::vector<Eigen::VectorXd> reduced_path; // map centers, reduced coordinates
    Trajectory joint_trajectory;
    int steps_used = 0;     // moves taken, i.e. neuron_path.size() - 1
    double beta_goal = 0.0; // at termination
};

PlanResult plan(const NeuralMap& map, const JointState& start, const Eigen::Vector3d& goal,
                const PlannerConfig& cfg, const Codec& codec, const ArmConfig& arm,
                std::ostream* trace = nullptr);

// Reference shortest path through the bundle graph (edge cost -log weight);
// independent of the spreading dynamics.
std::optional<std::vector<int>> oracle_path(const NeuralMap& map, int start_neuron,
                                            int goal_neuron);

} // namespace reachkit
