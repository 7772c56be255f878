#pragma once

#include <cstdint>
#include <vector>

#include "reachkit/arm_model.hpp"

namespace reachkit {

struct Trajectory {
    std::vector<JointState> samples;
    double timestep = 0.1; // s, constant

    int size() const { return static_cast<int>(samples.size()); }
};

/// Babbling protocol: one start for the single-start experiments, eight for
/// the multi-start ones. Counts are per start.
struct BabbleProtocol {
    std::vector<JointState> starts;
    ArcSpec arc;
    int n_train_per_start = 700;
    int n_test_per_start = 300;
    int steps_per_trajectory = 50;
    double timestep = 0.1;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

struct TestGoal {
    JointState start;
    Eigen::Vector3d goal;
};

struct Dataset {
    std::vector<Trajectory> train;
    std::vector<TestGoal> test_goals;
    BabbleProtocol protocol;
};

/// Rest-to-rest quintic in joint space: zero velocity and acceleration at
/// both ends.
struct QuinticSegment {
    Eigen::VectorXd q_start;
    Eigen::VectorXd q_end;
    double duration = 1.0;

    Eigen::VectorXd position(double t) const;
    Eigen::VectorXd velocity(double t) const;
    Eigen::VectorXd acceleration(double t) const;
};

// IK at the goal (seeded from the start pose), then quintic interpolation.
// Velocities are the analytic derivative of the interpolant.
Trajectory generate_trajectory(const JointState& start, const Eigen::Vector3d& goal,
                               int steps, double timestep, const ArmConfig& arm);

Dataset generate_dataset(const BabbleProtocol& protocol, const ArmConfig& arm);

// Start poses whose hand positions are equally spaced along an arc; used to
// build the multi-start protocol.
std::vector<JointState> poses_on_arc(const ArcSpec& arc, int count, const ArmConfig& arm,
                                     const JointState& seed);

} // namespace reachkit
