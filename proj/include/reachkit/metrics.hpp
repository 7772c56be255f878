#pragma once

#include <vector>

#include "reachkit/arm_model.hpp"
#include "reachkit/babble.hpp"

namespace reachkit {

struct MetricReport {
    double norm_jerk = 0.0;
    double ee_error = 0.0;
    double goal_y = 0.0;
    bool degenerate = false; // trajectory too short for a jerk estimate
};

struct StatLine {
    double mean = 0.0;
    double stddev = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

struct GoalYBin {
    double y_lo = 0.0;
    double y_hi = 0.0;
    int count = 0;
    double mean_jerk = 0.0;
    double mean_error = 0.0;
    double stddev_jerk = 0.0;
    double stddev_error = 0.0;
};

struct MetricSummary {
    StatLine norm_jerk;
    StatLine ee_error;
    std::vector<GoalYBin> by_goal_y; // 10 equal-width bins over observed goal_y
};

// Mean third-difference magnitude of the joint positions, dimensionless
// (sample index as time). Trajectories with fewer than four samples get 0
// and the degenerate flag.
double norm_jerk(const Trajectory& traj, bool* degenerate = nullptr);

double end_effector_error(const Eigen::Vector3d& goal, const JointState& final_state,
                          const ArmConfig& arm);

MetricReport evaluate_reach(const Trajectory& traj, const Eigen::Vector3d& goal,
                            const ArmConfig& arm);

MetricSummary summarize(const std::vector<MetricReport>& reports);

} // namespace reachkit
