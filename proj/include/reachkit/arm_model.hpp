#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <utility>
#include <vector>

#include "reachkit/common.hpp"

namespace reachkit {

/// Serial-chain arm: joint i rotates about joint_axes[i] (in the local frame),
/// then link i extends along the local +x axis. All operations here are pure;
/// a shared ArmConfig is safe to use from many threads.
struct ArmConfig {
    int n_joints = 0;
    std::vector<double> link_lengths;                    // m, one per joint
    std::vector<std::pair<double, double>> joint_limits; // rad, (min, max)
    std::vector<Eigen::Vector3d> joint_axes;             // unit vectors
    Eigen::Isometry3d base_pose = Eigen::Isometry3d::Identity();
    double velocity_limit = 4.0; // rad/s, per joint
    double ik_tolerance = 1e-4;  // m
    double ik_damping = 1e-2;
    int ik_max_iterations = 200;

    void validate() const;
    double total_reach() const;
    void clamp_to_limits(Eigen::VectorXd& q) const;
    bool within_limits(const Eigen::VectorXd& q, double slack = 1e-9) const;

    // 2-link planar unit arm; analytic test cases live here.
    static ArmConfig planar2();
    // 5-DOF arm with humanoid-ish left-arm proportions (3 shoulder + 2 elbow
    // joints); used for the headline sweeps.
    static ArmConfig humanoid5();
};

struct JointState {
    Eigen::VectorXd positions;
    Eigen::VectorXd velocities;

    static JointState zeros(int n) {
        return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    }
    static JointState at(Eigen::VectorXd q) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(q.size());
        return {std::move(q), std::move(v)};
    }
};

/// Circular arc of reach targets (the babbled workspace).
struct ArcSpec {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 0;
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    double theta_lo = 0;
    double theta_hi = 0;

    void validate() const;
    // In-plane orthonormal basis; deterministic so samples are reproducible.
    void basis(Eigen::Vector3d& u, Eigen::Vector3d& v) const;
    Eigen::Vector3d point_at(double theta) const;
};

Eigen::Vector3d forward_kinematics(const JointState& joints, const ArmConfig& arm);
Eigen::Vector3d forward_kinematics(const Eigen::VectorXd& q, const ArmConfig& arm);

// Position Jacobian (3 x n) at q.
Eigen::Matrix3Xd position_jacobian(const Eigen::VectorXd& q, const ArmConfig& arm);

// Damped-least-squares iteration from the seed, clamped to joint limits each
// step. Returns a zero-velocity state. Throws ReachabilityError for targets
// beyond total reach and ConvergenceError (with residual) otherwise.
JointState inverse_kinematics(const Eigen::Vector3d& target, const ArmConfig& arm,
                              const JointState& seed);

std::vector<Eigen::Vector3d> sample_arc_targets(const ArcSpec& arc, int n,
                                                std::uint64_t rng_seed);

} // namespace reachkit
