#include "reachkit/babble.hpp"

#include <cmath>
#include <string>

#include "reachkit/common.hpp"

namespace reachkit {

void BabbleProtocol::validate() const {
    if (starts.empty())
        throw ConfigError("babble protocol: at least one start pose required");
    if (n_train_per_start < 1)
        throw ConfigError("babble protocol: n_train_per_start must be >= 1");
    if (n_test_per_start < 0)
        throw ConfigError("babble protocol: n_test_per_start must be >= 0");
    if (steps_per_trajectory < 2)
        throw ConfigError("babble protocol: steps_per_trajectory must be >= 2");
    if (!(timestep > 0.0))
        throw ConfigError("babble protocol: timestep must be positive");
    arc.validate();
}

namespace {

// Minimum-jerk profile s(u) = 10u^3 - 15u^4 + 6u^5 and its derivative.
double quintic_s(double u) { return ((6.0 * u - 15.0) * u + 10.0) * u * u * u; }
double quintic_ds(double u) { return ((30.0 * u - 60.0) * u + 30.0) * u * u; }

} // namespace

Eigen::VectorXd QuinticSegment::position(double t) const {
    double u = t / duration;
    return q_start + quintic_s(u) * (q_end - q_start);
}

Eigen::VectorXd QuinticSegment::velocity(double t) const {
    double u = t / duration;
    return (quintic_ds(u) / duration) * (q_end - q_start);
}

Eigen::VectorXd QuinticSegment::acceleration(double t) const {
    double u = t / duration;
    double dds = ((120.0 * u - 180.0) * u + 60.0) * u; // s''(u)
    return (dds / (duration * duration)) * (q_end - q_start);
}

Trajectory generate_trajectory(const JointState& start, const Eigen::Vector3d& goal,
                               int steps, double timestep, const ArmConfig& arm) {
    if (steps < 2)
        throw ConfigError("generate_trajectory: steps must be >= 2");
    if (!(timestep > 0.0))
        throw ConfigError("generate_trajectory: timestep must be positive");

    JointState end = inverse_kinematics(goal, arm, start);

    QuinticSegment seg;
    seg.q_start = start.positions;
    seg.q_end = end.positions;
    seg.duration = (steps - 1) * timestep;

    Trajectory traj;
    traj.timestep = timestep;
    traj.samples.reserve(steps);
    for (int i = 0; i < steps; ++i) {
        double t = i * timestep;
        JointState s;
        s.positions = seg.position(t);
        s.velocities = seg.velocity(t);
        traj.samples.push_back(std::move(s));
    }
    // Pin the endpoints exactly; u = 0 and u = 1 are exact in the profile but
    // t/duration can land on 1 +/- ulp.
    traj.samples.front().positions = start.positions;
    traj.samples.front().velocities = Eigen::VectorXd::Zero(arm.n_joints);
    traj.samples.back().positions = end.positions;
    traj.samples.back().velocities = Eigen::VectorXd::Zero(arm.n_joints);
    return traj;
}

namespace {

void check_arc_reachable(const ArcSpec& arc, const ArmConfig& arm) {
    Eigen::Vector3d base = arm.base_pose.translation();
    double reach = arm.total_reach();
    const int probes = 257;
    for (int i = 0; i < probes; ++i) {
        double theta = arc.theta_lo + (arc.theta_hi - arc.theta_lo) * i / (probes - 1);
        double d = (arc.point_at(theta) - base).norm();
        if (d > reach + 1e-12)
            throw ConfigError("babble protocol: arc point at theta=" + std::to_string(theta) +
                              " is unreachable (distance " + std::to_string(d) + " > reach " +
                              std::to_string(reach) + ")");
    }
}

} // namespace

Dataset generate_dataset(const BabbleProtocol& protocol, const ArmConfig& arm) {
    protocol.validate();
    arm.validate();
    for (const JointState& s : protocol.starts) {
        if (s.positions.size() != arm.n_joints)
            throw ConfigError("babble protocol: start pose has wrong joint count");
        if (!arm.within_limits(s.positions))
            throw ConfigError("babble protocol: start pose outside joint limits");
    }
    check_arc_reachable(protocol.arc, arm);

    // Fixed seed-derivation order keeps the dataset stable if counts change.
    Rng master(protocol.rng_seed);
    const int n_starts = static_cast<int>(protocol.starts.size());
    std::vector<std::uint64_t> train_seeds(n_starts), test_seeds(n_starts);
    for (int s = 0; s < n_starts; ++s) train_seeds[s] = master.next_u64();
    for (int s = 0; s < n_starts; ++s) test_seeds[s] = master.next_u64();

    Dataset ds;
    ds.protocol = protocol;
    ds.train.reserve(static_cast<std::size_t>(n_starts) * protocol.n_train_per_start);
    ds.test_goals.reserve(static_cast<std::size_t>(n_starts) * protocol.n_test_per_start);
    for (int s = 0; s < n_starts; ++s) {
        const JointState& start = protocol.starts[s];
        std::vector<Eigen::Vector3d> targets =
            sample_arc_targets(protocol.arc, protocol.n_train_per_start, train_seeds[s]);
        for (const Eigen::Vector3d& goal : targets)
            ds.train.push_back(generate_trajectory(start, goal, protocol.steps_per_trajectory,
                                                   protocol.timestep, arm));
        if (protocol.n_test_per_start > 0) {
            std::vector<Eigen::Vector3d> probes =
                sample_arc_targets(protocol.arc, protocol.n_test_per_start, test_seeds[s]);
            for (const Eigen::Vector3d& goal : probes)
                ds.test_goals.push_back(TestGoal{start, goal});
        }
    }
    return ds;
}

std::vector<JointState> poses_on_arc(const ArcSpec& arc, int count, const ArmConfig& arm,
                                     const JointState& seed) {
    if (count < 1)
        throw ConfigError("poses_on_arc: count must be >= 1");
    arc.validate();
    std::vector<JointState> poses;
    poses.reserve(count);
    for (int i = 0; i < count; ++i) {
        double theta = count == 1
                           ? 0.5 * (arc.theta_lo + arc.theta_hi)
                           : arc.theta_lo + (arc.theta_hi - arc.theta_lo) * i / (count - 1);
        JointState pose = inverse_kinematics(arc.point_at(theta), arm, seed);
        pose.velocities.setZero();
        poses.push_back(std::move(pose));
    }
    return poses;
}

} // namespace reachkit
