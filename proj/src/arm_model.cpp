#include "reachkit/arm_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace reachkit {

void ArmConfig::validate() const {
    if (n_joints < 2)
        throw ConfigError("arm: n_joints must be >= 2, got " + std::to_string(n_joints));
    if (static_cast<int>(link_lengths.size()) != n_joints ||
        static_cast<int>(joint_limits.size()) != n_joints ||
        static_cast<int>(joint_axes.size()) != n_joints)
        throw ConfigError("arm: per-joint field sizes must equal n_joints");
    for (int i = 0; i < n_joints; ++i) {
        if (!(link_lengths[i] > 0))
            throw ConfigError("arm: link_lengths[" + std::to_string(i) + "] must be > 0");
        if (!(joint_limits[i].first < joint_limits[i].second))
            throw ConfigError("arm: joint_limits[" + std::to_string(i) + "] must have min < max");
        if (std::abs(joint_axes[i].norm() - 1.0) > 1e-9)
            throw ConfigError("arm: joint_axes[" + std::to_string(i) + "] must be unit-norm");
    }
    if (!(velocity_limit > 0)) throw ConfigError("arm: velocity_limit must be > 0");
}

double ArmConfig::total_reach() const {
    double s = 0;
    for (double l : link_lengths) s += l;
    return s;
}

void ArmConfig::clamp_to_limits(Eigen::VectorXd& q) const {
    for (int i = 0; i < n_joints; ++i)
        q[i] = std::clamp(q[i], joint_limits[i].first, joint_limits[i].second);
}

bool ArmConfig::within_limits(const Eigen::VectorXd& q, double slack) const {
    for (int i = 0; i < n_joints; ++i)
        if (q[i] < joint_limits[i].first - slack || q[i] > joint_limits[i].second + slack)
            return false;
    return true;
}

ArmConfig ArmConfig::planar2() {
    ArmConfig a;
    a.n_joints = 2;
    a.link_lengths = {1.0, 1.0};
    a.joint_limits = {{-M_PI, M_PI}, {-M_PI, M_PI}};
    a.joint_axes = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitZ()};
    return a;
}

ArmConfig ArmConfig::humanoid5() {
    ArmConfig a;
    a.n_joints = 5;
    a.link_lengths = {0.28, 0.28, 0.10, 0.18, 0.10};
    a.joint_limits.assign(5, {-2.6, 2.6});
    a.joint_axes = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitY(),
                    Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                    Eigen::Vector3d::UnitX()};
    return a;
}

void ArcSpec::validate() const {
    if (!(radius > 0)) throw ConfigError("arc: radius must be > 0");
    if (!(theta_lo <= theta_hi)) throw ConfigError("arc: need theta_lo <= theta_hi");
    if (std::abs(normal.norm() - 1.0) > 1e-9)
        throw ConfigError("arc: normal must be unit-norm");
}

void ArcSpec::basis(Eigen::Vector3d& u, Eigen::Vector3d& v) const {
    Eigen::Vector3d h = std::abs(normal.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                                   : Eigen::Vector3d::UnitY();
    u = (h - h.dot(normal) * normal).normalized(); // h projected into the plane
    v = normal.cross(u);
}

Eigen::Vector3d ArcSpec::point_at(double theta) const {
    Eigen::Vector3d u, v;
    basis(u, v);
    return center + radius * (std::cos(theta) * u + std::sin(theta) * v);
}

namespace {

// World-frame joint origins and axes along the chain, plus the end effector.
struct Frames {
    std::vector<Eigen::Vector3d> origins;
    std::vector<Eigen::Vector3d> axes;
    Eigen::Vector3d ee;
};

Frames chain_frames(const Eigen::VectorXd& q, const ArmConfig& arm) {
    Frames f;
    f.origins.reserve(arm.n_joints);
    f.axes.reserve(arm.n_joints);
    Eigen::Isometry3d t = arm.base_pose;
    for (int i = 0; i < arm.n_joints; ++i) {
        f.origins.push_back(t.translation());
        f.axes.push_back(t.linear() * arm.joint_axes[i]);
        t = t * Eigen::AngleAxisd(q[i], arm.joint_axes[i]) *
            Eigen::Translation3d(arm.link_lengths[i], 0, 0);
    }
    f.ee = t.translation();
    return f;
}

} // namespace

Eigen::Vector3d forward_kinematics(const JointState& joints, const ArmConfig& arm) {
    return forward_kinematics(joints.positions, arm);
}

Eigen::Vector3d forward_kinematics(const Eigen::VectorXd& q, const ArmConfig& arm) {
    if (q.size() != arm.n_joints)
        throw ConfigError("forward_kinematics: joint count mismatch (" +
                          std::to_string(q.size()) + " vs " + std::to_string(arm.n_joints) +
                          ")");
    return chain_frames(q, arm).ee;
}

Eigen::Matrix3Xd position_jacobian(const Eigen::VectorXd& q, const ArmConfig& arm) {
    Frames f = chain_frames(q, arm);
    Eigen::Matrix3Xd jac(3, arm.n_joints);
    for (int i = 0; i < arm.n_joints; ++i)
        jac.col(i) = f.axes[i].cross(f.ee - f.origins[i]);
    return jac;
}

namespace {

Eigen::VectorXd dls_step(const Eigen::Vector3d& err, const Eigen::VectorXd& q,
                         const ArmConfig& arm, double lambda2) {
    Eigen::Matrix3Xd jac = position_jacobian(q, arm);
    Eigen::Matrix3d jjt = jac * jac.transpose();
    jjt.diagonal().array() += lambda2;
    Eigen::VectorXd dq = jac.transpose() * jjt.ldlt().solve(err);
    // Cap the step so near-singular configurations cannot fling the chain.
    double biggest = dq.cwiseAbs().maxCoeff();
    if (biggest > 0.5) dq *= 0.5 / biggest;
    return dq;
}

// One damped-least-squares descent from the given configuration. Returns
// true once within tolerance, after a short polish phase that shrinks the
// damping with the residual (boundary targets otherwise stop with the last
// joint visibly bent).
bool dls_solve(const Eigen::Vector3d& target, const ArmConfig& arm, Eigen::VectorXd& q,
               double& residual) {
    double lambda2 = arm.ik_damping * arm.ik_damping;
    for (int iter = 0; iter < arm.ik_max_iterations; ++iter) {
        Eigen::Vector3d err = target - chain_frames(q, arm).ee;
        residual = err.norm();
        if (residual <= arm.ik_tolerance) {
            for (int polish = 0; polish < 30 && residual > 1e-10; ++polish) {
                double l2 = arm.ik_damping * residual;
                Eigen::VectorXd q_next = q + dls_step(err, q, arm, l2 * l2);
                arm.clamp_to_limits(q_next);
                err = target - chain_frames(q_next, arm).ee;
                if (err.norm() >= residual) break;
                q = q_next;
                residual = err.norm();
            }
            return true;
        }
        q += dls_step(err, q, arm, lambda2);
        arm.clamp_to_limits(q);
    }
    return false;
}

} // namespace

JointState inverse_kinematics(const Eigen::Vector3d& target, const ArmConfig& arm,
                              const JointState& seed) {
    if (seed.positions.size() != arm.n_joints)
        throw ConfigError("inverse_kinematics: seed joint count mismatch");
    double dist = (target - arm.base_pose.translation()).norm();
    if (dist > arm.total_reach() + 1e-12)
        throw ReachabilityError("inverse_kinematics: target at distance " +
                                format_double(dist) + " m exceeds total reach " +
                                format_double(arm.total_reach()) + " m");

    // Restart offsets pull the chain off singular seeds; fixed patterns keep
    // solutions deterministic.
    static const double kOffsets[] = {0.0, 0.4, -0.4, 0.9, -0.9};
    double best_residual = std::numeric_limits<double>::infinity();
    for (double offset : kOffsets) {
        Eigen::VectorXd q = seed.positions;
        for (Eigen::Index j = 0; j < q.size(); ++j) q[j] += (j % 2 == 0 ? offset : -offset);
        arm.clamp_to_limits(q);
        double residual = 0;
        if (dls_solve(target, arm, q, residual)) return JointState::at(q);
        best_residual = std::min(best_residual, residual);
    }
    throw ConvergenceError("inverse_kinematics: no convergence after " +
                               std::to_string(arm.ik_max_iterations) +
                               " iterations, residual " + format_double(best_residual) + " m",
                           best_residual);
}

std::vector<Eigen::Vector3d> sample_arc_targets(const ArcSpec& arc, int n,
                                                std::uint64_t rng_seed) {
    arc.validate();
    if (n < 1) throw ConfigError("sample_arc_targets: n must be >= 1");
    Rng rng(rng_seed);
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i)
        pts.push_back(arc.point_at(rng.uniform(arc.theta_lo, arc.theta_hi)));
    return pts;
}

} // namespace reachkit
