#include "reachkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "reachkit/common.hpp"

namespace reachkit {

double norm_jerk(const Trajectory& traj, bool* degenerate) {
    const auto& s = traj.samples;
    if (degenerate) *degenerate = false;
    if (s.size() < 4) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double acc = 0.0;
    for (std::size_t t = 0; t + 3 < s.size(); ++t) {
        Eigen::VectorXd d3 = s[t + 3].positions - 3.0 * s[t + 2].positions +
                             3.0 * s[t + 1].positions - s[t].positions;
        acc += d3.norm();
    }
    return acc / static_cast<double>(s.size() - 3);
}

double end_effector_error(const Eigen::Vector3d& goal, const JointState& final_state,
                          const ArmConfig& arm) {
    return (goal - forward_kinematics(final_state.positions, arm)).norm();
}

MetricReport evaluate_reach(const Trajectory& traj, const Eigen::Vector3d& goal,
                            const ArmConfig& arm) {
    if (traj.samples.empty())
        throw ConfigError("evaluate_reach: empty trajectory");
    MetricReport r;
    r.norm_jerk = norm_jerk(traj, &r.degenerate);
    r.ee_error = end_effector_error(goal, traj.samples.back(), arm);
    r.goal_y = goal.y();
    return r;
}

namespace {

StatLine stat_line(std::vector<double> v) {
    StatLine s;
    if (v.empty()) return s;
    s.mean = mean_of(v);
    s.stddev = stddev_of(v);
    s.median = quantile_of(v, 0.5);
    s.q1 = quantile_of(v, 0.25);
    s.q3 = quantile_of(v, 0.75);
    return s;
}

} // namespace

MetricSummary summarize(const std::vector<MetricReport>& reports) {
    MetricSummary out;
    if (reports.empty()) return out;

    std::vector<double> jerks, errors;
    jerks.reserve(reports.size());
    errors.reserve(reports.size());
    double y_lo = reports.front().goal_y, y_hi = y_lo;
    for (const MetricReport& r : reports) {
        jerks.push_back(r.norm_jerk);
        errors.push_back(r.ee_error);
        y_lo = std::min(y_lo, r.goal_y);
        y_hi = std::max(y_hi, r.goal_y);
    }
    out.norm_jerk = stat_line(jerks);
    out.ee_error = stat_line(errors);

    const int n_bins = 10;
    double width = (y_hi - y_lo) / n_bins;
    out.by_goal_y.resize(n_bins);
    for (int b = 0; b < n_bins; ++b) {
        out.by_goal_y[b].y_lo = y_lo + b * width;
        out.by_goal_y[b].y_hi = y_lo + (b + 1) * width;
    }
    std::vector<std::vector<double>> bin_jerk(n_bins), bin_err(n_bins);
    for (const MetricReport& r : reports) {
        int b = width > 0.0 ? static_cast<int>((r.goal_y - y_lo) / width) : 0;
        b = std::clamp(b, 0, n_bins - 1);
        bin_jerk[b].push_back(r.norm_jerk);
        bin_err[b].push_back(r.ee_error);
    }
    for (int b = 0; b < n_bins; ++b) {
        GoalYBin& bin = out.by_goal_y[b];
        bin.count = static_cast<int>(bin_jerk[b].size());
        if (bin.count > 0) {
            bin.mean_jerk = mean_of(bin_jerk[b]);
            bin.mean_error = mean_of(bin_err[b]);
            bin.stddev_jerk = stddev_of(bin_jerk[b]);
            bin.stddev_error = stddev_of(bin_err[b]);
        }
    }
    return out;
}

} // namespace reachkit
