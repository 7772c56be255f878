#include "reachkit/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace reachkit {

void PlannerConfig::validate() const {
    if (!(eta_b > 0.0)) throw ConfigError("planner config: eta_b must be positive");
    if (!(tau_b >= 1.0)) throw ConfigError("planner config: tau_b must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("planner config: lambda must be >= 0");
    if (max_step < 1) throw ConfigError("planner config: max_step must be >= 1");
    if (warmup_steps < 0) throw ConfigError("planner config: warmup_steps must be >= 0");
    if (!(trajectory_timestep > 0.0))
        throw ConfigError("planner config: trajectory_timestep must be positive");
}

PlannerState PlannerState::init(const NeuralMap& map, int start_neuron, int goal_neuron) {
    if (start_neuron < 0 || start_neuron >= map.size() || goal_neuron < 0 ||
        goal_neuron >= map.size())
        throw ConfigError("planner state: neuron id out of range");
    PlannerState st;
    st.beta.assign(map.neurons.size(), 0.0);
    st.goal_neuron = goal_neuron;
    st.current = start_neuron;
    st.fired.assign(map.neurons.size(), 0);
    st.fired[start_neuron] = 1;
    st.path = {start_neuron};
    st.active = {goal_neuron};
    st.in_active.assign(map.neurons.size(), 0);
    st.in_active[goal_neuron] = 1;
    st.inflow.assign(map.neurons.size(), 0.0);
    return st;
}

void spread_step(PlannerState& st, const NeuralMap& map, const PlannerConfig& cfg) {
    // Phase 1: inflow from pre-step betas. beta flows from a neuron to its
    // temporal predecessors, i.e. backwards from the goal along the bundles.
    std::vector<int>& touched = st.touched;
    touched.clear();
    for (int j : st.active) {
        double bj = st.beta[j];
        if (bj <= 0.0) continue;
        for (const Edge& e : map.reverse_edges[j]) {
            if (e.weight <= 0.0) continue;
            if (st.inflow[e.to] == 0.0) touched.push_back(e.to);
            st.inflow[e.to] += e.weight * bj;
        }
    }
    for (int i : touched) {
        if (!st.in_active[i]) {
            st.in_active[i] = 1;
            st.active.push_back(i);
        }
    }
    // Phase 2: synchronous Eq.-3 update on every neuron with input or decay.
    for (int i : st.active) {
        double gamma = i == st.goal_neuron ? 1.0 : 0.0;
        double b = st.beta[i];
        double nb = b + cfg.eta_b * (st.inflow[i] + gamma) * (1.0 - b) - b / cfg.tau_b;
        st.beta[i] = std::clamp(nb, 0.0, 1.0);
    }
    for (int i : touched) st.inflow[i] = 0.0;
}

namespace {

int chebyshev_cell_distance(const std::vector<int>& a, const std::vector<int>& b) {
    int d = 0;
    for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
    return d;
}

void ensure_start_covered(const NeuralMap& map, const Eigen::VectorXd& reduced, int neuron) {
    int d = chebyshev_cell_distance(map.cell_of(reduced), map.neurons[neuron].cell);
    if (d > 3)
        throw PlanningError("start not covered by babbling (nearest neuron is " +
                            std::to_string(d) + " cells away)");
}

} // namespace

int select_goal_neuron(const NeuralMap& map, const Eigen::Vector3d& goal, const ArmConfig& arm,
                       const Codec& codec, const JointState& seed, double* encode_distance) {
    JointState at_goal = inverse_kinematics(goal, arm, seed);
    at_goal.velocities.setZero();
    Eigen::VectorXd a = codec.encode_state(at_goal);
    std::vector<FiringNeuron> firing = find_firing_neurons(map, a, 1);
    if (encode_distance)
        *encode_distance = std::sqrt(std::max(0.0, 2.0 - 2.0 * firing[0].activation));
    return firing[0].id;
}

PlanResult plan(const NeuralMap& map, const JointState& start, const Eigen::Vector3d& goal,
                const PlannerConfig& cfg, const Codec& codec, const ArmConfig& arm,
                std::ostream* trace) {
    cfg.validate();
    if (map.size() == 0) throw PlanningError("plan: empty map");

    Eigen::VectorXd a_start = codec.encode_state(start);
    int start_neuron = find_firing_neurons(map, a_start, 1)[0].id;
    ensure_start_covered(map, a_start, start_neuron);

    int goal_neuron = select_goal_neuron(map, goal, arm, codec, start);

    PlannerState st = PlannerState::init(map, start_neuron, goal_neuron);
    for (int w = 0; w < cfg.warmup_steps; ++w) spread_step(st, map, cfg);

    Rng tie_rng(cfg.tie_seed);
    std::vector<int> argmax;
    int steps = 0;
    while (st.current != goal_neuron && steps < cfg.max_step) {
        spread_step(st, map, cfg);
        ++steps;

        double best = -std::numeric_limits<double>::infinity();
        argmax.clear();
        for (const Edge& e : map.edges[st.current]) {
            if (st.fired[e.to] || e.weight <= 0.0 || st.beta[e.to] <= 0.0) continue;
            double chi = cfg.lambda * st.beta[e.to] + e.weight;
            if (chi > best) {
                best = chi;
                argmax.assign(1, e.to);
            } else if (chi == best) {
                argmax.push_back(e.to);
            }
        }
        int winner = -1;
        if (!argmax.empty()) {
            if (cfg.stochastic_ties) {
                winner = argmax[tie_rng.below(argmax.size())];
            } else {
                winner = *std::min_element(argmax.begin(), argmax.end());
            }
            st.current = winner;
            st.fired[winner] = 1;
            st.path.push_back(winner);
        }
        if (trace)
            *trace << steps << ',' << winner << ',' << format_double(winner >= 0 ? best : 0.0)
                   << ',' << format_double(st.beta[goal_neuron]) << '\n';
        if (winner < 0) break; // refractory dead end: no eligible successor
    }

    PlanResult result;
    result.success = st.current == goal_neuron;
    result.neuron_path = st.path;
    result.steps_used = static_cast<int>(st.path.size()) - 1;
    result.beta_goal = st.beta[goal_neuron];
    result.joint_trajectory.timestep = cfg.trajectory_timestep;
    result.joint_trajectory.samples.reserve(st.path.size());
    result.reduced_path.reserve(st.path.size());
    for (int id : st.path) {
        result.reduced_path.push_back(map.reduced_center(id));
        result.joint_trajectory.samples.push_back(codec.decode_reduced(result.reduced_path.back()));
    }
    return result;
}

std::optional<std::vector<int>> oracle_path(const NeuralMap& map, int start_neuron,
                                            int goal_neuron) {
    const int n = map.size();
    if (start_neuron < 0 || start_neuron >= n || goal_neuron < 0 || goal_neuron >= n)
        throw ConfigError("oracle_path: neuron id out of range");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<int> parent(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
    dist[start_neuron] = 0.0;
    queue.push({0.0, start_neuron});
    while (!queue.empty()) {
        auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) continue;
        if (u == goal_neuron) break;
        for (const Edge& e : map.edges[u]) {
            if (e.weight <= 0.0) continue;
            double nd = d - std::log(e.weight);
            if (nd < dist[e.to]) {
                dist[e.to] = nd;
                parent[e.to] = u;
                queue.push({nd, e.to});
            }
        }
    }
    if (dist[goal_neuron] == inf) return std::nullopt;

    std::vector<int> path;
    for (int v = goal_neuron; v != -1; v = parent[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace reachkit
