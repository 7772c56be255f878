#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "reachkit/bundles.hpp"
#include "reachkit/planner.hpp"

using namespace reachkit;

namespace {

// Identity codec: the reduced space IS the joint-position plane. The
// encoder projects [q0, q1, v0, v1] onto (q0, q1); the decoder injects it
// back with zero velocities. All planner geometry becomes hand-checkable.
Codec identity_codec() {
    Rng rng(0);
    Codec codec;
    codec.net = make_network({4, 2, 4}, {Activation::Linear, Activation::Linear}, 1, rng);
    codec.net.weights[0].setZero();
    codec.net.weights[0](0, 0) = 1.0;
    codec.net.weights[0](1, 1) = 1.0;
    codec.net.biases[0].setZero();
    codec.net.weights[1].setZero();
    codec.net.weights[1](0, 0) = 1.0;
    codec.net.weights[1](1, 1) = 1.0;
    codec.net.biases[1].resize(4);
    codec.net.biases[1] << 0.0, 0.0, 0.5, 0.5;
    codec.stats.min = Eigen::Vector4d(0.0, 0.0, -1.0, -1.0);
    codec.stats.max = Eigen::Vector4d(1.0, 1.0, 1.0, 1.0);
    codec.stats.constant.assign(4, 0);
    return codec;
}

JointState at(double q0, double q1) {
    JointState s = JointState::zeros(2);
    s.positions << q0, q1;
    return s;
}

NeuralMap map_of_points(const std::vector<Eigen::Vector2d>& pts, double width = 0.05) {
    std::vector<Eigen::VectorXd> traj(pts.begin(), pts.end());
    return build_map({traj}, {width, width}, 1.0);
}

void wire(NeuralMap& map, int from_earlier, int to_later, double weight) {
    map.edges[from_earlier].push_back(Edge{to_later, weight});
    map.reverse_edges[to_later].push_back(Edge{from_earlier, weight});
}

int neuron_of(const NeuralMap& map, const Eigen::Vector2d& p) {
    int id = map.neuron_at(map.cell_of(p));
    REQUIRE(id >= 0);
    return id;
}

using FlatEdge = std::tuple<int, int, double>;

std::vector<FlatEdge> flatten(const std::vector<std::vector<Edge>>& rows) {
    std::vector<FlatEdge> flat;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (const Edge& e : rows[i]) flat.emplace_back(static_cast<int>(i), e.to, e.weight);
    std::sort(flat.begin(), flat.end());
    return flat;
}

} // namespace

TEST_SUITE("planner") {

TEST_CASE("config and state validation") {
    PlannerConfig cfg;
    cfg.validate();
    CHECK_THROWS_AS([] { PlannerConfig c; c.eta_b = 0.0; c.validate(); }(), ConfigError);
    CHECK_THROWS_AS([] { PlannerConfig c; c.tau_b = 0.5; c.validate(); }(), ConfigError);
    CHECK_THROWS_AS([] { PlannerConfig c; c.lambda = -1.0; c.validate(); }(), ConfigError);
    CHECK_THROWS_AS([] { PlannerConfig c; c.max_step = 0; c.validate(); }(), ConfigError);
    CHECK_THROWS_AS([] { PlannerConfig c; c.warmup_steps = -1; c.validate(); }(), ConfigError);

    NeuralMap map = map_of_points({{0.2, 0.2}});
    CHECK_THROWS_AS(PlannerState::init(map, 0, map.size()), ConfigError);
    CHECK_THROWS_AS(PlannerState::init(map, -1, 0), ConfigError);
}

TEST_CASE("one spread step drives only the goal, at eta_b") {
    NeuralMap map = map_of_points({{0.2, 0.2}, {0.4, 0.4}});
    int goal = neuron_of(map, {0.4, 0.4});
    PlannerConfig cfg;
    PlannerState st = PlannerState::init(map, neuron_of(map, {0.2, 0.2}), goal);

    spread_step(st, map, cfg);
    for (int i = 0; i < map.size(); ++i)
        CHECK(st.beta[i] == (i == goal ? 0.1 : 0.0));
}

TEST_CASE("goal activation settles at the analytic fixed point") {
    NeuralMap map = map_of_points({{0.2, 0.2}, {0.4, 0.4}});
    int n0 = neuron_of(map, {0.2, 0.2});
    int n1 = neuron_of(map, {0.4, 0.4});
    wire(map, n0, n1, 1.0); // goal has no outgoing edge, so no self-reinforcement

    PlannerConfig cfg;
    PlannerState st = PlannerState::init(map, n0, n1);
    for (int i = 0; i < 200; ++i) spread_step(st, map, cfg);

    // eta_b (1 - b) = b / tau_b  =>  b* = eta_b tau_b / (1 + eta_b tau_b)
    CHECK(std::abs(st.beta[n1] - 100.0 / 101.0) <= 1e-6);
    SUBCASE("upstream neurons order by hop distance") {
        CHECK(st.beta[n1] > st.beta[n0]);
        CHECK(st.beta[n0] > 0.0);
    }
}

TEST_CASE("activation decays back along the chain") {
    NeuralMap map = map_of_points({{0.2, 0.2}, {0.4, 0.4}, {0.6, 0.6}});
    int a = neuron_of(map, {0.2, 0.2});
    int b = neuron_of(map, {0.4, 0.4});
    int g = neuron_of(map, {0.6, 0.6});
    wire(map, a, b, 1.0);
    wire(map, b, g, 1.0);

    PlannerConfig cfg;
    PlannerState st = PlannerState::init(map, a, g);
    for (int i = 0; i < 50; ++i) spread_step(st, map, cfg);

    CHECK(st.beta[g] > st.beta[b]);
    CHECK(st.beta[b] > st.beta[a]);
    CHECK(st.beta[a] > 0.0);
    for (double v : st.beta) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("plan walks a wired chain to the goal") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    JointState start = at(0.2, 0.2);

    // Pick the goal so that whichever IK branch wins, its encoding sits on
    // an exact cell center: (0.55, 0.40) directly, or (0.95, -0.40) whose
    // clamped encoding is (0.95, 0).
    Eigen::Vector3d goal = forward_kinematics(at(0.55, 0.40), arm);
    JointState qg = inverse_kinematics(goal, arm, start);
    qg.velocities.setZero();
    Eigen::VectorXd g_red = codec.encode_state(qg);
    Eigen::Vector2d g_snap(std::round(g_red[0] / 0.05) * 0.05,
                           std::round(g_red[1] / 0.05) * 0.05);
    REQUIRE((g_red - Eigen::VectorXd(g_snap)).cwiseAbs().maxCoeff() < 0.005);

    // Straight line in reduced space, deduplicated by cell.
    Eigen::Vector2d s_red(0.2, 0.2);
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i <= 7; ++i)
        pts.push_back(s_red + (g_snap - s_red) * (static_cast<double>(i) / 7.0));
    NeuralMap map = map_of_points(pts);
    std::vector<int> chain;
    for (const auto& p : pts) {
        int id = neuron_of(map, p);
        if (chain.empty() || chain.back() != id) chain.push_back(id);
    }
    REQUIRE(chain.size() >= 3);
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) wire(map, chain[k], chain[k + 1], 1.0);
    REQUIRE(select_goal_neuron(map, goal, arm, codec, start) == chain.back());

    PlannerConfig cfg;
    cfg.warmup_steps = 40;
    std::vector<FlatEdge> before = flatten(map.edges);
    std::ostringstream trace;
    PlanResult res = plan(map, start, goal, cfg, codec, arm, &trace);

    CHECK(res.success);
    CHECK(res.neuron_path == chain);
    CHECK(res.steps_used == static_cast<int>(chain.size()) - 1);
    CHECK(res.beta_goal > 0.9);
    CHECK(flatten(map.edges) == before); // planning never mutates the map

    // Decoded artifacts follow the neuron centers.
    REQUIRE(res.reduced_path.size() == chain.size());
    REQUIRE(res.joint_trajectory.samples.size() == chain.size());
    CHECK(res.joint_trajectory.timestep == cfg.trajectory_timestep);
    for (std::size_t k = 0; k < chain.size(); ++k) {
        CHECK((res.reduced_path[k] - map.reduced_center(chain[k])).norm() < 1e-12);
        CHECK((res.joint_trajectory.samples[k].positions - res.reduced_path[k]).norm() <
              1e-12);
    }
    // Trace: one line per walk iteration.
    std::string line;
    int lines = 0;
    std::istringstream in(trace.str());
    while (std::getline(in, line)) ++lines;
    CHECK(lines == res.steps_used);
}

TEST_CASE("reaching the pose you already hold is an immediate success") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    JointState start = at(0.4, 0.3);
    NeuralMap map = map_of_points({{0.4, 0.3}, {0.6, 0.5}});

    PlanResult res = plan(map, start, forward_kinematics(start, arm), PlannerConfig{}, codec,
                          arm);
    CHECK(res.success);
    CHECK(res.neuron_path == std::vector<int>{neuron_of(map, {0.4, 0.3})});
    CHECK(res.steps_used == 0);
}

TEST_CASE("a start neuron with no outgoing bundle fails in zero steps") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    JointState start = at(0.2, 0.2);
    NeuralMap map = map_of_points({{0.2, 0.2}, {0.55, 0.4}});

    PlanResult res =
        plan(map, start, forward_kinematics(at(0.55, 0.4), arm), PlannerConfig{}, codec, arm);
    CHECK_FALSE(res.success);
    CHECK(res.steps_used == 0);
    CHECK(res.neuron_path.size() == 1);
}

TEST_CASE("refractory winners are never revisited") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    JointState start = at(0.2, 0.2);

    NeuralMap map = map_of_points({{0.2, 0.2}, {0.4, 0.4}, {0.55, 0.4}});
    int n0 = neuron_of(map, {0.2, 0.2});
    int n1 = neuron_of(map, {0.4, 0.4});
    int n2 = neuron_of(map, {0.55, 0.4});
    wire(map, n0, n1, 1.0);
    wire(map, n1, n0, 1.0);  // strong pull back toward the start
    wire(map, n1, n2, 0.2);

    Eigen::Vector3d goal = forward_kinematics(at(0.55, 0.4), arm);
    JointState qg = inverse_kinematics(goal, arm, start);
    qg.velocities.setZero();
    REQUIRE(select_goal_neuron(map, goal, arm, codec, start) == n2);

    // With lambda ~ 0 the back edge would always outscore the weak forward
    // edge; only the fired flag forces progress.
    PlannerConfig cfg;
    cfg.lambda = 1e-4;
    cfg.warmup_steps = 10;
    PlanResult res = plan(map, start, goal, cfg, codec, arm);

    CHECK(res.success);
    CHECK(res.neuron_path == std::vector<int>{n0, n1, n2});
    std::set<int> unique(res.neuron_path.begin(), res.neuron_path.end());
    CHECK(unique.size() == res.neuron_path.size());
}

TEST_CASE("max_step caps the walk") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    JointState start = at(0.1, 0.1);

    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i <= 14; ++i) pts.push_back({0.1 + 0.05 * i, 0.1});
    NeuralMap map = map_of_points(pts);
    std::vector<int> chain;
    for (const auto& p : pts) chain.push_back(neuron_of(map, p));
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) wire(map, chain[k], chain[k + 1], 1.0);

    PlannerConfig cfg;
    cfg.max_step = 5;
    cfg.warmup_steps = 60;
    PlanResult res = plan(map, start, forward_kinematics(at(0.8, 0.1), arm), cfg, codec, arm);

    CHECK_FALSE(res.success);
    CHECK(res.steps_used == 5);
    CHECK(res.neuron_path ==
          std::vector<int>(chain.begin(), chain.begin() + 6));
}

TEST_CASE("a start far outside the babbled region is rejected") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    NeuralMap map = map_of_points({{0.2, 0.2}, {0.25, 0.25}}, 0.01);

    try {
        plan(map, at(0.9, 0.9), forward_kinematics(at(0.25, 0.25), arm), PlannerConfig{},
             codec, arm);
        FAIL("expected PlanningError");
    } catch (const PlanningError& e) {
        CHECK(std::string(e.what()).find("start not covered by babbling") !=
              std::string::npos);
    }
}

TEST_CASE("symmetric forks tie-break deterministically or by seed") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    JointState start = at(0.2, 0.2);
    Eigen::Vector3d goal = forward_kinematics(at(0.55, 0.40), arm);
    JointState qg = inverse_kinematics(goal, arm, start);
    qg.velocities.setZero();

    NeuralMap map = map_of_points({{0.2, 0.2}, {0.3, 0.5}, {0.5, 0.2}, {0.55, 0.40}});
    int s = neuron_of(map, {0.2, 0.2});
    int a = neuron_of(map, {0.3, 0.5});
    int b = neuron_of(map, {0.5, 0.2});
    int g = neuron_of(map, {0.55, 0.40});
    REQUIRE(select_goal_neuron(map, goal, arm, codec, start) == g);
    wire(map, s, a, 0.8);
    wire(map, s, b, 0.8);
    wire(map, a, g, 0.7);
    wire(map, b, g, 0.7);

    PlannerConfig cfg;
    cfg.warmup_steps = 20;
    PlanResult det = plan(map, start, goal, cfg, codec, arm);
    REQUIRE(det.success);
    REQUIRE(det.neuron_path.size() == 3);
    CHECK(det.neuron_path[1] == std::min(a, b));
    // Same call, same winner.
    CHECK(plan(map, start, goal, cfg, codec, arm).neuron_path == det.neuron_path);

    cfg.stochastic_ties = true;
    std::set<int> seen;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        cfg.tie_seed = seed;
        PlanResult res = plan(map, start, goal, cfg, codec, arm);
        REQUIRE(res.success);
        seen.insert(res.neuron_path[1]);
    }
    CHECK(seen == std::set<int>{a, b});
}

TEST_CASE("oracle_path finds the lightest product-weight route") {
    NeuralMap map = map_of_points({{0.2, 0.2}, {0.3, 0.5}, {0.5, 0.2}, {0.55, 0.40}});
    int s = neuron_of(map, {0.2, 0.2});
    int a = neuron_of(map, {0.3, 0.5});
    int b = neuron_of(map, {0.5, 0.2});
    int g = neuron_of(map, {0.55, 0.40});

    SUBCASE("chain") {
        wire(map, s, a, 0.5);
        wire(map, a, g, 0.5);
        auto path = oracle_path(map, s, g);
        REQUIRE(path.has_value());
        CHECK(*path == std::vector<int>{s, a, g});
        SUBCASE("trivial endpoints") {
            auto self = oracle_path(map, g, g);
            REQUIRE(self.has_value());
            CHECK(*self == std::vector<int>{g});
        }
    }
    SUBCASE("no route") {
        wire(map, a, g, 0.5); // start disconnected
        CHECK_FALSE(oracle_path(map, s, g).has_value());
    }
    SUBCASE("diamond prefers 0.9 * 0.9 over 0.5 * 0.99") {
        wire(map, s, a, 0.9);
        wire(map, a, g, 0.9);
        wire(map, s, b, 0.5);
        wire(map, b, g, 0.99);
        auto path = oracle_path(map, s, g);
        REQUIRE(path.has_value());
        CHECK(*path == std::vector<int>{s, a, g});
    }
    CHECK_THROWS_AS(oracle_path(map, -1, g), ConfigError);
    CHECK_THROWS_AS(oracle_path(map, s, map.size()), ConfigError);
}

TEST_CASE("random maps: walks are valid and agree with the oracle") {
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();

    int successes = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(900 + seed);
        std::vector<std::vector<Eigen::VectorXd>> trajs;
        for (int t = 0; t < 3; ++t) {
            Eigen::VectorXd p(2);
            p << rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8);
            std::vector<Eigen::VectorXd> traj{p};
            for (int i = 1; i < 30; ++i) {
                Eigen::VectorXd next = traj.back();
                for (int j = 0; j < 2; ++j)
                    next[j] = std::clamp(next[j] + rng.uniform(-0.03, 0.03), 0.1, 0.9);
                traj.push_back(next);
            }
            trajs.push_back(std::move(traj));
        }
        NeuralMap map = build_map(trajs, compute_resolution(trajs), 1.0);
        BundleConfig bundle;
        bundle.phi = 2;
        form_bundles(map, trajs, bundle);

        JointState start = JointState::zeros(2);
        start.positions = trajs[0][0];
        // Even seeds aim within the start's own trajectory (normally
        // connected); odd seeds aim at a disjoint blob (normally not).
        const auto& goal_traj = seed % 2 == 0 ? trajs[0] : trajs[2];
        const Eigen::VectorXd& target = goal_traj[10 + rng.below(goal_traj.size() - 10)];
        JointState target_state = JointState::zeros(2);
        target_state.positions = target;

        PlannerConfig cfg;
        cfg.warmup_steps = 100;
        PlanResult res = plan(map, start, forward_kinematics(target_state, arm), cfg, codec,
                              arm);

        // The walk only ever crosses positive forward weights, once each.
        std::set<int> unique(res.neuron_path.begin(), res.neuron_path.end());
        CHECK(unique.size() == res.neuron_path.size());
        for (std::size_t k = 0; k + 1 < res.neuron_path.size(); ++k)
            CHECK(map.weight(res.neuron_path[k], res.neuron_path[k + 1]) > 0.0);
        CHECK(res.steps_used == static_cast<int>(res.neuron_path.size()) - 1);

        auto oracle = oracle_path(map, res.neuron_path.front(),
                                  select_goal_neuron(map, forward_kinematics(target_state, arm),
                                                     arm, codec, start));
        if (res.success) {
            ++successes;
            CHECK(oracle.has_value()); // success implies graph connectivity
        }
        if (!oracle.has_value()) CHECK_FALSE(res.success);
    }
    CHECK(successes >= 5);
}

} // TEST_SUITE
