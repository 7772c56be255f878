// Acceptance gate: seven end-to-end criteria, one PASS/FAIL line each.
// Exit status is the number of failed criteria, so CTest sees any red.
//
// Every criterion pins its own operating point (sizes, seeds, tolerances)
// below; the numbers are frozen on purpose — changing one changes what the
// gate measures. `--only=N` runs a single criterion while iterating.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "reachkit/bundles.hpp"
#include "reachkit/codec.hpp"
#include "reachkit/harness.hpp"
#include "reachkit/metrics.hpp"
#include "reachkit/planner.hpp"

using namespace reachkit;

namespace {

std::string fmt(double x, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, x);
    return buf;
}

std::string fmt_sci(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Experiment bases.
// ---------------------------------------------------------------------------

// Dense coverage of the task arc on the 5-DOF arm; the planner keeps its
// defaults (eta_b 0.1, tau_b 1e3, lambda 1e3, max_step 80, warmup 250).
ExperimentConfig paper_base() {
    ExperimentConfig cfg;
    cfg.n_train = 700;
    cfg.n_test = 120;
    cfg.train.max_epochs = 200;
    cfg.train.patience = 30;
    cfg.bundle.phi = 3;
    cfg.seed = 1;
    return cfg;
}

// At 150 training reaches the arc is under-sampled, so reaching a goal that
// falls between experienced trajectories genuinely depends on codec and
// bundle generalization; the dimension and bundle-width trends live in this
// regime (dense coverage saturates them). 200 goals keep medians stable.
ExperimentConfig sparse_base() {
    ExperimentConfig cfg = paper_base();
    cfg.n_train = 150;
    cfg.n_test = 200;
    cfg.bundle.phi = 1;
    return cfg;
}

// Fine-pitch base for the resolution sweep: tripling the samples per
// trajectory shrinks the per-feature medRes (cell pitch), and the narrow
// hidden layer raises the reconstruction floor, so the multiplier-scaled
// quantization term stays a minor part of the end-effector error while norm
// jerk still tracks the pitch directly. Walks get ~150 hops, hence the
// larger step cap and warmup.
ExperimentConfig fine_pitch_base() {
    ExperimentConfig cfg = paper_base();
    cfg.n_train = 300;
    cfg.steps_per_trajectory = 150;
    cfg.train.hidden = 6;
    cfg.planner.max_step = 250;
    cfg.planner.warmup_steps = 300;
    return cfg;
}

// ---------------------------------------------------------------------------
// Metric bases. Error medians for the generalization trends (criteria 3, 4)
// include failed goals — a failed reach keeps the distance its degenerate
// trajectory ended at, so weak generalization drags the median up instead of
// dropping out of the sample. The per-goal error of a *successful* plan is
// map geometry only (it never depends on phi or the bundle variant), which
// would otherwise bias success-conditioned medians: the extra goals a wider
// bundle wins are exactly the hard in-between ones. Smoothness is only
// defined for executed reaches, so jerk stays success-conditioned, as do the
// reach-accuracy gates of criteria 5 and 7.
// ---------------------------------------------------------------------------

double median_error_all(const PipelineResult& pr) {
    std::vector<double> errs;
    for (const GoalOutcome& o : pr.outcomes) errs.push_back(o.metrics.ee_error);
    return median_of(errs);
}

// ---------------------------------------------------------------------------
// Criterion 1: property suite.
// ---------------------------------------------------------------------------

std::vector<Eigen::VectorXd> random_unit_points(int n, int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd p(dim);
        for (int j = 0; j < dim; ++j) p[j] = rng.uniform01();
        pts.push_back(p);
    }
    return pts;
}

double batch_loss(const Autoencoder& net, const std::vector<Eigen::VectorXd>& batch) {
    double acc = 0.0;
    for (const Eigen::VectorXd& x : batch) acc += 0.5 * (net.forward(x) - x).squaredNorm();
    return acc / static_cast<double>(batch.size());
}

// Backprop vs central finite differences over every weight and bias; returns
// the worst global relative L2 discrepancy across the seeds.
double gradient_check_worst_rel() {
    const double step = 1e-5;
    double worst = 0.0;
    for (std::uint64_t seed : {2ull, 3ull, 4ull}) {
        Rng rng(seed);
        Autoencoder net = make_autoencoder(4, 5, 2, rng);
        std::vector<Eigen::VectorXd> batch = random_unit_points(6, 4, seed + 100);

        Gradients grads;
        loss_and_gradients(net, batch, grads);

        double diff2 = 0.0, ref2 = 0.0;
        auto probe = [&](double& param, double analytic) {
            double saved = param;
            param = saved + step;
            double up = batch_loss(net, batch);
            param = saved - step;
            double down = batch_loss(net, batch);
            param = saved;
            double fd = (up - down) / (2 * step);
            diff2 += (analytic - fd) * (analytic - fd);
            ref2 += fd * fd;
        };
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            for (int r = 0; r < net.weights[l].rows(); ++r)
                for (int c = 0; c < net.weights[l].cols(); ++c)
                    probe(net.weights[l](r, c), grads.d_weights[l](r, c));
            for (int r = 0; r < net.biases[l].size(); ++r)
                probe(net.biases[l][r], grads.d_biases[l][r]);
        }
        worst = std::max(worst, std::sqrt(diff2) / std::sqrt(ref2));
    }
    return worst;
}

// The reduced space IS the joint-position plane: encoder projects
// [q0, q1, v0, v1] onto (q0, q1), decoder injects it back at zero velocity.
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

bool criterion1(std::string& detail) {
    // (a) Exact gradients, three seeds.
    double grad_rel = gradient_check_worst_rel();
    bool grads_ok = grad_rel <= 1e-4;

    // (b) Spreading-activation fixed point on an isolated goal neuron:
    // eta_b (1 - b) = b / tau_b  =>  b* = eta_b tau_b / (1 + eta_b tau_b).
    std::vector<Eigen::VectorXd> seg{Eigen::Vector2d(0.2, 0.2), Eigen::Vector2d(0.4, 0.4)};
    NeuralMap two = build_map({seg}, {0.05, 0.05}, 1.0);
    int n0 = two.neuron_at(two.cell_of(seg[0]));
    int n1 = two.neuron_at(two.cell_of(seg[1]));
    two.edges[n0].push_back(Edge{n1, 1.0});
    two.reverse_edges[n1].push_back(Edge{n0, 1.0});
    PlannerConfig pcfg; // paper defaults: eta_b 0.1, tau_b 1e3
    PlannerState st = PlannerState::init(two, n0, n1);
    for (int i = 0; i < 200; ++i) spread_step(st, two, pcfg);
    double beta_err = std::abs(st.beta[n1] - 100.0 / 101.0);
    bool beta_ok = beta_err <= 1e-6;

    // (c) 100 random small maps: every center unit-norm, F exactly B^T,
    // every walk crosses only positive forward weights with no revisit, and
    // plan success implies the oracle also finds a route.
    ArmConfig arm = ArmConfig::planar2();
    Codec codec = identity_codec();
    double worst_center = 0.0;
    bool fbt_ok = true, walk_ok = true, oracle_ok = true;
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
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

        for (const Neuron& n : map.neurons)
            worst_center = std::max(worst_center, std::abs(n.center.norm() - 1.0));

        std::vector<std::tuple<int, int, double>> fwd, rev;
        for (std::size_t i = 0; i < map.edges.size(); ++i)
            for (const Edge& e : map.edges[i]) fwd.emplace_back(static_cast<int>(i), e.to, e.weight);
        for (std::size_t j = 0; j < map.reverse_edges.size(); ++j)
            for (const Edge& e : map.reverse_edges[j])
                rev.emplace_back(e.to, static_cast<int>(j), e.weight);
        std::sort(fwd.begin(), fwd.end());
        std::sort(rev.begin(), rev.end());
        if (fwd != rev) fbt_ok = false;

        JointState start = JointState::zeros(2);
        start.positions = trajs[0][0];
        const auto& goal_traj = seed % 2 == 0 ? trajs[0] : trajs[2];
        const Eigen::VectorXd& target = goal_traj[10 + rng.below(goal_traj.size() - 10)];
        JointState target_state = JointState::zeros(2);
        target_state.positions = target;
        Eigen::Vector3d goal = forward_kinematics(target_state, arm);

        PlannerConfig cfg;
        cfg.warmup_steps = 100;
        PlanResult res = plan(map, start, goal, cfg, codec, arm);

        std::set<int> unique(res.neuron_path.begin(), res.neuron_path.end());
        if (unique.size() != res.neuron_path.size()) walk_ok = false;
        for (std::size_t k = 0; k + 1 < res.neuron_path.size(); ++k)
            if (!(map.weight(res.neuron_path[k], res.neuron_path[k + 1]) > 0.0)) walk_ok = false;

        if (res.success) {
            ++successes;
            auto oracle = oracle_path(map, res.neuron_path.front(),
                                      select_goal_neuron(map, goal, arm, codec, start));
            if (!oracle.has_value()) oracle_ok = false;
        }
    }
    bool centers_ok = worst_center <= 1e-9;

    std::ostringstream d;
    d << "grad rel " << fmt_sci(grad_rel) << (grads_ok ? "" : " BAD")
      << "; beta gap " << fmt_sci(beta_err) << (beta_ok ? "" : " BAD")
      << "; center gap " << fmt_sci(worst_center) << (centers_ok ? "" : " BAD")
      << "; F=Bt " << (fbt_ok ? "ok" : "BAD") << "; walks " << (walk_ok ? "ok" : "BAD")
      << "; oracle " << (oracle_ok ? "ok" : "BAD") << " over 100 maps (" << successes
      << " successes)";
    detail = d.str();
    return grads_ok && beta_ok && centers_ok && fbt_ok && walk_ok && oracle_ok;
}

// ---------------------------------------------------------------------------
// Criterion 2: reconstruction quality vs training-set size.
// ---------------------------------------------------------------------------

bool criterion2(StageCache* cache, std::string& detail) {
    const std::vector<int> sizes{100, 200, 300, 500, 700};
    std::vector<ReconstructionRow> rows = reconstruction_table(paper_base(), sizes, cache);

    double rmse_100 = rows.front().test_rmse;
    bool ok = true;
    std::ostringstream d;
    d << "test rmse:";
    for (const ReconstructionRow& r : rows) {
        d << " " << r.train_size << "=" << fmt(r.test_rmse);
        if (r.train_size >= 300 && !(r.test_rmse <= 0.05 && r.test_rmse < rmse_100)) ok = false;
    }
    d << " (gate at >=300: <=0.05 and < rmse(100))";
    detail = d.str();
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 3: reduced-space dimension trend.
// ---------------------------------------------------------------------------

bool criterion3(StageCache* cache, std::string& detail) {
    std::vector<double> jerk, err;
    int goals = 0;
    for (int dim : {3, 4, 5}) {
        ExperimentConfig cfg = sparse_base();
        cfg.bottleneck = dim;
        PipelineResult pr = run_pipeline(cfg, {}, cache);
        jerk.push_back(pr.summary.norm_jerk.median);
        err.push_back(median_error_all(pr));
        goals = static_cast<int>(pr.outcomes.size());
    }
    bool ok = jerk[2] <= jerk[0] && err[2] <= err[0] && goals >= 100;
    std::ostringstream d;
    d << "dim 3->4->5: jerk med " << fmt(jerk[0]) << " -> " << fmt(jerk[1]) << " -> "
      << fmt(jerk[2]) << ", err med(all) " << fmt(err[0]) << " -> " << fmt(err[1]) << " -> "
      << fmt(err[2]) << "; " << goals << " goals (gate: both at 5 <= at 3)";
    detail = d.str();
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: bundle-width trend.
// ---------------------------------------------------------------------------

bool criterion4(StageCache* cache, std::string& detail) {
    std::vector<double> jerk, err;
    int goals = 0;
    for (int phi : {1, 3, 6}) {
        ExperimentConfig cfg = sparse_base();
        cfg.bundle.phi = phi;
        PipelineResult pr = run_pipeline(cfg, {}, cache);
        jerk.push_back(pr.summary.norm_jerk.median);
        err.push_back(median_error_all(pr));
        goals = static_cast<int>(pr.outcomes.size());
    }
    bool ok = err[2] <= err[0] && jerk[2] >= jerk[0];
    std::ostringstream d;
    d << "phi 1->3->6: err med(all) " << fmt(err[0]) << " -> " << fmt(err[1]) << " -> "
      << fmt(err[2]) << ", jerk med " << fmt(jerk[0]) << " -> " << fmt(jerk[1]) << " -> "
      << fmt(jerk[2]) << "; " << goals
      << " goals (gate: err at 6 <= at 1, jerk at 6 >= at 1)";
    detail = d.str();
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 5: resolution-multiplier trend.
// ---------------------------------------------------------------------------

bool criterion5(StageCache* cache, std::string& detail) {
    std::vector<double> jerk, err, succ;
    for (double mult : {1.0, 2.0, 3.0}) {
        ExperimentConfig cfg = fine_pitch_base();
        cfg.res_multiplier = mult;
        PipelineResult pr = run_pipeline(cfg, {}, cache);
        jerk.push_back(pr.summary.norm_jerk.median);
        err.push_back(pr.summary.ee_error.median);
        succ.push_back(pr.success_rate);
    }
    double spread = (*std::max_element(err.begin(), err.end()) -
                     *std::min_element(err.begin(), err.end())) /
                    *std::min_element(err.begin(), err.end());
    bool ok = jerk[0] < jerk[1] && jerk[1] < jerk[2] && spread <= 0.25;
    std::ostringstream d;
    d << "mult 1->2->3: jerk med " << fmt(jerk[0]) << " -> " << fmt(jerk[1]) << " -> "
      << fmt(jerk[2]) << ", err med " << fmt(err[0]) << " -> " << fmt(err[1]) << " -> "
      << fmt(err[2]) << " (spread " << fmt(spread * 100, 1) << "%, gate <=25%), success "
      << fmt(succ[0], 2) << "/" << fmt(succ[1], 2) << "/" << fmt(succ[2], 2);
    detail = d.str();
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 6: bundle-variant trend.
// ---------------------------------------------------------------------------

bool criterion6(StageCache* cache, std::string& detail) {
    // lambda = 10 so the competition rule actually weighs bundle weights
    // against the activation gradient; at the planner default (1e3) the
    // variant only breaks exact beta ties and its effect drowns in noise.
    std::vector<double> mean_jerk;
    int goals = 0;
    for (BundleVariant v : {BundleVariant::Linear, BundleVariant::Parallel, BundleVariant::Fixed}) {
        ExperimentConfig cfg = paper_base();
        cfg.bundle.variant = v;
        cfg.planner.lambda = 10.0;
        PipelineResult pr = run_pipeline(cfg, {}, cache);
        mean_jerk.push_back(pr.summary.norm_jerk.mean);
        goals = static_cast<int>(pr.outcomes.size());
    }
    bool ok = mean_jerk[0] <= mean_jerk[1] && mean_jerk[1] <= mean_jerk[2] && goals >= 100;
    std::ostringstream d;
    d << "mean jerk lnr " << fmt(mean_jerk[0], 5) << " <= par " << fmt(mean_jerk[1], 5)
      << " <= fix " << fmt(mean_jerk[2], 5) << ": " << (ok ? "ordered" : "violated") << "; "
      << goals << " goals";
    detail = d.str();
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 7: end-to-end capability at paper planner parameters.
// ---------------------------------------------------------------------------

// Task-space pitch of the map: per reduced axis, the median hand-position
// gap between neurons one cell apart on that axis, combined across axes as
// a Euclidean diagonal (the spacing of corner-adjacent cells). A flat median
// over all pairs would measure only the cheapest axis — the axis whose cell
// step barely moves the hand also produces by far the most adjacent pairs —
// while reach accuracy is bounded by the whole cell, not its cheapest edge.
double adjacent_cell_spacing(const NeuralMap& map, const Codec& codec, const ArmConfig& arm) {
    std::vector<std::optional<Eigen::Vector3d>> memo(map.neurons.size());
    auto hand = [&](int id) {
        if (!memo[id])
            memo[id] = forward_kinematics(codec.decode_reduced(map.reduced_center(id)), arm);
        return *memo[id];
    };
    std::vector<std::vector<double>> per_axis(map.dim);
    for (const Neuron& n : map.neurons) {
        for (int j = 0; j < map.dim; ++j) {
            std::vector<int> cell = n.cell;
            ++cell[j];
            int other = map.neuron_at(cell);
            if (other >= 0) per_axis[j].push_back((hand(n.id) - hand(other)).norm());
        }
    }
    double diag2 = 0.0;
    for (const std::vector<double>& gaps : per_axis) {
        if (gaps.empty()) return 0.0;
        double med = median_of(gaps);
        diag2 += med * med;
    }
    return std::sqrt(diag2);
}

bool criterion7(StageCache* cache, std::string& detail) {
    ExperimentConfig cfg = paper_base(); // planner defaults = paper parameters
    PipelineResult pr = run_pipeline(cfg, {}, cache);
    double spacing = adjacent_cell_spacing(pr.map, pr.codec, ArmConfig::humanoid5());
    double err = pr.summary.ee_error.median;
    bool ok = pr.success_rate >= 0.90 && spacing > 0.0 && err < 2.0 * spacing;
    std::ostringstream d;
    d << "success " << fmt(pr.success_rate, 3) << " (gate >=0.90), err med " << fmt(err)
      << " vs 2x cell spacing " << fmt(2.0 * spacing) << " over " << pr.outcomes.size()
      << " goals";
    detail = d.str();
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strncmp(argv[i], "--only=", 7) == 0) {
            only = std::atoi(argv[i] + 7);
        } else {
            std::cerr << "usage: acceptance [--only=N]\n";
            return 2;
        }
    }

    auto cache_paper = make_stage_cache();  // criteria 2, 6, 7
    auto cache_sparse = make_stage_cache(); // criteria 3, 4
    auto cache_fine = make_stage_cache();   // criterion 5

    struct Criterion {
        int id;
        const char* name;
        double cap_s; // 0 = no stated runtime cap
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria{
        {1, "property suite", 300.0, [&](std::string& d) { return criterion1(d); }},
        {2, "reconstruction vs training size", 1800.0,
         [&](std::string& d) { return criterion2(cache_paper.get(), d); }},
        {3, "dimension sweep trend", 3600.0,
         [&](std::string& d) { return criterion3(cache_sparse.get(), d); }},
        {4, "bundle-width sweep trend", 3600.0,
         [&](std::string& d) { return criterion4(cache_sparse.get(), d); }},
        {5, "resolution sweep trend", 0.0,
         [&](std::string& d) { return criterion5(cache_fine.get(), d); }},
        {6, "bundle-variant trend", 0.0,
         [&](std::string& d) { return criterion6(cache_paper.get(), d); }},
        {7, "end-to-end capability", 0.0,
         [&](std::string& d) { return criterion7(cache_paper.get(), d); }},
    };

    int failures = 0, ran = 0;
    for (const Criterion& c : criteria) {
        if (only != 0 && only != c.id) continue;
        ++ran;
        auto t0 = std::chrono::steady_clock::now();
        bool pass = false;
        std::string detail;
        try {
            pass = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.cap_s > 0.0 && secs >= c.cap_s) {
            pass = false;
            detail += "; over the " + fmt(c.cap_s, 0) + " s budget";
        }
        if (!pass) ++failures;
        std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL")
                  << " [" << fmt(secs, 1) << " s] " << detail << "\n"
                  << std::flush;
    }
    if (ran == 0) {
        std::cerr << "no criterion matched --only=" << only << "\n";
        return 2;
    }
    std::cout << "acceptance: " << (ran - failures) << "/" << ran << " criteria passed\n";
    return failures;
}
