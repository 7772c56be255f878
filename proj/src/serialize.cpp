#include "reachkit/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace reachkit {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c].get<double>();
    return m;
}

json state_to_json(const JointState& s) {
    return json{{"q", vec_to_json(s.positions)}, {"qd", vec_to_json(s.velocities)}};
}

JointState state_from_json(const json& j) {
    JointState s;
    s.positions = vec_from_json(j.at("q"));
    s.velocities = vec_from_json(j.at("qd"));
    return s;
}

json write_header(const std::string& format) {
    return json{{"format", format}, {"version", kFormatVersion}};
}

json read_checked(const std::filesystem::path& path, const std::string& format) {
    std::ifstream in(path);
    if (!in)
        throw SerializationError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != format)
        throw SerializationError(path.string() + ": expected format '" + format + "'");
    if (j.value("version", 0) > kFormatVersion)
        throw SerializationError(path.string() + ": unsupported format version");
    return j;
}

void write_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw SerializationError("cannot write " + path.string());
    out << j.dump() << '\n';
    if (!out)
        throw SerializationError("write failed for " + path.string());
}

} // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    json j = write_header("reachkit.dataset");
    const BabbleProtocol& p = dataset.protocol;
    json starts = json::array();
    for (const JointState& s : p.starts) starts.push_back(state_to_json(s));
    j["protocol"] = json{{"starts", starts},
                         {"arc",
                          {{"center", vec_to_json(p.arc.center)},
                           {"radius", p.arc.radius},
                           {"normal", vec_to_json(p.arc.normal)},
                           {"theta_lo", p.arc.theta_lo},
                           {"theta_hi", p.arc.theta_hi}}},
                         {"n_train_per_start", p.n_train_per_start},
                         {"n_test_per_start", p.n_test_per_start},
                         {"steps_per_trajectory", p.steps_per_trajectory},
                         {"timestep", p.timestep},
                         {"rng_seed", p.rng_seed}};
    json train = json::array();
    for (const Trajectory& t : dataset.train) {
        json samples = json::array();
        for (const JointState& s : t.samples) samples.push_back(state_to_json(s));
        train.push_back(json{{"timestep", t.timestep}, {"samples", std::move(samples)}});
    }
    j["train"] = std::move(train);
    json goals = json::array();
    for (const TestGoal& g : dataset.test_goals)
        goals.push_back(json{{"start", state_to_json(g.start)}, {"goal", vec_to_json(g.goal)}});
    j["test_goals"] = std::move(goals);
    write_file(j, path);
}

Dataset load_dataset(const std::filesystem::path& path) {
    json j = read_checked(path, "reachkit.dataset");
    try {
        Dataset ds;
        const json& p = j.at("protocol");
        for (const json& s : p.at("starts")) ds.protocol.starts.push_back(state_from_json(s));
        const json& arc = p.at("arc");
        ds.protocol.arc.center = vec_from_json(arc.at("center"));
        ds.protocol.arc.radius = arc.at("radius").get<double>();
        ds.protocol.arc.normal = vec_from_json(arc.at("normal"));
        ds.protocol.arc.theta_lo = arc.at("theta_lo").get<double>();
        ds.protocol.arc.theta_hi = arc.at("theta_hi").get<double>();
        ds.protocol.n_train_per_start = p.at("n_train_per_start").get<int>();
        ds.protocol.n_test_per_start = p.at("n_test_per_start").get<int>();
        ds.protocol.steps_per_trajectory = p.at("steps_per_trajectory").get<int>();
        ds.protocol.timestep = p.at("timestep").get<double>();
        ds.protocol.rng_seed = p.at("rng_seed").get<std::uint64_t>();
        for (const json& t : j.at("train")) {
            Trajectory traj;
            traj.timestep = t.at("timestep").get<double>();
            for (const json& s : t.at("samples")) traj.samples.push_back(state_from_json(s));
            ds.train.push_back(std::move(traj));
        }
        for (const json& g : j.at("test_goals"))
            ds.test_goals.push_back(
                TestGoal{state_from_json(g.at("start")), vec_from_json(g.at("goal"))});
        return ds;
    } catch (const json::exception& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
}

namespace {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Logistic: return "logistic";
        case Activation::Linear: return "linear";
    }
    throw SerializationError("unknown activation tag");
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "logistic") return Activation::Logistic;
    if (name == "linear") return Activation::Linear;
    throw SerializationError("unknown activation '" + name + "'");
}

} // namespace

void save_codec(const Codec& codec, const std::filesystem::path& path) {
    json j = write_header("reachkit.codec");
    j["stats"] = json{{"min", vec_to_json(codec.stats.min)}, {"max", vec_to_json(codec.stats.max)}};
    json weights = json::array(), biases = json::array(), acts = json::array();
    for (const Eigen::MatrixXd& w : codec.net.weights) weights.push_back(mat_to_json(w));
    for (const Eigen::VectorXd& b : codec.net.biases) biases.push_back(vec_to_json(b));
    for (Activation a : codec.net.activations) acts.push_back(activation_name(a));
    j["net"] = json{{"layer_sizes", codec.net.layer_sizes},
                    {"bottleneck_layer", codec.net.bottleneck_layer},
                    {"activations", std::move(acts)},
                    {"weights", std::move(weights)},
                    {"biases", std::move(biases)}};
    write_file(j, path);
}

Codec load_codec(const std::filesystem::path& path) {
    json j = read_checked(path, "reachkit.codec");
    try {
        Codec codec;
        codec.stats.min = vec_from_json(j.at("stats").at("min"));
        codec.stats.max = vec_from_json(j.at("stats").at("max"));
        codec.stats.constant.resize(codec.stats.min.size());
        for (Eigen::Index i = 0; i < codec.stats.min.size(); ++i)
            codec.stats.constant[i] = codec.stats.min[i] == codec.stats.max[i] ? 1 : 0;
        const json& net = j.at("net");
        codec.net.layer_sizes = net.at("layer_sizes").get<std::vector<int>>();
        codec.net.bottleneck_layer = net.at("bottleneck_layer").get<int>();
        for (const json& a : net.at("activations"))
            codec.net.activations.push_back(activation_from_name(a.get<std::string>()));
        for (const json& w : net.at("weights")) codec.net.weights.push_back(mat_from_json(w));
        for (const json& b : net.at("biases")) codec.net.biases.push_back(vec_from_json(b));
        if (codec.net.weights.size() + 1 != codec.net.layer_sizes.size() ||
            codec.net.activations.size() != codec.net.weights.size())
            throw SerializationError(path.string() + ": inconsistent network shape");
        return codec;
    } catch (const json::exception& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
}

void save_map(const NeuralMap& map, const std::filesystem::path& path) {
    json j = write_header("reachkit.map");
    j["dim"] = map.dim;
    j["resolution"] = map.resolution;
    j["res_multiplier"] = map.res_multiplier;
    j["scale"] = map.scale;
    json cells = json::array();
    for (const Neuron& n : map.neurons) cells.push_back(n.cell);
    j["cells"] = std::move(cells);
    // B entries, canonical order.
    std::vector<std::tuple<int, int, double>> entries;
    for (int i = 0; i < map.size(); ++i)
        for (const Edge& e : map.edges[i]) entries.emplace_back(i, e.to, e.weight);
    std::sort(entries.begin(), entries.end());
    json edges = json::array();
    for (const auto& [from, to, w] : entries) edges.push_back(json::array({from, to, w}));
    j["edges"] = std::move(edges);
    write_file(j, path);
}

NeuralMap load_map(const std::filesystem::path& path) {
    json j = read_checked(path, "reachkit.map");
    try {
        NeuralMap map;
        map.dim = j.at("dim").get<int>();
        map.resolution = j.at("resolution").get<std::vector<double>>();
        map.res_multiplier = j.at("res_multiplier").get<double>();
        map.scale = j.at("scale").get<double>();
        if (static_cast<int>(map.resolution.size()) != map.dim)
            throw SerializationError(path.string() + ": resolution size mismatch");
        const json& cells = j.at("cells");
        map.neurons.reserve(cells.size());
        for (const json& c : cells) {
            Neuron n;
            n.id = map.size();
            n.cell = c.get<std::vector<int>>();
            if (static_cast<int>(n.cell.size()) != map.dim)
                throw SerializationError(path.string() + ": cell size mismatch");
            Eigen::VectorXd reduced(map.dim);
            for (int f = 0; f < map.dim; ++f) reduced[f] = n.cell[f] * map.cell_width(f);
            n.center = augment(reduced, map.scale, &map.build_clamp_events);
            map.cell_index.emplace(n.cell, n.id);
            map.neurons.push_back(std::move(n));
        }
        if (map.cell_index.size() != map.neurons.size())
            throw SerializationError(path.string() + ": duplicate cells");
        map.edges.assign(map.neurons.size(), {});
        map.reverse_edges.assign(map.neurons.size(), {});
        for (const json& e : j.at("edges")) {
            int from = e.at(0).get<int>(), to = e.at(1).get<int>();
            double w = e.at(2).get<double>();
            if (from < 0 || from >= map.size() || to < 0 || to >= map.size())
                throw SerializationError(path.string() + ": edge endpoint out of range");
            map.edges[from].push_back(Edge{to, w});
            map.reverse_edges[to].push_back(Edge{from, w});
        }
        map.rebuild_search_index();
        return map;
    } catch (const json::exception& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
}

void save_plan(const PlanResult& plan, const std::filesystem::path& path) {
    json j = write_header("reachkit.plan");
    j["success"] = plan.success;
    j["neuron_path"] = plan.neuron_path;
    j["steps_used"] = plan.steps_used;
    j["beta_goal"] = plan.beta_goal;
    json reduced = json::array();
    for (const Eigen::VectorXd& p : plan.reduced_path) reduced.push_back(vec_to_json(p));
    j["reduced_path"] = std::move(reduced);
    json samples = json::array();
    for (const JointState& s : plan.joint_trajectory.samples) samples.push_back(state_to_json(s));
    j["trajectory"] =
        json{{"timestep", plan.joint_trajectory.timestep}, {"samples", std::move(samples)}};
    write_file(j, path);
}

PlanResult load_plan(const std::filesystem::path& path) {
    json j = read_checked(path, "reachkit.plan");
    try {
        PlanResult plan;
        plan.success = j.at("success").get<bool>();
        plan.neuron_path = j.at("neuron_path").get<std::vector<int>>();
        plan.steps_used = j.at("steps_used").get<int>();
        plan.beta_goal = j.at("beta_goal").get<double>();
        for (const json& p : j.at("reduced_path")) plan.reduced_path.push_back(vec_from_json(p));
        plan.joint_trajectory.timestep = j.at("trajectory").at("timestep").get<double>();
        for (const json& s : j.at("trajectory").at("samples"))
            plan.joint_trajectory.samples.push_back(state_from_json(s));
        return plan;
    } catch (const json::exception& e) {
        throw SerializationError(path.string() + ": " + e.what());
    }
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SerializationError("cannot open " + path.string() + " for hashing");
    std::ostringstream buf;
    buf << in.rdbuf();
    return hash_hex(buf.str());
}

} // namespace reachkit
