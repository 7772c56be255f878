#include "reachkit/neural_map.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace reachkit {

namespace detail {

void KdTree::build(const std::vector<Eigen::VectorXd>& points) {
    points_ = points;
    ids_.resize(points_.size());
    std::iota(ids_.begin(), ids_.end(), 0);
    nodes_.clear();
    nodes_.reserve(points_.empty() ? 0 : 2 * points_.size() / 8 + 8);
    root_ = points_.empty() ? -1 : build_range(0, static_cast<int>(points_.size()));
}

int KdTree::build_range(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    node.box_min = points_[ids_[begin]];
    node.box_max = points_[ids_[begin]];
    for (int i = begin + 1; i < end; ++i) {
        node.box_min = node.box_min.cwiseMin(points_[ids_[i]]);
        node.box_max = node.box_max.cwiseMax(points_[ids_[i]]);
    }

    constexpr int kLeafSize = 16;
    int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return index;

    int axis;
    (node.box_max - node.box_min).maxCoeff(&axis);
    if (node.box_max[axis] == node.box_min[axis]) return index; // all identical

    int mid = begin + (end - begin) / 2;
    std::nth_element(ids_.begin() + begin, ids_.begin() + mid, ids_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    int left = build_range(begin, mid);
    int right = build_range(mid, end);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

namespace {

double box_sq_dist(const Eigen::VectorXd& q, const Eigen::VectorXd& lo,
                   const Eigen::VectorXd& hi) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        double d = 0.0;
        if (q[i] < lo[i]) d = lo[i] - q[i];
        else if (q[i] > hi[i]) d = q[i] - hi[i];
        s += d * d;
    }
    return s;
}

} // namespace

void KdTree::search(int node_index, const Eigen::VectorXd& query, std::size_t k,
                    std::vector<std::pair<double, int>>& heap) const {
    const Node& node = nodes_[node_index];
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            int id = ids_[i];
            std::pair<double, int> cand{sq_dist(query, points_[id]), id};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end());
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    double dl = box_sq_dist(query, nodes_[node.left].box_min, nodes_[node.left].box_max);
    double dr = box_sq_dist(query, nodes_[node.right].box_min, nodes_[node.right].box_max);
    int first = node.left, second = node.right;
    if (dr < dl) {
        std::swap(first, second);
        std::swap(dl, dr);
    }
    // Descend only when the box could still hold a point that beats the
    // current worst; ties must be explored so smaller ids win.
    if (heap.size() < k || dl <= heap.front().first) search(first, query, k, heap);
    if (heap.size() < k || dr <= heap.front().first) search(second, query, k, heap);
}

std::vector<std::pair<double, int>> KdTree::nearest(const Eigen::VectorXd& query,
                                                    int k) const {
    std::vector<std::pair<double, int>> heap;
    if (root_ < 0 || k <= 0) return heap;
    heap.reserve(static_cast<std::size_t>(k));
    search(root_, query, static_cast<std::size_t>(k), heap);
    std::sort(heap.begin(), heap.end());
    return heap;
}

} // namespace detail

std::vector<int> NeuralMap::cell_of(const Eigen::VectorXd& reduced) const {
    if (reduced.size() != dim)
        throw ConfigError("neural map: reduced point has wrong dimension");
    std::vector<int> cell(dim);
    for (int j = 0; j < dim; ++j)
        cell[j] = static_cast<int>(std::llround(reduced[j] / cell_width(j)));
    return cell;
}

int NeuralMap::neuron_at(const std::vector<int>& cell) const {
    auto it = cell_index.find(cell);
    return it == cell_index.end() ? -1 : it->second;
}

Eigen::VectorXd NeuralMap::reduced_center(int id) const {
    return neurons.at(id).center.tail(dim) / scale;
}

double NeuralMap::weight(int from_earlier, int to_later) const {
    for (const Edge& e : edges.at(from_earlier))
        if (e.to == to_later) return e.weight;
    return 0.0;
}

long NeuralMap::edge_count() const {
    long n = 0;
    for (const auto& row : edges) n += static_cast<long>(row.size());
    return n;
}

void NeuralMap::rebuild_search_index() {
    std::vector<Eigen::VectorXd> centers;
    centers.reserve(neurons.size());
    for (const Neuron& n : neurons) centers.push_back(n.center);
    index_.build(centers);
}

std::vector<double> compute_resolution(
    const std::vector<std::vector<Eigen::VectorXd>>& trajs) {
    int dim = 0;
    for (const auto& traj : trajs)
        if (!traj.empty()) {
            dim = static_cast<int>(traj.front().size());
            break;
        }
    if (dim == 0)
        throw ConfigError("compute_resolution: no reduced points");

    std::vector<std::vector<double>> diffs(dim);
    for (const auto& traj : trajs)
        for (std::size_t i = 0; i + 1 < traj.size(); ++i)
            for (int j = 0; j < dim; ++j)
                diffs[j].push_back(std::abs(traj[i + 1][j] - traj[i][j]));
    if (diffs[0].empty())
        throw ConfigError("compute_resolution: need at least one consecutive sample pair");

    std::vector<double> res(dim);
    for (int j = 0; j < dim; ++j) {
        double med = median_of(diffs[j]);
        if (med == 0.0) {
            double smallest = 0.0;
            for (double d : diffs[j])
                if (d > 0.0 && (smallest == 0.0 || d < smallest)) smallest = d;
            if (smallest == 0.0)
                throw DegenerateFeatureError(
                    "compute_resolution: feature " + std::to_string(j) +
                        " never changes across consecutive samples",
                    j);
            med = smallest;
        }
        res[j] = med;
    }
    return res;
}

Eigen::VectorXd augment(const Eigen::VectorXd& reduced, double scale, long* clamp_events) {
    if (!(scale > 0.0))
        throw ConfigError("augment: scale must be positive");
    Eigen::VectorXd w(reduced.size() + 1);
    double n2 = 0.0;
    for (Eigen::Index j = 0; j < reduced.size(); ++j) {
        w[j + 1] = scale * reduced[j];
        n2 += w[j + 1] * w[j + 1];
    }
    if (n2 > 1.0) {
        w.tail(reduced.size()) /= std::sqrt(n2);
        w[0] = 0.0;
        // Roundoff can push boundary points a hair over 1; only a real
        // excursion outside the unit ball counts as a clamp.
        if (clamp_events && n2 > 1.0 + 1e-9) ++*clamp_events;
    } else {
        w[0] = std::sqrt(1.0 - n2);
    }
    return w;
}

NeuralMap build_map(const std::vector<std::vector<Eigen::VectorXd>>& trajs,
                    const std::vector<double>& resolution, double res_multiplier) {
    if (!(res_multiplier > 0.0))
        throw ConfigError("build_map: resolution multiplier must be positive");
    for (double r : resolution)
        if (!(r > 0.0))
            throw ConfigError("build_map: resolution entries must be positive");

    NeuralMap map;
    map.dim = static_cast<int>(resolution.size());
    map.resolution = resolution;
    map.res_multiplier = res_multiplier;

    double max_norm = 0.0;
    long n_points = 0;
    for (const auto& traj : trajs)
        for (const Eigen::VectorXd& p : traj) {
            if (p.size() != map.dim)
                throw ConfigError("build_map: reduced point dimension mismatch");
            max_norm = std::max(max_norm, p.norm());
            ++n_points;
        }
    if (n_points == 0)
        throw ConfigError("build_map: no reduced points");
    map.scale = max_norm > 0.0 ? 1.0 / (1.05 * max_norm) : 1.0;

    auto ensure_neuron = [&map](const std::vector<int>& cell) {
        auto [it, inserted] = map.cell_index.try_emplace(cell, map.size());
        if (!inserted) return;
        Neuron n;
        n.id = it->second;
        n.cell = cell;
        Eigen::VectorXd reduced(map.dim);
        for (int j = 0; j < map.dim; ++j) reduced[j] = cell[j] * map.cell_width(j);
        n.center = augment(reduced, map.scale, &map.build_clamp_events);
        map.neurons.push_back(std::move(n));
    };

    for (const auto& traj : trajs)
        for (const Eigen::VectorXd& p : traj) {
            std::vector<int> cell = map.cell_of(p);
            ensure_neuron(cell);
            // Axis-aligned padding so the map covers slight excursions.
            for (int j = 0; j < map.dim; ++j) {
                for (int step : {-1, 1}) {
                    std::vector<int> nb = cell;
                    nb[j] += step;
                    ensure_neuron(nb);
                }
            }
        }

    map.edges.assign(map.neurons.size(), {});
    map.reverse_edges.assign(map.neurons.size(), {});
    map.rebuild_search_index();
    return map;
}

std::vector<FiringNeuron> find_firing_neurons(const NeuralMap& map,
                                              const Eigen::VectorXd& reduced, int phi,
                                              long* clamp_events) {
    if (map.size() == 0)
        throw ConfigError("find_firing_neurons: empty map");
    if (phi < 1)
        throw ConfigError("find_firing_neurons: phi must be >= 1");
    if (phi > map.size())
        std::cerr << "find_firing_neurons: phi=" << phi << " exceeds map size " << map.size()
                  << "; returning all neurons\n";

    Eigen::VectorXd w = augment(reduced, map.scale, clamp_events);
    int k = std::min(phi, map.size());
    std::vector<std::pair<double, int>> nn = map.search_index().nearest(w, k);

    std::vector<FiringNeuron> firing;
    firing.reserve(nn.size());
    for (const auto& [d2, id] : nn) {
        // Unit vectors: w . c = 1 - |w - c|^2 / 2, so activation order is
        // exactly the distance order the tree already established.
        firing.push_back(FiringNeuron{id, 1.0 - 0.5 * d2});
    }
    return firing;
}

} // namespace reachkit
