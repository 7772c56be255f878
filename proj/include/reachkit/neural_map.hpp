#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reachkit/common.hpp"

namespace reachkit {

struct DegenerateFeatureError : std::runtime_error {
    DegenerateFeatureError(const std::string& msg, int feature)
        : std::runtime_error(msg), feature(feature) {}
    int feature;
};

namespace detail {

// Squared distance as a plain scalar loop so tree results and brute-force
// checks agree bitwise.
inline double sq_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Exact k-nearest-neighbour tree over low-dimensional points. Median
/// splits, bounding-box pruning; candidate distances are always recomputed
/// in full.
class KdTree {
  public:
    void build(const std::vector<Eigen::VectorXd>& points);
    bool empty() const { return points_.empty(); }

    // k nearest points, sorted by (squared distance, id) ascending.
    std::vector<std::pair<double, int>> nearest(const Eigen::VectorXd& query, int k) const;

  private:
    struct Node {
        int begin = 0, end = 0; // range into ids_ (leaves only)
        int left = -1, right = -1;
        Eigen::VectorXd box_min, box_max;
    };

    int build_range(int begin, int end);
    void search(int node, const Eigen::VectorXd& query, std::size_t k,
                std::vector<std::pair<double, int>>& heap) const;

    std::vector<Eigen::VectorXd> points_;
    std::vector<int> ids_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

} // namespace detail

struct CellHash {
    std::size_t operator()(const std::vector<int>& cell) const noexcept {
        return static_cast<std::size_t>(fnv1a(cell.data(), cell.size() * sizeof(int)));
    }
};

struct Neuron {
    int id = 0;
    std::vector<int> cell;
    Eigen::VectorXd center; // augmented, unit norm
};

struct Edge {
    int to = 0;
    double weight = 0.0;
};

/// Grid-quantized neural map over the reduced space, plus the trajectory
/// bundle weights layered on top of it.
struct NeuralMap {
    int dim = 0;                    // |A'|
    std::vector<double> resolution; // per-feature medRes
    double res_multiplier = 1.0;
    double scale = 1.0; // Eq.-4 shrink factor applied before augmentation
    std::vector<Neuron> neurons;
    std::unordered_map<std::vector<int>, int, CellHash> cell_index;

    // Bundle weights as temporal edges: edges[i] holds (j, w) meaning "i
    // fired one sample before j". reverse_edges mirrors every entry, so the
    // forward view F is exactly the transpose of B.
    std::vector<std::vector<Edge>> edges;
    std::vector<std::vector<Edge>> reverse_edges;

    long build_clamp_events = 0;

    int size() const { return static_cast<int>(neurons.size()); }
    double cell_width(int feature) const { return resolution[feature] * res_multiplier; }
    std::vector<int> cell_of(const Eigen::VectorXd& reduced) const;
    int neuron_at(const std::vector<int>& cell) const; // -1 when absent
    Eigen::VectorXd reduced_center(int id) const;      // inverse of Eq.-4 scaling

    // B(earlier -> later); 0 when no connection.
    double weight(int from_earlier, int to_later) const;
    long edge_count() const;

    void rebuild_search_index();
    const detail::KdTree& search_index() const { return index_; }

  private:
    detail::KdTree index_;
};

// Per-feature median of |a'_{i+1,j} - a'_{i,j}| over consecutive samples,
// pooled across trajectories. Zero medians fall back to the smallest
// positive difference of that feature.
std::vector<double> compute_resolution(const std::vector<std::vector<Eigen::VectorXd>>& trajs);

// Eq.-4 pseudo-feature augmentation: prepend sqrt(1 - ||scale * a'||^2) so
// the result is unit norm. Points outside the unit ball after scaling are
// radially clamped (pseudo-feature 0) and counted.
Eigen::VectorXd augment(const Eigen::VectorXd& reduced, double scale,
                        long* clamp_events = nullptr);

NeuralMap build_map(const std::vector<std::vector<Eigen::VectorXd>>& trajs,
                    const std::vector<double>& resolution, double res_multiplier);

struct FiringNeuron {
    int id = 0;
    double activation = 0.0; // scalar product with the augmented query
};

// phi nearest neurons in augmented space, highest activation first.
std::vector<FiringNeuron> find_firing_neurons(const NeuralMap& map,
                                              const Eigen::VectorXd& reduced, int phi,
                                              long* clamp_events = nullptr);

} // namespace reachkit
