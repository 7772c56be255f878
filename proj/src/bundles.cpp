#include "reachkit/bundles.hpp"

#include <algorithm>
#include <stdexcept>

namespace reachkit {

std::string to_string(BundleVariant v) {
    switch (v) {
        case BundleVariant::Linear: return "lnr";
        case BundleVariant::Fixed: return "fix";
        case BundleVariant::Parallel: return "par";
    }
    throw std::logic_error("unknown bundle variant");
}

BundleVariant bundle_variant_from_string(const std::string& name) {
    if (name == "lnr") return BundleVariant::Linear;
    if (name == "fix") return BundleVariant::Fixed;
    if (name == "par") return BundleVariant::Parallel;
    throw ConfigError("unknown bundle variant '" + name + "' (expected lnr, fix or par)");
}

void BundleConfig::validate() const {
    if (phi < 1) throw ConfigError("bundle config: phi must be >= 1");
    if (!(eta_f > 0.0) || eta_f > 1.0)
        throw ConfigError("bundle config: eta_f must be in (0, 1]");
    if (!(tau_f > 0.0)) throw ConfigError("bundle config: tau_f must be positive");
}

double calculate_weight(int rank_i, int rank_j, int phi, BundleVariant variant) {
    if (rank_i < 0 || rank_i >= phi || rank_j < 0 || rank_j >= phi)
        throw std::logic_error("calculate_weight: rank out of range for phi");
    switch (variant) {
        case BundleVariant::Linear: {
            // Drive falls off linearly with the worse of the two ranks.
            int worst = std::max(rank_i, rank_j);
            return static_cast<double>(phi - worst) / static_cast<double>(phi);
        }
        case BundleVariant::Fixed:
            return 1.0;
        case BundleVariant::Parallel:
            // Only rank-matched pairs connect, each at its own lane's strength.
            if (rank_i != rank_j) return 0.0;
            return static_cast<double>(phi - rank_i) / static_cast<double>(phi);
    }
    throw std::logic_error("unknown bundle variant");
}

double update_connection(NeuralMap& map, int from, int to, double drive, double eta_f,
                         double tau_f) {
    if (from < 0 || from >= map.size() || to < 0 || to >= map.size())
        throw ConfigError("update_connection: neuron id out of range");

    auto find_entry = [](std::vector<Edge>& row, int id) -> Edge* {
        for (Edge& e : row)
            if (e.to == id) return &e;
        return nullptr;
    };

    // Row `to` of B lists its temporal successors; `from` is one of them.
    Edge* fwd = find_entry(map.edges[to], from);
    double b = fwd ? fwd->weight : 0.0;
    double b_new = std::clamp(b + eta_f * drive * (1.0 - b) - b / tau_f, 0.0, 1.0);

    if (fwd) {
        fwd->weight = b_new;
        Edge* rev = find_entry(map.reverse_edges[from], to);
        rev->weight = b_new;
    } else {
        map.edges[to].push_back(Edge{from, b_new});
        map.reverse_edges[from].push_back(Edge{to, b_new});
    }
    return b_new;
}

void form_bundles(NeuralMap& map, const std::vector<std::vector<Eigen::VectorXd>>& trajs,
                  const BundleConfig& cfg) {
    cfg.validate();
    for (const auto& traj : trajs) {
        if (traj.size() < 2) continue;
        std::vector<FiringNeuron> prev = find_firing_neurons(map, traj[0], cfg.phi);
        for (std::size_t t = 1; t < traj.size(); ++t) {
            std::vector<FiringNeuron> cur = find_firing_neurons(map, traj[t], cfg.phi);
            int phi_eff = static_cast<int>(std::max(prev.size(), cur.size()));
            for (std::size_t ri = 0; ri < prev.size(); ++ri) {
                for (std::size_t rj = 0; rj < cur.size(); ++rj) {
                    double drive = calculate_weight(static_cast<int>(ri),
                                                    static_cast<int>(rj), phi_eff,
                                                    cfg.variant);
                    if (drive > 0.0)
                        update_connection(map, cur[rj].id, prev[ri].id, drive, cfg.eta_f,
                                          cfg.tau_f);
                }
            }
            prev = std::move(cur);
        }
    }
}

} // namespace reachkit
