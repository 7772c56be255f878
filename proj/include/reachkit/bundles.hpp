#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reachkit/neural_map.hpp"

namespace reachkit {

enum class BundleVariant { Linear, Fixed, Parallel }; // lnr, fix, par

std::string to_string(BundleVariant v);
BundleVariant bundle_variant_from_string(const std::string& name);

struct BundleConfig {
    int phi = 1;
    double eta_f = 0.5;
    double tau_f = 1e3;
    BundleVariant variant = BundleVariant::Linear;

    void validate() const;
};

// Connection drive for a (rank_i, rank_j) firing pair; ranks are 0-based,
// 0 = most active. Returns 0 for pairs the variant leaves unconnected.
double calculate_weight(int rank_i, int rank_j, int phi, BundleVariant variant);

// One Eq.-1 update of the bundle weight B(to, from); `from` fires one sample
// after `to`, so activation later spreads from -> to. Returns the new weight.
double update_connection(NeuralMap& map, int from, int to, double drive, double eta_f,
                         double tau_f);

void form_bundles(NeuralMap& map, const std::vector<std::vector<Eigen::VectorXd>>& trajs,
                  const BundleConfig& cfg);

} // namespace reachkit
