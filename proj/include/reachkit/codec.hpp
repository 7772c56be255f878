#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "reachkit/arm_model.hpp"
#include "reachkit/babble.hpp"
#include "reachkit/common.hpp"

namespace reachkit {

/// Per-feature min/max over the training set; maps raw motor-sensory
/// features into [0,1].
struct NormStats {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
    std::vector<std::uint8_t> constant; // features with max == min

    int dim() const { return static_cast<int>(min.size()); }
};

// Feature layout: joint positions followed by joint velocities.
Eigen::VectorXd state_features(const JointState& state);
JointState state_from_features(const Eigen::VectorXd& features);

NormStats fit_norm_stats(const std::vector<Eigen::VectorXd>& raw_points);
NormStats fit_norm_stats(const Dataset& dataset);

// Out-of-range values clamp to [0,1]; each clamped component bumps
// *clamp_events when a counter is supplied. Constant features map to 0.5.
Eigen::VectorXd normalize(const Eigen::VectorXd& raw, const NormStats& stats,
                          long* clamp_events = nullptr);
Eigen::VectorXd denormalize(const Eigen::VectorXd& unit, const NormStats& stats);

enum class Activation { Tanh, Logistic, Linear };

/// Fully connected autoencoder, layer sizes |A| -> h -> |A'| -> h -> |A|,
/// tanh hidden layers and a logistic output so reconstructions stay in
/// [0,1].
struct Autoencoder {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights; // weights[l]: sizes[l] -> sizes[l+1]
    std::vector<Eigen::VectorXd> biases;
    std::vector<Activation> activations;  // one per non-input layer
    int bottleneck_layer = 0;             // index into layer activations

    int input_dim() const { return layer_sizes.front(); }
    int reduced_dim() const { return layer_sizes[bottleneck_layer]; }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::VectorXd encode(const Eigen::VectorXd& x) const;
    Eigen::VectorXd decode(const Eigen::VectorXd& a_reduced) const;
};

Autoencoder make_autoencoder(int input_dim, int hidden, int bottleneck, Rng& rng);

// Arbitrary layer chain; used for gradient checks and oracle architectures.
Autoencoder make_network(const std::vector<int>& layer_sizes,
                         const std::vector<Activation>& activations, int bottleneck_layer,
                         Rng& rng);

struct Gradients {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;
};

// Mean over the batch of 0.5 * ||f(x) - x||^2 and its exact gradients.
double loss_and_gradients(const Autoencoder& net, const std::vector<Eigen::VectorXd>& batch,
                          Gradients& grads);

struct TrainOptions {
    int hidden = 16;
    long max_epochs = 50000;
    double learning_rate = 0.1;
    double validation_fraction = 0.1;
    long patience = 1000;       // epochs without validation improvement
    double min_delta = 1e-6;    // improvement threshold
    double min_learning_rate = 1e-6;
    std::uint64_t rng_seed = 0;
};

struct TrainReport {
    long epochs_run = 0;
    double final_learning_rate = 0.0;
    double train_rmse = 0.0;
    double validation_rmse = 0.0;
    std::vector<double> epoch_losses; // accepted losses, non-increasing
};

// Plain SGD with per-epoch shuffling. An epoch that increases the loss is
// rolled back and the learning rate halved, so the recorded loss curve is
// non-increasing by construction.
void train_network(Autoencoder& net, const std::vector<Eigen::VectorXd>& unit_points,
                   const TrainOptions& opts, TrainReport* report = nullptr);

// Builds the standard architecture (opts.hidden, bottleneck) and trains it.
Autoencoder train_on_points(const std::vector<Eigen::VectorXd>& unit_points, int bottleneck,
                            const TrainOptions& opts, TrainReport* report = nullptr);

// Per-feature RMSE of reconstruction over normalized points.
double reconstruction_rmse(const Autoencoder& net, const std::vector<Eigen::VectorXd>& unit_points);

/// Trained reducer plus the normalization that feeds it.
struct Codec {
    Autoencoder net;
    NormStats stats;

    Eigen::VectorXd encode_state(const JointState& state, long* clamp_events = nullptr) const;
    JointState decode_reduced(const Eigen::VectorXd& a_reduced) const;
};

std::vector<Eigen::VectorXd> collect_unit_points(const Dataset& dataset, const NormStats& stats,
                                                 long* clamp_events = nullptr);

Codec train_codec(const Dataset& dataset, int bottleneck, const TrainOptions& opts,
                  TrainReport* report = nullptr);

// Encoded trajectories, one vector of reduced points per training trajectory.
std::vector<std::vector<Eigen::VectorXd>> encode_dataset(const Codec& codec, const Dataset& dataset);

} // namespace reachkit
