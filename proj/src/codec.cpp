#include "reachkit/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace reachkit {

Eigen::VectorXd state_features(const JointState& state) {
    Eigen::VectorXd f(state.positions.size() + state.velocities.size());
    f << state.positions, state.velocities;
    return f;
}

JointState state_from_features(const Eigen::VectorXd& features) {
    if (features.size() % 2 != 0)
        throw ConfigError("state_from_features: feature vector must have even length");
    JointState s;
    Eigen::Index n = features.size() / 2;
    s.positions = features.head(n);
    s.velocities = features.tail(n);
    return s;
}

NormStats fit_norm_stats(const std::vector<Eigen::VectorXd>& raw_points) {
    if (raw_points.empty())
        throw ConfigError("fit_norm_stats: no points");
    const Eigen::Index d = raw_points.front().size();
    NormStats stats;
    stats.min = raw_points.front();
    stats.max = raw_points.front();
    for (const Eigen::VectorXd& p : raw_points) {
        if (p.size() != d)
            throw ConfigError("fit_norm_stats: inconsistent feature dimensions");
        stats.min = stats.min.cwiseMin(p);
        stats.max = stats.max.cwiseMax(p);
    }
    stats.constant.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
        stats.constant[j] = stats.max[j] == stats.min[j] ? 1 : 0;
    return stats;
}

NormStats fit_norm_stats(const Dataset& dataset) {
    std::vector<Eigen::VectorXd> raw;
    for (const Trajectory& t : dataset.train)
        for (const JointState& s : t.samples) raw.push_back(state_features(s));
    return fit_norm_stats(raw);
}

Eigen::VectorXd normalize(const Eigen::VectorXd& raw, const NormStats& stats,
                          long* clamp_events) {
    if (raw.size() != stats.min.size())
        throw ConfigError("normalize: dimension mismatch");
    Eigen::VectorXd unit(raw.size());
    for (Eigen::Index j = 0; j < raw.size(); ++j) {
        if (stats.constant[j]) {
            unit[j] = 0.5;
            continue;
        }
        double u = (raw[j] - stats.min[j]) / (stats.max[j] - stats.min[j]);
        if (u < 0.0 || u > 1.0) {
            if (clamp_events) ++*clamp_events;
            u = std::clamp(u, 0.0, 1.0);
        }
        unit[j] = u;
    }
    return unit;
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& unit, const NormStats& stats) {
    if (unit.size() != stats.min.size())
        throw ConfigError("denormalize: dimension mismatch");
    Eigen::VectorXd raw(unit.size());
    for (Eigen::Index j = 0; j < unit.size(); ++j)
        raw[j] = stats.constant[j] ? stats.min[j]
                                   : stats.min[j] + unit[j] * (stats.max[j] - stats.min[j]);
    return raw;
}

namespace {

Eigen::VectorXd apply_activation(Activation act, const Eigen::VectorXd& z) {
    switch (act) {
        case Activation::Tanh: return z.array().tanh();
        case Activation::Logistic: return 1.0 / (1.0 + (-z.array()).exp());
        case Activation::Linear: return z;
    }
    throw std::logic_error("unknown activation");
}

// Derivative expressed through the activation value.
Eigen::ArrayXd activation_slope(Activation act, const Eigen::VectorXd& a) {
    switch (act) {
        case Activation::Tanh: return 1.0 - a.array().square();
        case Activation::Logistic: return a.array() * (1.0 - a.array());
        case Activation::Linear: return Eigen::ArrayXd::Ones(a.size());
    }
    throw std::logic_error("unknown activation");
}

struct Workspace {
    std::vector<Eigen::VectorXd> a;     // layer activations, a[0] = input
    std::vector<Eigen::VectorXd> delta; // per non-input layer

    void resize(const std::vector<int>& sizes) {
        a.resize(sizes.size());
        delta.resize(sizes.size() - 1);
        for (std::size_t l = 0; l < sizes.size(); ++l) a[l].resize(sizes[l]);
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) delta[l].resize(sizes[l + 1]);
    }
};

void forward_into(const Autoencoder& net, const Eigen::VectorXd& x, Workspace& ws) {
    ws.a[0] = x;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        ws.a[l + 1].noalias() = net.weights[l] * ws.a[l];
        ws.a[l + 1] += net.biases[l];
        ws.a[l + 1] = apply_activation(net.activations[l], ws.a[l + 1]);
    }
}

// Squared-error backprop for one sample; fills ws.delta. Returns
// 0.5 * ||output - x||^2.
double backward_into(const Autoencoder& net, const Eigen::VectorXd& x, Workspace& ws) {
    const std::size_t L = net.weights.size();
    Eigen::VectorXd err = ws.a[L] - x;
    double loss = 0.5 * err.squaredNorm();
    ws.delta[L - 1] = err.array() * activation_slope(net.activations[L - 1], ws.a[L]);
    for (std::size_t l = L - 1; l > 0; --l) {
        ws.delta[l - 1].noalias() = net.weights[l].transpose() * ws.delta[l];
        ws.delta[l - 1] =
            ws.delta[l - 1].array() * activation_slope(net.activations[l - 1], ws.a[l]);
    }
    return loss;
}

double mean_loss(const Autoencoder& net, const std::vector<Eigen::VectorXd>& pts,
                 Workspace& ws) {
    double acc = 0.0;
    for (const Eigen::VectorXd& x : pts) {
        forward_into(net, x, ws);
        acc += 0.5 * (ws.a.back() - x).squaredNorm();
    }
    return acc / static_cast<double>(pts.size());
}

} // namespace

Eigen::VectorXd Autoencoder::forward(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < weights.size(); ++l)
        a = apply_activation(activations[l], weights[l] * a + biases[l]);
    return a;
}

Eigen::VectorXd Autoencoder::encode(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a = x;
    for (int l = 0; l < bottleneck_layer; ++l)
        a = apply_activation(activations[l], weights[l] * a + biases[l]);
    return a;
}

Eigen::VectorXd Autoencoder::decode(const Eigen::VectorXd& a_reduced) const {
    Eigen::VectorXd a = a_reduced;
    for (std::size_t l = static_cast<std::size_t>(bottleneck_layer); l < weights.size(); ++l)
        a = apply_activation(activations[l], weights[l] * a + biases[l]);
    return a;
}

Autoencoder make_network(const std::vector<int>& layer_sizes,
                         const std::vector<Activation>& activations, int bottleneck_layer,
                         Rng& rng) {
    if (layer_sizes.size() < 2)
        throw ConfigError("make_network: need at least input and output layers");
    for (int s : layer_sizes)
        if (s < 1) throw ConfigError("make_network: layer sizes must be >= 1");
    if (activations.size() != layer_sizes.size() - 1)
        throw ConfigError("make_network: one activation per non-input layer");
    if (bottleneck_layer < 1 || bottleneck_layer >= static_cast<int>(layer_sizes.size()))
        throw ConfigError("make_network: bottleneck layer out of range");

    Autoencoder net;
    net.layer_sizes = layer_sizes;
    net.activations = activations;
    net.bottleneck_layer = bottleneck_layer;
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        int rows = net.layer_sizes[l + 1], cols = net.layer_sizes[l];
        double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        Eigen::MatrixXd w(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Eigen::VectorXd::Zero(rows));
    }
    return net;
}

Autoencoder make_autoencoder(int input_dim, int hidden, int bottleneck, Rng& rng) {
    if (input_dim < 1) throw ConfigError("autoencoder: input_dim must be >= 1");
    if (hidden < 1) throw ConfigError("autoencoder: hidden size must be >= 1");
    if (bottleneck < 1 || bottleneck >= input_dim)
        throw ConfigError("autoencoder: bottleneck must satisfy 1 <= |A'| < |A|");
    return make_network({input_dim, hidden, bottleneck, hidden, input_dim},
                        {Activation::Tanh, Activation::Tanh, Activation::Tanh,
                         Activation::Logistic},
                        2, rng);
}

double loss_and_gradients(const Autoencoder& net, const std::vector<Eigen::VectorXd>& batch,
                          Gradients& grads) {
    if (batch.empty())
        throw ConfigError("loss_and_gradients: empty batch");
    grads.d_weights.resize(net.weights.size());
    grads.d_biases.resize(net.biases.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        grads.d_weights[l] = Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols());
        grads.d_biases[l] = Eigen::VectorXd::Zero(net.biases[l].size());
    }
    Workspace ws;
    ws.resize(net.layer_sizes);
    double loss = 0.0;
    for (const Eigen::VectorXd& x : batch) {
        forward_into(net, x, ws);
        loss += backward_into(net, x, ws);
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            grads.d_weights[l].noalias() += ws.delta[l] * ws.a[l].transpose();
            grads.d_biases[l] += ws.delta[l];
        }
    }
    double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        grads.d_weights[l] *= inv_n;
        grads.d_biases[l] *= inv_n;
    }
    return loss * inv_n;
}

void train_network(Autoencoder& net, const std::vector<Eigen::VectorXd>& unit_points,
                   const TrainOptions& opts, TrainReport* report) {
    if (unit_points.empty())
        throw ConfigError("train_network: empty training set");
    const int d = net.input_dim();
    for (const Eigen::VectorXd& p : unit_points)
        if (p.size() != d)
            throw ConfigError("train_network: point dimension does not match the network");

    Rng rng = Rng(opts.rng_seed).fork(1); // data-order stream, distinct from init

    // Validation split: shuffled copy, last fraction held out.
    std::vector<std::size_t> order(unit_points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(opts.validation_fraction * static_cast<double>(unit_points.size())));
    if (unit_points.size() >= 10 && n_val == 0) n_val = 1;
    std::size_t n_train = unit_points.size() - n_val;
    std::vector<Eigen::VectorXd> train_pts, val_pts;
    train_pts.reserve(n_train);
    val_pts.reserve(n_val);
    for (std::size_t i = 0; i < n_train; ++i) train_pts.push_back(unit_points[order[i]]);
    for (std::size_t i = n_train; i < order.size(); ++i) val_pts.push_back(unit_points[order[i]]);

    Workspace ws;
    ws.resize(net.layer_sizes);

    std::vector<std::size_t> visit(train_pts.size());
    std::iota(visit.begin(), visit.end(), std::size_t{0});

    double lr = opts.learning_rate;
    double accepted_loss = mean_loss(net, train_pts, ws);
    double best_metric = std::numeric_limits<double>::infinity();
    Autoencoder best = net;
    Autoencoder snapshot = net;
    long stall = 0;
    long epochs_run = 0;
    if (report) {
        *report = TrainReport{};
        report->epoch_losses.reserve(256);
    }

    for (long epoch = 0; epoch < opts.max_epochs; ++epoch) {
        snapshot = net;
        rng.shuffle(visit);
        for (std::size_t idx : visit) {
            const Eigen::VectorXd& x = train_pts[idx];
            forward_into(net, x, ws);
            backward_into(net, x, ws);
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                net.weights[l].noalias() -= lr * (ws.delta[l] * ws.a[l].transpose());
                net.biases[l] -= lr * ws.delta[l];
            }
        }
        double loss = mean_loss(net, train_pts, ws);
        if (!std::isfinite(loss))
            throw TrainingError("autoencoder loss diverged", epoch);
        ++epochs_run;
        if (loss > accepted_loss) {
            // Overshoot: rewind the epoch and take smaller steps.
            net = snapshot;
            lr *= 0.5;
            if (lr < opts.min_learning_rate) break;
            continue;
        }
        accepted_loss = loss;
        if (report) report->epoch_losses.push_back(loss);

        double metric = val_pts.empty() ? std::sqrt(2.0 * loss / d)
                                        : reconstruction_rmse(net, val_pts);
        if (metric < best_metric - opts.min_delta) {
            best_metric = metric;
            best = net;
            stall = 0;
        } else if (++stall >= opts.patience) {
            break;
        }
    }
    net = best;

    if (report) {
        report->epochs_run = epochs_run;
        report->final_learning_rate = lr;
        report->train_rmse = reconstruction_rmse(net, train_pts);
        report->validation_rmse =
            val_pts.empty() ? report->train_rmse : reconstruction_rmse(net, val_pts);
    }
}

Autoencoder train_on_points(const std::vector<Eigen::VectorXd>& unit_points, int bottleneck,
                            const TrainOptions& opts, TrainReport* report) {
    if (unit_points.empty())
        throw ConfigError("train_on_points: empty training set");
    const int d = static_cast<int>(unit_points.front().size());
    for (const Eigen::VectorXd& p : unit_points) {
        if (p.size() != d)
            throw ConfigError("train_on_points: inconsistent feature dimensions");
        if ((p.array() < -1e-12).any() || (p.array() > 1.0 + 1e-12).any())
            throw ConfigError("train_on_points: points must lie in [0,1]");
    }
    Rng rng(opts.rng_seed);
    Autoencoder net = make_autoencoder(d, opts.hidden, bottleneck, rng);
    train_network(net, unit_points, opts, report);
    return net;
}

double reconstruction_rmse(const Autoencoder& net,
                           const std::vector<Eigen::VectorXd>& unit_points) {
    if (unit_points.empty())
        throw ConfigError("reconstruction_rmse: no points");
    double acc = 0.0;
    std::size_t count = 0;
    for (const Eigen::VectorXd& x : unit_points) {
        acc += (net.forward(x) - x).squaredNorm();
        count += x.size();
    }
    return std::sqrt(acc / static_cast<double>(count));
}

Eigen::VectorXd Codec::encode_state(const JointState& state, long* clamp_events) const {
    return net.encode(normalize(state_features(state), stats, clamp_events));
}

JointState Codec::decode_reduced(const Eigen::VectorXd& a_reduced) const {
    return state_from_features(denormalize(net.decode(a_reduced), stats));
}

std::vector<Eigen::VectorXd> collect_unit_points(const Dataset& dataset, const NormStats& stats,
                                                 long* clamp_events) {
    std::vector<Eigen::VectorXd> pts;
    for (const Trajectory& t : dataset.train)
        for (const JointState& s : t.samples)
            pts.push_back(normalize(state_features(s), stats, clamp_events));
    return pts;
}

Codec train_codec(const Dataset& dataset, int bottleneck, const TrainOptions& opts,
                  TrainReport* report) {
    Codec codec;
    codec.stats = fit_norm_stats(dataset);
    std::vector<Eigen::VectorXd> pts = collect_unit_points(dataset, codec.stats);
    codec.net = train_on_points(pts, bottleneck, opts, report);
    return codec;
}

std::vector<std::vector<Eigen::VectorXd>> encode_dataset(const Codec& codec,
                                                         const Dataset& dataset) {
    std::vector<std::vector<Eigen::VectorXd>> out;
    out.reserve(dataset.train.size());
    for (const Trajectory& t : dataset.train) {
        std::vector<Eigen::VectorXd> enc;
        enc.reserve(t.samples.size());
        for (const JointState& s : t.samples)
            enc.push_back(codec.net.encode(normalize(state_features(s), codec.stats)));
        out.push_back(std::move(enc));
    }
    return out;
}

} // namespace reachkit
