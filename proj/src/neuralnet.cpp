#include "driftkill/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "driftkill/error.hpp"

namespace driftkill::nn {

namespace {

void activate(Activation a, Matrix& z) {
    if (a == Activation::Relu) {
        z = z.cwiseMax(0.0);
    } else {
        z = z.array().tanh().matrix();
    }
}

// Derivative expressed through the activation output.
Matrix activation_grad(Activation a, const Matrix& activated) {
    if (a == Activation::Relu) return (activated.array() > 0.0).cast<double>().matrix();
    return (1.0 - activated.array().square()).matrix();
}

double sign(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string_view to_string(Activation a) noexcept { return a == Activation::Relu ? "relu" : "tanh"; }

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    throw Error(ErrorKind::InvalidInput, "unknown activation `" + std::string(name) + "`");
}

DenseNet::DenseNet(std::size_t input_dim, std::vector<std::size_t> hidden, Activation activation)
    : activation_(activation) {
    if (input_dim == 0) throw Error(ErrorKind::InvalidInput, "network input dimension must be positive");
    sizes_.push_back(input_dim);
    for (std::size_t h : hidden) {
        if (h == 0) throw Error(ErrorKind::InvalidInput, "hidden layers must have at least one unit");
        sizes_.push_back(h);
    }
    sizes_.push_back(1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(offset);
        offset += (sizes_[l] + 1) * sizes_[l + 1];
    }
    params_.assign(offset, 0.0);
}

DenseNet DenseNet::glorot(std::size_t input_dim, std::vector<std::size_t> hidden, Activation activation,
                          std::uint64_t seed) {
    DenseNet net(input_dim, std::move(hidden), activation);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double fan_in = static_cast<double>(net.sizes_[l]);
        const double fan_out = static_cast<double>(net.sizes_[l + 1]);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto w = net.weights(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
    return net;
}

std::vector<std::size_t> DenseNet::hidden() const {
    if (sizes_.size() < 2) return {};
    return {sizes_.begin() + 1, sizes_.end() - 1};
}

Eigen::Map<Matrix> DenseNet::weights(std::size_t layer) {
    const auto rows = static_cast<Eigen::Index>(sizes_.at(layer + 1));
    const auto cols = static_cast<Eigen::Index>(sizes_.at(layer));
    return {params_.data() + weight_offset(layer), rows, cols};
}

Eigen::Map<const Matrix> DenseNet::weights(std::size_t layer) const {
    const auto rows = static_cast<Eigen::Index>(sizes_.at(layer + 1));
    const auto cols = static_cast<Eigen::Index>(sizes_.at(layer));
    return {params_.data() + weight_offset(layer), rows, cols};
}

Eigen::Map<Vector> DenseNet::bias(std::size_t layer) {
    const auto rows = static_cast<Eigen::Index>(sizes_.at(layer + 1));
    return {params_.data() + weight_offset(layer) + sizes_[layer] * sizes_[layer + 1], rows};
}

Eigen::Map<const Vector> DenseNet::bias(std::size_t layer) const {
    const auto rows = static_cast<Eigen::Index>(sizes_.at(layer + 1));
    return {params_.data() + weight_offset(layer) + sizes_[layer] * sizes_[layer + 1], rows};
}

std::size_t count_params(const DenseNet& net) noexcept { return net.parameters().size(); }

std::vector<std::vector<double>> delay_embed(std::span<const std::vector<double>> series, std::size_t n_steps) {
    if (n_steps == 0) throw Error(ErrorKind::InvalidInput, "n_steps must be at least 1");
    if (series.empty()) throw Error(ErrorKind::InvalidInput, "delay embedding needs at least one feature");
    const std::size_t len = series.front().size();
    for (const auto& s : series) {
        if (s.size() != len) throw Error(ErrorKind::LengthMismatch, "feature series differ in length");
    }
    if (len < n_steps) {
        throw Error(ErrorKind::TooShort, "series of length " + std::to_string(len) + " is shorter than " +
                                             std::to_string(n_steps) + " time steps");
    }
    std::vector<std::vector<double>> rows(len - n_steps + 1);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        rows[j].reserve(series.size() * n_steps);
        for (const auto& s : series) rows[j].insert(rows[j].end(), s.begin() + j, s.begin() + j + n_steps);
    }
    return rows;
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix mask(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) mask(i, j) = u(rng) < rate ? 0.0 : keep_scale;
    return mask;
}

namespace {

struct ForwardCache {
    std::vector<Matrix> activations;  // layer inputs after dropout; activations[0] is the input
    std::vector<Matrix> slopes;       // activation derivative per hidden layer, before dropout
    std::vector<Matrix> masks;        // per hidden layer; empty when no dropout
    Matrix output;                    // 1 x batch
};

ForwardCache run_forward(const DenseNet& net, const Matrix& inputs, std::mt19937_64* rng, double rate,
                         bool keep_slopes = false) {
    if (static_cast<std::size_t>(inputs.rows()) != net.input_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "input has " + std::to_string(inputs.rows()) +
                                                      " features, network expects " +
                                                      std::to_string(net.input_dim()));
    }
    const bool dropout = rng != nullptr && rate > 0.0;
    ForwardCache cache;
    cache.activations.push_back(inputs);
    const std::size_t layers = net.layer_count();
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        Matrix z = net.weights(l) * cache.activations.back();
        z.colwise() += net.bias(l);
        activate(net.activation(), z);
        if (keep_slopes) cache.slopes.push_back(activation_grad(net.activation(), z));
        if (dropout) {
            cache.masks.push_back(dropout_mask(z.rows(), z.cols(), rate, *rng));
            z.array() *= cache.masks.back().array();
        }
        cache.activations.push_back(std::move(z));
    }
    cache.output = net.weights(layers - 1) * cache.activations.back();
    cache.output.colwise() += net.bias(layers - 1);
    return cache;
}

}  // namespace

double forward(const DenseNet& net, std::span<const double> x, bool training, std::mt19937_64& rng,
               double dropout_rate) {
    const Matrix input = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    const auto cache = run_forward(net, input, training ? &rng : nullptr, dropout_rate);
    return cache.output(0, 0);
}

Vector predict(const DenseNet& net, const Matrix& inputs) {
    return run_forward(net, inputs, nullptr, 0.0).output.row(0).transpose();
}

double mae_loss(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw Error(ErrorKind::LengthMismatch, "prediction and target lengths differ");
    if (pred.empty()) throw Error(ErrorKind::LengthMismatch, "MAE of an empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
    return sum / static_cast<double>(pred.size());
}

Gradients backprop(const DenseNet& net, const Matrix& inputs, std::span<const double> targets, std::mt19937_64* rng,
                   double dropout_rate) {
    if (static_cast<std::size_t>(inputs.cols()) != targets.size())
        throw Error(ErrorKind::DimensionMismatch, "one target per input column");
    if (targets.empty()) throw Error(ErrorKind::DimensionMismatch, "empty batch");

    const ForwardCache cache = run_forward(net, inputs, rng, dropout_rate, true);
    const auto batch = static_cast<double>(targets.size());

    Gradients g;
    g.values.assign(net.parameters().size(), 0.0);
    Matrix delta(1, inputs.cols());
    double loss = 0.0;
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
        const double r = cache.output(0, j) - targets[static_cast<std::size_t>(j)];
        loss += std::abs(r);
        delta(0, j) = sign(r) / batch;
    }
    g.loss = loss / batch;

    // Gradient views share the parameter layout.
    DenseNet grad_view = net;
    for (std::size_t l = net.layer_count(); l-- > 0;) {
        grad_view.weights(l) = delta * cache.activations[l].transpose();
        grad_view.bias(l) = delta.rowwise().sum();
        if (l == 0) break;
        Matrix back = net.weights(l).transpose() * delta;
        if (!cache.masks.empty()) back.array() *= cache.masks[l - 1].array();
        back.array() *= cache.slopes[l - 1].array();
        delta = std::move(back);
    }
    const auto params = grad_view.parameters();
    std::copy(params.begin(), params.end(), g.values.begin());
    return g;
}

void adamax_step(std::span<double> params, std::span<const double> grads, AdamaxState& state, double lr) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.u.size() != params.size())
        throw Error(ErrorKind::DimensionMismatch, "parameter, gradient and optimizer state sizes differ");
    ++state.t;
    const double step = lr / (1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.u[i] = std::max(state.beta2 * state.u[i], std::abs(grads[i]));
        params[i] -= step * state.m[i] / std::max(state.u[i], state.eps);
    }
}

void TrainConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidInput, what); };
    if (!(learning_rate > 0.0)) bad("learning_rate must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must be in [0, 1)");
    if (batch_size == 0) bad("batch_size must be at least 1");
    if (time_steps == 0) bad("time_steps must be at least 1");
    if (!(noise_sigma >= 0.0)) bad("noise_sigma must be non-negative");
    for (std::size_t h : hidden) {
        if (h == 0) bad("hidden layers must have at least one unit");
    }
}

TrainResult train(DenseNet net, const Matrix& inputs, std::span<const double> targets, const TrainConfig& config) {
    config.validate();
    if (targets.empty() || inputs.cols() == 0) throw Error(ErrorKind::EmptyDataset, "no training samples");
    if (static_cast<std::size_t>(inputs.cols()) != targets.size())
        throw Error(ErrorKind::DimensionMismatch, "one target per input column");
    if (static_cast<std::size_t>(inputs.rows()) != net.input_dim())
        throw Error(ErrorKind::DimensionMismatch, "input rows do not match the network input dimension");

    TrainResult result{std::move(net), {}};
    result.loss_history.reserve(config.epochs);
    std::mt19937_64 rng(config.rng_seed);
    AdamaxState state(count_params(result.net));

    const std::size_t n = targets.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Matrix batch_in;
    std::vector<double> batch_t;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t size = std::min(config.batch_size, n - begin);
            batch_in.resize(inputs.rows(), static_cast<Eigen::Index>(size));
            batch_t.resize(size);
            for (std::size_t k = 0; k < size; ++k) {
                batch_in.col(static_cast<Eigen::Index>(k)) = inputs.col(static_cast<Eigen::Index>(order[begin + k]));
                batch_t[k] = targets[order[begin + k]];
            }
            const Gradients g = backprop(result.net, batch_in, batch_t, &rng, config.dropout);
            if (!std::isfinite(g.loss)) {
                throw Error(ErrorKind::Divergence, "training loss became non-finite in epoch " +
                                                       std::to_string(epoch + 1));
            }
            adamax_step(result.net.parameters(), g.values, state, config.learning_rate);
            epoch_loss += g.loss * static_cast<double>(size);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

}  // namespace driftkill::nn
