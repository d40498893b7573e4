#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace driftkill::nn {

enum class Activation { Relu, Tanh };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// Samples as columns: an input batch is input_dim x batch_size.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Fully connected network with a single linear output.
///
/// All weights and biases live in one flat parameter vector, layer by layer:
/// the column-major weight matrix (fan_out x fan_in) followed by the bias.
/// Layer views are maps into that storage, so the optimizer and the serializer
/// work on the flat span.
class DenseNet {
public:
    DenseNet() = default;
    /// All parameters zero. Throws Error(InvalidInput) for input_dim == 0 or an empty hidden layer.
    DenseNet(std::size_t input_dim, std::vector<std::size_t> hidden, Activation activation = Activation::Relu);

    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    static DenseNet glorot(std::size_t input_dim, std::vector<std::size_t> hidden, Activation activation,
                           std::uint64_t seed);

    std::size_t input_dim() const noexcept { return sizes_.empty() ? 0 : sizes_.front(); }
    std::vector<std::size_t> hidden() const;
    /// Input, hidden layers and the output (always 1).
    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t layer_count() const noexcept { return sizes_.empty() ? 0 : sizes_.size() - 1; }
    Activation activation() const noexcept { return activation_; }

    Eigen::Map<Matrix> weights(std::size_t layer);
    Eigen::Map<const Matrix> weights(std::size_t layer) const;
    Eigen::Map<Vector> bias(std::size_t layer);
    Eigen::Map<const Vector> bias(std::size_t layer) const;

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
    Activation activation_ = Activation::Relu;
};

std::size_t count_params(const DenseNet& net) noexcept;

/// Sliding windows over aligned per-feature series. Row j concatenates
/// series[f][j .. j + n_steps - 1] for every feature f in order (newest last).
std::vector<std::vector<double>> delay_embed(std::span<const std::vector<double>> series, std::size_t n_steps);

/// Inverted dropout mask: entries are 0 with probability `rate`, else 1 / (1 - rate).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

/// Single-sample forward pass. Dropout is applied to hidden activations only when `training`.
double forward(const DenseNet& net, std::span<const double> x, bool training, std::mt19937_64& rng,
               double dropout_rate = 0.0);

/// Inference over a batch (no dropout). Returns one output per column.
Vector predict(const DenseNet& net, const Matrix& inputs);

double mae_loss(std::span<const double> pred, std::span<const double> target);

struct Gradients {
    std::vector<double> values;  // same layout as DenseNet::parameters()
    double loss = 0.0;           // batch MAE of the forward pass used
};

/// Gradient of the batch MAE. With a non-null `rng` and a positive rate, one dropout
/// mask per hidden layer is drawn and shared by the forward and backward pass.
/// The subgradient of |r| at r = 0 is taken as 0.
Gradients backprop(const DenseNet& net, const Matrix& inputs, std::span<const double> targets,
                   std::mt19937_64* rng = nullptr, double dropout_rate = 0.0);

struct AdamaxState {
    explicit AdamaxState(std::size_t n = 0) : m(n, 0.0), u(n, 0.0) {}

    std::vector<double> m;  // first moment
    std::vector<double> u;  // exponentially weighted infinity norm
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adamax update:
///   m <- b1 m + (1 - b1) g,  u <- max(b2 u, |g|),
///   theta <- theta - lr / (1 - b1^t) * m / max(u, eps)
/// with t incremented first. `eps` only guards the division while u is still zero.
void adamax_step(std::span<double> params, std::span<const double> grads, AdamaxState& state, double lr);

struct TrainConfig {
    double learning_rate = 0.004;
    double dropout = 0.1;
    std::size_t epochs = 40;
    std::size_t batch_size = 256;
    std::size_t time_steps = 10;
    std::uint64_t rng_seed = 42;
    double noise_sigma = 0.5;  // read by the displacement estimator
    std::vector<std::size_t> hidden{32, 32};
    Activation activation = Activation::Relu;

    /// Throws Error(InvalidInput) naming the bad field.
    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
    DenseNet net;
    std::vector<double> loss_history;  // epoch-mean training loss, one per epoch
};

/// Mini-batch training of `net` on MAE with Adamax. Samples are reshuffled each
/// epoch from a generator seeded with `config.rng_seed`; the last batch may be
/// partial. Throws Error(EmptyDataset), Error(DimensionMismatch) and, when the loss
/// stops being finite, Error(Divergence).
TrainResult train(DenseNet net, const Matrix& inputs, std::span<const double> targets, const TrainConfig& config);

}  // namespace driftkill::nn
