#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace redistrib {

/// Dense row-major matrix; rows index the receiving layer, columns the sending one.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Fully connected ReLU network with a single linear output.
///
/// Layer l maps the activations of layer l-1 (the raw input for l = 0) to
/// pre-activations; every layer except the last is followed by ReLU. An
/// optional skip term adds a linear function of the raw input directly to the
/// output, which lets closed-form mechanisms with affine tails be written
/// without spending hidden nodes on them.
class Mlp {
 public:
  Mlp() = default;

  /// All-zero parameters.
  Mlp(std::size_t input_dim, std::vector<std::size_t> hidden_sizes);

  std::size_t input_dim() const noexcept { return input_dim_; }
  const std::vector<std::size_t>& hidden_sizes() const noexcept { return hidden_sizes_; }
  std::size_t hidden_layer_count() const noexcept { return hidden_sizes_.size(); }
  std::size_t hidden_node_count() const noexcept;

  /// Hidden layers plus the output layer.
  std::size_t layer_count() const noexcept { return weights_.size(); }

  Matrix& weights(std::size_t layer) { return weights_.at(layer); }
  const Matrix& weights(std::size_t layer) const { return weights_.at(layer); }
  std::vector<double>& biases(std::size_t layer) { return biases_.at(layer); }
  const std::vector<double>& biases(std::size_t layer) const { return biases_.at(layer); }

  bool has_skip() const noexcept { return !skip_.empty(); }
  /// Turns on the direct input->output term (zero-initialised). No-op if already on.
  void enable_skip();
  std::vector<double>& skip() { return skip_; }
  const std::vector<double>& skip() const { return skip_; }

  /// Flat parameter layout: per layer, weights row-major then biases; skip last.
  std::size_t parameter_count() const noexcept;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  /// Drops one hidden node: its row/bias in `layer` and its column in `layer + 1`.
  void remove_hidden_node(std::size_t layer, std::size_t node);

  /// Throws ContractError if shapes do not chain or a parameter is not finite.
  void validate() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::vector<std::size_t> hidden_sizes_;
  std::vector<Matrix> weights_;
  std::vector<std::vector<double>> biases_;
  std::vector<double> skip_;
};

double forward(const Mlp& net, std::span<const double> input);

/// Pre-activation values of every hidden layer for one input (used by bound checks).
std::vector<std::vector<double>> hidden_preactivations(const Mlp& net, std::span<const double> input);

struct GradientSample {
  std::span<const double> input;
  double upstream = 0.0;  // d(loss)/d(output)
};

/// Sum over the batch of upstream * d(output)/d(params), in flatten() layout.
/// The ReLU derivative at a pre-activation of exactly 0 is taken as 0.
std::vector<double> gradients(const Mlp& net, std::span<const GradientSample> batch);

struct AdamState {
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_net(const Mlp& net, double learning_rate = 1e-4);
};

void adam_step(Mlp& net, AdamState& state, std::span<const double> grads);

/// Weights uniform on +-sqrt(1/fan_in), biases zero, no skip term.
Mlp init_random(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes, std::uint64_t seed);

}  // namespace redistrib
