#include "redistrib/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "redistrib/errors.hpp"

namespace redistrib {

Mlp::Mlp(std::size_t input_dim, std::vector<std::size_t> hidden_sizes)
    : input_dim_(input_dim), hidden_sizes_(std::move(hidden_sizes)) {
  if (input_dim_ == 0) throw ContractError("Mlp: input_dim must be positive");
  std::size_t fan_in = input_dim_;
  for (std::size_t width : hidden_sizes_) {
    if (width == 0) throw ContractError("Mlp: hidden layer sizes must be positive");
    weights_.emplace_back(width, fan_in);
    biases_.emplace_back(width, 0.0);
    fan_in = width;
  }
  weights_.emplace_back(1, fan_in);
  biases_.emplace_back(1, 0.0);
}

std::size_t Mlp::hidden_node_count() const noexcept {
  return std::accumulate(hidden_sizes_.begin(), hidden_sizes_.end(), std::size_t{0});
}

void Mlp::enable_skip() {
  if (skip_.empty()) skip_.assign(input_dim_, 0.0);
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t count = skip_.size();
  for (std::size_t l = 0; l < weights_.size(); ++l) count += weights_[l].data.size() + biases_[l].size();
  return count;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.insert(flat.end(), weights_[l].data.begin(), weights_[l].data.end());
    flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
  }
  flat.insert(flat.end(), skip_.begin(), skip_.end());
  return flat;
}

void Mlp::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw ContractError("Mlp::assign: parameter count mismatch");
  auto it = flat.begin();
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    std::copy_n(it, weights_[l].data.size(), weights_[l].data.begin());
    it += static_cast<std::ptrdiff_t>(weights_[l].data.size());
    std::copy_n(it, biases_[l].size(), biases_[l].begin());
    it += static_cast<std::ptrdiff_t>(biases_[l].size());
  }
  std::copy_n(it, skip_.size(), skip_.begin());
}

void Mlp::remove_hidden_node(std::size_t layer, std::size_t node) {
  if (layer >= hidden_sizes_.size() || node >= hidden_sizes_[layer])
    throw ContractError("remove_hidden_node: no such hidden node");
  if (hidden_sizes_[layer] == 1) throw ContractError("remove_hidden_node: cannot empty a hidden layer");

  Matrix& in = weights_[layer];
  Matrix shrunk_in(in.rows - 1, in.cols);
  for (std::size_t r = 0, dst = 0; r < in.rows; ++r) {
    if (r == node) continue;
    for (std::size_t c = 0; c < in.cols; ++c) shrunk_in(dst, c) = in(r, c);
    ++dst;
  }
  in = std::move(shrunk_in);
  biases_[layer].erase(biases_[layer].begin() + static_cast<std::ptrdiff_t>(node));

  Matrix& out = weights_[layer + 1];
  Matrix shrunk_out(out.rows, out.cols - 1);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0, dst = 0; c < out.cols; ++c) {
      if (c == node) continue;
      shrunk_out(r, dst++) = out(r, c);
    }
  out = std::move(shrunk_out);
  --hidden_sizes_[layer];
}

void Mlp::validate() const {
  if (input_dim_ == 0) throw ContractError("Mlp: input_dim must be positive");
  if (weights_.size() != hidden_sizes_.size() + 1 || biases_.size() != weights_.size())
    throw ContractError("Mlp: layer count does not match hidden_sizes");
  std::size_t fan_in = input_dim_;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const std::size_t width = l < hidden_sizes_.size() ? hidden_sizes_[l] : 1;
    const Matrix& w = weights_[l];
    if (width == 0 || w.rows != width || w.cols != fan_in || w.data.size() != width * fan_in ||
        biases_[l].size() != width)
      throw ContractError("Mlp: shape mismatch in layer " + std::to_string(l));
    fan_in = width;
  }
  if (!skip_.empty() && skip_.size() != input_dim_) throw ContractError("Mlp: skip term has wrong length");
  for (double p : flatten())
    if (!std::isfinite(p)) throw ContractError("Mlp: non-finite parameter");
}

namespace {

void check_input(const Mlp& net, std::span<const double> input) {
  if (input.size() != net.input_dim())
    throw ContractError("forward: expected " + std::to_string(net.input_dim()) + " inputs, got " +
                        std::to_string(input.size()));
}

// Fills pre[l] and post[l] for every layer; the final layer has no ReLU.
void run_layers(const Mlp& net, std::span<const double> input, std::vector<std::vector<double>>& pre,
                std::vector<std::vector<double>>& post) {
  const std::size_t layers = net.layer_count();
  pre.resize(layers);
  post.resize(layers);
  std::span<const double> in = input;
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = net.weights(l);
    const std::vector<double>& b = net.biases(l);
    pre[l].resize(w.rows);
    post[l].resize(w.rows);
    const bool hidden = l + 1 < layers;
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double* row = &w.data[r * w.cols];
      double z = b[r];
      for (std::size_t c = 0; c < w.cols; ++c) z += row[c] * in[c];
      if (!std::isfinite(z)) throw NumericalError("non-finite pre-activation", l);
      pre[l][r] = z;
      post[l][r] = hidden ? std::max(z, 0.0) : z;
    }
    in = post[l];
  }
  if (net.has_skip()) {
    double direct = 0.0;
    for (std::size_t c = 0; c < input.size(); ++c) direct += net.skip()[c] * input[c];
    post.back()[0] += direct;
    if (!std::isfinite(post.back()[0])) throw NumericalError("non-finite output", layers - 1);
  }
}

}  // namespace

double forward(const Mlp& net, std::span<const double> input) {
  check_input(net, input);
  thread_local std::vector<std::vector<double>> pre, post;
  run_layers(net, input, pre, post);
  return post.back()[0];
}

std::vector<std::vector<double>> hidden_preactivations(const Mlp& net, std::span<const double> input) {
  check_input(net, input);
  std::vector<std::vector<double>> pre, post;
  run_layers(net, input, pre, post);
  pre.pop_back();
  return pre;
}

std::vector<double> gradients(const Mlp& net, std::span<const GradientSample> batch) {
  if (batch.empty()) throw ContractError("gradients: empty batch");
  const std::size_t layers = net.layer_count();

  // Offsets of each layer's block in the flat layout.
  std::vector<std::size_t> offset(layers + 1, 0);
  for (std::size_t l = 0; l < layers; ++l)
    offset[l + 1] = offset[l] + net.weights(l).data.size() + net.biases(l).size();
  std::vector<double> grad(net.parameter_count(), 0.0);

  std::vector<std::vector<double>> pre, post, delta(layers);
  for (const GradientSample& sample : batch) {
    check_input(net, sample.input);
    run_layers(net, sample.input, pre, post);
    if (sample.upstream == 0.0) continue;

    delta[layers - 1].assign(1, sample.upstream);
    for (std::size_t l = layers; l-- > 0;) {
      const Matrix& w = net.weights(l);
      std::span<const double> in = l == 0 ? sample.input : std::span<const double>(post[l - 1]);
      double* gw = &grad[offset[l]];
      double* gb = gw + w.data.size();
      for (std::size_t r = 0; r < w.rows; ++r) {
        const double d = delta[l][r];
        if (d == 0.0) continue;
        for (std::size_t c = 0; c < w.cols; ++c) gw[r * w.cols + c] += d * in[c];
        gb[r] += d;
      }
      if (l == 0) break;
      std::vector<double>& below = delta[l - 1];
      below.assign(w.cols, 0.0);
      for (std::size_t r = 0; r < w.rows; ++r) {
        const double d = delta[l][r];
        if (d == 0.0) continue;
        for (std::size_t c = 0; c < w.cols; ++c) below[c] += d * w(r, c);
      }
      for (std::size_t c = 0; c < w.cols; ++c) {
        if (pre[l - 1][c] <= 0.0) below[c] = 0.0;
        if (!std::isfinite(below[c])) throw NumericalError("non-finite gradient", l - 1);
      }
    }
    if (net.has_skip()) {
      double* gs = &grad[offset[layers]];
      for (std::size_t c = 0; c < net.input_dim(); ++c) gs[c] += sample.upstream * sample.input[c];
    }
  }
  return grad;
}

AdamState AdamState::for_net(const Mlp& net, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.first_moment.assign(net.parameter_count(), 0.0);
  state.second_moment.assign(net.parameter_count(), 0.0);
  return state;
}

void adam_step(Mlp& net, AdamState& state, std::span<const double> grads) {
  const std::size_t count = net.parameter_count();
  if (grads.size() != count || state.first_moment.size() != count || state.second_moment.size() != count)
    throw ContractError("adam_step: shape mismatch");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  std::vector<double> params = net.flatten();
  for (std::size_t i = 0; i < count; ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  net.assign(params);
}

Mlp init_random(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes, std::uint64_t seed) {
  Mlp net(input_dim, hidden_sizes);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix& w = net.weights(l);
    const double limit = std::sqrt(1.0 / static_cast<double>(w.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& x : w.data) x = dist(rng);
  }
  return net;
}

}  // namespace redistrib
