#include "evosort/nn.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "evosort/error.hpp"
#include "evosort/rng.hpp"

namespace evosort {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    throw ConfigError("Mlp: need at least input and scalar output layer");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(offset, 0.0);
}

Mlp Mlp::standard() {
  Mlp m({7, 32, 32, 1});
  if (m.num_params() != kStandardMlpParams) {
    throw ConfigError("Mlp::standard: parameter count mismatch");
  }
  return m;
}

double Mlp::forward(std::span<const double> input, Cache& cache) const {
  if (input.size() != sizes_.front()) {
    throw InputError("Mlp::forward: input size " + std::to_string(input.size()) +
                     ", expected " + std::to_string(sizes_.front()));
  }
  for (double x : input) {
    if (!std::isfinite(x)) throw InputError("Mlp::forward: non-finite input");
  }
  cache.sizes = sizes_;
  cache.activations.resize(sizes_.size());
  cache.activations[0].assign(input.begin(), input.end());
  const std::size_t layers = num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = params_.data() + bias_offset(l);
    const std::vector<double>& x = cache.activations[l];
    std::vector<double>& y = cache.activations[l + 1];
    y.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = (l + 1 < layers) ? std::tanh(acc) : acc;
    }
  }
  return cache.activations.back()[0];
}

double Mlp::forward(std::span<const double> input) const {
  Cache cache;
  return forward(input, cache);
}

void Mlp::backward(const Cache& cache, double output_grad,
                   std::span<double> grad) const {
  if (cache.sizes != sizes_ || cache.activations.size() != sizes_.size()) {
    throw ProtocolError("Mlp::backward: cache does not belong to this network shape");
  }
  if (grad.size() != params_.size()) {
    throw ProtocolError("Mlp::backward: gradient buffer has wrong size");
  }
  const std::size_t layers = num_layers();
  // delta holds dL/d(pre-activation) of the current layer.
  std::vector<double> delta{output_grad};
  std::vector<double> prev_delta;
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l];
    const std::size_t out = sizes_[l + 1];
    const std::vector<double>& x = cache.activations[l];
    double* gw = grad.data() + weight_offset(l);
    double* gb = grad.data() + bias_offset(l);
    const double* w = params_.data() + weight_offset(l);
    for (std::size_t o = 0; o < out; ++o) {
      gb[o] += delta[o];
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += delta[o] * x[i];
    }
    if (l == 0) break;
    prev_delta.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev_delta[i] += row[i] * delta[o];
    }
    // x is tanh(pre) for hidden layers.
    for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= 1.0 - x[i] * x[i];
    delta.swap(prev_delta);
  }
}

void orthogonal_fill(std::span<double> weights, std::size_t rows,
                     std::size_t cols, double gain, std::uint64_t seed) {
  if (weights.size() != rows * cols) {
    throw ConfigError("orthogonal_fill: buffer size mismatch");
  }
  Rng rng(seed);
  const std::size_t big = std::max(rows, cols);
  const std::size_t small = std::min(rows, cols);
  Eigen::MatrixXd a(big, small);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  // Sign fix makes the draw uniform over the orthogonal group.
  for (std::size_t j = 0; j < small; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  const Eigen::MatrixXd w = (rows >= cols) ? q : Eigen::MatrixXd(q.transpose());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) weights[i * cols + j] = gain * w(i, j);
  }
}

Mlp init_params(const std::vector<std::size_t>& sizes, double output_gain,
                std::uint64_t seed) {
  Mlp mlp(sizes);
  const std::size_t layers = mlp.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const double gain = (l + 1 < layers) ? std::sqrt(2.0) : output_gain;
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    orthogonal_fill(mlp.params().subspan(mlp.weight_offset(l), in * out), out, in,
                    gain, derive_seed(seed, l));
  }
  return mlp;
}

Adam::Adam(std::size_t num_params, AdamConfig config)
    : config_(config), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ProtocolError("Adam::step: parameter/gradient size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericalError("Adam::step: non-finite gradient at index " +
                           std::to_string(i) + " (step " + std::to_string(t_) + ")");
    }
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
    const double m_hat = m_[i] / correction1;
    const double v_hat = v_[i] / correction2;
    params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

void Adam::restore(long long t, std::vector<double> m, std::vector<double> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ProtocolError("Adam::restore: moment size mismatch");
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace evosort
