#ifndef EVOSORT_NN_HPP_
#define EVOSORT_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace evosort {

inline constexpr std::size_t kStandardMlpParams = (7 * 32 + 32) + (32 * 32 + 32) + (32 * 1 + 1);

// Dense network with tanh hidden layers and a linear scalar output.
// Parameters are stored flat, layer by layer: weights row-major
// (out x in) followed by biases.
class Mlp {
 public:
  // Per-sample activations kept by forward() for backward().
  struct Cache {
    std::vector<std::size_t> sizes;
    // activations[0] is the input; activations[l] the output of layer l.
    std::vector<std::vector<double>> activations;
  };

  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> sizes);

  // The [7, 32, 32, 1] network shared by actor and critic.
  static Mlp standard();

  double forward(std::span<const double> input, Cache& cache) const;
  double forward(std::span<const double> input) const;

  // Accumulates d(output)/d(params) * output_grad into `grad`.
  void backward(const Cache& cache, double output_grad,
                std::span<double> grad) const;

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + sizes_[layer] * sizes_[layer + 1];
  }

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

// Orthogonal init: hidden layers gain sqrt(2), output layer `output_gain`,
// zero biases.
Mlp init_params(const std::vector<std::size_t>& sizes, double output_gain,
                std::uint64_t seed);

// Fills `weights` (rows x cols, row-major) with a scaled semi-orthogonal
// matrix drawn from `seed`.
void orthogonal_fill(std::span<double> weights, std::size_t rows,
                     std::size_t cols, double gain, std::uint64_t seed);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t num_params, AdamConfig config = {});

  // Bias-corrected update. Throws NumericalError on non-finite gradients
  // before touching any state.
  void step(std::span<double> params, std::span<const double> grads);

  const AdamConfig& config() const { return config_; }
  long long step_count() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(long long t, std::vector<double> m, std::vector<double> v);

 private:
  AdamConfig config_;
  long long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace evosort

#endif  // EVOSORT_NN_HPP_
