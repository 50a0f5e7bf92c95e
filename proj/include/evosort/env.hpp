#ifndef EVOSORT_ENV_HPP_
#define EVOSORT_ENV_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "evosort/rng.hpp"

namespace evosort {

enum class SamplingMode { kConstant, kUniform, kTrend, kSeasonal };

std::string to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(const std::string& text);

inline constexpr int kHistoryLen = 5;
inline constexpr int kObsDim = kHistoryLen + 2;

using Observation = std::array<double, kObsDim>;

struct EnvConfig {
  int episode_length = 100;
  double q_max = 100.0;
  double theta_a = 0.90;
  double theta_b = 0.90;
  double accuracy_base_a = 0.95;
  double accuracy_base_b = 0.95;
  double accuracy_drop_a = 0.20;
  double accuracy_drop_b = 0.25;
  double accuracy_exponent = 2.0;
  int history_len = kHistoryLen;
  SamplingMode sampling_mode = SamplingMode::kUniform;
  double batch_size_min_frac = 0.5;
  double batch_size_max_frac = 1.0;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;

  // Flat key/value view, keys equal to field names.
  std::map<std::string, std::string> to_kv() const;
  // Overrides fields present in `kv`; unknown keys are left to the caller.
  void apply_kv(const std::map<std::string, std::string>& kv);

  bool operator==(const EnvConfig&) const = default;
};

struct InputBatch {
  double size = 0.0;
  double ratio_a = 0.5;
};

struct Containers {
  double a_true = 0.0;
  double a_false = 0.0;
  double b_true = 0.0;
  double b_false = 0.0;
  double residual = 0.0;

  double total() const { return a_true + a_false + b_true + b_false + residual; }
  bool operator==(const Containers&) const = default;
};

struct StepInfo {
  double quantity = 0.0;
  double purity_a = 1.0;
  double purity_b = 1.0;
  double ratio_a = 0.5;
};

struct StepResult {
  Observation observation{};
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// Ratio of material A for a given mode, step and noise draw u in [0, 1).
// Exposed separately so the composition rules can be checked without an rng.
double compose_ratio(SamplingMode mode, int t, int episode_length, double u);

// base - drop * load^exponent. Throws DomainError outside load in [0, 1].
double sorting_accuracy(double load_fraction, double base, double drop,
                        double exponent);

// Expected-mass routing through stage A then stage B.
Containers apply_sorting(double mass_a, double mass_b, double acc_a,
                         double acc_b, Containers containers);

// true / (true + false); 1.0 for an empty container.
double purity(double true_mass, double false_mass);

// Piecewise purity term: steep linear penalty below theta, bonus decaying to
// zero at unity above it. Continuous at theta with value 0.25.
double purity_reward(double p, double theta);

// Throughput term plus both purity terms; lies in [-20.25, 0.75].
double step_reward(double q, double q_max, double p_a, double p_b,
                   double theta_a, double theta_b);

inline constexpr double kMinStepReward = -20.25;
inline constexpr double kMaxStepReward = 0.75;

class SortingEnv {
 public:
  explicit SortingEnv(EnvConfig config = {});

  Observation reset(std::uint64_t seed);
  StepResult step(double action);

  // Draws the next batch and advances the rng by exactly two draws.
  InputBatch sample_batch();

  const EnvConfig& config() const { return config_; }
  int t() const { return t_; }
  bool done() const { return t_ >= config_.episode_length; }
  const Containers& containers() const { return containers_; }
  const std::array<double, kHistoryLen>& ratio_history() const {
    return ratio_history_;
  }
  double last_quantity() const { return last_quantity_; }
  double processed_total() const { return processed_total_; }
  Observation observation() const;

 private:
  EnvConfig config_;
  Rng rng_;
  int t_ = 0;
  bool started_ = false;
  std::array<double, kHistoryLen> ratio_history_{};
  Containers containers_;
  double last_quantity_ = 0.0;
  double processed_total_ = 0.0;
};

}  // namespace evosort

#endif  // EVOSORT_ENV_HPP_
