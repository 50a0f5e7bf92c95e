#ifndef EVOSORT_PPO_HPP_
#define EVOSORT_PPO_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "evosort/config.hpp"
#include "evosort/env.hpp"
#include "evosort/nn.hpp"
#include "evosort/policy.hpp"
#include "evosort/rng.hpp"

namespace evosort {

inline constexpr std::uint64_t kEvalSeedBase = 500;
inline constexpr std::uint64_t kMinTrainSeed = 1000;
inline constexpr std::uint64_t kDemoSeedBase = 3000;

struct TrainConfig {
  long long total_timesteps = 100000;
  long long eval_freq = 5000;
  int n_steps = 2048;
  int minibatch = 64;
  int update_epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double learning_rate = 3e-4;
  long long train_seed = 1000;
  int eval_episodes = 5;

  // Number of training episodes the run can consume, rounded up.
  long long max_train_episodes(int episode_length) const;
  // Includes the seed-range discipline: train seeds must stay inside
  // [1000, 3000) so they never touch test, eval or demonstration seeds.
  void validate(int episode_length) const;

  KeyValues to_kv() const;
  void apply_kv(const KeyValues& kv);
};

// Single environment that auto-resets with consecutive seeds.
class EpisodicEnv {
 public:
  EpisodicEnv(const EnvConfig& config, std::uint64_t first_seed);

  const Observation& observation() const { return obs_; }
  // Steps with the clipped action; on episode end resets to the next seed.
  StepResult step(double action);
  std::uint64_t current_seed() const { return seed_; }
  long long episodes_started() const { return episodes_; }

 private:
  SortingEnv env_;
  std::uint64_t seed_;
  long long episodes_ = 1;
  Observation obs_;
};

struct RolloutBuffer {
  std::vector<Observation> observations;
  std::vector<double> actions;  // pre-clip samples
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> means;  // actor mean at collection time
  double last_value = 0.0;
  std::vector<double> completed_returns;

  std::size_t size() const { return rewards.size(); }
  void clear();
};

RolloutBuffer collect_rollout(const GaussianPolicy& policy, EpisodicEnv& env,
                              int n_steps, Rng& rng);

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Backward GAE recursion; dones[t] marks that transition t ended an episode.
Advantages compute_gae(std::span<const double> rewards,
                       std::span<const double> values,
                       std::span<const std::uint8_t> dones, double last_value,
                       double gamma, double lambda);

// Zero mean, unit (population) standard deviation.
void normalize_advantages(std::span<double> advantages, double epsilon = 1e-8);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int minibatches = 0;
};

// Loss and gradient of the clipped-surrogate objective on one minibatch.
// Exposed for gradient checking.
struct MinibatchLoss {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  std::vector<double> grad;  // flat, GaussianPolicy layout
};

MinibatchLoss ppo_loss(const GaussianPolicy& policy, const RolloutBuffer& buffer,
                       std::span<const double> normalized_advantages,
                       std::span<const std::size_t> indices,
                       const TrainConfig& config);

// Rescales `grad` in place so its 2-norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(std::span<double> grad, double max_norm);

// Runs update_epochs passes over shuffled minibatches. The buffer must
// already carry advantages and returns.
UpdateStats ppo_update(GaussianPolicy& policy, Adam& adam,
                       const RolloutBuffer& buffer, const TrainConfig& config,
                       Rng& rng);

// Deterministic (mean, clipped) evaluation, one episode per seed.
std::vector<double> evaluate_policy(const GaussianPolicy& policy,
                                    const EnvConfig& env_config,
                                    std::span<const std::uint64_t> seeds);

struct EvalPoint {
  long long steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
};

EvalPoint eval_point(long long steps, std::span<const double> returns);

struct TrainResult {
  GaussianPolicy best_policy;
  EvalPoint best_eval;
  EvalPoint initial_eval;  // policy as handed to train(), before any update
  EvalPoint final_eval;    // final model, evaluated after the last update
  std::vector<EvalPoint> eval_curve;
  long long total_steps = 0;
  long long train_episodes = 0;
  std::vector<UpdateStats> updates;
};

std::vector<std::uint64_t> eval_seeds(const TrainConfig& config);

// Trains `policy` in place; on return it holds the final model. The best
// checkpoint is the highest-mean evaluation among the periodic points and
// the final model (earliest wins ties). The step-0 evaluation is reported
// but does not compete.
TrainResult train(const EnvConfig& env_config, const TrainConfig& config,
                  GaussianPolicy& policy, Adam* adam_out = nullptr);

}  // namespace evosort

#endif  // EVOSORT_PPO_HPP_
