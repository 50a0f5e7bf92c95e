#include "evosort/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "evosort/error.hpp"

namespace evosort {

long long TrainConfig::max_train_episodes(int episode_length) const {
  const long long updates = (total_timesteps + n_steps - 1) / n_steps;
  const long long steps = updates * n_steps;
  return (steps + episode_length - 1) / episode_length;
}

void TrainConfig::validate(int episode_length) const {
  auto fail = [](const std::string& msg) { throw ConfigError("TrainConfig: " + msg); };
  if (total_timesteps < 1) fail("total_timesteps must be >= 1");
  if (eval_freq < 1) fail("eval_freq must be >= 1");
  if (n_steps < 2) fail("n_steps must be >= 2");
  if (minibatch < 1 || minibatch > n_steps) fail("minibatch must lie in [1, n_steps]");
  if (update_epochs < 1) fail("update_epochs must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must lie in [0,1]");
  if (!(clip > 0.0)) fail("clip must be > 0");
  if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) fail("loss coefficients must be >= 0");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be > 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (eval_episodes < 1) fail("eval_episodes must be >= 1");
  if (train_seed < static_cast<long long>(kMinTrainSeed)) fail("train_seed must be >= 1000");
  const long long last = train_seed + max_train_episodes(episode_length) - 1;
  if (last >= static_cast<long long>(kDemoSeedBase)) {
    fail("training seeds " + std::to_string(train_seed) + ".." +
         std::to_string(last) + " would reach the demonstration range (3000+)");
  }
}

KeyValues TrainConfig::to_kv() const {
  return {{"total_timesteps", std::to_string(total_timesteps)},
          {"eval_freq", std::to_string(eval_freq)},
          {"n_steps", std::to_string(n_steps)},
          {"minibatch", std::to_string(minibatch)},
          {"update_epochs", std::to_string(update_epochs)},
          {"gamma", format_double(gamma)},
          {"gae_lambda", format_double(gae_lambda)},
          {"clip", format_double(clip)},
          {"value_coef", format_double(value_coef)},
          {"entropy_coef", format_double(entropy_coef)},
          {"max_grad_norm", format_double(max_grad_norm)},
          {"learning_rate", format_double(learning_rate)},
          {"train_seed", std::to_string(train_seed)},
          {"eval_episodes", std::to_string(eval_episodes)}};
}

void TrainConfig::apply_kv(const KeyValues& kv) {
  read_into(kv, "total_timesteps", total_timesteps);
  read_into(kv, "eval_freq", eval_freq);
  read_into(kv, "n_steps", n_steps);
  read_into(kv, "minibatch", minibatch);
  read_into(kv, "update_epochs", update_epochs);
  read_into(kv, "gamma", gamma);
  read_into(kv, "gae_lambda", gae_lambda);
  read_into(kv, "clip", clip);
  read_into(kv, "value_coef", value_coef);
  read_into(kv, "entropy_coef", entropy_coef);
  read_into(kv, "max_grad_norm", max_grad_norm);
  read_into(kv, "learning_rate", learning_rate);
  read_into(kv, "train_seed", train_seed);
  read_into(kv, "eval_episodes", eval_episodes);
}

EpisodicEnv::EpisodicEnv(const EnvConfig& config, std::uint64_t first_seed)
    : env_(config), seed_(first_seed) {
  obs_ = env_.reset(seed_);
}

StepResult EpisodicEnv::step(double action) {
  StepResult r = env_.step(std::clamp(action, -1.0, 1.0));
  if (r.done) {
    ++seed_;
    ++episodes_;
    obs_ = env_.reset(seed_);
  } else {
    obs_ = r.observation;
  }
  return r;
}

void RolloutBuffer::clear() { *this = RolloutBuffer{}; }

RolloutBuffer collect_rollout(const GaussianPolicy& policy, EpisodicEnv& env,
                              int n_steps, Rng& rng) {
  RolloutBuffer buf;
  const double std_dev = policy.std_dev();
  double episode_return = 0.0;
  for (int i = 0; i < n_steps; ++i) {
    const Observation obs = env.observation();
    const double mean = policy.mean(obs);
    const double value = policy.value(obs);
    const double action = mean + std_dev * rng.normal();
    const StepResult r = env.step(action);

    buf.observations.push_back(obs);
    buf.actions.push_back(action);
    buf.means.push_back(mean);
    buf.log_probs.push_back(gaussian_log_prob(action, mean, policy.log_std));
    buf.values.push_back(value);
    buf.rewards.push_back(r.reward);
    buf.dones.push_back(r.done ? 1 : 0);

    episode_return += r.reward;
    if (r.done) {
      buf.completed_returns.push_back(episode_return);
      episode_return = 0.0;
    }
  }
  buf.last_value = policy.value(env.observation());
  return buf;
}

Advantages compute_gae(std::span<const double> rewards,
                       std::span<const double> values,
                       std::span<const std::uint8_t> dones, double last_value,
                       double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw InputError("compute_gae: rewards, values and dones differ in length");
  }
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = (k + 1 < n) ? values[k + 1] : last_value;
    const double not_done = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * not_done - values[k];
    running = delta + gamma * lambda * not_done * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
  }
  return out;
}

void normalize_advantages(std::span<double> adv, double epsilon) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double std_dev = std::sqrt(var / n);
  for (double& a : adv) a = (a - mean) / (std_dev + epsilon);
}

MinibatchLoss ppo_loss(const GaussianPolicy& policy, const RolloutBuffer& buffer,
                       std::span<const double> adv,
                       std::span<const std::size_t> indices,
                       const TrainConfig& config) {
  MinibatchLoss out;
  const std::size_t n_actor = policy.actor.num_params();
  const std::size_t n_critic = policy.critic.num_params();
  out.grad.assign(policy.num_params(), 0.0);
  std::span<double> g_actor(out.grad.data(), n_actor);
  std::span<double> g_critic(out.grad.data() + n_actor, n_critic);
  double& g_log_std = out.grad.back();

  const double inv_b = 1.0 / static_cast<double>(indices.size());
  const double log_std = policy.log_std;
  const double inv_var = std::exp(-2.0 * log_std);
  const double entropy = 0.5 + 0.5 * std::log(2.0 * std::numbers::pi) + log_std;
  Mlp::Cache actor_cache, critic_cache;
  int clipped = 0;

  for (std::size_t idx : indices) {
    const double mean = policy.actor.forward(buffer.observations[idx], actor_cache);
    const double value = policy.critic.forward(buffer.observations[idx], critic_cache);
    const double action = buffer.actions[idx];
    const double log_prob = gaussian_log_prob(action, mean, log_std);
    const double log_ratio = log_prob - buffer.log_probs[idx];
    const double ratio = std::exp(log_ratio);
    const double a = adv[idx];

    const double clipped_ratio = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    const double surr1 = ratio * a;
    const double surr2 = clipped_ratio * a;
    out.policy_loss += -std::min(surr1, surr2) * inv_b;
    if (std::abs(ratio - 1.0) > config.clip) ++clipped;
    // (ratio - 1) - log ratio: low-variance KL estimate.
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;

    // Gradient flows through the unclipped branch unless the clip binds.
    const bool clip_binds = (a >= 0.0 && ratio > 1.0 + config.clip) ||
                            (a < 0.0 && ratio < 1.0 - config.clip);
    if (!clip_binds) {
      const double dloss_dlogp = -ratio * a * inv_b;
      const double diff = action - mean;
      policy.actor.backward(actor_cache, dloss_dlogp * diff * inv_var, g_actor);
      g_log_std += dloss_dlogp * (diff * diff * inv_var - 1.0);
    }

    const double err = value - buffer.returns[idx];
    out.value_loss += err * err * inv_b;
    policy.critic.backward(critic_cache, config.value_coef * 2.0 * err * inv_b,
                           g_critic);
  }
  out.entropy = entropy;
  g_log_std -= config.entropy_coef;
  out.clip_fraction = clipped * inv_b;
  out.total = out.policy_loss + config.value_coef * out.value_loss -
              config.entropy_coef * entropy;
  return out;
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  const double coef = max_norm / (norm + 1e-6);
  if (coef < 1.0) {
    for (double& g : grad) g *= coef;
  }
  return norm;
}

UpdateStats ppo_update(GaussianPolicy& policy, Adam& adam,
                       const RolloutBuffer& buffer, const TrainConfig& config,
                       Rng& rng) {
  const std::size_t n = buffer.size();
  if (n == 0 || buffer.advantages.size() != n || buffer.returns.size() != n) {
    throw ProtocolError("ppo_update: buffer is empty or missing advantages");
  }
  std::vector<double> adv = buffer.advantages;
  normalize_advantages(adv);

  UpdateStats stats;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> params = policy.flat();
  const std::size_t mb = static_cast<std::size_t>(config.minibatch);

  for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      MinibatchLoss loss = ppo_loss(policy, buffer, adv, batch, config);
      if (!std::isfinite(loss.total)) {
        throw NumericalError("ppo_update: non-finite loss in epoch " +
                             std::to_string(epoch) + " (policy " +
                             format_double(loss.policy_loss) + ", value " +
                             format_double(loss.value_loss) + ")");
      }
      clip_grad_norm(loss.grad, config.max_grad_norm);
      adam.step(params, loss.grad);
      params.back() = std::clamp(params.back(), kLogStdMin, kLogStdMax);
      policy.set_flat(params);

      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.clip_fraction += loss.clip_fraction;
      stats.approx_kl += loss.approx_kl;
      ++stats.minibatches;
    }
  }
  const double k = 1.0 / stats.minibatches;
  stats.policy_loss *= k;
  stats.value_loss *= k;
  stats.entropy *= k;
  stats.clip_fraction *= k;
  stats.approx_kl *= k;
  return stats;
}

std::vector<double> evaluate_policy(const GaussianPolicy& policy,
                                    const EnvConfig& env_config,
                                    std::span<const std::uint64_t> seeds) {
  std::vector<double> returns;
  returns.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    SortingEnv env(env_config);
    Observation obs = env.reset(seed);
    double total = 0.0;
    while (!env.done()) {
      const StepResult r = env.step(policy.act_deterministic(obs));
      total += r.reward;
      obs = r.observation;
    }
    returns.push_back(total);
  }
  return returns;
}

EvalPoint eval_point(long long steps, std::span<const double> returns) {
  EvalPoint p;
  p.steps = steps;
  if (returns.empty()) return p;
  const double n = static_cast<double>(returns.size());
  p.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) / n;
  double var = 0.0;
  for (double r : returns) var += (r - p.mean_return) * (r - p.mean_return);
  p.std_return = std::sqrt(var / n);
  return p;
}

std::vector<std::uint64_t> eval_seeds(const TrainConfig& config) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config.eval_episodes; ++i) seeds.push_back(kEvalSeedBase + i);
  return seeds;
}

TrainResult train(const EnvConfig& env_config, const TrainConfig& config,
                  GaussianPolicy& policy, Adam* adam_out) {
  env_config.validate();
  config.validate(env_config.episode_length);

  const std::vector<std::uint64_t> seeds = eval_seeds(config);
  const auto seed = static_cast<std::uint64_t>(config.train_seed);
  Rng action_rng(derive_seed(seed, 10));
  Rng shuffle_rng(derive_seed(seed, 11));
  Adam adam(policy.num_params(), AdamConfig{.learning_rate = config.learning_rate});
  EpisodicEnv env(env_config, seed);

  TrainResult result;
  result.initial_eval = eval_point(0, evaluate_policy(policy, env_config, seeds));
  result.best_policy = policy;
  bool have_best = false;

  long long steps = 0;
  while (steps < config.total_timesteps) {
    RolloutBuffer buf = collect_rollout(policy, env, config.n_steps, action_rng);
    const long long before = steps;
    steps += config.n_steps;

    // Parameters are fixed during collection, so every evaluation point
    // passed inside this rollout sees the same policy.
    const long long first_k = before / config.eval_freq + 1;
    const long long last_k = std::min(steps, config.total_timesteps) / config.eval_freq;
    if (first_k <= last_k) {
      const std::vector<double> returns = evaluate_policy(policy, env_config, seeds);
      for (long long k = first_k; k <= last_k; ++k) {
        const EvalPoint p = eval_point(k * config.eval_freq, returns);
        result.eval_curve.push_back(p);
        if (!have_best || p.mean_return > result.best_eval.mean_return) {
          result.best_eval = p;
          result.best_policy = policy;
          have_best = true;
        }
      }
    }

    Advantages gae = compute_gae(buf.rewards, buf.values, buf.dones, buf.last_value,
                                 config.gamma, config.gae_lambda);
    buf.advantages = std::move(gae.advantages);
    buf.returns = std::move(gae.returns);
    result.updates.push_back(ppo_update(policy, adam, buf, config, shuffle_rng));
  }
  result.total_steps = steps;
  result.train_episodes = env.episodes_started();

  // The last update happens after the last periodic evaluation; the final
  // model competes for "best" so that best >= final always holds.
  result.final_eval = eval_point(steps, evaluate_policy(policy, env_config, seeds));
  if (!have_best || result.final_eval.mean_return > result.best_eval.mean_return) {
    result.best_eval = result.final_eval;
    result.best_policy = policy;
  }
  if (adam_out) *adam_out = adam;
  return result;
}

}  // namespace evosort
