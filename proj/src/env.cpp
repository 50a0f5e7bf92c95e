#include "evosort/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evosort/config.hpp"
#include "evosort/error.hpp"

namespace evosort {

std::string to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kConstant: return "constant";
    case SamplingMode::kUniform: return "uniform";
    case SamplingMode::kTrend: return "trend";
    case SamplingMode::kSeasonal: return "seasonal";
  }
  return "unknown";
}

SamplingMode parse_sampling_mode(const std::string& text) {
  if (text == "constant") return SamplingMode::kConstant;
  if (text == "uniform") return SamplingMode::kUniform;
  if (text == "trend") return SamplingMode::kTrend;
  if (text == "seasonal") return SamplingMode::kSeasonal;
  throw ConfigError("sampling_mode: unknown mode '" + text + "'");
}

void EnvConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("EnvConfig: " + msg); };
  if (episode_length < 1) fail("episode_length must be >= 1");
  if (history_len != kHistoryLen) fail("history_len must be 5");
  if (!(q_max > 0.0)) fail("q_max must be > 0");
  if (!(theta_a > 0.0 && theta_a < 1.0)) fail("theta_a must lie in (0,1)");
  if (!(theta_b > 0.0 && theta_b < 1.0)) fail("theta_b must lie in (0,1)");
  if (!(accuracy_base_a > 0.0 && accuracy_base_a <= 1.0)) {
    fail("accuracy_base_a must lie in (0,1]");
  }
  if (!(accuracy_base_b > 0.0 && accuracy_base_b <= 1.0)) {
    fail("accuracy_base_b must lie in (0,1]");
  }
  if (!(accuracy_drop_a >= 0.0) || !(accuracy_drop_b >= 0.0)) {
    fail("accuracy drops must be >= 0");
  }
  if (accuracy_base_a - accuracy_drop_a < 0.5) {
    fail("accuracy_base_a - accuracy_drop_a must be >= 0.5");
  }
  if (accuracy_base_b - accuracy_drop_b < 0.5) {
    fail("accuracy_base_b - accuracy_drop_b must be >= 0.5");
  }
  if (!(accuracy_exponent > 0.0)) fail("accuracy_exponent must be > 0");
  if (!(batch_size_min_frac >= 0.0 && batch_size_min_frac <= batch_size_max_frac &&
        batch_size_max_frac <= 1.0)) {
    fail("batch size fractions must satisfy 0 <= min <= max <= 1");
  }
}

std::map<std::string, std::string> EnvConfig::to_kv() const {
  return {
      {"episode_length", std::to_string(episode_length)},
      {"q_max", format_double(q_max)},
      {"theta_a", format_double(theta_a)},
      {"theta_b", format_double(theta_b)},
      {"accuracy_base_a", format_double(accuracy_base_a)},
      {"accuracy_base_b", format_double(accuracy_base_b)},
      {"accuracy_drop_a", format_double(accuracy_drop_a)},
      {"accuracy_drop_b", format_double(accuracy_drop_b)},
      {"accuracy_exponent", format_double(accuracy_exponent)},
      {"history_len", std::to_string(history_len)},
      {"sampling_mode", to_string(sampling_mode)},
      {"batch_size_min_frac", format_double(batch_size_min_frac)},
      {"batch_size_max_frac", format_double(batch_size_max_frac)},
  };
}

void EnvConfig::apply_kv(const std::map<std::string, std::string>& kv) {
  read_into(kv, "episode_length", episode_length);
  read_into(kv, "q_max", q_max);
  read_into(kv, "theta_a", theta_a);
  read_into(kv, "theta_b", theta_b);
  read_into(kv, "accuracy_base_a", accuracy_base_a);
  read_into(kv, "accuracy_base_b", accuracy_base_b);
  read_into(kv, "accuracy_drop_a", accuracy_drop_a);
  read_into(kv, "accuracy_drop_b", accuracy_drop_b);
  read_into(kv, "accuracy_exponent", accuracy_exponent);
  read_into(kv, "history_len", history_len);
  if (auto it = kv.find("sampling_mode"); it != kv.end()) {
    sampling_mode = parse_sampling_mode(it->second);
  }
  read_into(kv, "batch_size_min_frac", batch_size_min_frac);
  read_into(kv, "batch_size_max_frac", batch_size_max_frac);
}

double compose_ratio(SamplingMode mode, int t, int episode_length, double u) {
  const double noise = -0.05 + 0.1 * u;
  double ratio = 0.5;
  switch (mode) {
    case SamplingMode::kConstant:
      ratio = 0.5;
      break;
    case SamplingMode::kUniform:
      ratio = 0.2 + 0.6 * u;
      break;
    case SamplingMode::kTrend:
      ratio = 0.3 + 0.4 * (static_cast<double>(t) / episode_length) + noise;
      break;
    case SamplingMode::kSeasonal:
      ratio = 0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * t / 25.0) + noise;
      break;
  }
  return std::clamp(ratio, 0.0, 1.0);
}

double sorting_accuracy(double load_fraction, double base, double drop,
                        double exponent) {
  if (!(load_fraction >= 0.0 && load_fraction <= 1.0)) {
    throw DomainError("sorting_accuracy: load fraction " +
                      format_double(load_fraction) + " outside [0,1]");
  }
  return base - drop * std::pow(load_fraction, exponent);
}

Containers apply_sorting(double mass_a, double mass_b, double acc_a,
                         double acc_b, Containers c) {
  // Stage A pulls out material A; the rest flows on to stage B.
  c.a_true += acc_a * mass_a;
  c.a_false += (1.0 - acc_a) * mass_b;
  const double rest_a = (1.0 - acc_a) * mass_a;
  const double rest_b = acc_a * mass_b;

  c.b_true += acc_b * rest_b;
  c.b_false += (1.0 - acc_b) * rest_a;
  c.residual += acc_b * rest_a + (1.0 - acc_b) * rest_b;
  return c;
}

double purity(double true_mass, double false_mass) {
  const double total = true_mass + false_mass;
  if (total <= 0.0) return 1.0;
  return true_mass / total;
}

double purity_reward(double p, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw DomainError("purity_reward: theta " + format_double(theta) +
                      " outside (0,1)");
  }
  if (p < theta) return -10.0 + 10.25 * (p / theta);
  return 0.25 * (1.0 - (p - theta) / (1.0 - theta));
}

double step_reward(double q, double q_max, double p_a, double p_b,
                   double theta_a, double theta_b) {
  if (q > q_max) {
    throw DomainError("step_reward: quantity " + format_double(q) +
                      " exceeds q_max " + format_double(q_max));
  }
  return 0.25 * (2.0 * q / q_max - 1.0) + purity_reward(p_a, theta_a) +
         purity_reward(p_b, theta_b);
}

SortingEnv::SortingEnv(EnvConfig config) : config_(config) { config_.validate(); }

Observation SortingEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  t_ = 0;
  started_ = true;
  ratio_history_.fill(0.5);
  containers_ = {};
  last_quantity_ = 0.0;
  processed_total_ = 0.0;
  return observation();
}

InputBatch SortingEnv::sample_batch() {
  const double size_draw = rng_.uniform();
  const double ratio_draw = rng_.uniform();
  const double lo = config_.batch_size_min_frac * config_.q_max;
  const double hi = config_.batch_size_max_frac * config_.q_max;
  return {lo + (hi - lo) * size_draw,
          compose_ratio(config_.sampling_mode, t_, config_.episode_length,
                        ratio_draw)};
}

Observation SortingEnv::observation() const {
  Observation obs{};
  std::copy(ratio_history_.begin(), ratio_history_.end(), obs.begin());
  obs[kHistoryLen] = purity(containers_.a_true, containers_.a_false);
  obs[kHistoryLen + 1] = purity(containers_.b_true, containers_.b_false);
  return obs;
}

StepResult SortingEnv::step(double action) {
  if (!started_) throw ProtocolError("SortingEnv::step called before reset");
  if (done()) throw ProtocolError("SortingEnv::step called after episode end");
  if (!std::isfinite(action)) throw InputError("SortingEnv::step: non-finite action");

  const InputBatch batch = sample_batch();

  const double feed = (std::clamp(action, -1.0, 1.0) + 1.0) / 2.0;
  const double q = feed * batch.size;
  const double load = std::min(q / config_.q_max, 1.0);
  const double acc_a = sorting_accuracy(load, config_.accuracy_base_a,
                                        config_.accuracy_drop_a,
                                        config_.accuracy_exponent);
  const double acc_b = sorting_accuracy(load, config_.accuracy_base_b,
                                        config_.accuracy_drop_b,
                                        config_.accuracy_exponent);
  containers_ = apply_sorting(q * batch.ratio_a, q * (1.0 - batch.ratio_a),
                              acc_a, acc_b, containers_);
  processed_total_ += q;
  last_quantity_ = q;

  std::rotate(ratio_history_.begin(), ratio_history_.begin() + 1,
              ratio_history_.end());
  ratio_history_.back() = batch.ratio_a;

  StepResult result;
  result.observation = observation();
  result.info = {q, result.observation[kHistoryLen],
                 result.observation[kHistoryLen + 1], batch.ratio_a};
  result.reward = step_reward(q, config_.q_max, result.info.purity_a,
                              result.info.purity_b, config_.theta_a,
                              config_.theta_b);
  ++t_;
  result.done = done();
  return result;
}

}  // namespace evosort
