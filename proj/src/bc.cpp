#include "evosort/bc.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "evosort/error.hpp"
#include "evosort/nn.hpp"

namespace evosort {

DemoSet DemoSet::from(std::vector<Demonstration> demos) {
  DemoSet set;
  for (const Demonstration& d : demos) {
    if (d.actions.size() != d.observations.size()) {
      throw InputError("demo set: seed " + std::to_string(d.seed) +
                       " has mismatched actions/observations");
    }
    for (std::size_t t = 0; t < d.actions.size(); ++t) {
      if (!(d.actions[t] >= -1.0 && d.actions[t] <= 1.0)) {
        throw InputError("demo set: seed " + std::to_string(d.seed) +
                         " has action outside [-1,1] at t=" + std::to_string(t));
      }
      set.observations.push_back(d.observations[t]);
      set.actions.push_back(d.actions[t]);
    }
  }
  set.demonstrations = std::move(demos);
  return set;
}

DemoSet load_demo_set(const std::filesystem::path& dir, std::uint64_t first_seed,
                      int count, int episode_length) {
  std::vector<Demonstration> demos;
  for (int i = 0; i < count; ++i) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
    Demonstration d = load_demonstration(dir / demo_file_name(seed));
    if (d.seed != seed) {
      throw InputError("demo file for seed " + std::to_string(seed) +
                       " records seed " + std::to_string(d.seed));
    }
    d.validate(episode_length);
    demos.push_back(std::move(d));
  }
  return DemoSet::from(std::move(demos));
}

double bc_mse(const GaussianPolicy& policy, const DemoSet& demos) {
  double sum = 0.0;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const double e = policy.mean(demos.observations[i]) - demos.actions[i];
    sum += e * e;
  }
  return sum / static_cast<double>(demos.size());
}

double bc_mae(const GaussianPolicy& policy, const DemoSet& demos) {
  double sum = 0.0;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    sum += std::abs(policy.mean(demos.observations[i]) - demos.actions[i]);
  }
  return sum / static_cast<double>(demos.size());
}

std::vector<double> bc_pretrain(GaussianPolicy& policy, const DemoSet& demos,
                                const BcConfig& config, Rng& rng) {
  if (demos.size() == 0) throw InputError("bc_pretrain: empty demonstration set");
  if (config.epochs < 1 || config.minibatch < 1) {
    throw ConfigError("bc_pretrain: epochs and minibatch must be >= 1");
  }
  Mlp& actor = policy.actor;
  Adam adam(actor.num_params(), AdamConfig{.learning_rate = config.learning_rate});
  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(actor.num_params());
  Mlp::Cache cache;
  std::vector<double> curve;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.minibatch)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.minibatch));
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const double err = actor.forward(demos.observations[i], cache) - demos.actions[i];
        batch_loss += err * err;
        actor.backward(cache, 2.0 * err * inv_b, grad);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("bc_pretrain: non-finite loss in epoch " +
                             std::to_string(epoch));
      }
      adam.step(actor.params(), grad);
      epoch_loss += batch_loss;
    }
    curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  return curve;
}

}  // namespace evosort
