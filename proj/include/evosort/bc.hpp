#ifndef EVOSORT_BC_HPP_
#define EVOSORT_BC_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "evosort/demonstration.hpp"
#include "evosort/policy.hpp"
#include "evosort/rng.hpp"

namespace evosort {

inline constexpr int kDemoCount = 100;

struct BcConfig {
  int epochs = 10;
  int minibatch = 64;
  double learning_rate = 3e-4;
};

struct DemoSet {
  std::vector<Demonstration> demonstrations;
  std::vector<Observation> observations;  // flattened (obs, action) pairs
  std::vector<double> actions;

  // Flattens in demonstration order. Throws InputError on actions outside
  // [-1, 1].
  static DemoSet from(std::vector<Demonstration> demos);

  std::size_t size() const { return actions.size(); }
};

// Loads demo_<seed>.csv for seeds first_seed .. first_seed + count - 1.
DemoSet load_demo_set(const std::filesystem::path& dir, std::uint64_t first_seed,
                      int count, int episode_length);

// Mean-squared error between the actor mean and the demonstrated actions.
double bc_mse(const GaussianPolicy& policy, const DemoSet& demos);
double bc_mae(const GaussianPolicy& policy, const DemoSet& demos);

// Regresses the actor mean onto the demonstrated actions with Adam over
// shuffled minibatches. The critic and log_std are not touched. Returns the
// sample-weighted mean training loss of each epoch.
std::vector<double> bc_pretrain(GaussianPolicy& policy, const DemoSet& demos,
                                const BcConfig& config, Rng& rng);

}  // namespace evosort

#endif  // EVOSORT_BC_HPP_
