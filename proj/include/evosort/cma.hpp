#ifndef EVOSORT_CMA_HPP_
#define EVOSORT_CMA_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "evosort/config.hpp"
#include "evosort/demonstration.hpp"
#include "evosort/env.hpp"
#include "evosort/rng.hpp"

namespace evosort {

struct CmaConfig {
  int dim = 100;
  int lambda = 16;
  double sigma0 = 0.1;
  int max_generations = 30;
  // Empty means all zeros / all -1 / all +1 of length dim.
  std::vector<double> mean0;
  std::vector<double> lower;
  std::vector<double> upper;

  void validate() const;
  Eigen::VectorXd initial_mean() const;
  Eigen::VectorXd lower_bounds() const;
  Eigen::VectorXd upper_bounds() const;

  // Scalar fields only; vectors keep their defaults.
  KeyValues to_kv() const;
  void apply_kv(const KeyValues& kv);
};

// Strategy state of a (mu/mu_w, lambda)-CMA-ES with cumulative step-size
// adaptation and rank-one plus rank-mu covariance updates.
struct CmaState {
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;  // mu positive recombination weights, sum 1
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;  // E||N(0, I)||

  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd cov;
  Eigen::VectorXd p_sigma;
  Eigen::VectorXd p_c;
  Eigen::MatrixXd basis;     // eigenvectors of cov, column-wise
  Eigen::VectorXd axis_len;  // square roots of the eigenvalues
  int generation = 0;

  Eigen::VectorXd best_solution;
  double best_fitness = std::numeric_limits<double>::infinity();
};

CmaState cma_init(const CmaConfig& config);

// lambda samples mean + sigma * B * D * z, z ~ N(0, I), drawn in order.
std::vector<Eigen::VectorXd> ask(const CmaState& state, Rng& rng);

// Minimization update. Ties are ranked by candidate index.
void tell(CmaState& state, std::span<const Eigen::VectorXd> candidates,
          std::span<const double> fitnesses);

// Offers an externally evaluated point to the incumbent only.
void offer_incumbent(CmaState& state, const Eigen::VectorXd& x, double fitness);

// Runs one episode from reset(seed) with the given open-loop action
// sequence (clipped to [-1, 1]) and records it.
Demonstration rollout_actions(const EnvConfig& env_config, std::uint64_t seed,
                              std::span<const double> actions);

// Sum of rewards only; cheaper than rollout_actions.
double episode_return(const EnvConfig& env_config, std::uint64_t seed,
                      std::span<const double> actions);

struct TrajectoryRun {
  Demonstration demo;
  std::vector<double> best_fitness_per_generation;
};

// Optimizes an episode-long action sequence against the environment frozen
// at `env_seed`. Fitness is the negative cumulative reward of the clipped
// candidate; the distribution is updated with the unclipped vectors.
// `jobs` > 1 evaluates each generation on worker threads; the result does
// not depend on it.
TrajectoryRun optimize_trajectory_run(const EnvConfig& env_config,
                                      std::uint64_t env_seed,
                                      const CmaConfig& cma_config,
                                      std::uint64_t opt_rng_seed, int jobs = 1);

Demonstration optimize_trajectory(const EnvConfig& env_config,
                                  std::uint64_t env_seed,
                                  const CmaConfig& cma_config,
                                  std::uint64_t opt_rng_seed, int jobs = 1);

}  // namespace evosort

#endif  // EVOSORT_CMA_HPP_
