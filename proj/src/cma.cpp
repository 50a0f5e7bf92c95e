#include "evosort/cma.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "evosort/error.hpp"
#include "evosort/parallel.hpp"

namespace evosort {
namespace {

Eigen::VectorXd vector_or_fill(const std::vector<double>& v, int dim,
                               double fill) {
  if (v.empty()) return Eigen::VectorXd::Constant(dim, fill);
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

void refresh_eigensystem(CmaState& s) {
  if (!s.cov.allFinite()) {
    throw NumericalError("CMA-ES: covariance has non-finite entries at generation " +
                         std::to_string(s.generation));
  }
  // Enforce exact symmetry before decomposing.
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.cov);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("CMA-ES: eigendecomposition failed at generation " +
                         std::to_string(s.generation));
  }
  const Eigen::VectorXd& ev = solver.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw NumericalError("CMA-ES: covariance lost positive definiteness (min eigenvalue " +
                         format_double(ev.minCoeff()) + ") at generation " +
                         std::to_string(s.generation));
  }
  s.basis = solver.eigenvectors();
  s.axis_len = ev.cwiseSqrt();
}

}  // namespace

void CmaConfig::validate() const {
  if (dim < 1) throw ConfigError("CmaConfig: dim must be >= 1");
  if (lambda < 4) throw ConfigError("CmaConfig: lambda must be >= 4");
  if (!(sigma0 > 0.0)) throw ConfigError("CmaConfig: sigma0 must be > 0");
  if (max_generations < 0) throw ConfigError("CmaConfig: max_generations must be >= 0");
  auto check_len = [&](const std::vector<double>& v, const char* name) {
    if (!v.empty() && static_cast<int>(v.size()) != dim) {
      throw ConfigError(std::string("CmaConfig: ") + name + " has length " +
                        std::to_string(v.size()) + ", expected " +
                        std::to_string(dim));
    }
  };
  check_len(mean0, "mean0");
  check_len(lower, "lower");
  check_len(upper, "upper");
  if (!(lower_bounds().array() < upper_bounds().array()).all()) {
    throw ConfigError("CmaConfig: lower must be < upper element-wise");
  }
}

Eigen::VectorXd CmaConfig::initial_mean() const { return vector_or_fill(mean0, dim, 0.0); }
Eigen::VectorXd CmaConfig::lower_bounds() const { return vector_or_fill(lower, dim, -1.0); }
Eigen::VectorXd CmaConfig::upper_bounds() const { return vector_or_fill(upper, dim, 1.0); }

KeyValues CmaConfig::to_kv() const {
  return {{"cma_dim", std::to_string(dim)},
          {"cma_lambda", std::to_string(lambda)},
          {"cma_sigma0", format_double(sigma0)},
          {"cma_max_generations", std::to_string(max_generations)}};
}

void CmaConfig::apply_kv(const KeyValues& kv) {
  read_into(kv, "cma_dim", dim);
  read_into(kv, "cma_lambda", lambda);
  read_into(kv, "cma_sigma0", sigma0);
  read_into(kv, "cma_max_generations", max_generations);
}

CmaState cma_init(const CmaConfig& config) {
  config.validate();
  CmaState s;
  const int n = config.dim;
  s.dim = n;
  s.lambda = config.lambda;
  s.mu = config.lambda / 2;

  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i) {
    s.weights[i] = std::log((config.lambda + 1.0) / 2.0) - std::log(i + 1.0);
  }
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();

  const double nd = n;
  s.c_sigma = (s.mu_eff + 2.0) / (nd + s.mu_eff + 5.0);
  s.d_sigma = 1.0 +
              2.0 * std::max(0.0, std::sqrt((s.mu_eff - 1.0) / (nd + 1.0)) - 1.0) +
              s.c_sigma;
  s.c_c = (4.0 + s.mu_eff / nd) / (nd + 4.0 + 2.0 * s.mu_eff / nd);
  s.c_1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + s.mu_eff);
  s.c_mu = std::min(1.0 - s.c_1, 2.0 * (s.mu_eff - 2.0 + 1.0 / s.mu_eff) /
                                     ((nd + 2.0) * (nd + 2.0) + s.mu_eff));
  s.chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

  s.mean = config.initial_mean();
  s.sigma = config.sigma0;
  s.cov = Eigen::MatrixXd::Identity(n, n);
  s.p_sigma = Eigen::VectorXd::Zero(n);
  s.p_c = Eigen::VectorXd::Zero(n);
  s.basis = Eigen::MatrixXd::Identity(n, n);
  s.axis_len = Eigen::VectorXd::Ones(n);
  s.best_solution = s.mean;
  return s;
}

std::vector<Eigen::VectorXd> ask(const CmaState& state, Rng& rng) {
  if (!state.basis.allFinite() || !state.axis_len.allFinite() ||
      !std::isfinite(state.sigma)) {
    throw NumericalError("CMA-ES ask: non-finite strategy state at generation " +
                         std::to_string(state.generation));
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(state.lambda);
  Eigen::VectorXd z(state.dim);
  for (int k = 0; k < state.lambda; ++k) {
    for (int i = 0; i < state.dim; ++i) z[i] = rng.normal();
    out.push_back(state.mean +
                  state.sigma * (state.basis * state.axis_len.cwiseProduct(z)));
  }
  return out;
}

void offer_incumbent(CmaState& state, const Eigen::VectorXd& x, double fitness) {
  if (fitness < state.best_fitness) {
    state.best_fitness = fitness;
    state.best_solution = x;
  }
}

void tell(CmaState& s, std::span<const Eigen::VectorXd> candidates,
          std::span<const double> fitnesses) {
  if (static_cast<int>(candidates.size()) != s.lambda ||
      static_cast<int>(fitnesses.size()) != s.lambda) {
    throw InputError("CMA-ES tell: expected " + std::to_string(s.lambda) +
                     " candidates and fitnesses, got " +
                     std::to_string(candidates.size()) + " and " +
                     std::to_string(fitnesses.size()));
  }
  for (int k = 0; k < s.lambda; ++k) {
    if (!std::isfinite(fitnesses[k])) {
      throw InputError("CMA-ES tell: non-finite fitness for candidate " +
                       std::to_string(k));
    }
    if (candidates[k].size() != s.dim) {
      throw InputError("CMA-ES tell: candidate " + std::to_string(k) +
                       " has wrong dimension");
    }
  }

  std::vector<int> order(s.lambda);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return fitnesses[a] < fitnesses[b]; });

  offer_incumbent(s, candidates[order[0]], fitnesses[order[0]]);

  const int n = s.dim;
  const Eigen::VectorXd old_mean = s.mean;
  Eigen::MatrixXd steps(n, s.mu);  // (x_i - m_old) / sigma for the selected
  Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < s.mu; ++i) {
    steps.col(i) = (candidates[order[i]] - old_mean) / s.sigma;
    y_w += s.weights[i] * steps.col(i);
  }
  s.mean = old_mean + s.sigma * y_w;

  // C^{-1/2} y_w = B D^{-1} B^T y_w
  const Eigen::VectorXd whitened =
      s.basis * (s.basis.transpose() * y_w).cwiseQuotient(s.axis_len);
  s.p_sigma = (1.0 - s.c_sigma) * s.p_sigma +
              std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * whitened;

  const double ps_norm = s.p_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - s.c_sigma, 2.0 * (s.generation + 1));
  const bool h_sigma =
      ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n + 1.0)) * s.chi_n;

  s.p_c = (1.0 - s.c_c) * s.p_c;
  if (h_sigma) s.p_c += std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) * y_w;

  const double stall = h_sigma ? 0.0 : s.c_1 * s.c_c * (2.0 - s.c_c);
  Eigen::MatrixXd rank_mu = steps * s.weights.asDiagonal() * steps.transpose();
  s.cov = (1.0 - s.c_1 - s.c_mu + stall) * s.cov +
          s.c_1 * (s.p_c * s.p_c.transpose()) + s.c_mu * rank_mu;

  s.sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
  ++s.generation;
  refresh_eigensystem(s);
}

Demonstration rollout_actions(const EnvConfig& env_config, std::uint64_t seed,
                              std::span<const double> actions) {
  if (static_cast<int>(actions.size()) != env_config.episode_length) {
    throw ConfigError("rollout_actions: " + std::to_string(actions.size()) +
                      " actions for episode length " +
                      std::to_string(env_config.episode_length));
  }
  SortingEnv env(env_config);
  Demonstration demo;
  demo.seed = seed;
  Observation obs = env.reset(seed);
  for (double a : actions) {
    const double clipped = std::clamp(a, -1.0, 1.0);
    demo.observations.push_back(obs);
    demo.actions.push_back(clipped);
    const StepResult r = env.step(clipped);
    demo.rewards.push_back(r.reward);
    demo.cumulative_reward += r.reward;
    obs = r.observation;
  }
  return demo;
}

double episode_return(const EnvConfig& env_config, std::uint64_t seed,
                      std::span<const double> actions) {
  SortingEnv env(env_config);
  env.reset(seed);
  double total = 0.0;
  for (double a : actions) total += env.step(std::clamp(a, -1.0, 1.0)).reward;
  return total;
}

TrajectoryRun optimize_trajectory_run(const EnvConfig& env_config,
                                      std::uint64_t env_seed,
                                      const CmaConfig& cma_config,
                                      std::uint64_t opt_rng_seed, int jobs) {
  env_config.validate();
  if (cma_config.dim != env_config.episode_length) {
    throw ConfigError("optimize_trajectory: cma dim " +
                      std::to_string(cma_config.dim) +
                      " != episode_length " +
                      std::to_string(env_config.episode_length));
  }
  CmaState state = cma_init(cma_config);
  const Eigen::VectorXd lo = cma_config.lower_bounds();
  const Eigen::VectorXd hi = cma_config.upper_bounds();
  auto fitness = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd clipped = x.cwiseMax(lo).cwiseMin(hi);
    return -episode_return(env_config, env_seed,
                           std::span<const double>(clipped.data(), clipped.size()));
  };

  // The starting mean is a valid schedule; the incumbent starts from it.
  offer_incumbent(state, state.mean, fitness(state.mean));

  TrajectoryRun run;
  Rng rng(opt_rng_seed);
  std::vector<double> fit(state.lambda);
  for (int g = 0; g < cma_config.max_generations; ++g) {
    const std::vector<Eigen::VectorXd> pop = ask(state, rng);
    parallel_for(pop.size(), jobs, [&](std::size_t k) { fit[k] = fitness(pop[k]); });
    tell(state, pop, fit);
    run.best_fitness_per_generation.push_back(state.best_fitness);
  }

  const Eigen::VectorXd best = state.best_solution.cwiseMax(lo).cwiseMin(hi);
  run.demo = rollout_actions(env_config, env_seed,
                             std::span<const double>(best.data(), best.size()));
  return run;
}

Demonstration optimize_trajectory(const EnvConfig& env_config,
                                  std::uint64_t env_seed,
                                  const CmaConfig& cma_config,
                                  std::uint64_t opt_rng_seed, int jobs) {
  return optimize_trajectory_run(env_config, env_seed, cma_config, opt_rng_seed,
                                 jobs)
      .demo;
}

}  // namespace evosort
