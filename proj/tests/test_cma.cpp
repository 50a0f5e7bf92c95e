#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "evosort/cma.hpp"
#include "evosort/agents.hpp"
#include "evosort/error.hpp"

using namespace evosort;

namespace {

CmaConfig small_config(int dim, int lambda, double sigma0) {
  CmaConfig c;
  c.dim = dim;
  c.lambda = lambda;
  c.sigma0 = sigma0;
  return c;
}

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

// Evolves a few generations on a shifted ellipsoid so the covariance is no
// longer the identity.
CmaState shaped_state(int dim) {
  CmaState s = cma_init(small_config(dim, 8, 0.7));
  Rng rng(99);
  for (int g = 0; g < 6; ++g) {
    auto pop = ask(s, rng);
    std::vector<double> f;
    for (const auto& x : pop) {
      double v = 0;
      for (int i = 0; i < dim; ++i) v += std::pow(10.0, i) * (x[i] - 1.0) * (x[i] - 1.0);
      f.push_back(v);
    }
    tell(s, pop, f);
  }
  return s;
}

}  // namespace

TEST_CASE("initial strategy state") {
  const CmaState s = cma_init(CmaConfig{});
  CHECK(s.mu == 8);
  CHECK(s.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 1; i < s.mu; ++i) CHECK(s.weights[i] < s.weights[i - 1]);
  CHECK(s.weights.minCoeff() > 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.cov);
  for (int i = 0; i < s.dim; ++i) CHECK(eig.eigenvalues()[i] == 1.0);
  CHECK(s.mean == Eigen::VectorXd::Zero(100));
  CHECK(s.sigma == 0.1);
  CHECK(s.p_sigma.isZero());
  CHECK(s.p_c.isZero());
}

TEST_CASE("strategy constants follow the default formulas") {
  // Recomputed here from raw weights for n = 100, lambda = 16.
  const double n = 100, lambda = 16;
  std::vector<double> w;
  for (int i = 1; i <= 8; ++i) w.push_back(std::log((lambda + 1) / 2) - std::log(double(i)));
  double sum = 0, sq = 0;
  for (double v : w) sum += v;
  for (double v : w) sq += (v / sum) * (v / sum);
  const double mu_eff = 1.0 / sq;
  const CmaState s = cma_init(CmaConfig{});
  CHECK(s.mu_eff == doctest::Approx(mu_eff).epsilon(1e-12));
  CHECK(s.c_sigma == doctest::Approx((mu_eff + 2) / (n + mu_eff + 5)).epsilon(1e-12));
  CHECK(s.c_c == doctest::Approx((4 + mu_eff / n) / (n + 4 + 2 * mu_eff / n)).epsilon(1e-12));
  CHECK(s.c_1 == doctest::Approx(2 / ((n + 1.3) * (n + 1.3) + mu_eff)).epsilon(1e-12));
  CHECK(s.c_mu ==
        doctest::Approx(2 * (mu_eff - 2 + 1 / mu_eff) / ((n + 2) * (n + 2) + mu_eff)).epsilon(1e-12));
  CHECK(s.d_sigma == doctest::Approx(1 + s.c_sigma).epsilon(1e-12));
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(cma_init(small_config(10, 3, 0.1)), ConfigError);
  CHECK_THROWS_AS(cma_init(small_config(10, 16, 0.0)), ConfigError);
  CmaConfig c = small_config(3, 8, 0.1);
  c.lower = {0.0, 0.0, 1.0};
  c.upper = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(cma_init(c), ConfigError);
  c.lower = {0.0, 0.0};
  CHECK_THROWS_AS(cma_init(c), ConfigError);
}

TEST_CASE("vanishing step size collapses candidates onto the mean") {
  CmaState s = cma_init(small_config(5, 8, 1e-300));
  s.mean << 0.1, -0.2, 0.3, 0.0, 0.5;
  Rng rng(1);
  for (const auto& x : ask(s, rng)) CHECK((x - s.mean).cwiseAbs().maxCoeff() < 1e-290);
}

TEST_CASE("ask is deterministic for a fixed rng seed") {
  const CmaState s = cma_init(small_config(10, 16, 0.3));
  Rng a(5), b(5);
  const auto pa = ask(s, a);
  const auto pb = ask(s, b);
  REQUIRE(pa.size() == 16);
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k] == pb[k]);
}

TEST_CASE("candidate mean matches the distribution mean") {
  const CmaState s = shaped_state(3);
  Rng rng(2024);
  const int draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  int n = 0;
  while (n < draws) {
    for (const auto& x : ask(s, rng)) {
      if (n++ < draws) sum += x;
    }
  }
  const Eigen::VectorXd mean = sum / draws;
  for (int i = 0; i < 3; ++i) {
    const double se = s.sigma * std::sqrt(s.cov(i, i)) / std::sqrt(double(draws));
    CHECK(std::abs(mean[i] - s.mean[i]) < 3.0 * se);
  }
}

TEST_CASE("covariance stays symmetric positive definite") {
  const CmaState s = shaped_state(4);
  CHECK((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(s.axis_len.minCoeff() > 0.0);
  // B D^2 B^T reconstructs C.
  const Eigen::MatrixXd rebuilt =
      s.basis * s.axis_len.cwiseAbs2().asDiagonal() * s.basis.transpose();
  CHECK((rebuilt - s.cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("tell recombines the ranked parents") {
  CmaState s = cma_init(small_config(4, 8, 0.5));
  Rng rng(3);
  const auto pop = ask(s, rng);
  std::vector<double> f;
  for (const auto& x : pop) f.push_back(sphere(x));
  std::vector<int> order{0, 1, 2, 3, 4, 5, 6, 7};
  std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < s.mu; ++i) expected += s.weights[i] * pop[order[i]];
  tell(s, pop, f);
  CHECK((s.mean - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.best_fitness == f[order[0]]);
  CHECK(s.best_solution == pop[order[0]]);
  CHECK(s.generation == 1);
}

TEST_CASE("equal fitnesses rank by candidate index") {
  CmaState s = cma_init(small_config(3, 6, 0.5));
  Rng rng(4);
  const auto pop = ask(s, rng);
  const std::vector<double> f(6, 1.0);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < s.mu; ++i) expected += s.weights[i] * pop[i];
  tell(s, pop, f);
  CHECK((s.mean - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.best_solution == pop[0]);
}

TEST_CASE("tell rejects bad inputs") {
  CmaState s = cma_init(small_config(3, 4, 0.5));
  Rng rng(6);
  const auto pop = ask(s, rng);
  std::vector<double> f{1.0, 2.0, std::nan(""), 0.0};
  try {
    tell(s, pop, f);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("candidate 2") != std::string::npos);
  }
  f = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(tell(s, pop, f), InputError);
}

TEST_CASE("sphere converges and the incumbent never worsens") {
  CmaConfig c = small_config(10, 16, 0.5);
  c.mean0.assign(10, 1.0);
  CmaState s = cma_init(c);
  Rng rng(7);
  double prev = s.best_fitness;
  int generations = 0;
  while (s.best_fitness >= 1e-10 && generations < 300) {
    const auto pop = ask(s, rng);
    std::vector<double> f;
    for (const auto& x : pop) f.push_back(sphere(x));
    tell(s, pop, f);
    CHECK(s.best_fitness <= prev);
    prev = s.best_fitness;
    ++generations;
  }
  CHECK(s.best_fitness < 1e-10);
  MESSAGE("generations to 1e-10: " << generations);
}

TEST_CASE("trajectory oracle beats the all-zero schedule and is reproducible") {
  EnvConfig env;
  CmaConfig cma;
  for (std::uint64_t seed : {0u, 5u}) {
    const TrajectoryRun run = optimize_trajectory_run(env, seed, cma, seed, 1);
    const std::vector<double> zeros(100, 0.0);
    CHECK(run.demo.cumulative_reward >= episode_return(env, seed, zeros));
    REQUIRE(run.best_fitness_per_generation.size() == 30);
    for (std::size_t g = 1; g < 30; ++g) {
      CHECK(run.best_fitness_per_generation[g] <= run.best_fitness_per_generation[g - 1]);
    }
    CHECK(-run.best_fitness_per_generation.back() ==
          doctest::Approx(run.demo.cumulative_reward).epsilon(1e-12));
    for (double a : run.demo.actions) {
      CHECK(a >= -1.0);
      CHECK(a <= 1.0);
    }
    run.demo.validate(100);
    // Replaying the recorded actions reproduces the return.
    CHECK(std::abs(episode_return(env, seed, run.demo.actions) - run.demo.cumulative_reward) <
          1e-9);
    const TrajectoryRun again = optimize_trajectory_run(env, seed, cma, seed, 4);
    CHECK(again.demo == run.demo);
    CHECK(again.best_fitness_per_generation == run.best_fitness_per_generation);
  }
}

TEST_CASE("trajectory dimension must match the episode") {
  EnvConfig env;
  CmaConfig cma;
  cma.dim = 50;
  CHECK_THROWS_AS(optimize_trajectory(env, 0, cma, 0), ConfigError);
}

TEST_CASE("oracle beats the baselines on a sample seed") {
  EnvConfig env;
  const Demonstration demo = optimize_trajectory(env, 3, CmaConfig{}, 3, 4);
  RandomAgent random;
  StaticAgent fixed;
  RuleBasedAgent rule = RuleBasedAgent::for_env(env);
  for (Agent* a : std::vector<Agent*>{&random, &fixed, &rule}) {
    CHECK(demo.cumulative_reward >= run_episode(*a, env, 3));
  }
}

TEST_CASE("demonstration files round-trip exactly") {
  const Demonstration demo = optimize_trajectory(EnvConfig{}, 11, CmaConfig{}, 11, 2);
  const auto dir = std::filesystem::temp_directory_path() / "evosort_test_cma";
  std::filesystem::create_directories(dir);
  const auto path = dir / demo_file_name(11);
  save_demonstration(path, demo);
  CHECK(load_demonstration(path) == demo);
  CHECK(parse_demonstration(format_demonstration(demo)) == demo);
  std::filesystem::remove_all(dir);
}
