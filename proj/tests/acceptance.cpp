// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "evosort/bc.hpp"
#include "evosort/bench.hpp"
#include "evosort/cli.hpp"
#include "evosort/cma.hpp"
#include "evosort/env.hpp"
#include "evosort/nn.hpp"
#include "evosort/policy.hpp"
#include "evosort/ppo.hpp"

using namespace evosort;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

int run_cli_args(std::vector<std::string> args) {
  args.insert(args.begin(), "evosort");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// ---------------------------------------------------------------- 1
Outcome reward_suite() {
  bool ok = true;
  double worst_gap = 0;
  for (double theta : {0.5, 0.75, 0.9, 0.95}) {
    worst_gap = std::max(worst_gap, std::abs(purity_reward(theta - 1e-9, theta) -
                                             purity_reward(theta + 1e-9, theta)));
    ok &= purity_reward(theta, theta) == 0.25;
    ok &= purity_reward(1.0, theta) == 0.0;
    ok &= purity_reward(0.0, theta) == -10.0;
  }
  ok &= worst_gap < 1e-6;
  ok &= step_reward(100, 100, 0.9, 0.9, 0.9, 0.9) == 0.75;
  ok &= step_reward(0, 100, 1.0, 1.0, 0.9, 0.9) == -0.25;
  return {ok, "max jump at theta " + fmt("%.2e", worst_gap)};
}

// ---------------------------------------------------------------- 2
Outcome determinism_and_conservation() {
  Rng rng(20240601);
  int mismatches = 0;
  double worst = 0;
  for (int pair = 0; pair < 100; ++pair) {
    EnvConfig cfg;
    cfg.sampling_mode = static_cast<SamplingMode>(pair % 4);
    const std::uint64_t seed = rng.next_raw() % 1000000;
    std::vector<double> actions(cfg.episode_length);
    for (double& a : actions) a = rng.uniform(-1.0, 1.0);
    SortingEnv a(cfg), b(cfg);
    if (!(a.reset(seed) == b.reset(seed))) ++mismatches;
    for (double act : actions) {
      const StepResult ra = a.step(act), rb = b.step(act);
      if (!(ra.observation == rb.observation) || ra.reward != rb.reward ||
          ra.done != rb.done || !(a.containers() == b.containers())) {
        ++mismatches;
      }
      const double processed = a.processed_total();
      worst = std::max(worst, std::abs(a.containers().total() - processed) /
                                  std::max(processed, 1e-300));
    }
  }
  return {mismatches == 0 && worst < 1e-9,
          std::to_string(mismatches) + " replay mismatches, max relative mass error " +
              fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 3
double worst_fd_error(Mlp net, Rng& rng, int inputs) {
  double worst = 0;
  for (int k = 0; k < inputs; ++k) {
    std::vector<double> x(net.sizes()[0]);
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    Mlp::Cache cache;
    net.forward(x, cache);
    std::vector<double> g(net.num_params(), 0.0);
    net.backward(cache, 1.0, g);
    const double h = 1e-5;
    for (std::size_t i = 0; i < net.num_params(); ++i) {
      const double saved = net.params()[i];
      net.params()[i] = saved + h;
      const double up = net.forward(x);
      net.params()[i] = saved - h;
      const double down = net.forward(x);
      net.params()[i] = saved;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - g[i]) / denom);
    }
  }
  return worst;
}

Outcome gradient_check() {
  Rng rng(31337);
  const GaussianPolicy fresh = GaussianPolicy::fresh(1000);
  Mlp perturbed = init_params({7, 32, 32, 1}, 1.0, 77);
  for (double& p : perturbed.params()) p += rng.uniform(-0.2, 0.2);
  const double e_actor = worst_fd_error(fresh.actor, rng, 20);
  const double e_critic = worst_fd_error(fresh.critic, rng, 20);
  const double e_random = worst_fd_error(perturbed, rng, 20);
  const double worst = std::max({e_actor, e_critic, e_random});
  return {worst < 1e-5, "max relative error " + fmt("%.2e", worst) +
                            " over 3 networks x 1345 params x 20 inputs"};
}

// ---------------------------------------------------------------- 4
Outcome gae_equivalence() {
  Rng rng(4242);
  double worst = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 12;
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> d(n);
    for (int t = 0; t < n; ++t) {
      r[t] = rng.uniform(-5, 5);
      v[t] = rng.uniform(-5, 5);
      d[t] = rng.uniform() < 0.15;
    }
    const double last = rng.uniform(-5, 5);
    const double gamma = rng.uniform(0.8, 1.0), lambda = rng.uniform(0.0, 1.0);
    const Advantages a = compute_gae(r, v, d, last, gamma, lambda);
    for (int t = 0; t < n; ++t) {
      double sum = 0, coef = 1;
      for (int k = t; k < n; ++k) {
        const double next = k + 1 < n ? v[k + 1] : last;
        sum += coef * (r[k] + gamma * next * (d[k] ? 0 : 1) - v[k]);
        coef *= gamma * lambda * (d[k] ? 0 : 1);
      }
      worst = std::max(worst, std::abs(sum - a.advantages[t]));
    }
  }
  return {worst < 1e-10, "max abs diff " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- 5
Outcome cma_sanity() {
  bool monotone = true;
  int reached = 0;
  std::string gens;
  const int runs = 5;
  for (int run = 0; run < runs; ++run) {
    CmaConfig c;
    c.dim = 10;
    c.lambda = 16;
    c.sigma0 = 0.5;
    c.mean0.assign(10, 1.0);
    CmaState s = cma_init(c);
    Rng rng(derive_seed(5, run));
    double prev = s.best_fitness;
    int g = 0;
    for (; g < 300 && !(s.best_fitness < 1e-10); ++g) {
      const auto pop = ask(s, rng);
      std::vector<double> f;
      for (const auto& x : pop) f.push_back(x.squaredNorm());
      tell(s, pop, f);
      monotone &= s.best_fitness <= prev;
      prev = s.best_fitness;
    }
    if (s.best_fitness < 1e-10) ++reached;
    gens += (gens.empty() ? "" : ",") + std::to_string(g);
  }
  // Incumbent monotonicity on the trajectory objective as well.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TrajectoryRun r = optimize_trajectory_run(EnvConfig{}, seed, CmaConfig{}, seed);
    for (std::size_t g = 1; g < r.best_fitness_per_generation.size(); ++g) {
      monotone &= r.best_fitness_per_generation[g] <= r.best_fitness_per_generation[g - 1];
    }
  }
  return {reached == runs && monotone,
          "sphere runs below 1e-10: " + std::to_string(reached) + "/" + std::to_string(runs) +
              " (generations " + gens + "); incumbent monotone: " + (monotone ? "yes" : "no")};
}

// ---------------------------------------------------------------- 6
Outcome oracle_dominance(const BenchmarkReport& report) {
  const std::vector<double> oracle = report.rewards_of("oracle");
  const double oracle_mean = mean_of(oracle);
  bool strictly_greatest = true;
  std::string runner_up;
  double runner_up_mean = -1e300;
  for (const auto& agent : report.agents) {
    if (agent == "oracle") continue;
    const double m = mean_of(report.rewards_of(agent));
    strictly_greatest &= oracle_mean > m;
    if (m > runner_up_mean) runner_up_mean = m, runner_up = agent;
  }
  int seeds_won = 0;
  for (std::size_t i = 0; i < report.seeds.size(); ++i) {
    bool top = true;
    for (const auto& agent : report.agents) {
      if (agent != "oracle" && report.rewards_of(agent)[i] > oracle[i]) top = false;
    }
    seeds_won += top;
  }
  return {strictly_greatest && seeds_won >= 18,
          "oracle mean " + fmt("%.3f", oracle_mean) + " vs best other " + runner_up + " " +
              fmt("%.3f", runner_up_mean) + "; per-seed maximum on " +
              std::to_string(seeds_won) + "/20"};
}

// ---------------------------------------------------------------- 7
struct WarmStart {
  bool pass = false;
  std::string detail;
};

WarmStart warm_start(const fs::path& run_dir, const BenchmarkReport& report) {
  const double ppo_best = mean_of(report.rewards_of("ppo_best"));
  const double ppo_final = mean_of(report.rewards_of("ppo_final"));
  const double bc_best = mean_of(report.rewards_of("ppo_bc_best"));
  const double bc_final = mean_of(report.rewards_of("ppo_bc_final"));
  const KeyValues m_ppo = read_key_values(run_dir / "ppo" / "manifest.txt");
  const KeyValues m_bc = read_key_values(run_dir / "ppo_bc" / "manifest.txt");
  const double init_ppo = parse_double("init", m_ppo.at("run.initial_eval_mean"));
  const double init_bc = parse_double("init", m_bc.at("run.initial_eval_mean"));
  const bool ok = bc_best > ppo_best && bc_final > ppo_final && init_bc > init_ppo;
  return {ok, "best " + fmt("%.3f", bc_best) + " vs " + fmt("%.3f", ppo_best) + ", final " +
                  fmt("%.3f", bc_final) + " vs " + fmt("%.3f", ppo_final) + ", step-0 " +
                  fmt("%.3f", init_bc) + " vs " + fmt("%.3f", init_ppo) + " (train_seed " +
                  m_ppo.at("train_seed") + ")"};
}

// ---------------------------------------------------------------- 8
Outcome baseline_ordering(const BenchmarkReport& report) {
  const double ppo = mean_of(report.rewards_of("ppo_best"));
  const double rule = mean_of(report.rewards_of("rule"));
  const double random = mean_of(report.rewards_of("random"));
  return {ppo > random && rule > random, "ppo_best " + fmt("%.3f", ppo) + ", rule " +
                                             fmt("%.3f", rule) + ", random " +
                                             fmt("%.3f", random)};
}

// ---------------------------------------------------------------- 9
Outcome bc_learning(const fs::path& demos_dir, const TrainConfig& train) {
  const DemoSet demos = load_demo_set(demos_dir, kDemoSeedBase, kDemoCount, 100);
  // Same initialization and shuffle stream as the ppo_bc training run.
  GaussianPolicy policy = GaussianPolicy::fresh(static_cast<std::uint64_t>(train.train_seed));
  Rng rng(derive_seed(static_cast<std::uint64_t>(train.train_seed), 12));
  const double before = bc_mse(policy, demos);
  const double mae_before = bc_mae(policy, demos);
  const std::vector<double> curve = bc_pretrain(policy, demos, BcConfig{}, rng);
  const double first = curve.front(), last = curve.back();
  const double reduction = (first - last) / first;
  const double mae_after = bc_mae(policy, demos);
  return {curve.size() == 10 && last < first && reduction >= 0.5,
          "epoch MSE " + fmt("%.4f", first) + " -> " + fmt("%.4f", last) + " (" +
              fmt("%.1f", 100 * reduction) + "% reduction, need 50%); pre-training MSE " +
              fmt("%.4f", before) + ", MAE " + fmt("%.4f", mae_before) + " -> " +
              fmt("%.4f", mae_after) + "; " + std::to_string(demos.size()) + " samples"};
}

// ---------------------------------------------------------------- 10
Outcome reproduce_from_manifests(const fs::path& run_dir, const fs::path& rerun_dir) {
  fs::remove_all(rerun_dir);
  const std::string r = rerun_dir.string();
  int status = 0;
  status |= run_cli_args({"demo-gen", "--config", (run_dir / "demos" / "manifest.txt").string(),
                          "--out", r + "/demos"});
  status |= run_cli_args({"demo-gen", "--config", (run_dir / "oracle" / "manifest.txt").string(),
                          "--out", r + "/oracle"});
  status |= run_cli_args({"train", "--config", (run_dir / "ppo" / "manifest.txt").string(),
                          "--out", r + "/ppo"});
  status |= run_cli_args({"train", "--config", (run_dir / "ppo_bc" / "manifest.txt").string(),
                          "--demos", r + "/demos", "--out", r + "/ppo_bc"});
  status |= run_cli_args({"benchmark", "--config",
                          (run_dir / "benchmark" / "manifest.txt").string(), "--artifacts", r,
                          "--out", r + "/benchmark"});
  const std::string a = slurp(run_dir / "benchmark" / "results.csv");
  const std::string b = slurp(rerun_dir / "benchmark" / "results.csv");
  const bool same = !a.empty() && a == b;
  return {status == 0 && same, std::string("stage exit status ") + std::to_string(status) +
                                   ", results.csv " + (same ? "bitwise identical" : "DIFFERS") +
                                   " (" + std::to_string(a.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path workdir = "acceptance_work";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--workdir") workdir = argv[i + 1];
    if (flag == "--jobs") jobs = std::stoi(argv[i + 1]);
  }
  fs::create_directories(workdir);

  int failures = 0;
  auto report_line = [&](int id, const std::string& name, const Outcome& o, double seconds) {
    std::printf("criterion %2d: %s  %-34s %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL",
                name.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto timed = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report_line(id, name, o, s);
  };

  timed(1, "reward function", reward_suite);
  timed(2, "env determinism + conservation", determinism_and_conservation);
  timed(3, "gradient correctness", gradient_check);
  timed(4, "GAE oracle equivalence", gae_equivalence);
  timed(5, "CMA-ES sanity", cma_sanity);

  // Full pipeline at the default configuration.
  const ResolvedConfig config;
  const fs::path run_dir = workdir / "run";
  fs::remove_all(run_dir);
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkReport report;
  std::string pipeline_error;
  try {
    report = cmd_pipeline(config, run_dir, jobs);
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }
  const double pipeline_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("pipeline: %s in %.1fs (jobs %d)\n",
              pipeline_error.empty() ? "completed" : pipeline_error.c_str(), pipeline_s, jobs);

  if (!pipeline_error.empty()) {
    for (int id = 6; id <= 10; ++id) {
      report_line(id, "pipeline-dependent", {false, "pipeline failed"}, 0.0);
    }
    return 1;
  }

  timed(6, "oracle dominance", [&] { return oracle_dominance(report); });

  timed(7, "warm-start benefit", [&] {
    WarmStart w = warm_start(run_dir, report);
    if (w.pass) return Outcome{true, w.detail};
    // One permitted rerun with the train seed incremented.
    ResolvedConfig retry = config;
    retry.train.train_seed += 1;
    const fs::path retry_dir = workdir / "retry";
    fs::remove_all(retry_dir);
    fs::create_directories(retry_dir);
    fs::copy(run_dir / "oracle", retry_dir / "oracle", fs::copy_options::recursive);
    cmd_train(retry, Variant::kPpo, run_dir / "demos", retry_dir / "ppo");
    cmd_train(retry, Variant::kPpoBc, run_dir / "demos", retry_dir / "ppo_bc");
    const BenchmarkReport rr = cmd_benchmark(retry, retry_dir, retry_dir / "benchmark", jobs);
    const WarmStart second = warm_start(retry_dir, rr);
    return Outcome{second.pass, "first attempt: " + w.detail + "; rerun: " + second.detail};
  });

  timed(8, "baseline ordering", [&] { return baseline_ordering(report); });
  timed(9, "BC learning", [&] { return bc_learning(run_dir / "demos", config.train); });
  timed(10, "end-to-end reproducibility",
        [&] { return reproduce_from_manifests(run_dir, workdir / "rerun"); });

  std::printf("acceptance: %d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
