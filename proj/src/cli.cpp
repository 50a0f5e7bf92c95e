#include "evosort/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>

#include "evosort/agents.hpp"
#include "evosort/error.hpp"
#include "evosort/parallel.hpp"
#include "evosort/policy.hpp"

namespace fs = std::filesystem;

namespace evosort {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string join_seeds(std::uint64_t first, int count) {
  return std::to_string(first) + ".." + std::to_string(first + count - 1);
}

void write_manifest(const fs::path& dir, const KeyValues& kv) {
  write_file_atomic(dir / "manifest.txt", format_key_values(kv));
}

std::string format_csv_curve_row(const EvalPoint& p) {
  return std::to_string(p.steps) + "," + format_double(p.mean_return) + "," +
         format_double(p.std_return) + "\n";
}

}  // namespace

KeyValues ResolvedConfig::to_kv() const {
  KeyValues kv = env.to_kv();
  kv.merge(cma.to_kv());
  kv.merge(train.to_kv());
  kv["bc_epochs"] = std::to_string(bc.epochs);
  kv["bc_minibatch"] = std::to_string(bc.minibatch);
  kv["bc_learning_rate"] = format_double(bc.learning_rate);
  return kv;
}

void ResolvedConfig::apply_kv(const KeyValues& kv) {
  const std::vector<std::string> known = config_keys();
  for (const auto& [key, value] : kv) {
    if (key.rfind("run.", 0) == 0) continue;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  env.apply_kv(kv);
  cma.apply_kv(kv);
  train.apply_kv(kv);
  read_into(kv, "bc_epochs", bc.epochs);
  read_into(kv, "bc_minibatch", bc.minibatch);
  read_into(kv, "bc_learning_rate", bc.learning_rate);
}

void ResolvedConfig::validate() const {
  env.validate();
  cma.validate();
  if (cma.dim != env.episode_length) {
    throw ConfigError("cma_dim (" + std::to_string(cma.dim) +
                      ") must equal episode_length (" +
                      std::to_string(env.episode_length) + ")");
  }
  train.validate(env.episode_length);
  if (bc.epochs < 1 || bc.minibatch < 1 || !(bc.learning_rate > 0.0)) {
    throw ConfigError("bc settings must be positive");
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, value] : ResolvedConfig{}.to_kv()) keys.push_back(key);
  return keys;
}

DemoGenResult cmd_demo_gen(const ResolvedConfig& config, const fs::path& out_dir,
                           std::uint64_t seed_base, int count, int jobs) {
  config.validate();
  if (count < 1) throw ConfigError("demo-gen: count must be >= 1");
  const auto start = Clock::now();
  fs::create_directories(out_dir);

  std::vector<std::string> errors(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), jobs, [&](std::size_t i) {
    const std::uint64_t seed = seed_base + i;
    try {
      const Demonstration demo = optimize_trajectory(config.env, seed, config.cma, seed);
      save_demonstration(out_dir / demo_file_name(seed), demo);
    } catch (const std::exception& e) {
      errors[i] = std::to_string(seed) + ": " + e.what();
    }
  });

  DemoGenResult result;
  for (int i = 0; i < count; ++i) {
    if (errors[i].empty()) {
      result.written.push_back(seed_base + i);
    } else {
      result.failures.push_back(errors[i]);
    }
  }
  result.manifest = config.to_kv();
  result.manifest["run.subcommand"] = "demo-gen";
  result.manifest["run.seed_base"] = std::to_string(seed_base);
  result.manifest["run.count"] = std::to_string(count);
  result.manifest["run.seeds"] = join_seeds(seed_base, count);
  result.manifest["run.optimizer_seed"] = "env_seed";
  result.manifest["run.out"] = out_dir.string();
  result.manifest["run.files_written"] = std::to_string(result.written.size());
  std::string failures;
  for (const auto& f : result.failures) failures += (failures.empty() ? "" : "; ") + f;
  result.manifest["run.failures"] = failures;
  result.manifest["run.duration_s"] = format_double(seconds_since(start));
  write_manifest(out_dir, result.manifest);
  return result;
}

std::string to_string(Variant v) { return v == Variant::kPpo ? "ppo" : "ppo_bc"; }

Variant parse_variant(const std::string& text) {
  if (text == "ppo") return Variant::kPpo;
  if (text == "ppo_bc") return Variant::kPpoBc;
  throw ConfigError("unknown training variant '" + text + "' (expected ppo or ppo_bc)");
}

std::string format_eval_curve_csv(const std::vector<EvalPoint>& curve) {
  std::string out = "steps,mean_return,std_return\n";
  for (const EvalPoint& p : curve) out += format_csv_curve_row(p);
  return out;
}

std::string format_bc_loss_csv(const std::vector<double>& losses) {
  std::string out = "epoch,mse\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(losses[i]) + "\n";
  }
  return out;
}

TrainArtifacts cmd_train(const ResolvedConfig& config, Variant variant,
                         const fs::path& demos_dir, const fs::path& out_dir) {
  config.validate();
  const auto start = Clock::now();
  const auto train_seed = static_cast<std::uint64_t>(config.train.train_seed);
  const long long last_train_seed =
      config.train.train_seed + config.train.max_train_episodes(config.env.episode_length) - 1;
  const std::vector<SeedRange> ranges{
      {"test", 0, kTestSeedCount - 1},
      {"eval", kEvalSeedBase, kEvalSeedBase + config.train.eval_episodes - 1},
      {"train", train_seed, static_cast<std::uint64_t>(last_train_seed)},
      {"demo", kDemoSeedBase, kDemoSeedBase + kDemoCount - 1}};
  check_disjoint(ranges);

  TrainArtifacts art;
  art.manifest = config.to_kv();
  art.manifest["run.subcommand"] = "train";
  art.manifest["run.variant"] = to_string(variant);
  art.manifest["run.out"] = out_dir.string();
  art.manifest["run.init_seed"] = std::to_string(train_seed);
  art.manifest["run.eval_seeds"] = join_seeds(kEvalSeedBase, config.train.eval_episodes);
  art.manifest["run.train_seeds"] = join_seeds(train_seed,
      static_cast<int>(last_train_seed - config.train.train_seed + 1));
  fs::create_directories(out_dir);

  GaussianPolicy policy = GaussianPolicy::fresh(train_seed);
  if (variant == Variant::kPpoBc) {
    const DemoSet demos =
        load_demo_set(demos_dir, kDemoSeedBase, kDemoCount, config.env.episode_length);
    Rng bc_rng(derive_seed(train_seed, 12));
    art.manifest["run.demos"] = demos_dir.string();
    art.manifest["run.demo_seeds"] = join_seeds(kDemoSeedBase, kDemoCount);
    art.manifest["run.bc_mae_before"] = format_double(bc_mae(policy, demos));
    art.bc_loss = bc_pretrain(policy, demos, config.bc, bc_rng);
    art.manifest["run.bc_mae_after"] = format_double(bc_mae(policy, demos));
    write_file_atomic(out_dir / "bc_loss.csv", format_bc_loss_csv(art.bc_loss));
  }

  Adam adam;
  try {
    art.result = train(config.env, config.train, policy, &adam);
  } catch (const NumericalError& e) {
    save_checkpoint(out_dir / "diagnostic.ckpt", Checkpoint{policy, std::nullopt});
    art.manifest["run.status"] = std::string("numerical_error: ") + e.what();
    art.manifest["run.duration_s"] = format_double(seconds_since(start));
    write_manifest(out_dir, art.manifest);
    throw;
  }
  art.final_policy = policy;

  try {
    save_checkpoint(out_dir / "best.ckpt", Checkpoint{art.result.best_policy, std::nullopt});
    save_checkpoint(out_dir / "final.ckpt", Checkpoint{policy, adam});
    write_file_atomic(out_dir / "eval_curve.csv", format_eval_curve_csv(art.result.eval_curve));
    write_file_atomic(out_dir / "initial_eval.csv",
                      format_eval_curve_csv({art.result.initial_eval}));
  } catch (const std::exception& e) {
    art.manifest["run.status"] = std::string("io_error: ") + e.what();
    art.manifest["run.duration_s"] = format_double(seconds_since(start));
    write_manifest(out_dir, art.manifest);
    throw;
  }

  art.manifest["run.status"] = "ok";
  art.manifest["run.total_steps"] = std::to_string(art.result.total_steps);
  art.manifest["run.train_episodes"] = std::to_string(art.result.train_episodes);
  art.manifest["run.initial_eval_mean"] = format_double(art.result.initial_eval.mean_return);
  art.manifest["run.best_eval_mean"] = format_double(art.result.best_eval.mean_return);
  art.manifest["run.best_eval_steps"] = std::to_string(art.result.best_eval.steps);
  art.manifest["run.final_eval_mean"] = format_double(art.result.final_eval.mean_return);
  art.manifest["run.duration_s"] = format_double(seconds_since(start));
  write_manifest(out_dir, art.manifest);
  return art;
}

std::vector<NamedAgent> benchmark_roster(const ResolvedConfig& config,
                                         const fs::path& artifacts_dir) {
  std::vector<NamedAgent> roster;
  roster.push_back({"random", [] { return std::make_unique<RandomAgent>(); }});
  roster.push_back({"static", [] { return std::make_unique<StaticAgent>(0.0); }});
  const EnvConfig env = config.env;
  roster.push_back({"rule", [env] {
                      return std::make_unique<RuleBasedAgent>(RuleBasedAgent::for_env(env));
                    }});
  for (const std::string variant : {"ppo", "ppo_bc"}) {
    for (const std::string which : {"best", "final"}) {
      auto policy = std::make_shared<const GaussianPolicy>(
          load_checkpoint(artifacts_dir / variant / (which + ".ckpt")).policy);
      roster.push_back({variant + "_" + which,
                        [policy] { return std::make_unique<PolicyAgent>(policy); }});
    }
  }
  auto demos = std::make_shared<std::map<std::uint64_t, Demonstration>>();
  for (std::uint64_t seed : test_seeds()) {
    Demonstration d = load_demonstration(artifacts_dir / "oracle" / demo_file_name(seed));
    if (d.seed != seed) {
      throw ConfigError("oracle demonstration file for seed " + std::to_string(seed) +
                        " records seed " + std::to_string(d.seed));
    }
    d.validate(config.env.episode_length);
    (*demos)[seed] = std::move(d);
  }
  std::shared_ptr<const std::map<std::uint64_t, Demonstration>> frozen = demos;
  roster.push_back({"oracle", [frozen] { return std::make_unique<OracleAgent>(frozen); }});
  return roster;
}

BenchmarkReport cmd_benchmark(const ResolvedConfig& config, const fs::path& artifacts_dir,
                              const fs::path& out_dir, int jobs) {
  config.validate();
  const auto start = Clock::now();
  const std::vector<NamedAgent> roster = benchmark_roster(config, artifacts_dir);
  const std::vector<std::uint64_t> seeds = test_seeds();
  BenchmarkReport report = run_benchmark(roster, config.env, seeds, jobs);

  KeyValues manifest = config.to_kv();
  for (const auto& [k, v] : report.manifest) manifest[k] = v;
  manifest["run.subcommand"] = "benchmark";
  manifest["run.artifacts"] = artifacts_dir.string();
  manifest["run.out"] = out_dir.string();
  manifest["run.oracle_demos"] = (artifacts_dir / "oracle").string();
  for (const std::string variant : {"ppo", "ppo_bc"}) {
    for (const std::string which : {"best", "final"}) {
      manifest["run.checkpoint." + variant + "_" + which] =
          (artifacts_dir / variant / (which + ".ckpt")).string();
    }
  }
  manifest["run.cells"] = std::to_string(report.rows.size());
  manifest["run.duration_s"] = format_double(seconds_since(start));
  report.manifest = manifest;

  fs::create_directories(out_dir);
  write_file_atomic(out_dir / "results.csv", format_results_csv(report));
  const std::vector<SummaryRow> summary = summarize(report);
  write_file_atomic(out_dir / "summary.csv", format_summary_csv(summary));
  write_manifest(out_dir, manifest);
  return report;
}

BenchmarkReport cmd_pipeline(const ResolvedConfig& config, const fs::path& out_dir,
                             int jobs) {
  config.validate();
  const auto start = Clock::now();
  auto require_complete = [](const DemoGenResult& r, const std::string& what) {
    if (!r.failures.empty()) {
      throw ConfigError(what + ": " + std::to_string(r.failures.size()) +
                        " demonstrations failed; first: " + r.failures.front());
    }
  };
  require_complete(cmd_demo_gen(config, out_dir / "demos", kDemoSeedBase, kDemoCount, jobs),
                   "demo generation");
  require_complete(cmd_demo_gen(config, out_dir / "oracle", 0, kTestSeedCount, jobs),
                   "oracle generation");

  // The two trainings are independent; run them side by side when allowed.
  TrainArtifacts runs[2];
  const Variant variants[2] = {Variant::kPpo, Variant::kPpoBc};
  parallel_for(2, jobs, [&](std::size_t i) {
    runs[i] = cmd_train(config, variants[i], out_dir / "demos", out_dir / to_string(variants[i]));
  });

  BenchmarkReport report = cmd_benchmark(config, out_dir, out_dir / "benchmark", jobs);
  KeyValues manifest = config.to_kv();
  manifest["run.subcommand"] = "pipeline";
  manifest["run.out"] = out_dir.string();
  manifest["run.duration_s"] = format_double(seconds_since(start));
  write_manifest(out_dir, manifest);
  return report;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Continuous sorting benchmark: trajectory oracle, BC warm-start, PPO"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::map<std::string, std::string> overrides;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file (or a manifest)");
    sub->add_option("--out", out_dir, "output directory (default: $EVOSORT_OUT or ./evosort_out)");
    sub->add_option("--jobs", jobs, "worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber);
    for (const std::string& key : config_keys()) {
      sub->add_option("--" + key, overrides[key], "override " + key);
    }
  };

  long long seed_base = -1;
  int count = -1;
  auto* demo = app.add_subcommand("demo-gen", "optimize per-seed oracle schedules");
  add_common(demo);
  demo->add_option("--seed-base", seed_base, "first environment seed (default 3000)");
  demo->add_option("--count", count, "number of seeds (default 100)");

  std::string variant_text;
  std::string demos_dir;
  auto* tr = app.add_subcommand("train", "train ppo or ppo_bc");
  add_common(tr);
  tr->add_option("--variant", variant_text, "ppo | ppo_bc");
  tr->add_option("--demos", demos_dir, "demonstration directory (ppo_bc)");
  tr->add_option("--seed-base", seed_base, "alias for --train_seed");

  std::string artifacts_dir;
  auto* bench = app.add_subcommand("benchmark", "evaluate all agents on the test seeds");
  add_common(bench);
  bench->add_option("--artifacts", artifacts_dir, "directory with oracle/, ppo/, ppo_bc/");

  auto* pipe = app.add_subcommand("pipeline", "demo-gen, train both variants, benchmark");
  add_common(pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    KeyValues file_kv;
    if (!config_path.empty()) file_kv = read_key_values(config_path);
    KeyValues kv = file_kv;
    for (const auto& [key, value] : overrides) {
      if (!value.empty()) kv[key] = value;
    }
    if (tr->parsed() && seed_base >= 0) kv["train_seed"] = std::to_string(seed_base);
    ResolvedConfig config;
    config.apply_kv(kv);

    auto run_value = [&](const std::string& key) -> std::string {
      auto it = file_kv.find("run." + key);
      return it == file_kv.end() ? std::string{} : it->second;
    };
    if (out_dir.empty()) {
      const char* env_out = std::getenv("EVOSORT_OUT");
      out_dir = env_out ? env_out : "evosort_out";
    }

    if (demo->parsed()) {
      if (seed_base < 0) {
        const std::string v = run_value("seed_base");
        seed_base = v.empty() ? static_cast<long long>(kDemoSeedBase) : parse_int("run.seed_base", v);
      }
      if (count < 0) {
        const std::string v = run_value("count");
        count = v.empty() ? kDemoCount : static_cast<int>(parse_int("run.count", v));
      }
      const DemoGenResult r = cmd_demo_gen(config, out_dir,
                                           static_cast<std::uint64_t>(seed_base), count, jobs);
      std::cout << "wrote " << r.written.size() << " demonstrations to " << out_dir << "\n";
      for (const auto& f : r.failures) std::cerr << "failed: " << f << "\n";
      return r.failures.empty() ? 0 : 1;
    }
    if (tr->parsed()) {
      if (variant_text.empty()) variant_text = run_value("variant");
      if (variant_text.empty()) throw ConfigError("train: --variant is required");
      if (demos_dir.empty()) demos_dir = run_value("demos");
      const Variant variant = parse_variant(variant_text);
      if (variant == Variant::kPpoBc && demos_dir.empty()) {
        throw ConfigError("train: ppo_bc requires --demos");
      }
      const TrainArtifacts art = cmd_train(config, variant, demos_dir, out_dir);
      std::cout << to_string(variant) << ": initial eval "
                << art.result.initial_eval.mean_return << ", best "
                << art.result.best_eval.mean_return << " @" << art.result.best_eval.steps
                << ", final " << art.result.final_eval.mean_return << "\n";
      return 0;
    }
    if (bench->parsed()) {
      if (artifacts_dir.empty()) artifacts_dir = run_value("artifacts");
      if (artifacts_dir.empty()) throw ConfigError("benchmark: --artifacts is required");
      const BenchmarkReport report = cmd_benchmark(config, artifacts_dir, out_dir, jobs);
      std::cout << format_summary_csv(summarize(report));
      const std::size_t expected = report.agents.size() * report.seeds.size();
      return report.rows.size() == expected && expected == 8 * kTestSeedCount ? 0 : 1;
    }
    if (pipe->parsed()) {
      const BenchmarkReport report = cmd_pipeline(config, out_dir, jobs);
      std::cout << format_summary_csv(summarize(report));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "evosort: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace evosort
