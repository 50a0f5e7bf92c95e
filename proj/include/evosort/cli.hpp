#ifndef EVOSORT_CLI_HPP_
#define EVOSORT_CLI_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evosort/bc.hpp"
#include "evosort/bench.hpp"
#include "evosort/cma.hpp"
#include "evosort/config.hpp"
#include "evosort/env.hpp"
#include "evosort/ppo.hpp"

namespace evosort {

// Every tunable of a run. Resolution order: defaults, then config file,
// then command-line flags.
struct ResolvedConfig {
  EnvConfig env;
  CmaConfig cma;
  TrainConfig train;
  BcConfig bc;

  KeyValues to_kv() const;
  // Unknown keys are rejected; keys starting with "run." are ignored.
  void apply_kv(const KeyValues& kv);
  void validate() const;
};

// All recognised config keys (used for flag registration).
std::vector<std::string> config_keys();

struct DemoGenResult {
  std::vector<std::uint64_t> written;
  std::vector<std::string> failures;  // "<seed>: <message>"
  KeyValues manifest;
};

// Runs the trajectory optimizer for seeds seed_base .. seed_base + count - 1
// (optimizer seed = env seed) and writes one demo file per seed plus
// manifest.txt.
DemoGenResult cmd_demo_gen(const ResolvedConfig& config,
                           const std::filesystem::path& out_dir,
                           std::uint64_t seed_base, int count, int jobs);

enum class Variant { kPpo, kPpoBc };
std::string to_string(Variant v);
Variant parse_variant(const std::string& text);

struct TrainArtifacts {
  TrainResult result;
  GaussianPolicy final_policy;
  std::vector<double> bc_loss;  // empty for plain PPO
  KeyValues manifest;
};

// ppo: train from a fresh init seeded by train_seed.
// ppo_bc: same init, behavioral cloning on the demo set, then train.
// Writes best.ckpt, final.ckpt, eval_curve.csv, initial_eval.csv,
// bc_loss.csv (ppo_bc) and manifest.txt.
TrainArtifacts cmd_train(const ResolvedConfig& config, Variant variant,
                         const std::filesystem::path& demos_dir,
                         const std::filesystem::path& out_dir);

// The eight-agent roster evaluated on the test seeds.
std::vector<NamedAgent> benchmark_roster(const ResolvedConfig& config,
                                         const std::filesystem::path& artifacts_dir);

// Expects <artifacts>/oracle/demo_<seed>.csv for the test seeds and
// <artifacts>/{ppo,ppo_bc}/{best,final}.ckpt. Writes results.csv,
// summary.csv and manifest.txt.
BenchmarkReport cmd_benchmark(const ResolvedConfig& config,
                              const std::filesystem::path& artifacts_dir,
                              const std::filesystem::path& out_dir, int jobs);

// demo-gen (3000+), oracle demos on the test seeds, both trainings and the
// benchmark, laid out under out_dir as demos/, oracle/, ppo/, ppo_bc/,
// benchmark/.
BenchmarkReport cmd_pipeline(const ResolvedConfig& config,
                             const std::filesystem::path& out_dir, int jobs);

std::string format_eval_curve_csv(const std::vector<EvalPoint>& curve);
std::string format_bc_loss_csv(const std::vector<double>& losses);

int run_cli(int argc, char** argv);

}  // namespace evosort

#endif  // EVOSORT_CLI_HPP_
