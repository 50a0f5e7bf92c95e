#ifndef EVOSORT_BENCH_HPP_
#define EVOSORT_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evosort/agents.hpp"
#include "evosort/config.hpp"
#include "evosort/env.hpp"

namespace evosort {

inline constexpr int kTestSeedCount = 20;

std::vector<std::uint64_t> test_seeds();

struct SeedRange {
  std::string name;
  std::uint64_t first = 0;
  std::uint64_t last = 0;  // inclusive
};

// Throws ConfigError naming the first pair of overlapping ranges.
void check_disjoint(std::span<const SeedRange> ranges);

struct ResultRow {
  std::string agent;
  std::uint64_t seed = 0;
  double cumulative_reward = 0.0;
  bool operator==(const ResultRow&) const = default;
};

struct SummaryRow {
  std::string agent;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  bool operator==(const SummaryRow&) const = default;
};

struct BenchmarkReport {
  std::vector<std::string> agents;  // registration order
  std::vector<std::uint64_t> seeds;
  std::vector<ResultRow> rows;      // agent-major, seed-minor
  KeyValues manifest;

  std::vector<double> rewards_of(const std::string& agent) const;
};

// Linear interpolation between order statistics at h = (n - 1) p.
double quantile(std::vector<double> values, double p);

SummaryRow summarize_values(const std::string& agent, std::span<const double> values);
std::vector<SummaryRow> summarize(const BenchmarkReport& report);

// Runs every (agent, seed) cell. Cells are independent and run on up to
// `jobs` threads; each cell builds its own agent, so the report does not
// depend on `jobs`.
BenchmarkReport run_benchmark(const std::vector<NamedAgent>& agents,
                              const EnvConfig& env_config,
                              std::span<const std::uint64_t> seeds, int jobs = 1);

std::string format_results_csv(const BenchmarkReport& report);
std::string format_summary_csv(std::span<const SummaryRow> summary);
// Parses results.csv back into a report (agents in order of appearance).
BenchmarkReport parse_results_csv(const std::string& text);
std::vector<SummaryRow> parse_summary_csv(const std::string& text);

}  // namespace evosort

#endif  // EVOSORT_BENCH_HPP_
