#include "evosort/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "evosort/error.hpp"
#include "evosort/parallel.hpp"

namespace evosort {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  return out;
}

}  // namespace

std::vector<std::uint64_t> test_seeds() {
  std::vector<std::uint64_t> seeds(kTestSeedCount);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  return seeds;
}

void check_disjoint(std::span<const SeedRange> ranges) {
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    for (std::size_t j = i + 1; j < ranges.size(); ++j) {
      const SeedRange& a = ranges[i];
      const SeedRange& b = ranges[j];
      if (a.first <= b.last && b.first <= a.last) {
        throw ConfigError("seed ranges overlap: " + a.name + " [" +
                          std::to_string(a.first) + "," + std::to_string(a.last) +
                          "] and " + b.name + " [" + std::to_string(b.first) + "," +
                          std::to_string(b.last) + "]");
      }
    }
  }
}

std::vector<double> BenchmarkReport::rewards_of(const std::string& agent) const {
  std::vector<double> out;
  for (const ResultRow& r : rows) {
    if (r.agent == agent) out.push_back(r.cumulative_reward);
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryRow summarize_values(const std::string& agent, std::span<const double> values) {
  if (values.empty()) throw InputError("summarize: no values for agent " + agent);
  SummaryRow s;
  s.agent = agent;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const std::vector<double> v(values.begin(), values.end());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.q25 = quantile(v, 0.25);
  s.median = quantile(v, 0.5);
  s.q75 = quantile(v, 0.75);
  return s;
}

std::vector<SummaryRow> summarize(const BenchmarkReport& report) {
  std::vector<SummaryRow> out;
  for (const std::string& agent : report.agents) {
    const std::vector<double> values = report.rewards_of(agent);
    out.push_back(summarize_values(agent, values));
  }
  return out;
}

BenchmarkReport run_benchmark(const std::vector<NamedAgent>& agents,
                              const EnvConfig& env_config,
                              std::span<const std::uint64_t> seeds, int jobs) {
  env_config.validate();
  BenchmarkReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  for (const NamedAgent& a : agents) report.agents.push_back(a.name);

  const std::size_t n_seeds = seeds.size();
  report.rows.resize(agents.size() * n_seeds);
  parallel_for(report.rows.size(), jobs, [&](std::size_t cell) {
    const NamedAgent& named = agents[cell / n_seeds];
    const std::uint64_t seed = seeds[cell % n_seeds];
    std::unique_ptr<Agent> agent = named.make();
    report.rows[cell] = {named.name, seed, run_episode(*agent, env_config, seed)};
  });

  report.manifest = env_config.to_kv();
  std::string seed_list;
  for (std::uint64_t s : seeds) seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  report.manifest["run.test_seeds"] = seed_list;
  std::string agent_list;
  for (const auto& a : report.agents) agent_list += (agent_list.empty() ? "" : ",") + a;
  report.manifest["run.agents"] = agent_list;
  return report;
}

std::string format_results_csv(const BenchmarkReport& report) {
  std::string out = "agent,seed,cumulative_reward\n";
  for (const ResultRow& r : report.rows) {
    out += r.agent + "," + std::to_string(r.seed) + "," +
           format_double(r.cumulative_reward) + "\n";
  }
  return out;
}

std::string format_summary_csv(std::span<const SummaryRow> summary) {
  std::string out = "agent,mean,std,min,q25,median,q75,max\n";
  for (const SummaryRow& s : summary) {
    out += s.agent;
    for (double v : {s.mean, s.std, s.min, s.q25, s.median, s.q75, s.max}) {
      out += "," + format_double(v);
    }
    out += "\n";
  }
  return out;
}

BenchmarkReport parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "agent,seed,cumulative_reward") {
    throw IoError("results.csv: unexpected header");
  }
  BenchmarkReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw IoError("results.csv: malformed row '" + line + "'");
    ResultRow row{f[0], static_cast<std::uint64_t>(parse_int("seed", f[1])),
                  parse_double("cumulative_reward", f[2])};
    if (std::find(report.agents.begin(), report.agents.end(), row.agent) ==
        report.agents.end()) {
      report.agents.push_back(row.agent);
    }
    if (std::find(report.seeds.begin(), report.seeds.end(), row.seed) ==
        report.seeds.end()) {
      report.seeds.push_back(row.seed);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "agent,mean,std,min,q25,median,q75,max") {
    throw IoError("summary.csv: unexpected header");
  }
  std::vector<SummaryRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw IoError("summary.csv: malformed row '" + line + "'");
    out.push_back({f[0], parse_double("mean", f[1]), parse_double("std", f[2]),
                   parse_double("min", f[3]), parse_double("q25", f[4]),
                   parse_double("median", f[5]), parse_double("q75", f[6]),
                   parse_double("max", f[7])});
  }
  return out;
}

}  // namespace evosort
