#include "evosort/demonstration.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "evosort/config.hpp"
#include "evosort/error.hpp"

namespace evosort {
namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void Demonstration::validate(int episode_length) const {
  const auto n = static_cast<std::size_t>(episode_length);
  if (actions.size() != n || observations.size() != n || rewards.size() != n) {
    throw InputError("demonstration seed " + std::to_string(seed) +
                     ": expected " + std::to_string(n) + " steps, got " +
                     std::to_string(actions.size()) + " actions, " +
                     std::to_string(observations.size()) + " observations, " +
                     std::to_string(rewards.size()) + " rewards");
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!(actions[t] >= -1.0 && actions[t] <= 1.0)) {
      throw InputError("demonstration seed " + std::to_string(seed) +
                       ": action at t=" + std::to_string(t) + " outside [-1,1]");
    }
  }
  double sum = 0.0;
  for (double r : rewards) sum += r;
  if (std::abs(sum - cumulative_reward) > 1e-9 * std::max(1.0, std::abs(sum))) {
    throw InputError("demonstration seed " + std::to_string(seed) +
                     ": cumulative reward does not match per-step rewards");
  }
}

std::string format_demonstration(const Demonstration& demo) {
  std::string out = "seed," + std::to_string(demo.seed) + ",cumulative," +
                    format_double(demo.cumulative_reward) + "\n";
  for (std::size_t t = 0; t < demo.actions.size(); ++t) {
    out += std::to_string(t) + "," + format_double(demo.actions[t]) + "," +
           format_double(demo.rewards[t]);
    for (double o : demo.observations[t]) out += "," + format_double(o);
    out += "\n";
  }
  return out;
}

Demonstration parse_demonstration(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("demonstration: empty file");
  const auto header = split_commas(line);
  if (header.size() != 4 || header[0] != "seed" || header[2] != "cumulative") {
    throw IoError("demonstration: malformed header '" + line + "'");
  }
  Demonstration demo;
  try {
    demo.seed = static_cast<std::uint64_t>(parse_int("seed", header[1]));
    demo.cumulative_reward = parse_double("cumulative", header[3]);
    std::size_t expected_t = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_commas(line);
      if (f.size() != 3 + kObsDim) {
        throw IoError("demonstration: step line has " + std::to_string(f.size()) +
                      " fields, expected " + std::to_string(3 + kObsDim));
      }
      if (parse_int("t", f[0]) != static_cast<long long>(expected_t)) {
        throw IoError("demonstration: step index out of order at line " +
                      std::to_string(expected_t + 2));
      }
      demo.actions.push_back(parse_double("action", f[1]));
      demo.rewards.push_back(parse_double("reward", f[2]));
      Observation obs{};
      for (int i = 0; i < kObsDim; ++i) obs[i] = parse_double("obs", f[3 + i]);
      demo.observations.push_back(obs);
      ++expected_t;
    }
  } catch (const ConfigError& e) {
    throw IoError(std::string("demonstration: ") + e.what());
  }
  return demo;
}

std::filesystem::path demo_file_name(std::uint64_t seed) {
  return "demo_" + std::to_string(seed) + ".csv";
}

void save_demonstration(const std::filesystem::path& path,
                        const Demonstration& demo) {
  write_file_atomic(path, format_demonstration(demo));
}

Demonstration load_demonstration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing demonstration file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_demonstration(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace evosort
