#include "evosort/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "evosort/config.hpp"
#include "evosort/error.hpp"
#include "evosort/rng.hpp"

namespace evosort {
namespace {

constexpr char kCheckpointMagic[] = "evosort-ckpt v1";

void append_section(std::string& out, const std::string& name,
                    std::span<const double> values) {
  out += "section " + name + " " + std::to_string(values.size()) + "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_double(values[i]);
  }
  out += "\n";
}

}  // namespace

GaussianPolicy GaussianPolicy::fresh(std::uint64_t seed) {
  GaussianPolicy p;
  const std::vector<std::size_t> sizes{7, 32, 32, 1};
  p.actor = init_params(sizes, 0.01, derive_seed(seed, 1));
  p.critic = init_params(sizes, 1.0, derive_seed(seed, 2));
  p.log_std = 0.0;
  return p;
}

double GaussianPolicy::std_dev() const { return std::exp(log_std); }

double GaussianPolicy::act_deterministic(const Observation& obs) const {
  return std::clamp(mean(obs), -1.0, 1.0);
}

std::size_t GaussianPolicy::num_params() const {
  return actor.num_params() + critic.num_params() + 1;
}

std::vector<double> GaussianPolicy::flat() const {
  std::vector<double> out;
  out.reserve(num_params());
  out.insert(out.end(), actor.params().begin(), actor.params().end());
  out.insert(out.end(), critic.params().begin(), critic.params().end());
  out.push_back(log_std);
  return out;
}

void GaussianPolicy::set_flat(std::span<const double> values) {
  if (values.size() != num_params()) {
    throw ProtocolError("GaussianPolicy::set_flat: size mismatch");
  }
  auto a = actor.params();
  auto c = critic.params();
  std::copy_n(values.begin(), a.size(), a.begin());
  std::copy_n(values.begin() + a.size(), c.size(), c.begin());
  log_std = values.back();
}

void GaussianPolicy::clamp_log_std() {
  log_std = std::clamp(log_std, kLogStdMin, kLogStdMax);
}

double gaussian_log_prob(double action, double mean, double log_std) {
  const double z = (action - mean) * std::exp(-log_std);
  return -0.5 * z * z - log_std - 0.5 * std::log(2.0 * std::numbers::pi);
}

std::string format_checkpoint(const Checkpoint& ckpt) {
  std::string out = std::string(kCheckpointMagic) + "\n";
  append_section(out, "actor", ckpt.policy.actor.params());
  append_section(out, "critic", ckpt.policy.critic.params());
  const double log_std = ckpt.policy.log_std;
  append_section(out, "log_std", std::span<const double>(&log_std, 1));
  if (ckpt.adam) {
    const double step = static_cast<double>(ckpt.adam->step_count());
    append_section(out, "adam_step", std::span<const double>(&step, 1));
    append_section(out, "adam_m", ckpt.adam->first_moment());
    append_section(out, "adam_v", ckpt.adam->second_moment());
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw IoError("checkpoint: missing '" + std::string(kCheckpointMagic) + "' header");
  }
  std::map<std::string, std::vector<double>> sections;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream head(line);
    std::string tag, name;
    std::size_t count = 0;
    if (!(head >> tag >> name >> count) || tag != "section") {
      throw IoError("checkpoint: malformed section header '" + line + "'");
    }
    std::string body;
    if (!std::getline(in, body)) {
      throw IoError("checkpoint: section '" + name + "' has no values");
    }
    std::vector<double> values;
    std::istringstream fields(body);
    std::string field;
    try {
      while (std::getline(fields, field, ',')) values.push_back(parse_double(name, field));
    } catch (const ConfigError& e) {
      throw IoError(std::string("checkpoint: ") + e.what());
    }
    if (values.size() != count) {
      throw IoError("checkpoint: section '" + name + "' declares " +
                    std::to_string(count) + " values, found " +
                    std::to_string(values.size()));
    }
    sections[name] = std::move(values);
  }

  Checkpoint ckpt;
  ckpt.policy.actor = Mlp::standard();
  ckpt.policy.critic = Mlp::standard();
  auto take = [&](const std::string& name, std::span<double> dst) {
    auto it = sections.find(name);
    if (it == sections.end()) throw IoError("checkpoint: missing section '" + name + "'");
    if (it->second.size() != dst.size()) {
      throw IoError("checkpoint: section '" + name + "' has " +
                    std::to_string(it->second.size()) + " values, expected " +
                    std::to_string(dst.size()));
    }
    std::copy(it->second.begin(), it->second.end(), dst.begin());
  };
  take("actor", ckpt.policy.actor.params());
  take("critic", ckpt.policy.critic.params());
  take("log_std", std::span<double>(&ckpt.policy.log_std, 1));

  if (sections.contains("adam_m") || sections.contains("adam_v") ||
      sections.contains("adam_step")) {
    const std::size_t n = ckpt.policy.num_params();
    std::vector<double> m(n), v(n);
    double step = 0.0;
    take("adam_m", m);
    take("adam_v", v);
    take("adam_step", std::span<double>(&step, 1));
    Adam adam(n);
    adam.restore(static_cast<long long>(step), std::move(m), std::move(v));
    ckpt.adam = std::move(adam);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, format_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing checkpoint file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_checkpoint(buf.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace evosort
