#ifndef EVOSORT_POLICY_HPP_
#define EVOSORT_POLICY_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evosort/env.hpp"
#include "evosort/nn.hpp"

namespace evosort {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Actor-critic with a state-independent Gaussian action head:
// a = actor(obs) + exp(log_std) * z.
struct GaussianPolicy {
  Mlp actor;
  Mlp critic;
  double log_std = 0.0;

  // Orthogonal init; actor head gain 0.01, critic head gain 1.
  static GaussianPolicy fresh(std::uint64_t seed);

  double mean(const Observation& obs) const { return actor.forward(obs); }
  double value(const Observation& obs) const { return critic.forward(obs); }
  double std_dev() const;
  // Deterministic action: the mean clipped to [-1, 1].
  double act_deterministic(const Observation& obs) const;

  // Flat layout: actor params, critic params, log_std.
  std::size_t num_params() const;
  std::vector<double> flat() const;
  void set_flat(std::span<const double> values);
  void clamp_log_std();

  bool operator==(const GaussianPolicy&) const = default;
};

double gaussian_log_prob(double action, double mean, double log_std);

struct Checkpoint {
  GaussianPolicy policy;
  std::optional<Adam> adam;
};

// Versioned text format:
//   evosort-ckpt v1
//   section <name> <count>
//   <count comma-separated values, 17 significant digits>
//   ...
// Sections: actor, critic, log_std, and optionally adam_step, adam_m, adam_v.
std::string format_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace evosort

#endif  // EVOSORT_POLICY_HPP_
