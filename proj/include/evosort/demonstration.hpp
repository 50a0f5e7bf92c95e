#ifndef EVOSORT_DEMONSTRATION_HPP_
#define EVOSORT_DEMONSTRATION_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evosort/env.hpp"

namespace evosort {

// One recorded episode. observations[t] is the observation the action at
// step t was chosen from.
struct Demonstration {
  std::uint64_t seed = 0;
  std::vector<double> actions;
  std::vector<Observation> observations;
  std::vector<double> rewards;
  double cumulative_reward = 0.0;

  // Throws InputError on inconsistent lengths, out-of-range actions or a
  // cumulative reward that disagrees with the per-step rewards.
  void validate(int episode_length) const;

  bool operator==(const Demonstration&) const = default;
};

// Text format:
//   seed,<int>,cumulative,<float>
//   t,action,reward,obs0,...,obs6      (one line per step)
// Floats carry 17 significant digits.
std::string format_demonstration(const Demonstration& demo);
Demonstration parse_demonstration(const std::string& text);

std::filesystem::path demo_file_name(std::uint64_t seed);
void save_demonstration(const std::filesystem::path& path,
                        const Demonstration& demo);
Demonstration load_demonstration(const std::filesystem::path& path);

}  // namespace evosort

#endif  // EVOSORT_DEMONSTRATION_HPP_
