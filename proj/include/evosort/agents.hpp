#ifndef EVOSORT_AGENTS_HPP_
#define EVOSORT_AGENTS_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "evosort/demonstration.hpp"
#include "evosort/env.hpp"
#include "evosort/policy.hpp"
#include "evosort/rng.hpp"

namespace evosort {

class Agent {
 public:
  virtual ~Agent() = default;
  // Called before every episode with the episode's environment seed.
  virtual void reset(std::uint64_t seed) { (void)seed; }
  // Returns an action in [-1, 1].
  virtual double act(const Observation& obs) = 0;
};

// Uniform actions from an rng derived from (episode seed, stream).
class RandomAgent : public Agent {
 public:
  explicit RandomAgent(std::uint64_t stream = 0x72616e64) : stream_(stream) {}
  void reset(std::uint64_t seed) override { rng_ = Rng(derive_seed(seed, stream_)); }
  double act(const Observation&) override { return rng_.uniform(-1.0, 1.0); }

 private:
  std::uint64_t stream_;
  Rng rng_;
};

class StaticAgent : public Agent {
 public:
  explicit StaticAgent(double action = 0.0);
  double act(const Observation&) override { return action_; }

 private:
  double action_;
};

// Reactive stepper on the feed fraction u: back off by `step_down` while
// either purity is within `margin` of (or below) its threshold, otherwise
// open up by `step_up`. u is kept in [min_feed, 1].
class RuleBasedAgent : public Agent {
 public:
  struct Params {
    double theta_a = 0.90;
    double theta_b = 0.90;
    double margin = 0.02;
    double step_down = 0.10;
    double step_up = 0.05;
    double initial_feed = 0.5;
    double min_feed = 0.2;
  };

  RuleBasedAgent() : RuleBasedAgent(Params{}) {}
  explicit RuleBasedAgent(Params params) : params_(params), feed_(params.initial_feed) {}
  static RuleBasedAgent for_env(const EnvConfig& config);

  void reset(std::uint64_t) override { feed_ = params_.initial_feed; }
  double act(const Observation& obs) override;
  double feed() const { return feed_; }

 private:
  Params params_;
  double feed_;
};

// Deterministic mode of a trained policy: the actor mean clipped to bounds.
class PolicyAgent : public Agent {
 public:
  explicit PolicyAgent(std::shared_ptr<const GaussianPolicy> policy)
      : policy_(std::move(policy)) {}
  double act(const Observation& obs) override { return policy_->act_deterministic(obs); }

 private:
  std::shared_ptr<const GaussianPolicy> policy_;
};

// Replays the stored open-loop schedule optimized for the episode's seed.
class OracleAgent : public Agent {
 public:
  explicit OracleAgent(
      std::shared_ptr<const std::map<std::uint64_t, Demonstration>> demos)
      : demos_(std::move(demos)) {}
  void reset(std::uint64_t seed) override;
  double act(const Observation&) override;

 private:
  std::shared_ptr<const std::map<std::uint64_t, Demonstration>> demos_;
  const Demonstration* current_ = nullptr;
  std::size_t t_ = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

struct NamedAgent {
  std::string name;
  AgentFactory make;
};

// One full episode; returns the cumulative reward.
double run_episode(Agent& agent, const EnvConfig& env_config, std::uint64_t seed);

}  // namespace evosort

#endif  // EVOSORT_AGENTS_HPP_
