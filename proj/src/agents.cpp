#include "evosort/agents.hpp"

#include <algorithm>
#include <cmath>

#include "evosort/error.hpp"

namespace evosort {

StaticAgent::StaticAgent(double action) : action_(std::clamp(action, -1.0, 1.0)) {}

RuleBasedAgent RuleBasedAgent::for_env(const EnvConfig& config) {
  Params p;
  p.theta_a = config.theta_a;
  p.theta_b = config.theta_b;
  return RuleBasedAgent(p);
}

double RuleBasedAgent::act(const Observation& obs) {
  const double purity_a = obs[kHistoryLen];
  const double purity_b = obs[kHistoryLen + 1];
  const bool at_risk = purity_a < params_.theta_a + params_.margin ||
                       purity_b < params_.theta_b + params_.margin;
  feed_ += at_risk ? -params_.step_down : params_.step_up;
  feed_ = std::clamp(feed_, params_.min_feed, 1.0);
  return 2.0 * feed_ - 1.0;
}

void OracleAgent::reset(std::uint64_t seed) {
  auto it = demos_->find(seed);
  if (it == demos_->end()) {
    throw ConfigError("oracle: no demonstration for seed " + std::to_string(seed));
  }
  current_ = &it->second;
  t_ = 0;
}

double OracleAgent::act(const Observation&) {
  if (!current_) throw ProtocolError("oracle: act called before reset");
  if (t_ >= current_->actions.size()) {
    throw ProtocolError("oracle: schedule for seed " + std::to_string(current_->seed) +
                        " exhausted");
  }
  return current_->actions[t_++];
}

double run_episode(Agent& agent, const EnvConfig& env_config, std::uint64_t seed) {
  SortingEnv env(env_config);
  Observation obs = env.reset(seed);
  agent.reset(seed);
  double total = 0.0;
  while (!env.done()) {
    const double action = agent.act(obs);
    if (!std::isfinite(action)) {
      throw NumericalError("agent produced a non-finite action on seed " +
                           std::to_string(seed));
    }
    const StepResult r = env.step(std::clamp(action, -1.0, 1.0));
    total += r.reward;
    obs = r.observation;
  }
  return total;
}

}  // namespace evosort
