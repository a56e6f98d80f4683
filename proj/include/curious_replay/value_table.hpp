#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "curious_replay/transition.hpp"

namespace cr {

/// Discretization key for an observation: each feature rounded to the
/// nearest integer and packed as little 32-bit words into a byte string.
/// Grid observations are exact one-hots, so model predictions collapse onto
/// the true lattice key once they are within 0.5 per feature.
inline std::string observation_key(std::span<const double> observation) {
  std::string key(observation.size() * sizeof(std::int32_t), '\0');
  char* out = key.data();
  for (const double x : observation) {
    const auto q = static_cast<std::int32_t>(std::llround(x));
    std::memcpy(out, &q, sizeof q);
    out += sizeof q;
  }
  return key;
}

/// Tabular action values over discretized observation keys. Unseen keys have
/// value zero for every action.
class ValueTable {
public:
  ValueTable(std::size_t action_count, double learning_rate, double gamma, double epsilon_greedy)
      : action_count_(action_count), lr_(learning_rate), gamma_(gamma), eps_(epsilon_greedy) {
    if (action_count == 0) throw std::invalid_argument("ValueTable: action_count must be at least 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("ValueTable: learning_rate must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("ValueTable: gamma must be in [0, 1)");
    if (!(epsilon_greedy >= 0.0 && epsilon_greedy <= 1.0))
      throw std::invalid_argument("ValueTable: epsilon_greedy must be in [0, 1]");
  }

  std::size_t action_count() const noexcept { return action_count_; }
  double learning_rate() const noexcept { return lr_; }
  double gamma() const noexcept { return gamma_; }
  double epsilon_greedy() const noexcept { return eps_; }
  std::size_t state_count() const noexcept { return q_.size(); }

  double q(const std::string& key, int action) const {
    check_action(action);
    const auto it = q_.find(key);
    return it == q_.end() ? 0.0 : it->second[static_cast<std::size_t>(action)];
  }

  double value(const std::string& key) const {
    const auto it = q_.find(key);
    if (it == q_.end()) return 0.0;
    double best = it->second[0];
    for (std::size_t a = 1; a < action_count_; ++a) best = std::max(best, it->second[a]);
    return best;
  }

  double value(std::span<const double> observation) const {
    return value(observation_key(observation));
  }

  /// Highest-valued action; ties resolve to the lowest action id, so unseen
  /// states always yield action 0.
  int greedy_action(const std::string& key) const {
    const auto it = q_.find(key);
    if (it == q_.end()) return 0;
    int best = 0;
    for (std::size_t a = 1; a < action_count_; ++a)
      if (it->second[a] > it->second[best]) best = static_cast<int>(a);
    return best;
  }

  int greedy_action(std::span<const double> observation) const {
    return greedy_action(observation_key(observation));
  }

  /// One Q-learning step:
  ///   Q(x, a) += lr * (r + gamma * (1 - terminal) * V(x') - Q(x, a))
  void update(std::span<const double> observation, int action, double reward,
              std::span<const double> next_observation, bool terminal) {
    check_action(action);
    const double bootstrap = terminal ? 0.0 : gamma_ * value(next_observation);
    auto& row = row_for(observation_key(observation));
    auto& cell = row[static_cast<std::size_t>(action)];
    cell += lr_ * (reward + bootstrap - cell);
  }

  /// TD error of a stored transition at the current (pre-update) values,
  /// using the supplied discount:
  ///   delta = r + gamma * (1 - terminal) * V(x') - V(x)
  double td_error(const Transition& t, double gamma) const {
    const double bootstrap = t.terminal ? 0.0 : gamma * value(t.next_observation);
    return t.reward + bootstrap - value(t.observation);
  }

private:
  void check_action(int action) const {
    if (action < 0 || static_cast<std::size_t>(action) >= action_count_)
      throw std::invalid_argument("ValueTable: action out of range");
  }

  std::vector<double>& row_for(std::string key) {
    auto it = q_.find(key);
    if (it == q_.end()) it = q_.emplace(std::move(key), std::vector<double>(action_count_, 0.0)).first;
    return it->second;
  }

  std::size_t action_count_;
  double lr_;
  double gamma_;
  double eps_;
  std::unordered_map<std::string, std::vector<double>> q_;
};

}  // namespace cr
