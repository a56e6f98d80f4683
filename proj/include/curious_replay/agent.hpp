#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "curious_replay/envs.hpp"
#include "curious_replay/replay_buffer.hpp"
#include "curious_replay/rng.hpp"
#include "curious_replay/value_table.hpp"
#include "curious_replay/world_model.hpp"

namespace cr {

enum class IntrinsicMode { kNone, kDisagreement };

inline const char* intrinsic_mode_name(IntrinsicMode m) {
  return m == IntrinsicMode::kDisagreement ? "disagreement" : "none";
}

inline IntrinsicMode intrinsic_mode_from_name(const std::string& name) {
  if (name == "none") return IntrinsicMode::kNone;
  if (name == "disagreement") return IntrinsicMode::kDisagreement;
  throw std::invalid_argument("unknown intrinsic mode '" + name + "'");
}

struct AgentConfig {
  std::size_t steps_per_train = 5;
  std::size_t batch_size = 16;
  std::size_t imagination_rollouts = 8;
  IntrinsicMode intrinsic_mode = IntrinsicMode::kNone;
  double intrinsic_scale = 1.0;

  bool operator==(const AgentConfig&) const = default;
};

/// Exploration bonus added to the extrinsic reward in value updates when the
/// intrinsic mode is active. Always computed from the current ensemble, so a
/// replayed transition is valued by what the model is uncertain about now,
/// not by what was novel when the step was taken. Stored transitions keep the
/// environment reward.
inline double intrinsic_reward(const DisagreementEnsemble& ensemble,
                               std::span<const double> observation, int action, double scale) {
  if (!(scale >= 0.0)) throw std::invalid_argument("intrinsic_reward: scale must be nonnegative");
  return scale * ensemble.disagreement(observation, action);
}

struct CycleReport {
  std::size_t steps_collected = 0;
  double mean_cached_loss = 0.0;
  double mean_abs_td_error = 0.0;
  double extrinsic_reward_sum = 0.0;
  double intrinsic_reward_sum = 0.0;
  std::uint64_t interactions_total = 0;
  std::vector<std::uint64_t> interaction_steps;
  std::uint64_t skipped_priority_updates = 0;
};

/// Dyna-style agent: epsilon-greedy tabular policy, replay-trained dynamics
/// model, and imagined one-step rollouts that feed extra value updates.
///
/// One train cycle, in order: collect steps_per_train environment steps into
/// the buffer (each entering at maximum priority); sample one prioritized
/// batch; cache the batch's TD errors at pre-update values; train the model
/// (caching pre-update losses) and the ensemble on it; apply value updates
/// for the real batch and for imagination_rollouts one-step model rollouts,
/// adding the current-ensemble disagreement bonus to each update's reward
/// when the intrinsic mode is active; finally reprioritize the batch ids
/// with the cached losses, or the cached TD errors under the td strategy.
class Agent {
public:
  Agent(AgentConfig cfg, ValueTable values) : cfg_(cfg), values_(std::move(values)) {
    if (cfg.steps_per_train == 0) throw std::invalid_argument("Agent: steps_per_train must be at least 1");
    if (cfg.batch_size == 0) throw std::invalid_argument("Agent: batch_size must be at least 1");
    if (!(cfg.intrinsic_scale >= 0.0))
      throw std::invalid_argument("Agent: intrinsic_scale must be nonnegative");
  }

  const AgentConfig& config() const noexcept { return cfg_; }
  const ValueTable& values() const noexcept { return values_; }
  ValueTable& values() noexcept { return values_; }

  /// Seeds the agent's current observation after an environment reset.
  void observe(std::vector<double> initial_observation) {
    current_obs_ = std::move(initial_observation);
    has_obs_ = true;
  }

  int act(std::span<const double> observation, Rng& rng) const {
    if (random_unit(rng) < values_.epsilon_greedy())
      return static_cast<int>(random_index(rng, values_.action_count()));
    return values_.greedy_action(observation);
  }

  /// Environment interaction without training; fills the buffer at maximum
  /// priority. Used for leftover steps shorter than a full cycle.
  void collect(GridEnvironment& env, PrioritizedBuffer& buffer, std::size_t steps, Rng& rng,
               CycleReport& report, DisagreementEnsemble* ensemble) {
    if (!has_obs_) throw std::logic_error("Agent: collect before observe");
    for (std::size_t i = 0; i < steps; ++i) {
      const int action = act(current_obs_, rng);
      StepResult sr = env.step(action);
      if (cfg_.intrinsic_mode == IntrinsicMode::kDisagreement && ensemble)
        report.intrinsic_reward_sum +=
            intrinsic_reward(*ensemble, current_obs_, action, cfg_.intrinsic_scale);
      report.extrinsic_reward_sum += sr.reward;
      Transition t;
      t.observation = current_obs_;
      t.action = action;
      t.reward = sr.reward;
      t.next_observation = sr.observation;
      t.terminal = sr.terminal;
      t.env_step = env.global_step();
      t.phase_tag = sr.phase_tag;
      buffer.add(std::move(t));
      if (sr.interaction_count > seen_interactions_) {
        for (std::uint64_t k = seen_interactions_; k < sr.interaction_count; ++k)
          report.interaction_steps.push_back(env.global_step());
        seen_interactions_ = sr.interaction_count;
      }
      current_obs_ = std::move(sr.observation);
      report.steps_collected += 1;
    }
    report.interactions_total = seen_interactions_;
  }

  CycleReport train_cycle(GridEnvironment& env, PrioritizedBuffer& buffer, DynamicsModel& model,
                          DisagreementEnsemble* ensemble, Rng& rng) {
    CycleReport report;
    collect(env, buffer, cfg_.steps_per_train, rng, report, ensemble);

    const auto batch = buffer.sample_batch(cfg_.batch_size, rng);
    const std::size_t b = batch.size();

    std::vector<double> td(b);
    for (std::size_t i = 0; i < b; ++i)
      td[i] = values_.td_error(*batch[i].transition, buffer.params().gamma);

    std::vector<const Transition*> items(b);
    for (std::size_t i = 0; i < b; ++i) items[i] = batch[i].transition;
    const std::vector<double> losses = model.train_batch(items);
    if (ensemble) ensemble->train_batch(items);

    const bool bonus_active = cfg_.intrinsic_mode == IntrinsicMode::kDisagreement && ensemble;
    const auto bonus = [&](std::span<const double> obs, int action) {
      return bonus_active ? intrinsic_reward(*ensemble, obs, action, cfg_.intrinsic_scale) : 0.0;
    };
    for (std::size_t i = 0; i < b; ++i) {
      const Transition& t = *batch[i].transition;
      values_.update(t.observation, t.action, t.reward + bonus(t.observation, t.action),
                     t.next_observation, t.terminal);
    }
    if (scratch_.size() != model.obs_dim()) scratch_.resize(model.obs_dim());
    for (std::size_t r = 0; r < cfg_.imagination_rollouts; ++r) {
      const Transition& t = *batch[r % b].transition;
      const int action = act(t.observation, rng);
      double rhat = 0.0;
      model.predict_into(t.observation, action, scratch_, rhat);
      values_.update(t.observation, action, rhat + bonus(t.observation, action), scratch_, false);
    }

    std::vector<std::uint64_t> ids(b);
    for (std::size_t i = 0; i < b; ++i) ids[i] = batch[i].id;
    const std::vector<double>& signals =
        buffer.params().strategy == Strategy::kTd ? td : losses;
    const std::uint64_t skipped_before = buffer.skipped_updates();
    buffer.update_priorities(ids, signals);
    report.skipped_priority_updates = buffer.skipped_updates() - skipped_before;

    double loss_sum = 0.0, td_sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      loss_sum += losses[i];
      td_sum += std::abs(td[i]);
    }
    report.mean_cached_loss = loss_sum / static_cast<double>(b);
    report.mean_abs_td_error = td_sum / static_cast<double>(b);
    return report;
  }

private:
  AgentConfig cfg_;
  ValueTable values_;
  std::vector<double> current_obs_;
  std::vector<double> scratch_;
  bool has_obs_ = false;
  std::uint64_t seen_interactions_ = 0;
};

}  // namespace cr
