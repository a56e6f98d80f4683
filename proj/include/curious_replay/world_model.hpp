#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "curious_replay/rng.hpp"
#include "curious_replay/transition.hpp"

namespace cr {

/// Linear one-step dynamics model: (observation concatenated with a one-hot
/// action) to next observation plus a scalar reward head.
///
/// Per-transition loss is ||xhat' - x'||^2 / obs_dim + (rhat - r)^2. Training
/// takes one gradient-descent step on the mean loss of a batch; all forward
/// passes run at the pre-update weights and their losses are returned, since
/// those are the values the replay buffer reprioritizes with.
///
/// Weights are stored one contiguous row per input feature, so the mostly
/// one-hot observations of the grid assays touch only a few rows per sample.
class DynamicsModel {
public:
  DynamicsModel(std::size_t obs_dim, std::size_t action_count, double learning_rate,
                std::uint64_t seed)
      : obs_dim_(obs_dim), action_count_(action_count), lr_(learning_rate) {
    if (obs_dim == 0) throw std::invalid_argument("DynamicsModel: obs_dim must be at least 1");
    if (action_count == 0) throw std::invalid_argument("DynamicsModel: action_count must be at least 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("DynamicsModel: learning_rate must be positive");
    in_dim_ = obs_dim_ + action_count_;
    weights_.resize(in_dim_ * obs_dim_);
    reward_weights_.resize(in_dim_);
    Rng rng(seed);
    for (auto& w : weights_) w = (random_unit(rng) * 2.0 - 1.0) * kInitScale;
    for (auto& w : reward_weights_) w = (random_unit(rng) * 2.0 - 1.0) * kInitScale;
  }

  std::size_t obs_dim() const noexcept { return obs_dim_; }
  std::size_t action_count() const noexcept { return action_count_; }
  std::size_t input_dim() const noexcept { return in_dim_; }
  double learning_rate() const noexcept { return lr_; }

  double weight(std::size_t input, std::size_t output) const {
    return weights_.at(input * obs_dim_ + output);
  }
  double reward_weight(std::size_t input) const { return reward_weights_.at(input); }
  void set_weight(std::size_t input, std::size_t output, double v) {
    weights_.at(input * obs_dim_ + output) = v;
  }
  void set_reward_weight(std::size_t input, double v) { reward_weights_.at(input) = v; }

  void predict_into(std::span<const double> observation, int action,
                    std::span<double> next_out, double& reward_out) const {
    check_input(observation.size(), action);
    if (next_out.size() != obs_dim_)
      throw std::invalid_argument("predict_into: output span has wrong dimension");
    std::fill(next_out.begin(), next_out.end(), 0.0);
    double reward = 0.0;
    for (std::size_t j = 0; j < obs_dim_; ++j) {
      const double x = observation[j];
      if (x == 0.0) continue;
      const double* row = &weights_[j * obs_dim_];
      for (std::size_t k = 0; k < obs_dim_; ++k) next_out[k] += x * row[k];
      reward += x * reward_weights_[j];
    }
    const std::size_t ja = obs_dim_ + static_cast<std::size_t>(action);
    const double* row = &weights_[ja * obs_dim_];
    for (std::size_t k = 0; k < obs_dim_; ++k) next_out[k] += row[k];
    reward_out = reward + reward_weights_[ja];
  }

  struct Prediction {
    std::vector<double> next_observation;
    double reward = 0.0;
  };

  Prediction predict(std::span<const double> observation, int action) const {
    Prediction p;
    p.next_observation.resize(obs_dim_);
    predict_into(observation, action, p.next_observation, p.reward);
    return p;
  }

  double loss(const Transition& t) const {
    check_transition(t);
    std::vector<double> pred(obs_dim_);
    double rhat = 0.0;
    predict_into(t.observation, t.action, pred, rhat);
    double sq = 0.0;
    for (std::size_t k = 0; k < obs_dim_; ++k) {
      const double e = pred[k] - t.next_observation[k];
      sq += e * e;
    }
    const double re = rhat - t.reward;
    return sq / static_cast<double>(obs_dim_) + re * re;
  }

  /// One gradient-descent step on the mean loss of the batch. Returns each
  /// transition's loss at the weights held before the step.
  std::vector<double> train_batch(std::span<const Transition* const> batch) {
    if (batch.empty()) throw std::invalid_argument("train_batch: batch must be nonempty");
    const std::size_t b = batch.size();
    std::vector<double> losses(b);
    err_obs_.assign(b * obs_dim_, 0.0);
    err_reward_.assign(b, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      const Transition& t = *batch[i];
      check_transition(t);
      double* e = &err_obs_[i * obs_dim_];
      double rhat = 0.0;
      predict_into(t.observation, t.action, {e, obs_dim_}, rhat);
      double sq = 0.0;
      for (std::size_t k = 0; k < obs_dim_; ++k) {
        e[k] -= t.next_observation[k];
        sq += e[k] * e[k];
      }
      err_reward_[i] = rhat - t.reward;
      losses[i] = sq / static_cast<double>(obs_dim_) + err_reward_[i] * err_reward_[i];
    }
    const double scale = lr_ / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      const Transition& t = *batch[i];
      const double* e = &err_obs_[i * obs_dim_];
      const double go = 2.0 * scale / static_cast<double>(obs_dim_);
      const double gr = 2.0 * scale * err_reward_[i];
      auto apply = [&](std::size_t j, double x) {
        double* row = &weights_[j * obs_dim_];
        const double cx = go * x;
        for (std::size_t k = 0; k < obs_dim_; ++k) row[k] -= cx * e[k];
        reward_weights_[j] -= gr * x;
      };
      for (std::size_t j = 0; j < obs_dim_; ++j)
        if (t.observation[j] != 0.0) apply(j, t.observation[j]);
      apply(obs_dim_ + static_cast<std::size_t>(t.action), 1.0);
    }
    return losses;
  }

  std::vector<double> train_batch(const std::vector<Transition>& batch) {
    std::vector<const Transition*> ptrs(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) ptrs[i] = &batch[i];
    return train_batch(std::span<const Transition* const>(ptrs));
  }

  /// Analytic gradient of loss(t) in the weight layouts of the model:
  /// first the dynamics weights (input-major), then the reward weights.
  std::pair<std::vector<double>, std::vector<double>> loss_gradients(const Transition& t) const {
    check_transition(t);
    std::vector<double> pred(obs_dim_);
    double rhat = 0.0;
    predict_into(t.observation, t.action, pred, rhat);
    for (std::size_t k = 0; k < obs_dim_; ++k) pred[k] -= t.next_observation[k];
    const double rerr = rhat - t.reward;
    std::vector<double> dw(weights_.size(), 0.0);
    std::vector<double> drw(reward_weights_.size(), 0.0);
    auto fill = [&](std::size_t j, double x) {
      const double cx = 2.0 * x / static_cast<double>(obs_dim_);
      for (std::size_t k = 0; k < obs_dim_; ++k) dw[j * obs_dim_ + k] = cx * pred[k];
      drw[j] = 2.0 * rerr * x;
    };
    for (std::size_t j = 0; j < obs_dim_; ++j)
      if (t.observation[j] != 0.0) fill(j, t.observation[j]);
    fill(obs_dim_ + static_cast<std::size_t>(t.action), 1.0);
    return {std::move(dw), std::move(drw)};
  }

private:
  static constexpr double kInitScale = 0.05;

  void check_input(std::size_t dim, int action) const {
    if (dim != obs_dim_) throw std::invalid_argument("DynamicsModel: observation has wrong dimension");
    if (action < 0 || static_cast<std::size_t>(action) >= action_count_)
      throw std::invalid_argument("DynamicsModel: action out of range");
  }

  void check_transition(const Transition& t) const {
    check_input(t.observation.size(), t.action);
    if (t.next_observation.size() != obs_dim_)
      throw std::invalid_argument("DynamicsModel: next_observation has wrong dimension");
  }

  std::size_t obs_dim_;
  std::size_t action_count_;
  std::size_t in_dim_;
  double lr_;
  std::vector<double> weights_;
  std::vector<double> reward_weights_;
  std::vector<double> err_obs_;
  std::vector<double> err_reward_;
};

/// Fixed-size ensemble of dynamics models that differ only in their weight
/// initialization streams. Disagreement for an input is the mean over output
/// dimensions of the population variance of member predictions; it shrinks
/// toward zero as members converge on well-trained inputs.
class DisagreementEnsemble {
public:
  DisagreementEnsemble(std::size_t obs_dim, std::size_t action_count, std::size_t member_count,
                       double learning_rate, std::uint64_t seed) {
    if (member_count == 0)
      throw std::invalid_argument("DisagreementEnsemble: member_count must be at least 1");
    members_.reserve(member_count);
    for (std::size_t k = 0; k < member_count; ++k)
      members_.emplace_back(obs_dim, action_count, learning_rate, mix_seed(seed, k));
  }

  std::size_t size() const noexcept { return members_.size(); }
  const DynamicsModel& member(std::size_t k) const { return members_.at(k); }
  DynamicsModel& member(std::size_t k) { return members_.at(k); }

  double disagreement(std::span<const double> observation, int action) const {
    const std::size_t d = members_.front().obs_dim();
    std::vector<double> sum(d, 0.0), sumsq(d, 0.0), pred(d);
    double rhat = 0.0;
    for (const auto& m : members_) {
      m.predict_into(observation, action, pred, rhat);
      for (std::size_t k = 0; k < d; ++k) {
        sum[k] += pred[k];
        sumsq[k] += pred[k] * pred[k];
      }
    }
    const auto n = static_cast<double>(members_.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double mean = sum[k] / n;
      acc += std::max(0.0, sumsq[k] / n - mean * mean);
    }
    return acc / static_cast<double>(d);
  }

  void train_batch(std::span<const Transition* const> batch) {
    for (auto& m : members_) m.train_batch(batch);
  }

private:
  std::vector<DynamicsModel> members_;
};

}  // namespace cr
