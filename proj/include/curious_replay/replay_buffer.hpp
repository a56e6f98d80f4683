#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/priority.hpp"
#include "curious_replay/rng.hpp"
#include "curious_replay/sumtree.hpp"
#include "curious_replay/transition.hpp"

namespace cr {

/// Per-slot replay bookkeeping. priority always mirrors the tree leaf.
struct PriorityRecord {
  double priority = 0.0;
  std::uint64_t visit_count = 0;
  double last_signal = 0.0;
};

struct PhaseDiagnostics {
  int phase_tag = 0;
  std::size_t slot_count = 0;
  /// Median over the phase's slots of (slot sampling probability) divided by
  /// the uniform probability 1/occupied. 1.0 means sampled like uniform.
  double median_relative_sampling_probability = 0.0;
  double mean_visit_count = 0.0;
};

/// Histogram of log10(priority): 20 bins of width 0.5 covering [-4, 6), with
/// underflow and overflow buckets at the ends.
struct PriorityHistogram {
  static constexpr std::size_t kBins = 22;
  static constexpr double kLog10Min = -4.0;
  static constexpr double kLog10Max = 6.0;
  static constexpr double kBinWidth = 0.5;

  std::array<std::uint64_t, kBins> counts{};

  static std::size_t bin_for(double priority) {
    const double lg = std::log10(priority);
    if (lg < kLog10Min) return 0;
    if (lg >= kLog10Max) return kBins - 1;
    return 1 + static_cast<std::size_t>((lg - kLog10Min) / kBinWidth);
  }

  void add(double priority) { ++counts[bin_for(priority)]; }
};

struct PriorityDiagnostics {
  std::size_t occupied = 0;
  std::vector<PhaseDiagnostics> per_phase;  // ascending phase tag
  PriorityHistogram histogram;
};

struct SampledTransition {
  std::uint64_t id = 0;
  const Transition* transition = nullptr;
};

/// Ring buffer of transitions with proportional prioritized sampling.
///
/// Every insertion gets a ticket id (the running insertion count); the slot
/// is id % capacity, so the oldest entry is evicted once full. Ids make stale
/// priority updates detectable: an update whose id no longer matches the
/// slot's current occupant is counted and skipped.
///
/// New entries enter at priority p_max with visit count 0. An update maps the
/// training signal through compute_priority with the slot's current visit
/// count, then increments the count. Under the uniform strategy priorities
/// are never rewritten, so all occupied leaves stay equal.
class PrioritizedBuffer {
public:
  PrioritizedBuffer(std::size_t capacity, PriorityParams params)
      : capacity_(capacity),
        params_(params),
        tree_(checked_capacity(capacity, params)),
        slots_(capacity),
        records_(capacity),
        stamps_(capacity, kNoStamp) {}

  std::size_t capacity() const noexcept { return capacity_; }
  const PriorityParams& params() const noexcept { return params_; }
  std::size_t occupied() const noexcept {
    return static_cast<std::size_t>(std::min<std::uint64_t>(inserted_total_, capacity_));
  }
  std::uint64_t inserted_total() const noexcept { return inserted_total_; }
  std::uint64_t skipped_updates() const noexcept { return skipped_updates_; }
  double total_priority() const noexcept { return tree_.total(); }
  double running_signal_min() const noexcept { return running_signal_min_; }
  std::size_t observation_dim() const noexcept { return obs_dim_; }

  std::uint64_t add(Transition t) {
    if (t.observation.size() != t.next_observation.size())
      throw std::invalid_argument("add: observation and next_observation dimensions differ");
    if (inserted_total_ == 0) {
      obs_dim_ = t.observation.size();
    } else if (t.observation.size() != obs_dim_) {
      throw std::invalid_argument("add: observation dimension changed between insertions");
    }
    const std::uint64_t id = inserted_total_;
    const auto slot = static_cast<std::size_t>(id % capacity_);
    slots_[slot] = std::move(t);
    records_[slot] = PriorityRecord{params_.p_max, 0, 0.0};
    stamps_[slot] = id;
    tree_.set(slot, params_.p_max);
    ++inserted_total_;
    return id;
  }

  bool contains(std::uint64_t id) const {
    return id < inserted_total_ && stamps_[static_cast<std::size_t>(id % capacity_)] == id;
  }

  const Transition& get(std::uint64_t id) const {
    return slots_[checked_slot(id)];
  }

  const PriorityRecord& record(std::uint64_t id) const {
    return records_[checked_slot(id)];
  }

  double priority_of(std::uint64_t id) const { return record(id).priority; }

  /// Current selection probability of one entry: leaf priority over the tree
  /// total. The importance-sampling correction hook; the training loop in
  /// this artifact does not reweight by it.
  double sampling_probability(std::uint64_t id) const {
    const std::size_t slot = checked_slot(id);
    return tree_.get(slot) / tree_.total();
  }

  template <typename Generator>
  std::vector<SampledTransition> sample_batch(std::size_t batch_size, Generator& rng) const {
    if (batch_size == 0) throw std::invalid_argument("sample_batch: batch_size must be at least 1");
    if (occupied() == 0) throw EmptyBufferError("sample_batch: buffer is empty");
    std::vector<SampledTransition> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const std::size_t slot = tree_.sample(random_unit(rng));
      out.push_back(SampledTransition{stamps_[slot], &slots_[slot]});
    }
    return out;
  }

  /// Recompute priorities for the given entries from their fresh training
  /// signals. Pairs ids[i] with signals[i]; stale ids are skipped and
  /// counted. Visit counts advance by one per applied update, after the
  /// priority is computed from the count's pre-update value.
  void update_priorities(std::span<const std::uint64_t> ids, std::span<const double> signals) {
    if (ids.size() != signals.size())
      throw std::invalid_argument("update_priorities: ids and signals must have equal length");
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double raw = signals[i];
      if (!std::isfinite(raw))
        throw std::invalid_argument("update_priorities: signal must be finite");
      if (!contains(ids[i])) {
        ++skipped_updates_;
        continue;
      }
      double signal = raw;
      if (params_.use_running_min) {
        running_signal_min_ = std::min(running_signal_min_, raw);
        signal = raw - running_signal_min_;
      }
      const auto slot = static_cast<std::size_t>(ids[i] % capacity_);
      auto& rec = records_[slot];
      if (params_.strategy != Strategy::kUniform) {
        // Floored away from zero so occupied entries always keep sampling mass.
        rec.priority = std::max(compute_priority(params_, rec.visit_count, signal),
                                std::numeric_limits<double>::min());
        tree_.set(slot, rec.priority);
      }
      rec.last_signal = signal;
      rec.visit_count += 1;
    }
  }

  PriorityDiagnostics diagnostics() const {
    PriorityDiagnostics d;
    d.occupied = occupied();
    if (d.occupied == 0) return d;
    const double total = tree_.total();
    const double uniform_p = 1.0 / static_cast<double>(d.occupied);
    struct Group {
      std::vector<double> rel;
      double visit_sum = 0.0;
    };
    std::map<int, Group> groups;
    for (std::size_t slot = 0; slot < d.occupied; ++slot) {
      d.histogram.add(records_[slot].priority);
      if (!slots_[slot].phase_tag) continue;
      auto& g = groups[*slots_[slot].phase_tag];
      g.rel.push_back(tree_.get(slot) / total / uniform_p);
      g.visit_sum += static_cast<double>(records_[slot].visit_count);
    }
    for (auto& [tag, g] : groups) {
      std::sort(g.rel.begin(), g.rel.end());
      const std::size_t n = g.rel.size();
      const double med = (n % 2 == 1) ? g.rel[n / 2] : 0.5 * (g.rel[n / 2 - 1] + g.rel[n / 2]);
      d.per_phase.push_back(PhaseDiagnostics{tag, n, med, g.visit_sum / static_cast<double>(n)});
    }
    return d;
  }

  /// Slot-level access for snapshots and diagnostics; slot must be < occupied().
  const Transition& slot_transition(std::size_t slot) const { return slots_.at(checked_occupied(slot)); }
  const PriorityRecord& slot_record(std::size_t slot) const { return records_.at(checked_occupied(slot)); }
  std::uint64_t slot_id(std::size_t slot) const { return stamps_.at(checked_occupied(slot)); }

private:
  static constexpr std::uint64_t kNoStamp = std::numeric_limits<std::uint64_t>::max();

  static std::size_t checked_capacity(std::size_t capacity, const PriorityParams& p) {
    if (capacity == 0) throw std::invalid_argument("PrioritizedBuffer: capacity must be at least 1");
    if (!(p.c > 0.0)) throw std::invalid_argument("PrioritizedBuffer: c must be positive");
    if (!(p.beta >= 0.0 && p.beta <= 1.0))
      throw std::invalid_argument("PrioritizedBuffer: beta must be in [0, 1]");
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0))
      throw std::invalid_argument("PrioritizedBuffer: alpha must be in [0, 1]");
    if (!(p.epsilon > 0.0)) throw std::invalid_argument("PrioritizedBuffer: epsilon must be positive");
    if (!(p.p_max > 0.0) || !std::isfinite(p.p_max))
      throw std::invalid_argument("PrioritizedBuffer: p_max must be positive and finite");
    return capacity;
  }

  std::size_t checked_slot(std::uint64_t id) const {
    if (!contains(id)) throw std::invalid_argument("PrioritizedBuffer: id is stale or unknown");
    return static_cast<std::size_t>(id % capacity_);
  }

  std::size_t checked_occupied(std::size_t slot) const {
    if (slot >= occupied()) throw std::out_of_range("PrioritizedBuffer: slot is not occupied");
    return slot;
  }

  std::size_t capacity_;
  PriorityParams params_;
  SumTree tree_;
  std::vector<Transition> slots_;
  std::vector<PriorityRecord> records_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t inserted_total_ = 0;
  std::uint64_t skipped_updates_ = 0;
  double running_signal_min_ = std::numeric_limits<double>::infinity();
  std::size_t obs_dim_ = 0;
};

}  // namespace cr
