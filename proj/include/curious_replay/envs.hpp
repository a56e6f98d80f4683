#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/rng.hpp"
#include "curious_replay/transition.hpp"

namespace cr {

/// Nondecreasing phase index over global steps: phase 0 before the first
/// change step, incrementing by one at each scheduled step.
class PhaseSchedule {
public:
  PhaseSchedule() = default;

  explicit PhaseSchedule(std::vector<std::uint64_t> change_steps)
      : change_steps_(std::move(change_steps)) {
    for (std::size_t i = 0; i < change_steps_.size(); ++i) {
      if (change_steps_[i] == 0)
        throw std::invalid_argument("PhaseSchedule: change steps must be at least 1");
      if (i > 0 && change_steps_[i] <= change_steps_[i - 1])
        throw std::invalid_argument("PhaseSchedule: change steps must be strictly increasing");
    }
  }

  int phase_of(std::uint64_t step) const {
    int phase = 0;
    for (const auto s : change_steps_) {
      if (step >= s)
        ++phase;
      else
        break;
    }
    return phase;
  }

  int phase_count() const { return static_cast<int>(change_steps_.size()) + 1; }
  const std::vector<std::uint64_t>& change_steps() const { return change_steps_; }

private:
  std::vector<std::uint64_t> change_steps_;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;
  int phase_tag = 0;
  /// Cumulative object interactions since reset; stays 0 in assays without
  /// an object.
  std::uint64_t interaction_count = 0;
};

enum GridAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };
constexpr int kGridActionCount = 5;

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

inline Cell action_delta(int action) {
  switch (action) {
    case kUp: return {-1, 0};
    case kDown: return {1, 0};
    case kLeft: return {0, -1};
    case kRight: return {0, 1};
    case kStay: return {0, 0};
    default: throw std::invalid_argument("grid action out of range");
  }
}

inline bool in_grid(Cell c, int size) {
  return c.row >= 0 && c.row < size && c.col >= 0 && c.col < size;
}

inline Cell move_clipped(Cell c, int action, int size) {
  const Cell d = action_delta(action);
  Cell next{c.row + d.row, c.col + d.col};
  next.row = std::clamp(next.row, 0, size - 1);
  next.col = std::clamp(next.col, 0, size - 1);
  return next;
}

/// Number of cells reachable from start when moves are suppressed wherever
/// blocked(cell, action) holds. Used to check that every assay phase keeps
/// the full grid connected.
inline std::size_t reachable_cell_count(int size, Cell start,
                                        const std::function<bool(Cell, int)>& blocked) {
  std::vector<char> seen(static_cast<std::size_t>(size) * size, 0);
  const auto idx = [size](Cell c) { return static_cast<std::size_t>(c.row) * size + c.col; };
  std::deque<Cell> queue{start};
  seen[idx(start)] = 1;
  std::size_t count = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    for (int a = 0; a < kGridActionCount; ++a) {
      if (blocked && blocked(c, a)) continue;
      const Cell n = move_clipped(c, a, size);
      if (!seen[idx(n)]) {
        seen[idx(n)] = 1;
        ++count;
        queue.push_back(n);
      }
    }
  }
  return count;
}

/// Common interface of the desk-scale grid assays. Observations are fixed
/// dimension across phases; global_step counts step() calls since reset.
class GridEnvironment {
public:
  virtual ~GridEnvironment() = default;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual int action_count() const { return kGridActionCount; }
  virtual const PhaseSchedule& schedule() const = 0;
  virtual std::uint64_t global_step() const = 0;
  /// Canonical per-phase probe set, identical for every run of a given
  /// configuration; never trained on.
  virtual const std::vector<Transition>& held_out_set(int phase) const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline void check_action(int action) {
  if (action < 0 || action >= kGridActionCount)
    throw std::invalid_argument("grid action out of range");
}

inline void check_phase(int phase, int phase_count) {
  if (phase < 0 || phase >= phase_count) throw std::out_of_range("phase index out of range");
}

inline Cell random_cell(Rng& rng, int size) {
  const auto r = static_cast<int>(random_index(rng, static_cast<std::size_t>(size)));
  const auto c = static_cast<int>(random_index(rng, static_cast<std::size_t>(size)));
  return {r, c};
}

/// Seed for held-out probe generation. Probe sets are canonical per
/// configuration rather than per run seed, so every run of an assay is
/// scored against the same test set and scores stay comparable across
/// strategies and seeds.
constexpr std::uint64_t kHeldOutSeed = 9219;

}  // namespace detail

/// Empty room that gains a pushable object at the center partway through.
/// Movement clips at walls. An interaction is a move that lands the agent on
/// the object's cell from elsewhere; the object is pushed one cell along the
/// move direction when space allows, otherwise the two overlap. Extrinsic
/// reward is always zero.
///
/// Observation: agent position one-hot, then object position one-hot (all
/// zeros while the object is absent), then the single-entry background
/// one-hot shared by the grid family (this room has one background, so the
/// entry is constant 1). Phases: 0 before the object appears at appear_at, 1
/// while present, and, when vanish_at is nonzero, 2 after it is removed.
class NovelObjectGrid final : public GridEnvironment {
public:
  struct Config {
    int size = 9;
    std::uint64_t appear_at = 20000;
    std::uint64_t vanish_at = 0;  // 0 means the object never vanishes
    std::size_t held_out_per_phase = 256;
  };

  explicit NovelObjectGrid(Config cfg) : cfg_(cfg) {
    if (cfg.size < 2) throw std::invalid_argument("NovelObjectGrid: size must be at least 2");
    if (cfg.appear_at == 0) throw std::invalid_argument("NovelObjectGrid: appear_at must be at least 1");
    if (cfg.vanish_at != 0 && cfg.vanish_at <= cfg.appear_at)
      throw std::invalid_argument("NovelObjectGrid: vanish_at must exceed appear_at");
    if (cfg.held_out_per_phase == 0)
      throw std::invalid_argument("NovelObjectGrid: held_out_per_phase must be at least 1");
    schedule_ = cfg.vanish_at == 0 ? PhaseSchedule({cfg.appear_at})
                                   : PhaseSchedule({cfg.appear_at, cfg.vanish_at});
  }

  std::vector<double> reset(std::uint64_t seed) override {
    (void)seed;
    agent_ = {0, 0};
    object_.reset();
    object_placed_ = false;
    step_ = 0;
    interactions_ = 0;
    has_reset_ = true;
    build_held_out();
    return observe(agent_, object_);
  }

  StepResult step(int action) override {
    detail::check_action(action);
    if (!has_reset_) throw std::logic_error("NovelObjectGrid: step before reset");
    ++step_;
    if (!object_placed_ && step_ >= cfg_.appear_at) {
      object_ = Cell{cfg_.size / 2, cfg_.size / 2};
      object_placed_ = true;
    }
    if (cfg_.vanish_at != 0 && step_ >= cfg_.vanish_at) object_.reset();
    if (simulate(cfg_.size, agent_, object_, action)) ++interactions_;
    return StepResult{observe(agent_, object_), 0.0, false, schedule_.phase_of(step_), interactions_};
  }

  std::size_t observation_dim() const override {
    return 2 * static_cast<std::size_t>(cfg_.size) * cfg_.size + 1;
  }
  const PhaseSchedule& schedule() const override { return schedule_; }
  std::uint64_t global_step() const override { return step_; }
  std::string name() const override { return "novel_object"; }

  const std::vector<Transition>& held_out_set(int phase) const override {
    detail::check_phase(phase, schedule_.phase_count());
    return held_out_[static_cast<std::size_t>(phase)];
  }

  std::uint64_t interactions() const { return interactions_; }
  std::optional<Cell> object_cell() const { return object_; }
  Cell agent_cell() const { return agent_; }

private:
  /// Applies one move to (agent, object); returns whether it was an
  /// interaction. Shared by step() and the held-out generator so probes obey
  /// the exact run dynamics.
  static bool simulate(int size, Cell& agent, std::optional<Cell>& object, int action) {
    const Cell prev = agent;
    const Cell next = move_clipped(agent, action, size);
    bool interact = false;
    if (object && next == *object && prev != next) {
      interact = true;
      const Cell d = action_delta(action);
      const Cell pushed{object->row + d.row, object->col + d.col};
      if (in_grid(pushed, size)) *object = pushed;
    }
    agent = next;
    return interact;
  }

  std::vector<double> observe(Cell agent, std::optional<Cell> object) const {
    const auto n2 = static_cast<std::size_t>(cfg_.size) * cfg_.size;
    std::vector<double> obs(2 * n2 + 1, 0.0);
    obs[static_cast<std::size_t>(agent.row) * cfg_.size + agent.col] = 1.0;
    if (object) obs[n2 + static_cast<std::size_t>(object->row) * cfg_.size + object->col] = 1.0;
    obs[2 * n2] = 1.0;
    return obs;
  }

  void build_held_out() {
    held_out_.assign(static_cast<std::size_t>(schedule_.phase_count()), {});
    // Object probes fix the object at its spawn cell: every run's object
    // enters there and only drifts away one push at a time, so the spawn
    // configuration dominates what runs actually experience, which is what
    // the test set is meant to represent. The scripted probe policy never
    // steps onto the object; it measures how well a model has learned the
    // room with the object at rest, so that probe loss falls monotonically
    // as that knowledge improves.
    const Cell spawn{cfg_.size / 2, cfg_.size / 2};
    for (int phase = 0; phase < schedule_.phase_count(); ++phase) {
      const bool present = phase == 1;
      Rng rng = make_rng(detail::kHeldOutSeed, 101 + static_cast<std::uint64_t>(phase));
      auto& set = held_out_[static_cast<std::size_t>(phase)];
      set.reserve(cfg_.held_out_per_phase);
      for (std::size_t i = 0; i < cfg_.held_out_per_phase; ++i) {
        Cell agent{};
        std::optional<Cell> object;
        int action = 0;
        while (true) {
          agent = detail::random_cell(rng, cfg_.size);
          object = present ? std::optional<Cell>(spawn) : std::nullopt;
          action = static_cast<int>(random_index(rng, kGridActionCount));
          if (!present) break;
          const Cell next = move_clipped(agent, action, cfg_.size);
          if (agent != spawn && next != spawn) break;
        }
        Transition t;
        t.observation = observe(agent, object);
        t.action = action;
        simulate(cfg_.size, agent, object, action);
        t.next_observation = observe(agent, object);
        t.reward = 0.0;
        t.terminal = false;
        t.env_step = i;
        t.phase_tag = phase;
        set.push_back(std::move(t));
      }
    }
  }

  Config cfg_;
  PhaseSchedule schedule_;
  Cell agent_{0, 0};
  std::optional<Cell> object_;
  bool object_placed_ = false;
  bool has_reset_ = false;
  std::uint64_t step_ = 0;
  std::uint64_t interactions_ = 0;
  std::vector<std::vector<Transition>> held_out_;
};

/// Room split by a gate column where rightward moves are suppressed except
/// through a gap in the bottom row. At release_at the gate opens, and a
/// distance-to-goal shaped reward switches on in the region beyond the gate.
///
/// Observation: agent position one-hot. Phases: 0 gated, 1 released.
class ConstrainedGrid final : public GridEnvironment {
public:
  struct Config {
    int size = 9;
    std::uint64_t release_at = 20000;
    std::size_t held_out_per_phase = 256;
  };

  explicit ConstrainedGrid(Config cfg) : cfg_(cfg), schedule_({cfg.release_at}) {
    if (cfg.size < 3) throw std::invalid_argument("ConstrainedGrid: size must be at least 3");
    if (cfg.held_out_per_phase == 0)
      throw std::invalid_argument("ConstrainedGrid: held_out_per_phase must be at least 1");
    gate_col_ = cfg.size / 2;
    goal_ = {cfg.size - 1, cfg.size - 1};
  }

  std::vector<double> reset(std::uint64_t seed) override {
    (void)seed;
    agent_ = {0, 0};
    step_ = 0;
    has_reset_ = true;
    build_held_out();
    return observe(agent_);
  }

  StepResult step(int action) override {
    detail::check_action(action);
    if (!has_reset_) throw std::logic_error("ConstrainedGrid: step before reset");
    ++step_;
    const int phase = schedule_.phase_of(step_);
    agent_ = apply_move(agent_, action, phase);
    return StepResult{observe(agent_), reward_at(agent_, phase), false, phase, 0};
  }

  std::size_t observation_dim() const override {
    return static_cast<std::size_t>(cfg_.size) * cfg_.size;
  }
  const PhaseSchedule& schedule() const override { return schedule_; }
  std::uint64_t global_step() const override { return step_; }
  std::string name() const override { return "constrained"; }

  const std::vector<Transition>& held_out_set(int phase) const override {
    detail::check_phase(phase, schedule_.phase_count());
    return held_out_[static_cast<std::size_t>(phase)];
  }

  bool blocked(Cell c, int action, int phase) const {
    return phase == 0 && action == kRight && c.col == gate_col_ && c.row != cfg_.size - 1;
  }

  int gate_col() const { return gate_col_; }

private:
  Cell apply_move(Cell c, int action, int phase) const {
    if (blocked(c, action, phase)) return c;
    return move_clipped(c, action, cfg_.size);
  }

  double reward_at(Cell c, int phase) const {
    if (phase == 0 || c.col <= gate_col_) return 0.0;
    const int dist = std::abs(c.row - goal_.row) + std::abs(c.col - goal_.col);
    return 1.0 - static_cast<double>(dist) / static_cast<double>(2 * (cfg_.size - 1));
  }

  std::vector<double> observe(Cell agent) const {
    std::vector<double> obs(observation_dim(), 0.0);
    obs[static_cast<std::size_t>(agent.row) * cfg_.size + agent.col] = 1.0;
    return obs;
  }

  void build_held_out() {
    held_out_.assign(static_cast<std::size_t>(schedule_.phase_count()), {});
    for (int phase = 0; phase < schedule_.phase_count(); ++phase) {
      Rng rng = make_rng(detail::kHeldOutSeed, 101 + static_cast<std::uint64_t>(phase));
      auto& set = held_out_[static_cast<std::size_t>(phase)];
      set.reserve(cfg_.held_out_per_phase);
      for (std::size_t i = 0; i < cfg_.held_out_per_phase; ++i) {
        const Cell agent = detail::random_cell(rng, cfg_.size);
        const auto action = static_cast<int>(random_index(rng, kGridActionCount));
        const Cell next = apply_move(agent, action, phase);
        Transition t;
        t.observation = observe(agent);
        t.action = action;
        t.next_observation = observe(next);
        t.reward = reward_at(next, phase);
        t.terminal = false;
        t.env_step = i;
        t.phase_tag = phase;
        set.push_back(std::move(t));
      }
    }
  }

  Config cfg_;
  PhaseSchedule schedule_;
  int gate_col_ = 0;
  Cell goal_{0, 0};
  Cell agent_{0, 0};
  bool has_reset_ = false;
  std::uint64_t step_ = 0;
  std::vector<std::vector<Transition>> held_out_;
};

/// Goal-reaching room whose background indicator swaps at swap_at and
/// reverts at revert_at. Reaching the far corner pays 1, terminates the
/// episode, and respawns the agent at the origin; the returned observation
/// is the respawned state. The global step runs continuously across
/// episodes.
///
/// Observation: agent position one-hot, then a two-way background one-hot
/// (id 0 in phases 0 and 2, id 1 in phase 1).
class PhaseSwapGrid final : public GridEnvironment {
public:
  struct Config {
    int size = 9;
    std::uint64_t swap_at = 20000;
    std::uint64_t revert_at = 40000;
    std::size_t held_out_per_phase = 256;
  };

  explicit PhaseSwapGrid(Config cfg) : cfg_(cfg), schedule_({cfg.swap_at, cfg.revert_at}) {
    if (cfg.size < 2) throw std::invalid_argument("PhaseSwapGrid: size must be at least 2");
    if (cfg.held_out_per_phase == 0)
      throw std::invalid_argument("PhaseSwapGrid: held_out_per_phase must be at least 1");
    goal_ = {cfg.size - 1, cfg.size - 1};
  }

  std::vector<double> reset(std::uint64_t seed) override {
    (void)seed;
    agent_ = {0, 0};
    step_ = 0;
    has_reset_ = true;
    build_held_out();
    return observe(agent_, 0);
  }

  StepResult step(int action) override {
    detail::check_action(action);
    if (!has_reset_) throw std::logic_error("PhaseSwapGrid: step before reset");
    ++step_;
    const int phase = schedule_.phase_of(step_);
    agent_ = move_clipped(agent_, action, cfg_.size);
    const bool terminal = agent_ == goal_;
    const double reward = terminal ? 1.0 : 0.0;
    if (terminal) agent_ = {0, 0};
    return StepResult{observe(agent_, background_id(phase)), reward, terminal, phase, 0};
  }

  std::size_t observation_dim() const override {
    return static_cast<std::size_t>(cfg_.size) * cfg_.size + 2;
  }
  const PhaseSchedule& schedule() const override { return schedule_; }
  std::uint64_t global_step() const override { return step_; }
  std::string name() const override { return "phase_swap"; }

  const std::vector<Transition>& held_out_set(int phase) const override {
    detail::check_phase(phase, schedule_.phase_count());
    return held_out_[static_cast<std::size_t>(phase)];
  }

  static int background_id(int phase) { return phase == 1 ? 1 : 0; }

private:
  std::vector<double> observe(Cell agent, int background) const {
    std::vector<double> obs(observation_dim(), 0.0);
    obs[static_cast<std::size_t>(agent.row) * cfg_.size + agent.col] = 1.0;
    obs[static_cast<std::size_t>(cfg_.size) * cfg_.size + background] = 1.0;
    return obs;
  }

  void build_held_out() {
    held_out_.assign(static_cast<std::size_t>(schedule_.phase_count()), {});
    for (int phase = 0; phase < schedule_.phase_count(); ++phase) {
      Rng rng = make_rng(detail::kHeldOutSeed, 101 + static_cast<std::uint64_t>(phase));
      auto& set = held_out_[static_cast<std::size_t>(phase)];
      set.reserve(cfg_.held_out_per_phase);
      for (std::size_t i = 0; i < cfg_.held_out_per_phase; ++i) {
        const Cell agent = detail::random_cell(rng, cfg_.size);
        const auto action = static_cast<int>(random_index(rng, kGridActionCount));
        Cell next = move_clipped(agent, action, cfg_.size);
        const bool terminal = next == goal_;
        if (terminal) next = {0, 0};
        Transition t;
        t.observation = observe(agent, background_id(phase));
        t.action = action;
        t.next_observation = observe(next, background_id(phase));
        t.reward = terminal ? 1.0 : 0.0;
        t.terminal = terminal;
        t.env_step = i;
        t.phase_tag = phase;
        set.push_back(std::move(t));
      }
    }
  }

  Config cfg_;
  PhaseSchedule schedule_;
  Cell goal_{0, 0};
  Cell agent_{0, 0};
  bool has_reset_ = false;
  std::uint64_t step_ = 0;
  std::vector<std::vector<Transition>> held_out_;
};

struct EnvParams {
  std::string name = "novel_object";
  int size = 9;
  std::uint64_t t0 = 20000;
  std::uint64_t t1 = 0;  // 0 means no second change where one is optional
  std::size_t held_out_per_phase = 256;

  bool operator==(const EnvParams&) const = default;
};

inline std::unique_ptr<GridEnvironment> make_environment(const EnvParams& p) {
  if (p.size < 2) throw ConfigError("env.size", "must be at least 2");
  if (p.t0 == 0) throw ConfigError("env.t0", "must be at least 1");
  if (p.held_out_per_phase == 0) throw ConfigError("env.held_out_per_phase", "must be at least 1");
  if (p.name == "novel_object") {
    if (p.t1 != 0 && p.t1 <= p.t0) throw ConfigError("env.t1", "must exceed env.t0 when set");
    return std::make_unique<NovelObjectGrid>(
        NovelObjectGrid::Config{p.size, p.t0, p.t1, p.held_out_per_phase});
  }
  if (p.name == "constrained") {
    if (p.t1 != 0) throw ConfigError("env.t1", "constrained has a single change step; leave t1 at 0");
    return std::make_unique<ConstrainedGrid>(ConstrainedGrid::Config{p.size, p.t0, p.held_out_per_phase});
  }
  if (p.name == "phase_swap") {
    if (p.t1 <= p.t0) throw ConfigError("env.t1", "phase_swap requires env.t1 greater than env.t0");
    return std::make_unique<PhaseSwapGrid>(
        PhaseSwapGrid::Config{p.size, p.t0, p.t1, p.held_out_per_phase});
  }
  throw ConfigError("env.name", "unknown environment '" + p.name + "'");
}

}  // namespace cr
