#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include "curious_replay/agent.hpp"
#include "curious_replay/envs.hpp"
#include "curious_replay/errors.hpp"
#include "curious_replay/priority.hpp"
#include "curious_replay/textio.hpp"

namespace cr {

struct ModelParams {
  double learning_rate = 0.2;
  std::size_t ensemble_size = 5;
  double ensemble_learning_rate = 0.2;

  bool operator==(const ModelParams&) const = default;
};

struct ValueParams {
  double learning_rate = 0.2;
  double gamma = 0.99;
  double epsilon_greedy = 0.1;

  bool operator==(const ValueParams&) const = default;
};

/// Complete description of one run. Serializes to a line-oriented
/// "section.key = value" file; parsing the serialized form reproduces the
/// struct exactly, including every double bit pattern.
struct RunConfig {
  EnvParams env;
  PriorityParams priority;
  AgentConfig agent;
  ValueParams value;
  ModelParams model;
  std::size_t buffer_capacity = 100000;
  std::uint64_t total_steps = 60000;
  std::uint64_t seed = 1;
  std::uint64_t metrics_interval = 200;
  std::uint64_t clear_buffer_at = 0;  // 0 means never
  std::string out_dir = "runs/out";

  bool operator==(const RunConfig&) const = default;
};

inline void validate(const RunConfig& c) {
  if (c.env.size < 2) throw ConfigError("env.size", "must be at least 2");
  if (c.env.t0 == 0) throw ConfigError("env.t0", "must be at least 1");
  if (c.env.held_out_per_phase == 0) throw ConfigError("env.held_out_per_phase", "must be at least 1");
  if (!(c.priority.c > 0.0)) throw ConfigError("priority.c", "must be positive");
  if (!(c.priority.beta >= 0.0 && c.priority.beta <= 1.0))
    throw ConfigError("priority.beta", "must be in [0, 1]");
  if (!(c.priority.alpha >= 0.0 && c.priority.alpha <= 1.0))
    throw ConfigError("priority.alpha", "must be in [0, 1]");
  if (!(c.priority.epsilon > 0.0)) throw ConfigError("priority.epsilon", "must be positive");
  if (!(c.priority.p_max > 0.0)) throw ConfigError("priority.p_max", "must be positive");
  if (!(c.priority.gamma >= 0.0 && c.priority.gamma < 1.0))
    throw ConfigError("priority.gamma", "must be in [0, 1)");
  if (c.agent.steps_per_train == 0) throw ConfigError("agent.steps_per_train", "must be at least 1");
  if (c.agent.batch_size == 0) throw ConfigError("agent.batch_size", "must be at least 1");
  if (!(c.agent.intrinsic_scale >= 0.0))
    throw ConfigError("agent.intrinsic_scale", "must be nonnegative");
  if (!(c.value.learning_rate > 0.0)) throw ConfigError("value.learning_rate", "must be positive");
  if (!(c.value.gamma >= 0.0 && c.value.gamma < 1.0))
    throw ConfigError("value.gamma", "must be in [0, 1)");
  if (!(c.value.epsilon_greedy >= 0.0 && c.value.epsilon_greedy <= 1.0))
    throw ConfigError("value.epsilon_greedy", "must be in [0, 1]");
  if (!(c.model.learning_rate > 0.0)) throw ConfigError("model.learning_rate", "must be positive");
  if (c.model.ensemble_size == 0) throw ConfigError("model.ensemble_size", "must be at least 1");
  if (!(c.model.ensemble_learning_rate > 0.0))
    throw ConfigError("model.ensemble_learning_rate", "must be positive");
  if (c.buffer_capacity == 0) throw ConfigError("buffer.capacity", "must be at least 1");
  if (c.metrics_interval == 0) throw ConfigError("run.metrics_interval", "must be at least 1");
  if (c.out_dir.empty()) throw ConfigError("run.out", "must not be empty");
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "env.name = " << c.env.name << "\n";
  out << "env.size = " << c.env.size << "\n";
  out << "env.t0 = " << c.env.t0 << "\n";
  out << "env.t1 = " << c.env.t1 << "\n";
  out << "env.held_out_per_phase = " << c.env.held_out_per_phase << "\n";
  out << "run.total_steps = " << c.total_steps << "\n";
  out << "run.seed = " << c.seed << "\n";
  out << "run.metrics_interval = " << c.metrics_interval << "\n";
  out << "run.clear_buffer_at = " << c.clear_buffer_at << "\n";
  out << "run.out = " << c.out_dir << "\n";
  out << "buffer.capacity = " << c.buffer_capacity << "\n";
  out << "priority.strategy = " << strategy_name(c.priority.strategy) << "\n";
  out << "priority.c = " << format_double(c.priority.c) << "\n";
  out << "priority.beta = " << format_double(c.priority.beta) << "\n";
  out << "priority.alpha = " << format_double(c.priority.alpha) << "\n";
  out << "priority.epsilon = " << format_double(c.priority.epsilon) << "\n";
  out << "priority.p_max = " << format_double(c.priority.p_max) << "\n";
  out << "priority.use_running_min = " << (c.priority.use_running_min ? "true" : "false") << "\n";
  out << "priority.gamma = " << format_double(c.priority.gamma) << "\n";
  out << "agent.steps_per_train = " << c.agent.steps_per_train << "\n";
  out << "agent.batch_size = " << c.agent.batch_size << "\n";
  out << "agent.imagination_rollouts = " << c.agent.imagination_rollouts << "\n";
  out << "agent.intrinsic_mode = " << intrinsic_mode_name(c.agent.intrinsic_mode) << "\n";
  out << "agent.intrinsic_scale = " << format_double(c.agent.intrinsic_scale) << "\n";
  out << "value.learning_rate = " << format_double(c.value.learning_rate) << "\n";
  out << "value.gamma = " << format_double(c.value.gamma) << "\n";
  out << "value.epsilon_greedy = " << format_double(c.value.epsilon_greedy) << "\n";
  out << "model.learning_rate = " << format_double(c.model.learning_rate) << "\n";
  out << "model.ensemble_size = " << c.model.ensemble_size << "\n";
  out << "model.ensemble_learning_rate = " << format_double(c.model.ensemble_learning_rate) << "\n";
  return out.str();
}

namespace detail {

inline std::uint64_t config_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  if (!parse_u64(value, v)) throw ConfigError(key, "expected a nonnegative integer, got '" + value + "'");
  return v;
}

inline int config_int(const std::string& key, const std::string& value) {
  int v = 0;
  if (!parse_i32(value, v)) throw ConfigError(key, "expected an integer, got '" + value + "'");
  return v;
}

inline double config_f64(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_f64(value, v)) throw ConfigError(key, "expected a number, got '" + value + "'");
  return v;
}

inline bool config_bool(const std::string& key, const std::string& value) {
  bool v = false;
  if (!parse_bool(value, v)) throw ConfigError(key, "expected true or false, got '" + value + "'");
  return v;
}

}  // namespace detail

/// Parses the "section.key = value" format produced by serialize_config.
/// Lines that are empty or start with # are skipped; unknown keys and
/// malformed values raise ConfigError naming the field. Keys may appear in
/// any order; omitted keys keep their defaults.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_number), "expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_number), "empty key");

    if (key == "env.name") c.env.name = value;
    else if (key == "env.size") c.env.size = detail::config_int(key, value);
    else if (key == "env.t0") c.env.t0 = detail::config_u64(key, value);
    else if (key == "env.t1") c.env.t1 = detail::config_u64(key, value);
    else if (key == "env.held_out_per_phase")
      c.env.held_out_per_phase = static_cast<std::size_t>(detail::config_u64(key, value));
    else if (key == "run.total_steps") c.total_steps = detail::config_u64(key, value);
    else if (key == "run.seed") c.seed = detail::config_u64(key, value);
    else if (key == "run.metrics_interval") c.metrics_interval = detail::config_u64(key, value);
    else if (key == "run.clear_buffer_at") c.clear_buffer_at = detail::config_u64(key, value);
    else if (key == "run.out") c.out_dir = value;
    else if (key == "buffer.capacity")
      c.buffer_capacity = static_cast<std::size_t>(detail::config_u64(key, value));
    else if (key == "priority.strategy") {
      try {
        c.priority.strategy = strategy_from_name(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "priority.c") c.priority.c = detail::config_f64(key, value);
    else if (key == "priority.beta") c.priority.beta = detail::config_f64(key, value);
    else if (key == "priority.alpha") c.priority.alpha = detail::config_f64(key, value);
    else if (key == "priority.epsilon") c.priority.epsilon = detail::config_f64(key, value);
    else if (key == "priority.p_max") c.priority.p_max = detail::config_f64(key, value);
    else if (key == "priority.use_running_min")
      c.priority.use_running_min = detail::config_bool(key, value);
    else if (key == "priority.gamma") c.priority.gamma = detail::config_f64(key, value);
    else if (key == "agent.steps_per_train")
      c.agent.steps_per_train = static_cast<std::size_t>(detail::config_u64(key, value));
    else if (key == "agent.batch_size")
      c.agent.batch_size = static_cast<std::size_t>(detail::config_u64(key, value));
    else if (key == "agent.imagination_rollouts")
      c.agent.imagination_rollouts = static_cast<std::size_t>(detail::config_u64(key, value));
    else if (key == "agent.intrinsic_mode") {
      try {
        c.agent.intrinsic_mode = intrinsic_mode_from_name(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "agent.intrinsic_scale") c.agent.intrinsic_scale = detail::config_f64(key, value);
    else if (key == "value.learning_rate") c.value.learning_rate = detail::config_f64(key, value);
    else if (key == "value.gamma") c.value.gamma = detail::config_f64(key, value);
    else if (key == "value.epsilon_greedy") c.value.epsilon_greedy = detail::config_f64(key, value);
    else if (key == "model.learning_rate") c.model.learning_rate = detail::config_f64(key, value);
    else if (key == "model.ensemble_size")
      c.model.ensemble_size = static_cast<std::size_t>(detail::config_u64(key, value));
    else if (key == "model.ensemble_learning_rate")
      c.model.ensemble_learning_rate = detail::config_f64(key, value);
    else throw ConfigError(key, "unknown key");
  }
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  return parse_config_text(read_text_file(path));
}

inline void save_config_file(const RunConfig& c, const std::string& path) {
  write_text_file(path, serialize_config(c));
}

}  // namespace cr
