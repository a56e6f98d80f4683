#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/replay_buffer.hpp"
#include "curious_replay/textio.hpp"

namespace cr {

/// Line-delimited run metrics. Each line is a record of space-separated
/// key=value pairs, introduced by a record= tag: one header line, one
/// interaction line per object interaction, one interval line per metrics
/// interval, and one closing summary line. Vector fields are comma-joined.
/// Serialization is deterministic: doubles print as %.17g and nothing
/// derived from wall-clock time is included.
struct MetricsHeader {
  std::uint32_t version = 1;
  std::string env_name;
  std::string strategy;
  std::uint64_t seed = 0;
  std::uint64_t total_steps = 0;
  std::uint64_t metrics_interval = 0;
  std::uint64_t t0 = 0;
  std::uint64_t t1 = 0;
  std::uint64_t obs_dim = 0;
  std::uint64_t buffer_capacity = 0;
  int phase_count = 1;

  bool operator==(const MetricsHeader&) const = default;
};

/// State at one metrics boundary. Per-phase vectors are indexed by phase
/// tag; slots for phases with no buffered transitions hold -1.
struct IntervalRecord {
  std::uint64_t step = 0;
  std::uint64_t interactions = 0;
  std::uint64_t occupied = 0;
  double mean_return = 0.0;
  double extrinsic_reward_sum = 0.0;
  double intrinsic_reward_sum = 0.0;
  double mean_model_loss = 0.0;
  std::vector<double> holdout_loss;
  std::vector<double> relative_sampling_probability;
  std::vector<double> mean_visit_count;
  std::vector<std::uint64_t> priority_histogram;

  bool operator==(const IntervalRecord&) const = default;
};

struct RunSummary {
  std::uint64_t final_step = 0;
  std::uint64_t interactions = 0;
  double total_extrinsic_reward = 0.0;
  double total_intrinsic_reward = 0.0;
  std::uint64_t skipped_priority_updates = 0;
  std::uint64_t value_states = 0;
  std::vector<double> final_holdout_loss;

  bool operator==(const RunSummary&) const = default;
};

struct RunMetrics {
  MetricsHeader header;
  std::vector<std::uint64_t> interaction_steps;  // global step of each interaction, ascending
  std::vector<IntervalRecord> intervals;
  RunSummary summary;
  /// Seconds per interval, kept out of the serialized form so metrics files
  /// are byte-identical across reruns; written separately as a timing file.
  std::vector<double> interval_seconds;

  bool operator==(const RunMetrics& other) const {
    return header == other.header && interaction_steps == other.interaction_steps &&
           intervals == other.intervals && summary == other.summary;
  }
};

namespace detail {

inline std::string join_f64(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += format_double(v[i]);
  }
  return out.empty() ? "-" : out;
}

inline std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += std::to_string(v[i]);
  }
  return out.empty() ? "-" : out;
}

inline std::vector<double> split_f64(const std::string& key, const std::string& s) {
  std::vector<double> out;
  if (s == "-") return out;
  for (const auto& part : split(s, ',')) {
    double v = 0.0;
    if (!parse_f64(part, v)) throw IoError("metrics: bad number in " + key + ": '" + part + "'");
    out.push_back(v);
  }
  return out;
}

inline std::vector<std::uint64_t> split_u64(const std::string& key, const std::string& s) {
  std::vector<std::uint64_t> out;
  if (s == "-") return out;
  for (const auto& part : split(s, ',')) {
    std::uint64_t v = 0;
    if (!parse_u64(part, v)) throw IoError("metrics: bad integer in " + key + ": '" + part + "'");
    out.push_back(v);
  }
  return out;
}

class FieldMap {
public:
  FieldMap(const std::string& line, std::size_t line_number) : line_number_(line_number) {
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos)
        throw IoError("metrics line " + std::to_string(line_number) + ": token '" + token +
                      "' is not key=value");
      fields_.emplace_back(token.substr(0, eq), token.substr(eq + 1));
    }
  }

  std::string str(const std::string& key) const {
    for (const auto& [k, v] : fields_)
      if (k == key) return v;
    throw IoError("metrics line " + std::to_string(line_number_) + ": missing field '" + key + "'");
  }

  std::uint64_t u64(const std::string& key) const {
    std::uint64_t v = 0;
    if (!parse_u64(str(key), v))
      throw IoError("metrics line " + std::to_string(line_number_) + ": field '" + key +
                    "' is not an integer");
    return v;
  }

  double f64(const std::string& key) const {
    double v = 0.0;
    if (!parse_f64(str(key), v))
      throw IoError("metrics line " + std::to_string(line_number_) + ": field '" + key +
                    "' is not a number");
    return v;
  }

private:
  std::vector<std::pair<std::string, std::string>> fields_;
  std::size_t line_number_;
};

}  // namespace detail

inline std::string serialize_metrics(const RunMetrics& m) {
  std::ostringstream out;
  const auto& h = m.header;
  out << "record=header version=" << h.version << " env=" << h.env_name
      << " strategy=" << h.strategy << " seed=" << h.seed << " total_steps=" << h.total_steps
      << " interval=" << h.metrics_interval << " t0=" << h.t0 << " t1=" << h.t1
      << " obs_dim=" << h.obs_dim << " capacity=" << h.buffer_capacity
      << " phases=" << h.phase_count << "\n";
  // Interactions and intervals interleave in step order so the file reads as
  // a chronological log.
  std::size_t ii = 0;
  std::uint64_t count = 0;
  for (const auto& rec : m.intervals) {
    while (ii < m.interaction_steps.size() && m.interaction_steps[ii] <= rec.step) {
      out << "record=interaction step=" << m.interaction_steps[ii] << " count=" << ++count << "\n";
      ++ii;
    }
    out << "record=interval step=" << rec.step << " interactions=" << rec.interactions
        << " occupied=" << rec.occupied << " mean_return=" << format_double(rec.mean_return)
        << " reward_sum=" << format_double(rec.extrinsic_reward_sum)
        << " intrinsic_sum=" << format_double(rec.intrinsic_reward_sum)
        << " model_loss=" << format_double(rec.mean_model_loss)
        << " holdout=" << detail::join_f64(rec.holdout_loss)
        << " relprob=" << detail::join_f64(rec.relative_sampling_probability)
        << " visits=" << detail::join_f64(rec.mean_visit_count)
        << " hist=" << detail::join_u64(rec.priority_histogram) << "\n";
  }
  for (; ii < m.interaction_steps.size(); ++ii)
    out << "record=interaction step=" << m.interaction_steps[ii] << " count=" << ++count << "\n";
  const auto& s = m.summary;
  out << "record=summary final_step=" << s.final_step << " interactions=" << s.interactions
      << " total_reward=" << format_double(s.total_extrinsic_reward)
      << " total_intrinsic=" << format_double(s.total_intrinsic_reward)
      << " skipped_updates=" << s.skipped_priority_updates << " value_states=" << s.value_states
      << " final_holdout=" << detail::join_f64(s.final_holdout_loss) << "\n";
  return out.str();
}

inline RunMetrics parse_metrics_text(const std::string& text) {
  RunMetrics m;
  bool saw_header = false;
  bool saw_summary = false;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const detail::FieldMap f(line, line_number);
    const std::string record = f.str("record");
    if (record == "header") {
      if (saw_header) throw IoError("metrics: duplicate header line");
      saw_header = true;
      m.header.version = static_cast<std::uint32_t>(f.u64("version"));
      if (m.header.version != 1)
        throw IoError("metrics: unsupported version " + std::to_string(m.header.version));
      m.header.env_name = f.str("env");
      m.header.strategy = f.str("strategy");
      m.header.seed = f.u64("seed");
      m.header.total_steps = f.u64("total_steps");
      m.header.metrics_interval = f.u64("interval");
      m.header.t0 = f.u64("t0");
      m.header.t1 = f.u64("t1");
      m.header.obs_dim = f.u64("obs_dim");
      m.header.buffer_capacity = f.u64("capacity");
      m.header.phase_count = static_cast<int>(f.u64("phases"));
    } else if (record == "interaction") {
      m.interaction_steps.push_back(f.u64("step"));
    } else if (record == "interval") {
      IntervalRecord rec;
      rec.step = f.u64("step");
      rec.interactions = f.u64("interactions");
      rec.occupied = f.u64("occupied");
      rec.mean_return = f.f64("mean_return");
      rec.extrinsic_reward_sum = f.f64("reward_sum");
      rec.intrinsic_reward_sum = f.f64("intrinsic_sum");
      rec.mean_model_loss = f.f64("model_loss");
      rec.holdout_loss = detail::split_f64("holdout", f.str("holdout"));
      rec.relative_sampling_probability = detail::split_f64("relprob", f.str("relprob"));
      rec.mean_visit_count = detail::split_f64("visits", f.str("visits"));
      rec.priority_histogram = detail::split_u64("hist", f.str("hist"));
      m.intervals.push_back(std::move(rec));
    } else if (record == "summary") {
      if (saw_summary) throw IoError("metrics: duplicate summary line");
      saw_summary = true;
      m.summary.final_step = f.u64("final_step");
      m.summary.interactions = f.u64("interactions");
      m.summary.total_extrinsic_reward = f.f64("total_reward");
      m.summary.total_intrinsic_reward = f.f64("total_intrinsic");
      m.summary.skipped_priority_updates = f.u64("skipped_updates");
      m.summary.value_states = f.u64("value_states");
      m.summary.final_holdout_loss = detail::split_f64("final_holdout", f.str("final_holdout"));
    } else {
      throw IoError("metrics line " + std::to_string(line_number) + ": unknown record '" + record + "'");
    }
  }
  if (!saw_header) throw IoError("metrics: missing header line");
  if (!saw_summary) throw IoError("metrics: missing summary line");
  return m;
}

inline RunMetrics load_metrics_file(const std::string& path) {
  return parse_metrics_text(read_text_file(path));
}

inline void save_metrics_file(const RunMetrics& m, const std::string& path) {
  write_text_file(path, serialize_metrics(m));
}

inline void save_timing_file(const RunMetrics& m, const std::string& path) {
  std::ostringstream out;
  double total = 0.0;
  for (std::size_t i = 0; i < m.interval_seconds.size(); ++i) {
    total += m.interval_seconds[i];
    out << "interval=" << i << " seconds=" << format_double(m.interval_seconds[i]) << "\n";
  }
  out << "total_seconds=" << format_double(total) << "\n";
  write_text_file(path, out.str());
}

/// Steps from the first change point to the kth object interaction, or
/// nothing if the run logged fewer than k interactions. Interactions exist
/// only after the object appears, so the difference is never negative.
inline std::optional<std::uint64_t> steps_to_kth_interaction(const RunMetrics& m, std::size_t k) {
  if (k == 0) throw std::invalid_argument("steps_to_kth_interaction: k must be at least 1");
  if (m.interaction_steps.size() < k) return std::nullopt;
  return m.interaction_steps[k - 1] - m.header.t0;
}

}  // namespace cr
