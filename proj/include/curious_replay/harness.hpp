#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "curious_replay/agent.hpp"
#include "curious_replay/config.hpp"
#include "curious_replay/envs.hpp"
#include "curious_replay/errors.hpp"
#include "curious_replay/metrics.hpp"
#include "curious_replay/replay_buffer.hpp"
#include "curious_replay/stats.hpp"
#include "curious_replay/sumtree.hpp"
#include "curious_replay/world_model.hpp"

namespace cr {

/// Executes one run to completion in memory. Deterministic: the same config
/// yields the same RunMetrics, bit for bit, apart from interval_seconds.
inline RunMetrics run(const RunConfig& cfg) {
  validate(cfg);
  auto env = make_environment(cfg.env);
  std::vector<double> obs0 = env->reset(cfg.seed);
  const std::size_t obs_dim = env->observation_dim();
  const auto action_count = static_cast<std::size_t>(env->action_count());

  PrioritizedBuffer buffer(cfg.buffer_capacity, cfg.priority);
  DynamicsModel model(obs_dim, action_count, cfg.model.learning_rate, mix_seed(cfg.seed, 11));
  std::optional<DisagreementEnsemble> ensemble;
  if (cfg.agent.intrinsic_mode == IntrinsicMode::kDisagreement)
    ensemble.emplace(obs_dim, action_count, cfg.model.ensemble_size,
                     cfg.model.ensemble_learning_rate, mix_seed(cfg.seed, 12));
  Agent agent(cfg.agent, ValueTable(action_count, cfg.value.learning_rate, cfg.value.gamma,
                                    cfg.value.epsilon_greedy));
  agent.observe(std::move(obs0));
  Rng rng = make_rng(cfg.seed, 0);

  RunMetrics m;
  m.header.env_name = cfg.env.name;
  m.header.strategy = strategy_name(cfg.priority.strategy);
  m.header.seed = cfg.seed;
  m.header.total_steps = cfg.total_steps;
  m.header.metrics_interval = cfg.metrics_interval;
  m.header.t0 = cfg.env.t0;
  m.header.t1 = cfg.env.t1;
  m.header.obs_dim = obs_dim;
  m.header.buffer_capacity = cfg.buffer_capacity;
  m.header.phase_count = env->schedule().phase_count();

  const std::size_t phases = static_cast<std::size_t>(m.header.phase_count);
  const auto holdout_losses = [&] {
    std::vector<double> out(phases, 0.0);
    for (std::size_t p = 0; p < phases; ++p) {
      const auto& set = env->held_out_set(static_cast<int>(p));
      double sum = 0.0;
      for (const auto& t : set) sum += model.loss(t);
      out[p] = sum / static_cast<double>(set.size());
    }
    return out;
  };

  std::uint64_t steps_done = 0;
  std::uint64_t next_boundary = cfg.metrics_interval;
  std::uint64_t last_emit_step = 0;
  double interval_extrinsic = 0.0, interval_intrinsic = 0.0, interval_loss_sum = 0.0;
  double total_extrinsic = 0.0, total_intrinsic = 0.0;
  std::size_t interval_cycles = 0;
  auto interval_start = std::chrono::steady_clock::now();

  const auto emit = [&] {
    IntervalRecord rec;
    rec.step = steps_done;
    rec.interactions = m.interaction_steps.size();
    rec.occupied = buffer.occupied();
    const auto span = static_cast<double>(steps_done - last_emit_step);
    rec.mean_return = interval_extrinsic / span;
    rec.extrinsic_reward_sum = interval_extrinsic;
    rec.intrinsic_reward_sum = interval_intrinsic;
    rec.mean_model_loss = interval_cycles == 0 ? 0.0 : interval_loss_sum / static_cast<double>(interval_cycles);
    rec.holdout_loss = holdout_losses();
    rec.relative_sampling_probability.assign(phases, -1.0);
    rec.mean_visit_count.assign(phases, -1.0);
    const PriorityDiagnostics diag = buffer.diagnostics();
    for (const auto& g : diag.per_phase) {
      if (g.phase_tag < 0 || static_cast<std::size_t>(g.phase_tag) >= phases) continue;
      rec.relative_sampling_probability[static_cast<std::size_t>(g.phase_tag)] =
          g.median_relative_sampling_probability;
      rec.mean_visit_count[static_cast<std::size_t>(g.phase_tag)] = g.mean_visit_count;
    }
    rec.priority_histogram.assign(diag.histogram.counts.begin(), diag.histogram.counts.end());
    m.intervals.push_back(std::move(rec));
    const auto now = std::chrono::steady_clock::now();
    m.interval_seconds.push_back(std::chrono::duration<double>(now - interval_start).count());
    interval_start = now;
    last_emit_step = steps_done;
    interval_extrinsic = interval_intrinsic = interval_loss_sum = 0.0;
    interval_cycles = 0;
    next_boundary = (steps_done / cfg.metrics_interval + 1) * cfg.metrics_interval;
  };

  const auto absorb = [&](const CycleReport& rep) {
    steps_done += rep.steps_collected;
    interval_extrinsic += rep.extrinsic_reward_sum;
    interval_intrinsic += rep.intrinsic_reward_sum;
    total_extrinsic += rep.extrinsic_reward_sum;
    total_intrinsic += rep.intrinsic_reward_sum;
    for (const auto s : rep.interaction_steps) m.interaction_steps.push_back(s);
    m.summary.skipped_priority_updates += rep.skipped_priority_updates;
  };

  const std::uint64_t per_cycle = cfg.agent.steps_per_train;
  bool cleared = false;
  while (steps_done + per_cycle <= cfg.total_steps) {
    if (cfg.clear_buffer_at != 0 && !cleared && steps_done >= cfg.clear_buffer_at) {
      buffer = PrioritizedBuffer(cfg.buffer_capacity, cfg.priority);
      cleared = true;
    }
    const CycleReport rep =
        agent.train_cycle(*env, buffer, model, ensemble ? &*ensemble : nullptr, rng);
    absorb(rep);
    interval_loss_sum += rep.mean_cached_loss;
    ++interval_cycles;
    if (steps_done >= next_boundary) emit();
  }
  if (steps_done < cfg.total_steps) {
    CycleReport rep;
    agent.collect(*env, buffer, static_cast<std::size_t>(cfg.total_steps - steps_done), rng, rep,
                  ensemble ? &*ensemble : nullptr);
    absorb(rep);
    if (steps_done >= next_boundary) emit();
  }

  m.summary.final_step = steps_done;
  m.summary.interactions = m.interaction_steps.size();
  m.summary.total_extrinsic_reward = total_extrinsic;
  m.summary.total_intrinsic_reward = total_intrinsic;
  m.summary.value_states = agent.values().state_count();
  m.summary.final_holdout_loss = holdout_losses();
  return m;
}

/// Runs and writes metrics.txt, timing.txt, and a config.txt snapshot under
/// the config's out_dir.
inline RunMetrics run_and_write(const RunConfig& cfg) {
  validate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir + "': " + ec.message());
  const RunMetrics m = run(cfg);
  save_config_file(cfg, cfg.out_dir + "/config.txt");
  save_metrics_file(m, cfg.out_dir + "/metrics.txt");
  save_timing_file(m, cfg.out_dir + "/timing.txt");
  return m;
}

/// Scalar extracted from one run for cross-run comparison. Grammar:
///   interaction:<k>        steps from t0 to the kth interaction
///   holdout:<p>@<s>        held-out loss of phase p at the first interval
///                          at or after step s
///   final_holdout:<p>      held-out loss of phase p at the end of the run
///   interactions_total     total interactions over the run
/// An empty optional means the run never produced the quantity (censored).
inline std::optional<double> extract_metric(const RunMetrics& m, const std::string& metric) {
  const auto phase_checked = [&](const std::string& text) {
    std::uint64_t p = 0;
    if (!detail::parse_u64(text, p)) throw ConfigError("metric", "bad phase in '" + metric + "'");
    if (p >= static_cast<std::uint64_t>(m.header.phase_count))
      throw ConfigError("metric", "phase " + text + " out of range for this run");
    return static_cast<std::size_t>(p);
  };
  if (metric.rfind("interaction:", 0) == 0) {
    std::uint64_t k = 0;
    if (!detail::parse_u64(metric.substr(12), k) || k == 0)
      throw ConfigError("metric", "bad k in '" + metric + "'");
    const auto steps = steps_to_kth_interaction(m, static_cast<std::size_t>(k));
    if (!steps) return std::nullopt;
    return static_cast<double>(*steps);
  }
  if (metric.rfind("holdout:", 0) == 0) {
    const std::string rest = metric.substr(8);
    const auto at = rest.find('@');
    if (at == std::string::npos) throw ConfigError("metric", "expected holdout:<phase>@<step>");
    const std::size_t p = phase_checked(rest.substr(0, at));
    std::uint64_t step = 0;
    if (!detail::parse_u64(rest.substr(at + 1), step))
      throw ConfigError("metric", "bad step in '" + metric + "'");
    for (const auto& rec : m.intervals)
      if (rec.step >= step && p < rec.holdout_loss.size()) return rec.holdout_loss[p];
    return std::nullopt;
  }
  if (metric.rfind("final_holdout:", 0) == 0) {
    const std::size_t p = phase_checked(metric.substr(14));
    if (p >= m.summary.final_holdout_loss.size()) return std::nullopt;
    return m.summary.final_holdout_loss[p];
  }
  if (metric == "interactions_total") return static_cast<double>(m.summary.interactions);
  throw ConfigError("metric", "unknown metric '" + metric + "'");
}

namespace detail {

inline std::size_t worker_count(std::size_t jobs, std::size_t max_workers) {
  std::size_t n = max_workers;
  if (n == 0) {
    if (const char* env = std::getenv("CR_THREADS")) {
      std::uint64_t parsed = 0;
      if (!parse_u64(env, parsed) || parsed == 0)
        throw ConfigError("CR_THREADS", "must be a positive integer");
      n = static_cast<std::size_t>(parsed);
    } else {
      n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
  }
  return std::min(std::max<std::size_t>(1, n), std::max<std::size_t>(1, jobs));
}

/// Runs job(i) for i in [0, jobs) on a fixed pool. Exceptions propagate
/// after all workers stop.
inline void parallel_for(std::size_t jobs, std::size_t max_workers,
                         const std::function<void(std::size_t)>& job) {
  const std::size_t workers = worker_count(jobs, max_workers);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct StrategyStats {
  std::string label;
  std::size_t n = 0;
  std::size_t censored = 0;
  /// Median over per-seed values with censored runs ranked worst; empty when
  /// the median itself lands on a censored run.
  std::optional<double> median;
  std::optional<double> q1;
  std::optional<double> q3;
  std::vector<std::optional<double>> per_seed;
};

struct PairwiseTest {
  std::string label_a;
  std::string label_b;
  double u_statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;
};

struct ComparisonReport {
  std::string metric;
  std::vector<std::uint64_t> seeds;
  std::vector<StrategyStats> strategies;
  std::vector<PairwiseTest> pairwise;  // two-sided, every unordered pair
};

namespace detail {

inline std::optional<double> finite_or_none(double v) {
  if (std::isfinite(v)) return v;
  return std::nullopt;
}

/// Censored runs enter the ranking as +infinity: worse than every completed
/// run, tied with each other.
inline std::vector<double> censored_as_inf(const std::vector<std::optional<double>>& values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values)
    out.push_back(v ? *v : std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace detail

inline std::string render_comparison(const ComparisonReport& report) {
  std::ostringstream out;
  out << "metric: " << report.metric << "\n";
  out << "seeds:";
  for (const auto s : report.seeds) out << " " << s;
  out << "\n\n";
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("censored");
  };
  out << "strategy                         n  censored  q1 / median / q3\n";
  for (const auto& s : report.strategies) {
    out << s.label << std::string(s.label.size() < 32 ? 32 - s.label.size() : 1, ' ') << s.n
        << "  " << s.censored << "  " << opt(s.q1) << " / " << opt(s.median) << " / " << opt(s.q3)
        << "\n";
    out << "  values:";
    for (const auto& v : s.per_seed) out << " " << opt(v);
    out << "\n";
  }
  out << "\npairwise two-sided rank-sum:\n";
  for (const auto& p : report.pairwise) {
    out << p.label_a << " vs " << p.label_b << ": U=" << format_double(p.u_statistic)
        << " p=" << format_double(p.p_value) << (p.exact ? " (exact)" : " (normal approx)") << "\n";
  }
  return out.str();
}

/// Runs every (template, seed) pair, extracts the metric from each run, and
/// summarizes per template with pairwise rank-sum tests. Templates usually
/// differ only in strategy; labels default to the strategy name. When
/// out_dir is nonempty each run writes under out_dir/<label>/seed_<seed>/
/// and the rendered comparison lands in out_dir/comparison.txt.
inline ComparisonReport compare(const std::vector<RunConfig>& templates,
                                const std::vector<std::uint64_t>& seeds, const std::string& metric,
                                const std::string& out_dir = "", std::size_t max_workers = 0,
                                std::vector<std::string> labels = {}) {
  if (templates.size() < 2)
    throw std::invalid_argument("compare: need at least 2 run templates");
  if (seeds.size() < 5) throw std::invalid_argument("compare: need at least 5 seeds");
  if (labels.empty())
    for (const auto& t : templates) labels.emplace_back(strategy_name(t.priority.strategy));
  if (labels.size() != templates.size())
    throw std::invalid_argument("compare: labels must match templates");
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j]) labels[j] += "#" + std::to_string(j);

  const std::size_t jobs = templates.size() * seeds.size();
  std::vector<std::optional<double>> results(jobs);
  detail::parallel_for(jobs, max_workers, [&](std::size_t i) {
    const std::size_t t = i / seeds.size();
    const std::size_t s = i % seeds.size();
    RunConfig cfg = templates[t];
    cfg.seed = seeds[s];
    RunMetrics metrics;
    if (out_dir.empty()) {
      metrics = run(cfg);
    } else {
      cfg.out_dir = out_dir + "/" + labels[t] + "/seed_" + std::to_string(seeds[s]);
      metrics = run_and_write(cfg);
    }
    results[i] = extract_metric(metrics, metric);
  });

  ComparisonReport report;
  report.metric = metric;
  report.seeds = seeds;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    StrategyStats st;
    st.label = labels[t];
    st.n = seeds.size();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& v = results[t * seeds.size() + s];
      st.per_seed.push_back(v);
      if (!v) ++st.censored;
    }
    const std::vector<double> padded = detail::censored_as_inf(st.per_seed);
    const Quartiles q = quartiles(padded);
    st.q1 = detail::finite_or_none(q.q1);
    st.median = detail::finite_or_none(q.median);
    st.q3 = detail::finite_or_none(q.q3);
    report.strategies.push_back(std::move(st));
  }
  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    for (std::size_t j = i + 1; j < report.strategies.size(); ++j) {
      const auto a = detail::censored_as_inf(report.strategies[i].per_seed);
      const auto b = detail::censored_as_inf(report.strategies[j].per_seed);
      const MannWhitneyResult mw = mann_whitney_u(a, b);
      report.pairwise.push_back(PairwiseTest{report.strategies[i].label,
                                             report.strategies[j].label, mw.u_statistic,
                                             mw.p_value, mw.exact});
    }
  }
  if (!out_dir.empty()) write_text_file(out_dir + "/comparison.txt", render_comparison(report));
  return report;
}

struct BenchPoint {
  int capacity_exponent = 0;
  double ns_per_op = 0.0;
};

struct BenchReport {
  std::vector<BenchPoint> points;
  std::uint64_t ops = 0;
  std::uint64_t seed = 0;
  bool set_only = false;
  std::uint64_t checksum = 0;  // defeats dead-code elimination of the timed loop
};

/// Times interleaved set and sample calls on trees of the given capacities
/// (as powers of two). With prefill off the tree holds no mass, sampling
/// would be an empty-distribution error, and only set is timed.
inline BenchReport bench_sumtree(const std::vector<int>& capacity_exponents, std::uint64_t ops,
                                 std::uint64_t seed, bool prefill = true) {
  if (ops == 0) throw std::invalid_argument("bench_sumtree: ops must be at least 1");
  if (capacity_exponents.empty())
    throw std::invalid_argument("bench_sumtree: need at least one capacity");
  BenchReport report;
  report.ops = ops;
  report.seed = seed;
  report.set_only = !prefill;
  for (const int e : capacity_exponents) {
    if (e < 1 || e > 28) throw std::invalid_argument("bench_sumtree: exponent out of range");
    const std::size_t capacity = std::size_t{1} << e;
    SumTree tree(capacity);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(e));
    if (prefill)
      for (std::size_t i = 0; i < capacity; ++i) tree.set(i, random_unit(rng) + 1e-3);
    std::uint64_t sink = 0;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t k = 0; k < ops; ++k) {
      if (!prefill || k % 2 == 0) {
        tree.set(random_index(rng, capacity), random_unit(rng) + 1e-3);
      } else {
        sink += tree.sample(random_unit(rng));
      }
    }
    const auto elapsed = std::chrono::duration<double, std::nano>(
        std::chrono::steady_clock::now() - start);
    report.checksum += sink;
    report.points.push_back(BenchPoint{e, elapsed.count() / static_cast<double>(ops)});
  }
  return report;
}

inline std::string render_bench(const BenchReport& report) {
  std::ostringstream out;
  out << "sumtree bench: ops=" << report.ops << " seed=" << report.seed
      << (report.set_only ? " (set only; empty tree refuses sampling)" : " (interleaved set+sample)")
      << "\n";
  for (const auto& p : report.points)
    out << "  capacity=2^" << p.capacity_exponent << " ns_per_op=" << format_double(p.ns_per_op)
        << "\n";
  if (report.points.size() >= 2) {
    const double lo = report.points.front().ns_per_op;
    const double hi = report.points.back().ns_per_op;
    out << "  ratio last/first=" << format_double(hi / lo) << "\n";
  }
  return out.str();
}

/// Applies one "key = value" override to a config, reusing the config parser
/// so every key accepts exactly its file syntax. Later lines win, so the
/// override is appended to the serialized base.
inline RunConfig apply_override(const RunConfig& base, const std::string& key,
                                const std::string& value) {
  return parse_config_text(serialize_config(base) + key + " = " + value + "\n");
}

struct SweepPoint {
  std::string value;
  StrategyStats stats;
};

struct SweepReport {
  std::string key;
  std::string metric;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepPoint> points;
};

inline std::string render_sweep(const SweepReport& report) {
  std::ostringstream out;
  out << "sweep over " << report.key << ", metric: " << report.metric << "\n";
  const auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("censored");
  };
  for (const auto& p : report.points) {
    out << "  " << report.key << "=" << p.value << "  median=" << opt(p.stats.median)
        << "  censored=" << p.stats.censored << "/" << p.stats.n << "\n";
  }
  return out.str();
}

/// Runs the base config once per (value, seed) with key set to each value,
/// summarizing the metric per value.
inline SweepReport sweep(const RunConfig& base, const std::string& key,
                         const std::vector<std::string>& values,
                         const std::vector<std::uint64_t>& seeds, const std::string& metric,
                         const std::string& out_dir = "", std::size_t max_workers = 0) {
  if (values.empty()) throw std::invalid_argument("sweep: need at least one value");
  if (seeds.empty()) throw std::invalid_argument("sweep: need at least one seed");
  std::vector<RunConfig> configs;
  configs.reserve(values.size());
  for (const auto& v : values) configs.push_back(apply_override(base, key, v));

  const std::size_t jobs = configs.size() * seeds.size();
  std::vector<std::optional<double>> results(jobs);
  detail::parallel_for(jobs, max_workers, [&](std::size_t i) {
    const std::size_t t = i / seeds.size();
    const std::size_t s = i % seeds.size();
    RunConfig cfg = configs[t];
    cfg.seed = seeds[s];
    RunMetrics metrics;
    if (out_dir.empty()) {
      metrics = run(cfg);
    } else {
      cfg.out_dir = out_dir + "/" + key + "_" + values[t] + "/seed_" + std::to_string(seeds[s]);
      metrics = run_and_write(cfg);
    }
    results[i] = extract_metric(metrics, metric);
  });

  SweepReport report;
  report.key = key;
  report.metric = metric;
  report.seeds = seeds;
  for (std::size_t t = 0; t < configs.size(); ++t) {
    SweepPoint point;
    point.value = values[t];
    point.stats.label = key + "=" + values[t];
    point.stats.n = seeds.size();
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& v = results[t * seeds.size() + s];
      point.stats.per_seed.push_back(v);
      if (!v) ++point.stats.censored;
    }
    const Quartiles q = quartiles(detail::censored_as_inf(point.stats.per_seed));
    point.stats.q1 = detail::finite_or_none(q.q1);
    point.stats.median = detail::finite_or_none(q.median);
    point.stats.q3 = detail::finite_or_none(q.q3);
    report.points.push_back(std::move(point));
  }
  if (!out_dir.empty()) write_text_file(out_dir + "/sweep.txt", render_sweep(report));
  return report;
}

}  // namespace cr
