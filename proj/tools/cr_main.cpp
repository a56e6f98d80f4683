// Command-line front end: run single experiments, compare prioritization
// strategies across seeds, sweep a config key, benchmark the sum tree, and
// render reports from finished runs.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 I/O error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curious_replay.hpp"

namespace {

// "1,2,5" and "1-10" (inclusive) both work, in any combination.
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& token : cr::split(text, ',')) {
    const std::string part = cr::trim(token);
    if (part.empty()) throw cr::ConfigError("--seeds", "empty entry in seed list");
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      std::uint64_t lo = 0, hi = 0;
      if (!cr::detail::parse_u64(part.substr(0, dash), lo) ||
          !cr::detail::parse_u64(part.substr(dash + 1), hi) || hi < lo)
        throw cr::ConfigError("--seeds", "bad seed range '" + part + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::uint64_t s = 0;
      if (!cr::detail::parse_u64(part, s))
        throw cr::ConfigError("--seeds", "bad seed '" + part + "'");
      seeds.push_back(s);
    }
  }
  return seeds;
}

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> total_steps;
  std::string strategy;
  std::string out;
};

void add_common_overrides(CLI::App* cmd, CommonOverrides& o) {
  cmd->add_option("--seed", o.seed, "Override run.seed");
  cmd->add_option("--total-steps", o.total_steps, "Override run.total_steps");
  cmd->add_option("--strategy", o.strategy,
                  "Override priority.strategy (uniform|td|count|adversarial|curious_replay)");
  cmd->add_option("--out", o.out, "Override the output directory");
}

cr::RunConfig apply_common(cr::RunConfig cfg, const CommonOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.total_steps) cfg.total_steps = *o.total_steps;
  if (!o.strategy.empty()) {
    try {
      cfg.priority.strategy = cr::strategy_from_name(o.strategy);
    } catch (const std::invalid_argument& e) {
      throw cr::ConfigError("--strategy", e.what());
    }
  }
  if (!o.out.empty()) cfg.out_dir = o.out;
  return cfg;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"curious replay experiment harness"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Execute one run and write metrics");
  std::string run_config_path;
  CommonOverrides run_overrides;
  run_cmd->add_option("--config", run_config_path, "Run config file")->required();
  add_common_overrides(run_cmd, run_overrides);

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Run strategies across seeds and rank-sum them");
  std::vector<std::string> cmp_config_paths;
  std::string cmp_strategies, cmp_seeds, cmp_metric = "interaction:5", cmp_out;
  std::optional<std::uint64_t> cmp_total_steps;
  cmp_cmd->add_option("--config", cmp_config_paths, "Base config file (repeat for several bases)")
      ->required();
  cmp_cmd->add_option("--strategies", cmp_strategies,
                      "Comma list of strategies applied to each base config");
  cmp_cmd->add_option("--seeds", cmp_seeds, "Seeds, e.g. 1,2,3 or 1-10")->required();
  cmp_cmd->add_option("--metric", cmp_metric, "Comparison metric (default interaction:5)");
  cmp_cmd->add_option("--out", cmp_out, "Directory for per-run metrics and comparison.txt");
  cmp_cmd->add_option("--total-steps", cmp_total_steps, "Override run.total_steps");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Vary one config key over values");
  std::string sweep_config_path, sweep_key, sweep_values, sweep_seeds;
  std::string sweep_metric = "interaction:5", sweep_out;
  sweep_cmd->add_option("--config", sweep_config_path, "Base config file")->required();
  sweep_cmd->add_option("--key", sweep_key, "Config key to vary")->required();
  sweep_cmd->add_option("--values", sweep_values, "Comma list of values")->required();
  sweep_cmd->add_option("--seeds", sweep_seeds, "Seeds, e.g. 1,2,3 or 1-10")->required();
  sweep_cmd->add_option("--metric", sweep_metric, "Metric (default interaction:5)");
  sweep_cmd->add_option("--out", sweep_out, "Directory for per-run metrics and sweep.txt");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Time sum-tree set/sample throughput");
  std::string bench_capacities = "10,20";
  std::uint64_t bench_ops = 200000, bench_seed = 1;
  bool bench_no_prefill = false;
  bench_cmd->add_option("--capacities", bench_capacities, "Capacity exponents, e.g. 10,20");
  bench_cmd->add_option("--ops", bench_ops, "Operations per capacity");
  bench_cmd->add_option("--seed", bench_seed, "Bench seed");
  bench_cmd->add_flag("--no-prefill", bench_no_prefill,
                      "Keep the tree empty; sampling would throw, so time set only");

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarize a directory of finished runs");
  std::string report_runs, report_out, report_metric = "interaction:5";
  report_cmd->add_option("--runs", report_runs, "Directory holding metrics.txt files")->required();
  report_cmd->add_option("--out", report_out, "Output directory for tables and plots")->required();
  report_cmd->add_option("--metric", report_metric, "Table metric (default interaction:5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (run_cmd->parsed()) {
    const cr::RunConfig cfg = apply_common(cr::load_config_file(run_config_path), run_overrides);
    const cr::RunMetrics m = cr::run_and_write(cfg);
    std::cout << "run complete: steps=" << m.summary.final_step
              << " interactions=" << m.summary.interactions << " out=" << cfg.out_dir << "\n";
    return 0;
  }
  if (cmp_cmd->parsed()) {
    std::vector<cr::RunConfig> templates;
    std::vector<std::string> labels;
    for (const auto& path : cmp_config_paths) {
      cr::RunConfig base = cr::load_config_file(path);
      if (cmp_total_steps) base.total_steps = *cmp_total_steps;
      if (cmp_strategies.empty()) {
        templates.push_back(base);
        labels.emplace_back(cr::strategy_name(base.priority.strategy));
      } else {
        for (const auto& name : cr::split(cmp_strategies, ',')) {
          cr::RunConfig cfg = base;
          try {
            cfg.priority.strategy = cr::strategy_from_name(cr::trim(name));
          } catch (const std::invalid_argument& e) {
            throw cr::ConfigError("--strategies", e.what());
          }
          templates.push_back(cfg);
          labels.emplace_back(cr::strategy_name(cfg.priority.strategy));
        }
      }
    }
    const auto report =
        cr::compare(templates, parse_seed_list(cmp_seeds), cmp_metric, cmp_out, 0, labels);
    std::cout << cr::render_comparison(report);
    return 0;
  }
  if (sweep_cmd->parsed()) {
    const cr::RunConfig base = cr::load_config_file(sweep_config_path);
    std::vector<std::string> values;
    for (const auto& v : cr::split(sweep_values, ',')) values.push_back(cr::trim(v));
    const auto report = cr::sweep(base, sweep_key, values, parse_seed_list(sweep_seeds),
                                  sweep_metric, sweep_out);
    std::cout << cr::render_sweep(report);
    return 0;
  }
  if (bench_cmd->parsed()) {
    std::vector<int> exponents;
    for (const auto& token : cr::split(bench_capacities, ',')) {
      int e = 0;
      if (!cr::detail::parse_i32(cr::trim(token), e))
        throw cr::ConfigError("--capacities", "bad exponent '" + token + "'");
      exponents.push_back(e);
    }
    const auto report = cr::bench_sumtree(exponents, bench_ops, bench_seed, !bench_no_prefill);
    std::cout << cr::render_bench(report);
    return 0;
  }
  if (report_cmd->parsed()) {
    cr::write_report(report_runs, report_out, report_metric);
    std::cout << "report written to " << report_out << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const cr::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const cr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
