#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/metrics.hpp"

namespace {

cr::RunMetrics sample_metrics() {
  cr::RunMetrics m;
  m.header = cr::MetricsHeader{1,  "novel_object", "curious_replay", 3, 600, 100,
                               200, 0,             18,               2000, 2};
  m.interaction_steps = {205, 271, 350, 488};
  for (std::uint64_t step = 100; step <= 600; step += 100) {
    cr::IntervalRecord rec;
    rec.step = step;
    rec.interactions = step >= 500 ? 4 : step >= 400 ? 3 : step >= 300 ? 2 : 0;
    rec.occupied = step;
    rec.mean_return = 0.0;
    rec.extrinsic_reward_sum = 0.0;
    rec.intrinsic_reward_sum = 0.25 * static_cast<double>(step);
    rec.mean_model_loss = 1.0 / static_cast<double>(step);
    rec.holdout_loss = {0.5, 0.75};
    rec.relative_sampling_probability = {1.0, -1.0};
    rec.mean_visit_count = {2.5, -1.0};
    rec.priority_histogram.assign(22, 0);
    rec.priority_histogram[19] = step;
    m.intervals.push_back(std::move(rec));
  }
  m.summary = cr::RunSummary{600, 4, 0.0, 12.5, 1, 37, {0.01, 0.5}};
  m.interval_seconds = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  return m;
}

}  // namespace

TEST_CASE("metrics round-trip through text") {
  const cr::RunMetrics m = sample_metrics();
  const std::string text = cr::serialize_metrics(m);
  const cr::RunMetrics parsed = cr::parse_metrics_text(text);
  CHECK(parsed == m);
  // Stability: reserializing the parse reproduces the bytes.
  CHECK(cr::serialize_metrics(parsed) == text);
}

TEST_CASE("metrics interleave interactions chronologically") {
  const std::string text = cr::serialize_metrics(sample_metrics());
  const auto pos = [&](const std::string& needle) {
    const auto p = text.find(needle);
    REQUIRE(p != std::string::npos);
    return p;
  };
  CHECK(pos("record=header") < pos("record=interval step=100"));
  CHECK(pos("record=interval step=200") < pos("record=interaction step=205"));
  CHECK(pos("record=interaction step=205") < pos("record=interaction step=271"));
  CHECK(pos("record=interaction step=271") < pos("record=interval step=300"));
  CHECK(pos("record=interval step=300") < pos("record=interaction step=350"));
  CHECK(pos("record=interaction step=488") < pos("record=interval step=500"));
  CHECK(pos("record=interval step=600") < pos("record=summary"));
  // Interaction counts are cumulative.
  CHECK(text.find("record=interaction step=205 count=1") != std::string::npos);
  CHECK(text.find("record=interaction step=488 count=4") != std::string::npos);
}

TEST_CASE("metrics empty vectors serialize as a dash") {
  cr::RunMetrics m = sample_metrics();
  m.intervals.resize(1);
  m.intervals[0].holdout_loss.clear();
  m.intervals[0].priority_histogram.clear();
  m.interaction_steps.clear();
  m.summary.final_holdout_loss.clear();
  const std::string text = cr::serialize_metrics(m);
  CHECK(text.find("holdout=- ") != std::string::npos);
  CHECK(text.find("hist=-\n") != std::string::npos);
  CHECK(text.find("final_holdout=-") != std::string::npos);
  const cr::RunMetrics parsed = cr::parse_metrics_text(text);
  CHECK(parsed.intervals[0].holdout_loss.empty());
  CHECK(parsed == m);
}

TEST_CASE("metrics parser tolerates rewritten counts and blank lines") {
  const std::string text =
      "record=header version=1 env=constrained strategy=uniform seed=1 total_steps=10 "
      "interval=5 t0=3 t1=0 obs_dim=25 capacity=64 phases=2\n"
      "\n"
      "record=interaction step=4 count=99\n"
      "record=summary final_step=10 interactions=1 total_reward=2 total_intrinsic=0 "
      "skipped_updates=0 value_states=5 final_holdout=0.25,0.5\n";
  const cr::RunMetrics m = cr::parse_metrics_text(text);
  CHECK(m.header.env_name == "constrained");
  CHECK(m.interaction_steps == std::vector<std::uint64_t>{4});
  CHECK(m.summary.final_holdout_loss == std::vector<double>{0.25, 0.5});
  // Serialization regenerates the cumulative count.
  CHECK(cr::serialize_metrics(m).find("count=1") != std::string::npos);
}

TEST_CASE("metrics parser rejects malformed input") {
  const std::string good = cr::serialize_metrics(sample_metrics());

  CHECK_THROWS_AS(cr::parse_metrics_text(""), cr::IoError);
  CHECK_THROWS_AS(cr::parse_metrics_text("record=summary final_step=1"), cr::IoError);

  // Missing summary.
  const auto summary_at = good.find("record=summary");
  CHECK_THROWS_AS(cr::parse_metrics_text(good.substr(0, summary_at)), cr::IoError);
  // Duplicate header and summary.
  const auto header_line = good.substr(0, good.find('\n') + 1);
  CHECK_THROWS_AS(cr::parse_metrics_text(header_line + good), cr::IoError);
  CHECK_THROWS_AS(cr::parse_metrics_text(good + good.substr(summary_at)), cr::IoError);

  CHECK_THROWS_AS(cr::parse_metrics_text(good + "record=checkpoint step=1\n"), cr::IoError);
  CHECK_THROWS_AS(cr::parse_metrics_text(good + "orphan token\n"), cr::IoError);

  std::string bad_version = good;
  bad_version.replace(bad_version.find("version=1"), 9, "version=2");
  CHECK_THROWS_AS(cr::parse_metrics_text(bad_version), cr::IoError);

  std::string bad_number = good;
  const auto holdout_at = bad_number.find("holdout=0.5");
  bad_number.replace(holdout_at, 11, "holdout=xyz");
  CHECK_THROWS_AS(cr::parse_metrics_text(bad_number), cr::IoError);
}

TEST_CASE("metrics files round-trip and timing stays separate") {
  namespace fs = std::filesystem;
  fs::create_directories("test_artifacts");
  const cr::RunMetrics m = sample_metrics();
  cr::save_metrics_file(m, "test_artifacts/metrics.txt");
  CHECK(cr::load_metrics_file("test_artifacts/metrics.txt") == m);
  // The metrics text itself carries nothing derived from wall-clock time.
  CHECK(cr::serialize_metrics(m).find("seconds") == std::string::npos);

  cr::save_timing_file(m, "test_artifacts/timing.txt");
  const std::string timing = cr::read_text_file("test_artifacts/timing.txt");
  CHECK(timing.find("interval=0 seconds=") != std::string::npos);
  CHECK(timing.find("total_seconds=") != std::string::npos);
}

TEST_CASE("steps to the kth interaction count from the first change") {
  const cr::RunMetrics m = sample_metrics();  // t0 = 200
  CHECK(cr::steps_to_kth_interaction(m, 1) == 5);
  CHECK(cr::steps_to_kth_interaction(m, 2) == 71);
  CHECK(cr::steps_to_kth_interaction(m, 4) == 288);
  CHECK_FALSE(cr::steps_to_kth_interaction(m, 5).has_value());
  CHECK_THROWS_AS(cr::steps_to_kth_interaction(m, 0), std::invalid_argument);
}
