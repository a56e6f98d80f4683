#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/priority.hpp"
#include "curious_replay/replay_buffer.hpp"
#include "curious_replay/rng.hpp"
#include "curious_replay/snapshot.hpp"

namespace {

cr::Transition make_transition(double tag, std::uint64_t step = 0) {
  cr::Transition t;
  t.observation = {tag, 0.0};
  t.action = 1;
  t.reward = tag * 0.5;
  t.next_observation = {tag + 1.0, 0.0};
  t.terminal = false;
  t.env_step = step;
  return t;
}

bool approx_rel(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::max(std::abs(want), 1.0);
}

}  // namespace

TEST_CASE("priority formula frozen values") {
  cr::PriorityParams p;  // c=1e4, beta=0.7, alpha=0.7, epsilon=0.01

  // Fresh transition, zero signal: c + 0.01^0.7.
  CHECK(approx_rel(cr::compute_priority(p, 0, 0.0), 10000.039810717055, 1e-12));
  // Three visits, zero signal: 1e4 * 0.7^3 + 0.01^0.7.
  CHECK(approx_rel(cr::compute_priority(p, 3, 0.0), 3430.0398107170545, 1e-12));
  // Signal 0.99 makes the loss term exactly 1.
  CHECK(cr::compute_priority(p, 0, 0.99) == 10001.0);
  CHECK(cr::compute_priority(p, 1, 0.99) == 7001.0);
  // Sign of the signal is irrelevant.
  CHECK(cr::compute_priority(p, 1, -0.99) == 7001.0);

  p.strategy = cr::Strategy::kCount;
  CHECK(approx_rel(cr::compute_priority(p, 2, 123.0), 0.48999999999999994, 1e-12));
  CHECK(approx_rel(cr::compute_priority(p, 3, 0.0), 0.3429999999999999, 1e-12));

  p.strategy = cr::Strategy::kAdversarial;
  CHECK(approx_rel(cr::compute_priority(p, 5, -3.0), 2.162701327976159, 1e-12));
  p.alpha = 0.5;
  p.epsilon = 0.05;
  CHECK(approx_rel(cr::compute_priority(p, 0, 2.0), 1.4317821063276353, 1e-12));

  p = cr::PriorityParams{};
  p.strategy = cr::Strategy::kUniform;
  CHECK(cr::compute_priority(p, 0, 0.0) == 1.0);
  CHECK(cr::compute_priority(p, 17, 42.0) == 1.0);
}

TEST_CASE("priority clamps to p_max and rejects bad signals") {
  cr::PriorityParams p;
  p.strategy = cr::Strategy::kAdversarial;
  CHECK(cr::compute_priority(p, 0, 1e30) == p.p_max);
  p.strategy = cr::Strategy::kCuriousReplay;
  CHECK_THROWS_AS(cr::compute_priority(p, 0, std::numeric_limits<double>::quiet_NaN()),
                  std::invalid_argument);
  CHECK_THROWS_AS(cr::compute_priority(p, 0, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("strategy names round-trip") {
  for (const auto s : {cr::Strategy::kUniform, cr::Strategy::kTd, cr::Strategy::kCount,
                       cr::Strategy::kAdversarial, cr::Strategy::kCuriousReplay}) {
    CHECK(cr::strategy_from_name(cr::strategy_name(s)) == s);
  }
  CHECK(cr::strategy_name(cr::Strategy::kCuriousReplay) == std::string("curious_replay"));
  CHECK_THROWS_AS(cr::strategy_from_name("per"), std::invalid_argument);
}

TEST_CASE("buffer add assigns p_max and fresh records") {
  cr::PrioritizedBuffer buf(8, cr::PriorityParams{});
  const auto id = buf.add(make_transition(1.0));
  CHECK(id == 0);
  CHECK(buf.occupied() == 1);
  CHECK(buf.priority_of(id) == 1e5);
  CHECK(buf.record(id).visit_count == 0);
  CHECK(buf.record(id).last_signal == 0.0);
  CHECK(buf.observation_dim() == 2);
  CHECK(buf.get(id) == make_transition(1.0));
}

TEST_CASE("buffer update applies the pre-increment visit count") {
  cr::PrioritizedBuffer buf(8, cr::PriorityParams{});
  const auto id = buf.add(make_transition(1.0));

  std::vector<std::uint64_t> ids{id};
  std::vector<double> signals{0.99};
  buf.update_priorities(ids, signals);
  // First training visit: priority computed with visit_count 0, then bumped.
  CHECK(buf.priority_of(id) == 10001.0);
  CHECK(buf.record(id).visit_count == 1);
  CHECK(buf.record(id).last_signal == 0.99);

  buf.update_priorities(ids, signals);
  CHECK(buf.priority_of(id) == 7001.0);
  CHECK(buf.record(id).visit_count == 2);
}

TEST_CASE("fresh transitions dominate trained ones") {
  cr::PriorityParams params;
  const double fresh = cr::compute_priority(params, 0, 0.0);
  for (std::uint64_t v = 1; v <= 32; ++v) {
    for (const double s : {0.0, 0.5, 1.0, 10.0, 100.0, 1e3, 1e4}) {
      CHECK(cr::compute_priority(params, v, s) < fresh);
      CHECK(params.p_max > cr::compute_priority(params, v, s));
    }
  }
}

TEST_CASE("buffer evicts in ring order and keeps ticket ids stable") {
  cr::PrioritizedBuffer buf(3, cr::PriorityParams{});
  for (int k = 0; k < 5; ++k) buf.add(make_transition(static_cast<double>(k), k));
  CHECK(buf.occupied() == 3);
  CHECK(buf.inserted_total() == 5);
  CHECK_FALSE(buf.contains(0));
  CHECK_FALSE(buf.contains(1));
  CHECK(buf.contains(2));
  CHECK(buf.contains(4));
  CHECK(buf.get(3).observation[0] == 3.0);
  // Slot layout: id % capacity.
  CHECK(buf.slot_id(0) == 3);
  CHECK(buf.slot_id(1) == 4);
  CHECK(buf.slot_id(2) == 2);
  CHECK(buf.slot_transition(2).observation[0] == 2.0);
  CHECK_THROWS_AS(buf.slot_id(3), std::out_of_range);
}

TEST_CASE("stale priority updates are skipped and counted") {
  cr::PrioritizedBuffer buf(2, cr::PriorityParams{});
  const auto id0 = buf.add(make_transition(0.0));
  buf.add(make_transition(1.0));
  buf.add(make_transition(2.0));  // evicts id0
  CHECK_FALSE(buf.contains(id0));

  std::vector<std::uint64_t> ids{id0, 1};
  std::vector<double> signals{0.5, 0.99};
  buf.update_priorities(ids, signals);
  CHECK(buf.skipped_updates() == 1);
  CHECK(buf.priority_of(1) == 10001.0);
  CHECK_THROWS_AS(buf.priority_of(id0), std::invalid_argument);
  CHECK_THROWS_AS(buf.record(id0), std::invalid_argument);
  CHECK_THROWS_AS(buf.get(id0), std::invalid_argument);
}

TEST_CASE("buffer total priority tracks the tree") {
  cr::PrioritizedBuffer buf(4, cr::PriorityParams{});
  buf.add(make_transition(0.0));
  buf.add(make_transition(1.0));
  CHECK(buf.total_priority() == 2e5);
  std::vector<std::uint64_t> ids{0};
  std::vector<double> signals{0.99};
  buf.update_priorities(ids, signals);
  CHECK(buf.total_priority() == 1e5 + 10001.0);
  CHECK(buf.sampling_probability(0) == 10001.0 / (1e5 + 10001.0));
}

TEST_CASE("uniform strategy leaves leaves at p_max but still counts visits") {
  cr::PriorityParams params;
  params.strategy = cr::Strategy::kUniform;
  cr::PrioritizedBuffer buf(4, params);
  for (int k = 0; k < 4; ++k) buf.add(make_transition(static_cast<double>(k)));
  std::vector<std::uint64_t> ids{0, 2};
  std::vector<double> signals{3.0, 4.0};
  buf.update_priorities(ids, signals);
  for (std::uint64_t id = 0; id < 4; ++id) {
    CHECK(buf.priority_of(id) == 1e5);
    // With equal leaves the probability is exactly 1/n.
    CHECK(buf.sampling_probability(id) == 1.0 / 4.0);
  }
  CHECK(buf.record(0).visit_count == 1);
  CHECK(buf.record(0).last_signal == 3.0);
  CHECK(buf.record(1).visit_count == 0);
}

TEST_CASE("running-min subtraction rebases signals") {
  cr::PriorityParams params;
  params.use_running_min = true;
  cr::PrioritizedBuffer buf(4, params);
  buf.add(make_transition(0.0));

  std::vector<std::uint64_t> ids{0};
  // The minimum is updated before subtraction, so the first effective
  // signal is 0, the second is 0 (new minimum), the third is 4 - 3 = 1.
  std::vector<double> s1{5.0};
  buf.update_priorities(ids, s1);
  CHECK(buf.record(0).last_signal == 0.0);
  CHECK(buf.running_signal_min() == 5.0);
  std::vector<double> s2{3.0};
  buf.update_priorities(ids, s2);
  CHECK(buf.record(0).last_signal == 0.0);
  CHECK(buf.running_signal_min() == 3.0);
  std::vector<double> s3{4.0};
  buf.update_priorities(ids, s3);
  CHECK(buf.record(0).last_signal == 1.0);
  CHECK(buf.running_signal_min() == 3.0);
}

TEST_CASE("priorities never reach zero") {
  cr::PriorityParams params;
  params.strategy = cr::Strategy::kCount;
  params.beta = 0.0;  // beta^v == 0 for any v >= 1
  cr::PrioritizedBuffer buf(2, params);
  buf.add(make_transition(0.0));
  buf.add(make_transition(1.0));
  std::vector<std::uint64_t> ids{0};
  std::vector<double> signals{0.0};
  buf.update_priorities(ids, signals);
  buf.update_priorities(ids, signals);
  CHECK(buf.priority_of(0) == std::numeric_limits<double>::min());
  CHECK(buf.priority_of(0) > 0.0);
  // A floored leaf is still sampleable in principle but never crowds out
  // the untouched one.
  cr::Rng rng = cr::make_rng(7, 0);
  const auto batch = buf.sample_batch(64, rng);
  for (const auto& s : batch) CHECK(s.id == 1);
}

TEST_CASE("sample_batch returns live pointers proportional to priority") {
  cr::PrioritizedBuffer buf(8, cr::PriorityParams{});
  for (int k = 0; k < 8; ++k) buf.add(make_transition(static_cast<double>(k)));
  // Push seven ids down to tiny priorities; id 5 keeps p_max.
  std::vector<std::uint64_t> ids;
  for (std::uint64_t id = 0; id < 8; ++id)
    if (id != 5) ids.push_back(id);
  std::vector<double> signals(ids.size(), 0.0);
  for (int round = 0; round < 40; ++round) buf.update_priorities(ids, signals);

  cr::Rng rng = cr::make_rng(11, 0);
  const auto batch = buf.sample_batch(256, rng);
  REQUIRE(batch.size() == 256);
  int dominant = 0;
  for (const auto& s : batch) {
    REQUIRE(buf.contains(s.id));
    CHECK(s.transition == &buf.get(s.id));
    if (s.id == 5) ++dominant;
  }
  CHECK(dominant > 250);
}

TEST_CASE("buffer input validation") {
  CHECK_THROWS_AS(cr::PrioritizedBuffer(0, cr::PriorityParams{}), std::invalid_argument);
  {
    cr::PriorityParams p;
    p.beta = 1.5;
    CHECK_THROWS_AS(cr::PrioritizedBuffer(4, p), std::invalid_argument);
  }
  {
    cr::PriorityParams p;
    p.alpha = -0.1;
    CHECK_THROWS_AS(cr::PrioritizedBuffer(4, p), std::invalid_argument);
  }
  {
    cr::PriorityParams p;
    p.epsilon = 0.0;
    CHECK_THROWS_AS(cr::PrioritizedBuffer(4, p), std::invalid_argument);
  }
  {
    cr::PriorityParams p;
    p.c = 0.0;
    CHECK_THROWS_AS(cr::PrioritizedBuffer(4, p), std::invalid_argument);
  }
  {
    cr::PriorityParams p;
    p.p_max = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(cr::PrioritizedBuffer(4, p), std::invalid_argument);
  }

  cr::PrioritizedBuffer buf(4, cr::PriorityParams{});
  cr::Rng rng = cr::make_rng(1, 0);
  CHECK_THROWS_AS(buf.sample_batch(4, rng), cr::EmptyBufferError);
  buf.add(make_transition(0.0));
  CHECK_THROWS_AS(buf.sample_batch(0, rng), std::invalid_argument);

  cr::Transition bad = make_transition(1.0);
  bad.observation.push_back(9.0);
  CHECK_THROWS_AS(buf.add(bad), std::invalid_argument);
  bad = make_transition(1.0);
  bad.next_observation.clear();
  CHECK_THROWS_AS(buf.add(bad), std::invalid_argument);

  std::vector<std::uint64_t> ids{0};
  std::vector<double> nan_signal{std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(buf.update_priorities(ids, nan_signal), std::invalid_argument);
  std::vector<double> two_signals{0.0, 0.0};
  CHECK_THROWS_AS(buf.update_priorities(ids, two_signals), std::invalid_argument);
}

TEST_CASE("priority histogram bins span the configured decades") {
  using cr::PriorityHistogram;
  CHECK(PriorityHistogram::bin_for(1e-5) == 0);   // below range: underflow bucket
  CHECK(PriorityHistogram::bin_for(1e-4) == 1);
  CHECK(PriorityHistogram::bin_for(1.0) == 9);
  CHECK(PriorityHistogram::bin_for(10.0) == 11);
  CHECK(PriorityHistogram::bin_for(1e5) == 19);
  CHECK(PriorityHistogram::bin_for(1e7) == 21);   // above range: overflow bucket

  PriorityHistogram h;
  h.add(1.0);
  h.add(5.0);
  h.add(1e5);
  CHECK(h.counts[9] == 1);
  CHECK(h.counts[10] == 1);
  CHECK(h.counts[19] == 1);
}

TEST_CASE("diagnostics summarize per-phase sampling pressure") {
  cr::PrioritizedBuffer buf(8, cr::PriorityParams{});
  for (int k = 0; k < 4; ++k) {
    auto t = make_transition(static_cast<double>(k), k);
    t.phase_tag = 0;
    buf.add(t);
  }
  for (int k = 4; k < 6; ++k) {
    auto t = make_transition(static_cast<double>(k), k);
    t.phase_tag = 1;
    buf.add(t);
  }
  // Train the phase-0 slots down.
  std::vector<std::uint64_t> ids{0, 1, 2, 3};
  std::vector<double> signals(4, 0.0);
  buf.update_priorities(ids, signals);

  const auto d = buf.diagnostics();
  REQUIRE(d.per_phase.size() == 2);
  CHECK(d.per_phase[0].phase_tag == 0);
  CHECK(d.per_phase[0].slot_count == 4);
  CHECK(d.per_phase[1].phase_tag == 1);
  CHECK(d.per_phase[1].slot_count == 2);
  CHECK(d.per_phase[0].mean_visit_count == 1.0);
  CHECK(d.per_phase[1].mean_visit_count == 0.0);
  // Phase 1 keeps p_max, so its relative sampling probability exceeds 1
  // (uniform would be 1/6 per slot).
  CHECK(d.per_phase[1].median_relative_sampling_probability > 1.0);
  CHECK(d.per_phase[0].median_relative_sampling_probability < 1.0);
  std::uint64_t hist_total = 0;
  for (const auto c : d.histogram.counts) hist_total += c;
  CHECK(hist_total == 6);
}

TEST_CASE("snapshot round-trips buffer state byte for byte") {
  namespace fs = std::filesystem;
  fs::create_directories("test_artifacts");
  const std::string path = "test_artifacts/buffer.crbf";

  cr::PriorityParams params;
  cr::PrioritizedBuffer buf(4, params);
  for (int k = 0; k < 6; ++k) {
    auto t = make_transition(static_cast<double>(k), 100 + k);
    t.terminal = (k % 2 == 0);
    if (k >= 3) t.phase_tag = 1;
    buf.add(t);
  }
  std::vector<std::uint64_t> ids{3, 4};
  std::vector<double> signals{0.25, -0.5};
  buf.update_priorities(ids, signals);

  cr::write_snapshot(buf, path);
  const auto snap = cr::read_snapshot(path);
  CHECK(snap.version == 1);
  CHECK(snap.capacity == 4);
  CHECK(snap.obs_dim == 2);
  REQUIRE(snap.entries.size() == 4);
  for (const auto& e : snap.entries) {
    REQUIRE(buf.contains(e.id));
    CHECK(e.transition == buf.get(e.id));
    CHECK(e.record.priority == buf.priority_of(e.id));
    CHECK(e.record.visit_count == buf.record(e.id).visit_count);
    CHECK(e.record.last_signal == buf.record(e.id).last_signal);
  }

  // Writing the same buffer twice produces identical bytes.
  const std::string path2 = "test_artifacts/buffer2.crbf";
  cr::write_snapshot(buf, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK_FALSE(b1.empty());
  CHECK(b1.substr(0, 4) == "CRBF");
}

TEST_CASE("snapshot rejects corrupt files") {
  namespace fs = std::filesystem;
  fs::create_directories("test_artifacts");

  cr::PrioritizedBuffer buf(2, cr::PriorityParams{});
  buf.add(make_transition(0.0));
  const std::string path = "test_artifacts/corrupt.crbf";
  cr::write_snapshot(buf, path);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(cr::read_snapshot(path), cr::IoError);

  {
    std::string mangled = bytes;
    mangled[0] = 'X';
    std::ofstream out(path, std::ios::binary);
    out.write(mangled.data(), static_cast<std::streamsize>(mangled.size()));
  }
  CHECK_THROWS_AS(cr::read_snapshot(path), cr::IoError);

  {
    std::string padded = bytes + "zz";
    std::ofstream out(path, std::ios::binary);
    out.write(padded.data(), static_cast<std::streamsize>(padded.size()));
  }
  CHECK_THROWS_AS(cr::read_snapshot(path), cr::IoError);

  CHECK_THROWS_AS(cr::read_snapshot("test_artifacts/missing.crbf"), cr::IoError);
}
