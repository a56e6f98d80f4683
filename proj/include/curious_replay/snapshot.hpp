#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/replay_buffer.hpp"
#include "curious_replay/transition.hpp"

namespace cr {

/// Buffer snapshot file (CRBF). Little-endian binary:
///
///   magic "CRBF" | version u32 | capacity u64 | obs_dim u32 | occupied u64
///   then one entry per occupied slot in slot order:
///   id u64 | env_step u64 | action i32 | terminal u8 | has_phase u8 |
///   phase_tag i32 | reward f64 | observation f64*obs_dim |
///   next_observation f64*obs_dim | priority f64 | visit_count u64 |
///   last_signal f64
struct SnapshotEntry {
  std::uint64_t id = 0;
  Transition transition;
  PriorityRecord record;

  bool operator==(const SnapshotEntry&) const = default;
};

struct BufferSnapshot {
  std::uint32_t version = 1;
  std::uint64_t capacity = 0;
  std::uint32_t obs_dim = 0;
  std::vector<SnapshotEntry> entries;
};

namespace detail {

constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr char kSnapshotMagic[4] = {'C', 'R', 'B', 'F'};

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i32(std::string& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }

inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class SnapshotReader {
public:
  SnapshotReader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic() {
    const char* p = take(4);
    if (std::memcmp(p, kSnapshotMagic, 4) != 0)
      throw IoError("snapshot '" + path_ + "': bad magic, not a CRBF file");
  }

  void expect_end() const {
    if (pos_ != data_.size()) throw IoError("snapshot '" + path_ + "': trailing bytes");
  }

private:
  const char* take(std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError("snapshot '" + path_ + "': truncated");
    const char* p = data_.data() + pos_;
    pos_ += n;
    return p;
  }

  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void write_snapshot(const PrioritizedBuffer& buffer, const std::string& path) {
  std::string out;
  out.append(detail::kSnapshotMagic, 4);
  detail::put_u32(out, detail::kSnapshotVersion);
  detail::put_u64(out, buffer.capacity());
  detail::put_u32(out, static_cast<std::uint32_t>(buffer.observation_dim()));
  detail::put_u64(out, buffer.occupied());
  for (std::size_t slot = 0; slot < buffer.occupied(); ++slot) {
    const Transition& t = buffer.slot_transition(slot);
    const PriorityRecord& r = buffer.slot_record(slot);
    detail::put_u64(out, buffer.slot_id(slot));
    detail::put_u64(out, t.env_step);
    detail::put_i32(out, t.action);
    out.push_back(t.terminal ? 1 : 0);
    out.push_back(t.phase_tag ? 1 : 0);
    detail::put_i32(out, t.phase_tag.value_or(0));
    detail::put_f64(out, t.reward);
    for (double x : t.observation) detail::put_f64(out, x);
    for (double x : t.next_observation) detail::put_f64(out, x);
    detail::put_f64(out, r.priority);
    detail::put_u64(out, r.visit_count);
    detail::put_f64(out, r.last_signal);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("snapshot: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("snapshot: write to '" + path + "' failed");
}

inline BufferSnapshot read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("snapshot: cannot open '" + path + "' for reading");
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  detail::SnapshotReader r(data, path);
  r.expect_magic();
  BufferSnapshot snap;
  snap.version = r.u32();
  if (snap.version != detail::kSnapshotVersion)
    throw IoError("snapshot '" + path + "': unsupported version " + std::to_string(snap.version));
  snap.capacity = r.u64();
  snap.obs_dim = r.u32();
  const std::uint64_t occupied = r.u64();
  if (occupied > snap.capacity) throw IoError("snapshot '" + path + "': occupied exceeds capacity");
  snap.entries.reserve(static_cast<std::size_t>(occupied));
  for (std::uint64_t i = 0; i < occupied; ++i) {
    SnapshotEntry e;
    e.id = r.u64();
    e.transition.env_step = r.u64();
    e.transition.action = r.i32();
    e.transition.terminal = r.u8() != 0;
    const bool has_phase = r.u8() != 0;
    const std::int32_t phase = r.i32();
    if (has_phase) e.transition.phase_tag = phase;
    e.transition.reward = r.f64();
    e.transition.observation.resize(snap.obs_dim);
    for (auto& x : e.transition.observation) x = r.f64();
    e.transition.next_observation.resize(snap.obs_dim);
    for (auto& x : e.transition.next_observation) x = r.f64();
    e.record.priority = r.f64();
    e.record.visit_count = r.u64();
    e.record.last_signal = r.f64();
    snap.entries.push_back(std::move(e));
  }
  r.expect_end();
  return snap;
}

}  // namespace cr
