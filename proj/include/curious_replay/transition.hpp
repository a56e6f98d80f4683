#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace cr {

/// One environment step. phase_tag is ground-truth bookkeeping for
/// diagnostics and must never feed prioritization or learning.
struct Transition {
  std::vector<double> observation;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool terminal = false;
  std::uint64_t env_step = 0;
  std::optional<int> phase_tag;

  bool operator==(const Transition&) const = default;
};

}  // namespace cr
