#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cr {

enum class Strategy { kUniform, kTd, kCount, kAdversarial, kCuriousReplay };

inline const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kUniform: return "uniform";
    case Strategy::kTd: return "td";
    case Strategy::kCount: return "count";
    case Strategy::kAdversarial: return "adversarial";
    case Strategy::kCuriousReplay: return "curious_replay";
  }
  throw std::logic_error("strategy_name: unknown strategy");
}

inline Strategy strategy_from_name(const std::string& name) {
  if (name == "uniform") return Strategy::kUniform;
  if (name == "td") return Strategy::kTd;
  if (name == "count") return Strategy::kCount;
  if (name == "adversarial") return Strategy::kAdversarial;
  if (name == "curious_replay") return Strategy::kCuriousReplay;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

struct PriorityParams {
  Strategy strategy = Strategy::kCuriousReplay;
  double c = 1e4;
  double beta = 0.7;
  double alpha = 0.7;
  double epsilon = 0.01;
  double p_max = 1e5;
  bool use_running_min = false;
  double gamma = 0.99;

  bool operator==(const PriorityParams&) const = default;
};

/// Replay priority of a stored transition from its training visit count and
/// its latest loss or TD-error signal:
///
///   curious_replay  c * beta^v + (|signal| + epsilon)^alpha
///   count           beta^v
///   td/adversarial  (|signal| + epsilon)^alpha
///   uniform         1
///
/// Capped at p_max, the priority that insertion assigns, so no amount of
/// signal outranks an untrained transition.
inline double compute_priority(const PriorityParams& p, std::uint64_t visit_count, double signal) {
  if (!std::isfinite(signal))
    throw std::invalid_argument("compute_priority: signal must be finite");
  const auto v = static_cast<double>(visit_count);
  double priority = 0.0;
  switch (p.strategy) {
    case Strategy::kUniform:
      return 1.0;
    case Strategy::kCount:
      priority = std::pow(p.beta, v);
      break;
    case Strategy::kTd:
    case Strategy::kAdversarial:
      priority = std::pow(std::abs(signal) + p.epsilon, p.alpha);
      break;
    case Strategy::kCuriousReplay:
      priority = p.c * std::pow(p.beta, v) + std::pow(std::abs(signal) + p.epsilon, p.alpha);
      break;
  }
  return std::min(priority, p.p_max);
}

}  // namespace cr
