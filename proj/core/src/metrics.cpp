#include "copypaste/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "copypaste/error.hpp"

namespace copypaste {

void CopyScoreConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kInvalidArgument, "copy score config: " + what);
  };
  for (double v : {alpha, beta, gamma, epsilon_cap, threshold}) {
    if (!std::isfinite(v)) fail("all parameters must be finite");
  }
  if (alpha < 0.0) fail("alpha must be >= 0");
  if (beta <= 0.0 || beta > 1.0) fail("beta must lie in (0, 1]");
  if (gamma <= 0.0) fail("gamma must be > 0");
  if (epsilon_cap < 0.0) fail("epsilon_cap must be >= 0");
  if (threshold > alpha + epsilon_cap) {
    fail("threshold exceeds alpha + epsilon_cap, the refinement loop could never meet it");
  }
}

CopyMetrics copy_metrics(const FragmentSet& frags) {
  CopyMetrics m;
  m.answer_len = frags.answer_len;
  if (frags.answer_len == 0) {
    m.degenerate = true;
    return m;
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& f : frags.fragments) {
    const auto len = static_cast<double>(f.length);
    sum += len;
    sum_sq += len * len;
  }
  const auto n = static_cast<double>(frags.answer_len);
  m.coverage = sum / n;
  m.density = sum_sq / n;
  return m;
}

double copy_score(const CopyMetrics& m, const CopyScoreConfig& cfg) {
  const double density_term = std::pow(m.density, cfg.beta) / cfg.gamma;
  return cfg.alpha * m.coverage + std::min(density_term, cfg.epsilon_cap);
}

double logits_power(std::span<const double> values, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::kEmptyBucket, "logits power over an empty position bucket");
  double sum_sq = 0.0;
  for (double v : values) sum_sq += v * v;
  return sum_sq * std::sqrt(static_cast<double>(n));
}

}  // namespace copypaste
