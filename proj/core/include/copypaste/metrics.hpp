#pragma once

#include <cstddef>
#include <span>

#include "copypaste/fragments.hpp"

namespace copypaste {

/// Copy coverage (fraction of answer tokens inside a fragment) and copy
/// density (sum of squared fragment lengths over answer length).
struct CopyMetrics {
  double coverage = 0.0;
  double density = 0.0;
  std::size_t answer_len = 0;
  bool degenerate = false;  // empty answer: both scores reported as zero
};

struct CopyScoreConfig {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 10.0;
  double epsilon_cap = 0.5;
  double threshold = 0.8;

  /// Throws Error(kInvalidArgument) naming the first violated constraint.
  void validate() const;
};

CopyMetrics copy_metrics(const FragmentSet& frags);

/// Composite score alpha*coverage + min(density^beta / gamma, epsilon_cap).
double copy_score(const CopyMetrics& m, const CopyScoreConfig& cfg);

/// (sum of squared values) * sqrt(n). Throws Error(kEmptyBucket) when n == 0.
double logits_power(std::span<const double> values, std::size_t n);

}  // namespace copypaste
