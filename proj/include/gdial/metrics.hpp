#pragma once

#include <cstddef>
#include <map>
#include <vector>

namespace gdial {

struct MetricsReport {
  double mrr = 0.0;
  std::map<int, double> recall_at;  // k in {1, 5, 10}
  double mean_rank = 0.0;
  std::size_t count = 0;
};

// gt_ranks are 1-based ranks of the ground-truth answer, one per evaluated
// round; n_candidates bounds the valid range.
MetricsReport compute_metrics(const std::vector<std::size_t>& gt_ranks,
                              std::size_t n_candidates);

// Weighted average by count; equal to computing on the concatenated lists.
MetricsReport merge_metrics(const MetricsReport& a, const MetricsReport& b);

}  // namespace gdial
