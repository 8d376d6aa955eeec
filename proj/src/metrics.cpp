#include "gdial/metrics.hpp"

#include <string>

#include "gdial/errors.hpp"

namespace gdial {

MetricsReport compute_metrics(const std::vector<std::size_t>& gt_ranks,
                              std::size_t n_candidates) {
  if (gt_ranks.empty()) throw ContractError("compute_metrics: empty rank list");
  MetricsReport r;
  r.count = gt_ranks.size();
  r.recall_at = {{1, 0.0}, {5, 0.0}, {10, 0.0}};
  double inv_sum = 0.0;
  double rank_sum = 0.0;
  for (std::size_t rank : gt_ranks) {
    if (rank < 1 || rank > n_candidates) {
      throw ContractError("compute_metrics: rank " + std::to_string(rank) +
                          " outside [1, " + std::to_string(n_candidates) + "]");
    }
    inv_sum += 1.0 / static_cast<double>(rank);
    rank_sum += static_cast<double>(rank);
    for (auto& [k, hits] : r.recall_at) {
      if (rank <= static_cast<std::size_t>(k)) hits += 1.0;
    }
  }
  const double n = static_cast<double>(r.count);
  r.mrr = inv_sum / n;
  r.mean_rank = rank_sum / n;
  for (auto& [k, hits] : r.recall_at) hits /= n;
  return r;
}

MetricsReport merge_metrics(const MetricsReport& a, const MetricsReport& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  MetricsReport r;
  r.count = a.count + b.count;
  const double wa = static_cast<double>(a.count) / static_cast<double>(r.count);
  const double wb = static_cast<double>(b.count) / static_cast<double>(r.count);
  r.mrr = wa * a.mrr + wb * b.mrr;
  r.mean_rank = wa * a.mean_rank + wb * b.mean_rank;
  for (const auto& [k, va] : a.recall_at) {
    r.recall_at[k] = wa * va + wb * b.recall_at.at(k);
  }
  return r;
}

}  // namespace gdial
