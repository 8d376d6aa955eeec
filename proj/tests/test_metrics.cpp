#include <cmath>

#include "doctest.h"
#include "gdial/metrics.hpp"
#include "gdial/rng.hpp"

using namespace gdial;

TEST_CASE("metric hand values") {
  {
    MetricsReport r = compute_metrics({1, 1, 1}, 100);
    CHECK(r.mrr == 1.0);
    CHECK(r.recall_at.at(1) == 1.0);
    CHECK(r.mean_rank == 1.0);
  }
  {
    MetricsReport r = compute_metrics({2, 4}, 100);
    CHECK(r.mrr == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(r.recall_at.at(1) == 0.0);
    CHECK(r.recall_at.at(5) == 1.0);
    CHECK(r.mean_rank == doctest::Approx(3.0).epsilon(1e-15));
  }
  {
    MetricsReport r = compute_metrics({1, 10, 100}, 100);
    CHECK(r.mrr == doctest::Approx(0.37).epsilon(1e-15));
    CHECK(r.recall_at.at(10) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.mean_rank == doctest::Approx(37.0).epsilon(1e-15));
  }
}

TEST_CASE("metric contract errors") {
  CHECK_THROWS_AS(compute_metrics({}, 100), ContractError);
  CHECK_THROWS_AS(compute_metrics({0}, 100), ContractError);
  CHECK_THROWS_AS(compute_metrics({101}, 100), ContractError);
}

TEST_CASE("metric invariants: permutation, ordering, bounds") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    std::vector<std::size_t> ranks(n);
    for (auto& v : ranks) v = 1 + rng.index(100);
    MetricsReport a = compute_metrics(ranks, 100);
    std::vector<std::size_t> shuffled = ranks;
    rng.shuffle(shuffled);
    MetricsReport b = compute_metrics(shuffled, 100);
    CHECK(a.mrr == b.mrr);
    CHECK(a.mean_rank == b.mean_rank);
    CHECK(a.recall_at.at(5) == b.recall_at.at(5));

    CHECK(a.recall_at.at(1) <= a.recall_at.at(5));
    CHECK(a.recall_at.at(5) <= a.recall_at.at(10));
    CHECK(a.mrr >= 1.0 / 100.0);
    CHECK(a.mrr <= 1.0);
    CHECK(a.mean_rank >= 1.0);
    CHECK(a.mean_rank <= 100.0);
  }
}

TEST_CASE("merging weighted reports equals computing on the concatenation") {
  Rng rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::size_t> left(1 + rng.index(50));
    std::vector<std::size_t> right(1 + rng.index(50));
    for (auto& v : left) v = 1 + rng.index(100);
    for (auto& v : right) v = 1 + rng.index(100);
    std::vector<std::size_t> all = left;
    all.insert(all.end(), right.begin(), right.end());

    MetricsReport merged = merge_metrics(compute_metrics(left, 100), compute_metrics(right, 100));
    MetricsReport whole = compute_metrics(all, 100);
    CHECK(std::fabs(merged.mrr - whole.mrr) <= 1e-12);
    CHECK(std::fabs(merged.mean_rank - whole.mean_rank) <= 1e-12);
    CHECK(std::fabs(merged.recall_at.at(1) - whole.recall_at.at(1)) <= 1e-12);
    CHECK(std::fabs(merged.recall_at.at(5) - whole.recall_at.at(5)) <= 1e-12);
    CHECK(std::fabs(merged.recall_at.at(10) - whole.recall_at.at(10)) <= 1e-12);
    CHECK(merged.count == whole.count);
  }
}
