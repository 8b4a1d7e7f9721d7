#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ordinal/metrics.hpp"
#include "ordinal/rng.hpp"

using namespace ordinal;

TEST_CASE("weighted_f1: perfect prediction scores 1") {
  const std::vector<int> y = {1, 2, 3, 2, 1};
  CHECK(weighted_f1(y, y, 3) == doctest::Approx(1.0));
}

TEST_CASE("weighted_f1: hand oracle on the crossed 2-class case") {
  // Class 1: tp=1 fp=1 fn=1 -> F1 = 0.5; class 2 symmetric; supports equal.
  const std::vector<int> truth = {1, 1, 2, 2};
  const std::vector<int> pred = {1, 2, 1, 2};
  CHECK(weighted_f1(pred, truth, 2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("weighted_f1: collapsed prediction on balanced 2-class truth") {
  // Class 1: F1 = 2/3; class 2: 0; equal support -> 1/3.
  const std::vector<int> truth = {1, 1, 2, 2};
  const std::vector<int> pred = {1, 1, 1, 1};
  CHECK(weighted_f1(pred, truth, 2) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("weighted_f1: 0/0 per-class cases contribute zero") {
  // Class 3 never appears in truth or pred: zero support, zero weight.
  const std::vector<int> truth = {1, 2};
  const std::vector<int> pred = {2, 1};
  CHECK(weighted_f1(pred, truth, 3) == doctest::Approx(0.0));
}

TEST_CASE("weighted_f1: class permutation on balanced data is neutral") {
  Rng rng(311);
  const int k = 4, n = 400;
  std::vector<int> truth(n), pred(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = 1 + i % k;  // balanced supports
    pred[i] = 1 + static_cast<int>(rng.uniform_below(k));
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 1);
  rng.shuffle(perm);
  std::vector<int> truth_p(n), pred_p(n);
  for (int i = 0; i < n; ++i) {
    truth_p[i] = perm[truth[i] - 1];
    pred_p[i] = perm[pred[i] - 1];
  }
  CHECK(weighted_f1(pred, truth, k) ==
        doctest::Approx(weighted_f1(pred_p, truth_p, k)).epsilon(1e-12));
}

TEST_CASE("mse and mae: hand oracles") {
  const std::vector<int> truth = {1, 3, 3};
  const std::vector<int> pred = {1, 2, 5};
  CHECK(mae(pred, truth) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mse(pred, truth) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  const std::vector<int> one_t = {1}, one_p = {5};
  CHECK(mae(one_p, one_t) == doctest::Approx(4.0));
  CHECK(mse(one_p, one_t) == doctest::Approx(16.0));
  CHECK(mae(truth, truth) == 0.0);
  CHECK(mse(truth, truth) == 0.0);
}

TEST_CASE("ob_k: hand oracle and definition collapses") {
  const std::vector<int> truth = {1, 3, 3};
  const std::vector<int> pred = {1, 2, 5};
  CHECK(ob_k(pred, truth, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // k = 0 is plain accuracy.
  CHECK(ob_k(pred, truth, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // k = K-1 covers every possible miss.
  CHECK(ob_k(pred, truth, 4) == 1.0);
}

TEST_CASE("ob_k: monotone non-decreasing in k on random data") {
  Rng rng(312);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + static_cast<int>(rng.uniform_below(5));
    const int n = 1 + static_cast<int>(rng.uniform_below(200));
    std::vector<int> truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = 1 + static_cast<int>(rng.uniform_below(k));
      pred[i] = 1 + static_cast<int>(rng.uniform_below(k));
    }
    double prev = -1.0;
    for (int kk = 0; kk < k; ++kk) {
      const double v = ob_k(pred, truth, kk);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(prev == 1.0);
  }
}

TEST_CASE("mae <= sqrt(mse) on random datasets") {
  Rng rng(313);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_below(7));
    const int n = 1 + static_cast<int>(rng.uniform_below(100));
    std::vector<int> truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
      truth[i] = 1 + static_cast<int>(rng.uniform_below(k));
      pred[i] = 1 + static_cast<int>(rng.uniform_below(k));
    }
    CHECK(mae(pred, truth) <= std::sqrt(mse(pred, truth)) + 1e-12);
  }
}

TEST_CASE("compute_metrics: fills every ob_k key") {
  const std::vector<int> truth = {1, 2, 3, 4, 5};
  const std::vector<int> pred = {1, 1, 1, 1, 1};
  const MetricReport rep = compute_metrics(pred, truth, 5);
  REQUIRE(rep.ob_k.size() == 5);
  CHECK(rep.ob_k.at(0) == doctest::Approx(0.2));
  CHECK(rep.ob_k.at(4) == 1.0);
  CHECK(rep.mae == doctest::Approx(2.0));
}

TEST_CASE("mean_std_over_seeds: hand oracle and permutation invariance") {
  MetricReport a, b;
  a.f1_weighted = 0.4;
  b.f1_weighted = 0.6;
  a.mse = b.mse = 1.0;
  a.mae = 0.5;
  b.mae = 0.7;
  a.ob_k[1] = 0.8;
  b.ob_k[1] = 1.0;
  const AggregatedReport fwd = mean_std_over_seeds({a, b});
  CHECK(fwd.n_reports == 2);
  CHECK(fwd.f1_weighted.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fwd.f1_weighted.std == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fwd.mse.std == 0.0);
  CHECK(fwd.ob_k.at(1).mean == doctest::Approx(0.9));
  const AggregatedReport rev = mean_std_over_seeds({b, a});
  CHECK(rev.f1_weighted.mean == fwd.f1_weighted.mean);
  CHECK(rev.f1_weighted.std == fwd.f1_weighted.std);

  const AggregatedReport single = mean_std_over_seeds({a});
  CHECK(single.f1_weighted.std == 0.0);
  CHECK(single.f1_weighted.mean == doctest::Approx(0.4));
}

TEST_CASE("format_mean_std: three-decimal table cell") {
  CHECK(format_mean_std({0.5, 0.1}) == "0.500 (0.100)");
  CHECK(format_mean_std({1.0, 0.0}) == "1.000 (0.000)");
  CHECK(format_mean_std({0.12345, 0.0005}) == "0.123 (0.001)");
}

TEST_CASE("metrics: error paths") {
  const std::vector<int> empty;
  const std::vector<int> one = {1};
  const std::vector<int> two = {1, 2};
  CHECK_THROWS_AS(weighted_f1(empty, empty, 2), std::domain_error);
  CHECK_THROWS_AS(mse(one, two), std::domain_error);
  CHECK_THROWS_AS(mae(empty, one), std::domain_error);
  CHECK_THROWS_AS(ob_k(one, two, 0), std::domain_error);
  CHECK_THROWS_AS(ob_k(one, one, -1), std::domain_error);
  const std::vector<int> bad = {3};
  CHECK_THROWS_AS(weighted_f1(bad, one, 2), std::domain_error);
  CHECK_THROWS_AS(mean_std_over_seeds({}), std::domain_error);
}
