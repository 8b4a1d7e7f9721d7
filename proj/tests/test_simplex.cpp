#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "ordinal/rng.hpp"
#include "ordinal/simplex.hpp"

using namespace ordinal;

TEST_CASE("softmax: uniform on equal logits") {
  const ProbVector p = softmax(std::vector<double>{0.0, 0.0, 0.0});
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3));
}

TEST_CASE("softmax: hand-computed odds 1:2:3") {
  const ProbVector p =
      softmax(std::vector<double>{0.0, std::log(2.0), std::log(3.0)});
  CHECK(std::abs(p[0] - 0.16666666666666666) < 1e-12);
  CHECK(std::abs(p[1] - 0.3333333333333333) < 1e-12);
  CHECK(std::abs(p[2] - 0.5) < 1e-12);
}

TEST_CASE("softmax: shift invariance of argmax and probabilities") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_below(8));
    std::vector<double> z(k), shifted(k);
    for (int i = 0; i < k; ++i) {
      z[i] = 4.0 * rng.normal();
      shifted[i] = z[i] + 5.0;
    }
    const ProbVector a = softmax(z);
    const ProbVector b = softmax(shifted);
    CHECK(argmax_class(a) == argmax_class(b));
    for (int i = 0; i < k; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("softmax: output satisfies simplex invariants on random input") {
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_below(8));
    std::vector<double> z(k);
    for (int i = 0; i < k; ++i) z[i] = 60.0 * rng.normal();
    const ProbVector p = softmax(z);  // constructor enforces the invariants
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += p[i];
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("softmax: rejects non-finite and empty input") {
  CHECK_THROWS_AS(softmax(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(
      softmax(std::vector<double>{0.0, std::nan(""), 1.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      softmax(std::vector<double>{0.0, std::numeric_limits<double>::infinity()}),
      std::invalid_argument);
}

TEST_CASE("one_hot: unit mass placement and range checks") {
  const LabelSpace space(3);
  CHECK(one_hot(1, space).values() == std::vector<double>{1, 0, 0});
  CHECK(one_hot(3, space).values() == std::vector<double>{0, 0, 1});
  CHECK_THROWS_AS(one_hot(4, space), std::invalid_argument);
  CHECK_THROWS_AS(one_hot(0, space), std::invalid_argument);
}

TEST_CASE("cdf: running sums with step-function one-hot form") {
  const std::vector<double> c = cdf(ProbVector({0.2, 0.5, 0.3}));
  CHECK(std::abs(c[0] - 0.2) < 1e-12);
  CHECK(std::abs(c[1] - 0.7) < 1e-12);
  CHECK(std::abs(c[2] - 1.0) < 1e-12);

  CHECK(cdf(one_hot(1, 3)) == std::vector<double>{1, 1, 1});
  CHECK(cdf(one_hot(3, 3)) == std::vector<double>{0, 0, 1});
  for (int k = 2; k <= 7; ++k) {
    for (int y = 1; y <= k; ++y) {
      const std::vector<double> step = cdf(one_hot(y, k));
      for (int j = 0; j < k; ++j)
        CHECK(step[j] == (j >= y - 1 ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("perturbed_one_hot: formula values") {
  const ProbVector a = perturbed_one_hot(2, 0.1, LabelSpace(3));
  CHECK(std::abs(a[0] - 0.05) < 1e-12);
  CHECK(std::abs(a[1] - 0.9) < 1e-12);
  CHECK(std::abs(a[2] - 0.05) < 1e-12);

  const ProbVector b = perturbed_one_hot(1, 0.5, LabelSpace(5));
  CHECK(std::abs(b[0] - 0.5) < 1e-12);
  for (int i = 1; i < 5; ++i) CHECK(std::abs(b[i] - 0.125) < 1e-12);

  // Small eps approaches the one-hot.
  const ProbVector c = perturbed_one_hot(1, 1e-9, LabelSpace(3));
  CHECK(std::abs(c[0] - 1.0) < 1e-8);

  CHECK_THROWS_AS(perturbed_one_hot(1, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(perturbed_one_hot(1, 1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(perturbed_one_hot(9, 0.1, 3), std::invalid_argument);
}

TEST_CASE("argmax_class: 1-based result, ties to the lowest index") {
  CHECK(argmax_class(std::vector<double>{0.1, 0.7, 0.2}) == 2);
  CHECK(argmax_class(std::vector<double>{0.4, 0.4, 0.2}) == 1);
  CHECK(argmax_class(std::vector<double>{0.2, 0.4, 0.4}) == 2);
}

TEST_CASE("ProbVector: rejects malformed vectors") {
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({-0.1, 1.1}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector(std::vector<double>{}), std::invalid_argument);
  CHECK_NOTHROW(ProbVector({0.17, 0.11, 0.50, 0.13, 0.09}));
}

TEST_CASE("LabelSpace: validation and lookup") {
  CHECK_THROWS_AS(LabelSpace(1), std::invalid_argument);
  CHECK_THROWS_AS(LabelSpace({"a", "a"}), std::invalid_argument);

  const LabelSpace space({"low", "mid", "high"});
  CHECK(space.k() == 3);
  CHECK(space.index_of("mid") == 2);
  CHECK(space.index_of("absent") == 0);
  CHECK(space.verbalisers(VerbaliserMode::kInformative).size() == 3);
  CHECK(space.verbalisers(VerbaliserMode::kUninformative).size() == 3);

  // Verbalisers must be distinct within each mode.
  std::set<std::string> inf(space.verbalisers(VerbaliserMode::kInformative).begin(),
                            space.verbalisers(VerbaliserMode::kInformative).end());
  CHECK(inf.size() == 3);
}
