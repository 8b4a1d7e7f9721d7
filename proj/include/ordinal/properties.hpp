#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ordinal/losses.hpp"
#include "ordinal/matrix.hpp"
#include "ordinal/simplex.hpp"

namespace ordinal {

// Where the simplex search ended up. `holds` certifies that the located
// minimum sits on the one-hot (within L-inf 1e-3); `inconclusive` marks an
// optimizer that was still descending when the iteration budget ran out, a
// verdict distinct from false. For WKL the search runs over a balanced batch
// and `minimizer` carries the worst row.
struct PsrReport {
  bool holds = false;
  bool inconclusive = false;
  ProbVector minimizer;
  double gap = 0.0;
};

// A concrete Jensen violation: lambda*L(p) + (1-lambda)*L(q) fell below
// L(mix) by `violation`. For WKL, p and q are row-major flattened batches
// and y_batch holds the truth labels; for per-sample losses y is the class.
struct ConvexityWitness {
  std::vector<double> p;
  std::vector<double> q;
  double lambda = 0.5;
  double violation = 0.0;
  int y = 0;
  std::vector<int> y_batch;
};

// Sampling-based certificate: "no violation in `trials` trials", never a
// proof. witness is present iff holds is false.
struct ConvexityReport {
  bool holds = true;
  int trials = 0;
  std::optional<ConvexityWitness> witness;
};

enum class ProfileShape { kFlat, kIncreasing, kMixed };

// Loss value at perturbed one-hots, grouped by miss distance d.
struct OrdinalityProfile {
  std::vector<std::pair<int, double>> points;  // (d, max value at distance d)
  ProfileShape shape = ProfileShape::kMixed;
};

struct UmStats {
  std::size_t n_checked = 0;
  std::size_t n_unimodal = 0;
  double fraction = 0.0;
};

// One row of the certified property grid.
struct PropertyReport {
  LossSpec loss;
  PsrReport psr;
  ConvexityReport convex;
  OrdinalityProfile ordinality;
  std::optional<UmStats> um_stats;
  bool um_guaranteed = false;  // true only for the binomial-head row
};

const char* profile_shape_name(ProfileShape shape);

// Minimizes the loss over the simplex by exponentiated-gradient descent from
// 20 seeded random restarts plus the near-one-hot and uniform starts. For
// WKL the search runs on a size-2K balanced batch (y is ignored) and every
// row must reach its own one-hot.
PsrReport verify_psr(const LossSpec& spec, int y, int k_classes,
                     std::uint64_t seed = 90001);

// Jensen sampling over random simplex pairs and mixing weights (batch pairs
// for WKL) plus reduced finite-difference Hessian probes at interior points.
// A Hessian probe only contributes after its negative direction is upgraded
// to a verified Jensen witness, so finite-difference noise cannot flip a
// verdict. Requires trials >= 1000.
ConvexityReport verify_convexity(const LossSpec& spec, int k_classes,
                                 int trials, std::uint64_t seed = 90002);

// True iff no strict interior dip exists (some l with strictly larger
// entries on both sides); equal neighbors are not a violation.
bool is_unimodal(std::span<const double> p);
bool is_unimodal(const ProbVector& p);

// Fraction of prediction rows passing is_unimodal. Throws std::domain_error
// on a 0-row matrix.
UmStats um_stats_of(const Matrix& preds);
double um_fraction(const Matrix& preds);

// Loss value at perturbed_one_hot(k, eps) grouped by d = |k-y| (max over
// the equal-d pair), classified FLAT / INCREASING / MIXED. For WKL the probe
// runs on a balanced 2K batch whose rows all miss by d, over the d-range
// every row can realize.
OrdinalityProfile ordinality_profile(const LossSpec& spec, int y,
                                     int k_classes, double eps = 0.1);

// One PropertyReport per spec: PSR certified at every y, convexity at the
// given trial budget, ordinality at eps = 0.1 from class 1.
std::vector<PropertyReport> property_matrix(const std::vector<LossSpec>& specs,
                                            int k_classes, int trials);

}  // namespace ordinal
