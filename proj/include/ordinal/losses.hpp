#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ordinal/matrix.hpp"
#include "ordinal/simplex.hpp"

namespace ordinal {

enum class LossKind { kCe, kOll, kSoft, kEmd, kWkl, kMll, kBinomialNll };

std::string loss_kind_name(LossKind kind);
std::optional<LossKind> parse_loss_kind(const std::string& name);

// Full description of a loss: the kind plus every hyperparameter any kind
// reads. alpha is the OLL distance exponent, beta the SOFT temperature,
// lambda the MLL mixing weight; wkl_weights, when empty, defaults to the
// quadratic table w_ij = (i-j)^2 at evaluation time.
struct LossSpec {
  LossKind kind = LossKind::kCe;
  double alpha = 1.5;
  double beta = 1.0;
  double lambda = 0.5;
  Matrix wkl_weights;

  static LossSpec make(LossKind kind);
  void validate() const;
};

// Value and analytic gradients of a per-sample loss. grad_p is d/dp of the
// written formula; grad_z is the chain-rule pullback through softmax,
// computable from p and grad_p alone because any interior p is softmax of
// log p. When the value is +infinity (a log(0) case) `saturated` is set and
// the undefined gradient entries are clamped to +/-1e30; trainers must skip
// such steps rather than apply them.
struct LossEval {
  double value = 0.0;
  std::vector<double> grad_p;
  std::vector<double> grad_z;
  bool saturated = false;
};

// Batch-level evaluation: mean of per-sample losses for decomposable kinds,
// the batch formula itself for WKL. Gradient rows are of the batch objective
// (so per-sample grads already carry the 1/N factor for decomposable kinds).
struct BatchLossEval {
  double value = 0.0;
  Matrix grad_p;
  Matrix grad_z;
  bool saturated = false;
};

// Intermediate WKL quantities, exposed for inspection and tests.
struct WklAccumulators {
  Matrix observed;  // O_ij = (1/N) sum_n 1[y_n=i] p_n[j]
  Matrix expected;  // E_ij = r_i c_j (truth marginal x prediction marginal)
  double kappa = 0.0;
};

// Scalar parametrization of a Binomial(K-1, f) distribution over classes
// 1..K; the induced PMF is unimodal for every f in [0, 1].
struct BinomialHead {
  double f = 0.5;
  int k_classes = 2;
};

// Quadratic penalty table w_ij = (i-j)^2 (symmetric, zero diagonal).
Matrix quadratic_weights(int k_classes);

// Per-sample losses. Class index y is 1-based. The span overloads compute
// the written formulas at any point where they are defined (no simplex
// validation); that is what finite-difference probing and the simplex
// optimizer rely on.
LossEval ce(std::span<const double> p, int y);
LossEval oll(std::span<const double> p, int y, double alpha);
ProbVector soft_labels(int y, double beta, const LabelSpace& space);
ProbVector soft_labels(int y, double beta, int k_classes);
LossEval soft_loss(std::span<const double> p, int y, double beta);
LossEval emd(std::span<const double> p, int y);
LossEval mll(std::span<const double> p, int y, double lambda, double alpha);

// Batch-level weighted-kappa loss, value = -kappa. Not decomposable per
// sample. weights must be symmetric, non-negative, zero-diagonal; pass an
// empty Matrix for the quadratic default. Throws DegenerateBatchError when
// the chance-agreement mass Sum w_ij E_ij falls below 1e-12.
BatchLossEval wkl(const Matrix& p_batch, const std::vector<int>& y_batch,
                  const Matrix& weights);
WklAccumulators wkl_accumulators(const Matrix& p_batch,
                                 const std::vector<int>& y_batch);

ProbVector binomial_pmf(const BinomialHead& head);
// d pmf / d f, used to train the scalar head.
std::vector<double> binomial_pmf_df(const BinomialHead& head);

// Unified dispatch for the per-sample kinds (everything except WKL, which
// needs a batch). BINOMIAL_NLL evaluates as -log p[y]: the head constraint
// lives in the model, not in the formula.
LossEval evaluate(const LossSpec& spec, std::span<const double> p, int y);

// Batch dispatch: averages per-sample evaluations, or runs the WKL batch
// formula. Rows of p_batch are the per-sample predicted distributions.
BatchLossEval evaluate_batch(const LossSpec& spec, const Matrix& p_batch,
                             const std::vector<int>& y_batch);

// Pullback of grad_p through the softmax Jacobian at p.
std::vector<double> grad_z_from_grad_p(std::span<const double> p,
                                       std::span<const double> grad_p);

// Central-finite-difference check of the analytic gradient at one point.
// With through_softmax = false, `point` is a strictly interior probability
// vector and grad_p is checked; with true, `point` holds logits and grad_z
// is checked. Returns the max relative error over coordinates.
double grad_check(const LossSpec& spec, std::span<const double> point, int y,
                  double h, bool through_softmax);

// Same check for the WKL batch gradient (grad_p entries, or grad_z when
// through_softmax is set and `logits` holds the pre-softmax batch).
double grad_check_wkl(const Matrix& point, const std::vector<int>& y_batch,
                      const Matrix& weights, double h, bool through_softmax);

}  // namespace ordinal
