#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ordinal/losses.hpp"
#include "ordinal/matrix.hpp"
#include "ordinal/simplex.hpp"

namespace ordinal {

enum class SplitTag { kTrain, kValidation, kTest };

// Feature matrix plus labels, label space, provenance, and a split tag per
// row. The split tags partition the rows.
struct OrdinalDataset {
  Matrix x;                    // N x D
  std::vector<int> y;          // 1..K, one per row
  LabelSpace space{2};         // placeholder until filled
  std::string provenance;
  std::vector<SplitTag> split;
  bool class_drop_warning = false;  // a subsample dropped some train class

  std::size_t n() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
  int k() const { return space.k(); }
  std::vector<std::size_t> indices_of(SplitTag tag) const;
  void validate() const;
};

// Ordered-logit synthetic generator: latent z = v.x + sigma*noise + shift
// with a fixed random unit direction v and K-1 thresholds evenly spaced
// over +/- 2 latent standard deviations. skew shifts the latent mean in
// latent-sd units, which is the only imbalance mechanism. noise_asym in
// [-1, 1] skews the noise itself (centered unit-variance skew-normal), so
// the conditional label distribution has mode != median; 0 keeps the noise
// Gaussian and the byte stream identical to the two-knob generator. Rows
// are tagged train/validation/test 70/15/15. Same arguments, same bytes.
OrdinalDataset generate_synthetic(int n, int d, int k_classes, double sigma,
                                  std::uint64_t seed, double skew = 0.0,
                                  double noise_asym = 0.0);

// Class masses the generator's labels converge to (functions of K and skew
// only when the noise is symmetric; sigma cancels).
std::vector<double> synthetic_class_masses(int k_classes, double skew = 0.0);

// Signed-hashing bag of words, L2-normalized rows. Empty documents become
// zero rows and are listed in empty_rows.
struct FeaturizeResult {
  Matrix x;
  std::vector<std::size_t> empty_rows;
};
FeaturizeResult featurize_text(const std::vector<std::string>& docs, int d,
                               std::uint64_t seed);

// Linear softmax classifier: row r of predict_proba is softmax(W x_r + b).
struct LinearSoftmaxModel {
  Matrix w;                // K x D
  std::vector<double> b;   // K

  Matrix predict_proba(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
};

// Scalar-head model: f(x) = logistic(w.x + b) parametrizes a binomial PMF
// over the K classes, so every prediction is unimodal by construction.
struct BinomialModel {
  std::vector<double> w;   // D
  double b = 0.0;
  int k_classes = 2;

  double f_of(std::span<const double> x) const;
  Matrix predict_proba(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
};

enum class Optimizer { kGd, kMomentum };

struct TrainConfig {
  LossSpec loss;
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 0;  // 0 means full batch
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::kMomentum;
  double momentum = 0.9;
  double init_scale = 0.01;
};

enum class ModelKind { kLinearSoftmax, kBinomial };

// Trained model plus the per-epoch mean training loss trace. Exactly the
// member named by `kind` is meaningful.
struct TrainResult {
  ModelKind kind = ModelKind::kLinearSoftmax;
  LinearSoftmaxModel linear;
  BinomialModel binomial;
  std::vector<double> trace;       // one entry per epoch
  int skipped_saturated_steps = 0;

  Matrix predict_proba(const Matrix& x) const;
  std::vector<int> predict(const Matrix& x) const;
};

// Deterministic (mini)batch gradient descent on the train split. Saturated
// batch gradients are skipped, never applied. Throws TrainingDivergedError
// naming the epoch on a persistently non-finite objective, and
// std::invalid_argument when WKL is configured with a mini-batch below 32.
TrainResult train(ModelKind kind, const OrdinalDataset& data,
                  const TrainConfig& cfg);

// Uniform train-split subset without replacement; validation and test rows
// pass through untouched. fraction 1 returns the dataset unchanged. If the
// subset drops some train class entirely, class_drop_warning is set and the
// run proceeds.
OrdinalDataset subsample(const OrdinalDataset& data, double fraction,
                         std::uint64_t seed);

}  // namespace ordinal
