#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ordinal/matrix.hpp"
#include "ordinal/metrics.hpp"
#include "ordinal/model.hpp"
#include "ordinal/simplex.hpp"

namespace ordinal {

// One augmented binary-task sample: original features composed with one
// candidate label's verbaliser features, labeled by whether the candidate
// is the true class.
struct EntailmentSample {
  std::vector<double> payload;  // x (+) verbaliser block
  int indicator = 0;            // 1 iff candidate == truth
  std::size_t source = 0;       // row index in the source dataset
  int candidate = 1;            // 1-based candidate class
};

// K natural-language templates, one per class.
struct VerbaliserSet {
  VerbaliserMode mode = VerbaliserMode::kInformative;
  std::vector<std::string> templates;

  static VerbaliserSet informative(const LabelSpace& space);
  static VerbaliserSet uninformative(const LabelSpace& space);
  // Plain-text round trip: first line "informative" or "uninformative",
  // then one template per line.
  static VerbaliserSet load(const std::string& path);
  void save(const std::string& path) const;
  void validate(int k_classes) const;
};

// Fixed per-label feature blocks standing in for verbaliser text. In
// informative mode the blocks carry the labels' ordinal structure exactly:
// cosine(block_i, block_j) = 1 - |i-j|/K. In uninformative mode each block
// is an independent unit vector seeded from its template's hash, so blocks
// share no structure beyond chance.
struct VerbaliserFeatures {
  VerbaliserMode mode = VerbaliserMode::kInformative;
  Matrix blocks;  // K x block_dim unit rows
};

VerbaliserFeatures verbaliser_features(const VerbaliserSet& verbs,
                                       int block_dim, std::uint64_t seed);

// K samples per datapoint, exactly one positive. With oversample_positive
// one extra positive per datapoint is built by zeroing each original
// feature coordinate with probability 0.05 (the verbaliser block is kept
// intact). Deterministic per seed.
std::vector<EntailmentSample> augment(const OrdinalDataset& data,
                                      const VerbaliserFeatures& verbs,
                                      bool oversample_positive,
                                      std::uint64_t seed);

// One-hidden-layer tanh scorer emitting a single logit. A linear scorer on
// a concatenated payload is additively separable in (x, block), which makes
// its candidate ranking independent of x; one hidden layer is the smallest
// scorer the reformulation can work through.
struct BinaryScorer {
  Matrix w1;                // H x P
  std::vector<double> b1;   // H
  std::vector<double> w2;   // H
  double b2 = 0.0;

  double score(std::span<const double> payload) const;
};

struct ScorerConfig {
  int hidden = 16;
  double learning_rate = 0.25;
  int epochs = 60;
  int batch_size = 64;  // 0 means full batch
  std::uint64_t seed = 1;
  double momentum = 0.9;
  double init_scale = 0.7;
};

// Binary cross-entropy training of the scorer. Samples are canonicalized
// to a total order first, so any permutation of the input list trains the
// identical scorer. Throws DegenerateTrainingError when only one indicator
// class is present.
BinaryScorer train_binary_scorer(const std::vector<EntailmentSample>& samples,
                                 const ScorerConfig& cfg);

struct EntailmentPrediction {
  int label = 1;
  ProbVector proba;
};

// Scores all K composed candidates, softmax-normalizes, argmax with lowest
// index winning ties.
EntailmentPrediction infer_entailment(std::span<const double> x,
                                      const VerbaliserFeatures& verbs,
                                      const BinaryScorer& scorer);

// Abstract label-scoring contract for constrained decoding.
using LabelLogProbOracle =
    std::function<double(std::span<const double> x, int label)>;

// argmax over the K in-set labels only: calls the oracle exactly K times
// and can never emit a label outside the space. Oracle exceptions
// propagate; a non-finite score is a contract break and throws
// std::domain_error.
int constrained_label_argmax(const LabelLogProbOracle& oracle,
                             std::span<const double> x,
                             const LabelSpace& space);

struct AblationCell {
  VerbaliserMode mode = VerbaliserMode::kInformative;
  double fraction = 1.0;
  std::vector<MetricReport> per_seed;
  AggregatedReport aggregate;
};

struct AblationConfig {
  std::vector<double> fractions = {0.1, 1.0};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  int block_dim = 16;
  ScorerConfig scorer;
  bool oversample_positive = true;
  std::uint64_t verbaliser_seed = 424242;
};

// Full informative-vs-uninformative protocol: for each mode and fraction,
// subsample the train split per seed, train the scorer on augmented train
// samples, evaluate entailment inference on the test split. Cells are
// ordered mode-major (informative first), fraction-minor.
std::vector<AblationCell> ablate_verbalisers(const OrdinalDataset& data,
                                             const AblationConfig& cfg);

}  // namespace ordinal
