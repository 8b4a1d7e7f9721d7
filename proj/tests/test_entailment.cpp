#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <vector>

#include "ordinal/entailment.hpp"
#include "ordinal/errors.hpp"
#include "ordinal/rng.hpp"

using namespace ordinal;

namespace {

OrdinalDataset tiny_dataset(int n, int d, int k, double sigma,
                            std::uint64_t seed) {
  return generate_synthetic(n, d, k, sigma, seed);
}

double bce_objective(const BinaryScorer& sc,
                     const std::vector<EntailmentSample>& samples) {
  double total = 0.0;
  for (const EntailmentSample& s : samples) {
    const double z = sc.score(s.payload);
    // softplus(z) - t*z, stable form
    const double softplus =
        z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += softplus - s.indicator * z;
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Verbaliser sets and feature blocks

TEST_CASE("VerbaliserSet: construction, validation, file round trip") {
  const LabelSpace space(4);
  const VerbaliserSet inf = VerbaliserSet::informative(space);
  const VerbaliserSet unf = VerbaliserSet::uninformative(space);
  REQUIRE(inf.templates.size() == 4);
  REQUIRE(unf.templates.size() == 4);
  inf.validate(4);
  unf.validate(4);
  CHECK_THROWS_AS(inf.validate(5), std::invalid_argument);

  VerbaliserSet dup = inf;
  dup.templates[1] = dup.templates[0];
  CHECK_THROWS_AS(dup.validate(4), std::invalid_argument);

  const std::string path = "verbaliser_roundtrip.tmp";
  inf.save(path);
  const VerbaliserSet back = VerbaliserSet::load(path);
  CHECK(back.mode == inf.mode);
  CHECK(back.templates == inf.templates);
  std::remove(path.c_str());

  CHECK_THROWS_AS(VerbaliserSet::load("does_not_exist.tmp"),
                  std::invalid_argument);
}

TEST_CASE("verbaliser_features: informative blocks carry the exact Gram") {
  const LabelSpace space(5);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(space), 12, 31);
  REQUIRE(vf.blocks.rows() == 5);
  REQUIRE(vf.blocks.cols() == 12);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      double dot = 0.0;
      for (int m = 0; m < 12; ++m) dot += vf.blocks(i, m) * vf.blocks(j, m);
      const double want = 1.0 - std::abs(i - j) / 5.0;
      CHECK(dot == doctest::Approx(want).epsilon(1e-12));
    }
  }
  // Different embedding seed, same Gram: the structure is seed-invariant.
  const VerbaliserFeatures vf2 =
      verbaliser_features(VerbaliserSet::informative(space), 12, 32);
  CHECK(vf.blocks.data() != vf2.blocks.data());
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      double dot = 0.0;
      for (int m = 0; m < 12; ++m)
        dot += vf2.blocks(i, m) * vf2.blocks(j, m);
      CHECK(dot == doctest::Approx(1.0 - std::abs(i - j) / 5.0)
                       .epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(
      verbaliser_features(VerbaliserSet::informative(space), 4, 31),
      std::invalid_argument);
}

TEST_CASE("verbaliser_features: uninformative blocks hash per template") {
  const LabelSpace space(5);
  const VerbaliserSet verbs = VerbaliserSet::uninformative(space);
  const VerbaliserFeatures a = verbaliser_features(verbs, 16, 7);
  const VerbaliserFeatures b = verbaliser_features(verbs, 16, 7);
  CHECK(a.blocks.data() == b.blocks.data());
  for (int i = 0; i < 5; ++i) {
    double norm = 0.0;
    for (int m = 0; m < 16; ++m) norm += a.blocks(i, m) * a.blocks(i, m);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Changing one template rebuilds only that row.
  VerbaliserSet edited = verbs;
  edited.templates[2] = "walrus";
  const VerbaliserFeatures c = verbaliser_features(edited, 16, 7);
  for (int i = 0; i < 5; ++i) {
    const bool same = std::equal(a.blocks.row(i).begin(),
                                 a.blocks.row(i).end(),
                                 c.blocks.row(i).begin());
    CHECK(same == (i != 2));
  }
}

// ---------------------------------------------------------------------------
// Augmentation

TEST_CASE("augment: counting, indicators, bijection, payload layout") {
  const OrdinalDataset data = tiny_dataset(100, 6, 5, 0.8, 3);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(data.space), 8, 5);

  const std::vector<EntailmentSample> plain = augment(data, vf, false, 9);
  CHECK(plain.size() == 500);
  std::size_t positives = 0;
  std::set<std::pair<std::size_t, int>> keys;
  for (const EntailmentSample& s : plain) {
    positives += s.indicator;
    CHECK(keys.emplace(s.source, s.candidate).second);  // unique (i, k)
    CHECK(s.indicator == (s.candidate == data.y[s.source] ? 1 : 0));
    REQUIRE(s.payload.size() == 6 + 8);
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(s.payload[j] == data.x(s.source, j));
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(s.payload[6 + j] == vf.blocks(s.candidate - 1, j));
  }
  CHECK(positives == 100);

  const std::vector<EntailmentSample> over = augment(data, vf, true, 9);
  CHECK(over.size() == 600);
  positives = 0;
  std::size_t dropped_coords = 0, checked_coords = 0;
  for (const EntailmentSample& s : over) positives += s.indicator;
  CHECK(positives == 200);
  // The oversampled copies zero about 5% of original coordinates and keep
  // the verbaliser block intact.
  for (std::size_t i = 0; i < over.size(); ++i) {
    if (i % 6 != 5) continue;  // the appended oversample per source
    const EntailmentSample& s = over[i];
    CHECK(s.indicator == 1);
    CHECK(s.candidate == data.y[s.source]);
    for (std::size_t j = 0; j < 6; ++j) {
      ++checked_coords;
      if (s.payload[j] == 0.0 && data.x(s.source, j) != 0.0)
        ++dropped_coords;
      else
        CHECK(s.payload[j] == data.x(s.source, j));
    }
    for (std::size_t j = 0; j < 8; ++j)
      CHECK(s.payload[6 + j] == vf.blocks(s.candidate - 1, j));
  }
  const double drop_rate =
      static_cast<double>(dropped_coords) / static_cast<double>(checked_coords);
  CHECK(drop_rate > 0.01);
  CHECK(drop_rate < 0.12);

  const std::vector<EntailmentSample> again = augment(data, vf, true, 9);
  REQUIRE(again.size() == over.size());
  for (std::size_t i = 0; i < over.size(); ++i)
    CHECK(again[i].payload == over[i].payload);

  const VerbaliserFeatures wrong =
      verbaliser_features(VerbaliserSet::informative(LabelSpace(4)), 8, 5);
  CHECK_THROWS_AS(augment(data, wrong, false, 9), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Binary scorer

TEST_CASE("train_binary_scorer: degenerate and malformed inputs") {
  const OrdinalDataset data = tiny_dataset(20, 4, 3, 0.5, 13);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(data.space), 4, 5);
  std::vector<EntailmentSample> samples = augment(data, vf, false, 1);
  std::vector<EntailmentSample> positives_only;
  for (const EntailmentSample& s : samples)
    if (s.indicator == 1) positives_only.push_back(s);
  ScorerConfig cfg;
  cfg.epochs = 2;
  CHECK_THROWS_AS(train_binary_scorer(positives_only, cfg),
                  DegenerateTrainingError);
  CHECK_THROWS_AS(train_binary_scorer({}, cfg), std::invalid_argument);

  std::vector<EntailmentSample> ragged = samples;
  ragged[3].payload.push_back(0.0);
  CHECK_THROWS_AS(train_binary_scorer(ragged, cfg), std::invalid_argument);
}

TEST_CASE("train_binary_scorer: input order never changes the result") {
  const OrdinalDataset data = tiny_dataset(60, 5, 4, 0.6, 17);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(data.space), 6, 5);
  std::vector<EntailmentSample> samples = augment(data, vf, true, 3);
  ScorerConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 0;  // full batch
  const BinaryScorer fwd = train_binary_scorer(samples, cfg);
  std::reverse(samples.begin(), samples.end());
  const BinaryScorer rev = train_binary_scorer(samples, cfg);
  CHECK(fwd.w1.data() == rev.w1.data());
  CHECK(fwd.b1 == rev.b1);
  CHECK(fwd.w2 == rev.w2);
  CHECK(fwd.b2 == rev.b2);

  // And the same holds under mini-batches: batches are drawn from the
  // canonical order, not the arrival order.
  cfg.batch_size = 32;
  const BinaryScorer fwd_mb = train_binary_scorer(samples, cfg);
  std::reverse(samples.begin(), samples.end());
  const BinaryScorer rev_mb = train_binary_scorer(samples, cfg);
  CHECK(fwd_mb.w1.data() == rev_mb.w1.data());
}

TEST_CASE("train_binary_scorer: training gradient matches finite differences") {
  const OrdinalDataset data = tiny_dataset(30, 4, 3, 0.7, 23);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(data.space), 4, 5);
  const std::vector<EntailmentSample> samples = augment(data, vf, false, 7);

  // Recover the seeded init (step too small to change any parameter), then
  // the first full-batch gradient from one real step.
  ScorerConfig cfg;
  cfg.hidden = 6;
  cfg.epochs = 1;
  cfg.batch_size = 0;
  cfg.seed = 29;
  ScorerConfig frozen = cfg;
  frozen.learning_rate = 1e-300;
  const BinaryScorer init = train_binary_scorer(samples, frozen);
  ScorerConfig stepped = cfg;
  stepped.learning_rate = 1e-3;
  const BinaryScorer after = train_binary_scorer(samples, stepped);

  const double h = 1e-5;
  double worst = 0.0, scale = 1e-8;
  const auto check_param = [&](double init_v, double after_v,
                               const std::function<void(BinaryScorer&,
                                                        double)>& set) {
    const double grad = (init_v - after_v) / 1e-3;
    BinaryScorer probe = init;
    set(probe, init_v + h);
    const double up = bce_objective(probe, samples);
    set(probe, init_v - h);
    const double dn = bce_objective(probe, samples);
    worst = std::max(worst, std::abs(grad - (up - dn) / (2.0 * h)));
    scale = std::max(scale, std::abs(grad));
  };
  Rng rng(999);
  for (int probe = 0; probe < 12; ++probe) {
    const std::size_t m = rng.uniform_below(6);
    const std::size_t j = rng.uniform_below(init.w1.cols());
    check_param(init.w1(m, j), after.w1(m, j),
                [m, j](BinaryScorer& s, double v) { s.w1(m, j) = v; });
  }
  for (std::size_t m = 0; m < 6; ++m) {
    check_param(init.b1[m], after.b1[m],
                [m](BinaryScorer& s, double v) { s.b1[m] = v; });
    check_param(init.w2[m], after.w2[m],
                [m](BinaryScorer& s, double v) { s.w2[m] = v; });
  }
  check_param(init.b2, after.b2,
              [](BinaryScorer& s, double v) { s.b2 = v; });
  CHECK(worst / scale < 1e-5);
}

TEST_CASE("train_binary_scorer: sigma=0 informative features are learnable") {
  const OrdinalDataset data = tiny_dataset(1500, 16, 5, 0.0, 61);
  const VerbaliserFeatures vf = verbaliser_features(
      VerbaliserSet::informative(data.space), 16, 424242);
  const std::vector<EntailmentSample> all = augment(data, vf, true, 11);
  std::vector<EntailmentSample> train_s, val_s;
  for (const EntailmentSample& s : all) {
    if (data.split[s.source] == SplitTag::kTrain)
      train_s.push_back(s);
    else if (data.split[s.source] == SplitTag::kValidation)
      val_s.push_back(s);
  }
  ScorerConfig cfg;
  cfg.seed = 19;
  const BinaryScorer scorer = train_binary_scorer(train_s, cfg);
  std::size_t ok = 0;
  for (const EntailmentSample& s : val_s)
    ok += (scorer.score(s.payload) > 0.0) == (s.indicator == 1);
  const double acc = static_cast<double>(ok) / static_cast<double>(val_s.size());
  CHECK(acc > 0.9);
}

// ---------------------------------------------------------------------------
// Inference

TEST_CASE("infer_entailment: simplex contract and score-shift invariance") {
  const OrdinalDataset data = tiny_dataset(40, 5, 4, 0.8, 37);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(data.space), 6, 5);
  std::vector<EntailmentSample> samples = augment(data, vf, false, 3);
  ScorerConfig cfg;
  cfg.epochs = 5;
  BinaryScorer scorer = train_binary_scorer(samples, cfg);
  for (std::size_t r = 0; r < 20; ++r) {
    const EntailmentPrediction pred =
        infer_entailment(data.x.row(r), vf, scorer);
    CHECK(pred.proba.k() == 4);  // construction validates the simplex
    CHECK(pred.label == argmax_class(pred.proba));
    BinaryScorer shifted = scorer;
    shifted.b2 += 13.5;  // constant shift on every candidate score
    const EntailmentPrediction pred2 =
        infer_entailment(data.x.row(r), vf, shifted);
    CHECK(pred2.label == pred.label);
    for (int c = 0; c < 4; ++c)
      CHECK(pred2.proba[c] == doctest::Approx(pred.proba[c]).epsilon(1e-9));
  }
}

TEST_CASE("infer_entailment: a dominant candidate wins with p > 0.99") {
  // Hand-built geometry: orthogonal one-hot verbaliser blocks and one
  // hidden unit reading block coordinate 2.
  VerbaliserFeatures vf;
  vf.mode = VerbaliserMode::kInformative;
  vf.blocks = Matrix(3, 3);
  for (int i = 0; i < 3; ++i) vf.blocks(i, i) = 1.0;
  BinaryScorer scorer;
  scorer.w1 = Matrix(1, 5);  // payload = 2 input coords + 3 block coords
  scorer.w1(0, 2 + 2) = 25.0;
  scorer.b1 = {0.0};
  scorer.w2 = {21.0};
  scorer.b2 = 0.0;
  const std::vector<double> x = {0.4, -1.3};
  const EntailmentPrediction pred = infer_entailment(x, vf, scorer);
  CHECK(pred.label == 3);
  CHECK(pred.proba[2] > 0.99);
}

// ---------------------------------------------------------------------------
// Constrained label argmax

TEST_CASE("constrained_label_argmax: exact oracles and the tie rule") {
  const LabelSpace space(5);
  const std::vector<double> x = {1.0, 2.0};
  const LabelLogProbOracle truth_is_4 = [](std::span<const double>, int k) {
    return k == 4 ? 0.0 : -50.0;
  };
  CHECK(constrained_label_argmax(truth_is_4, x, space) == 4);
  const LabelLogProbOracle constant = [](std::span<const double>, int) {
    return 1.25;
  };
  CHECK(constrained_label_argmax(constant, x, space) == 1);
}

TEST_CASE("constrained_label_argmax: exactly K oracle calls, in order") {
  const LabelSpace space(6);
  std::vector<int> seen;
  const LabelLogProbOracle counting = [&](std::span<const double>, int k) {
    seen.push_back(k);
    return -static_cast<double>(k);
  };
  const std::vector<double> x = {0.0};
  CHECK(constrained_label_argmax(counting, x, space) == 1);
  CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("constrained_label_argmax: agrees with infer_entailment") {
  const OrdinalDataset data = tiny_dataset(50, 5, 4, 0.6, 43);
  const VerbaliserFeatures vf =
      verbaliser_features(VerbaliserSet::informative(data.space), 6, 5);
  std::vector<EntailmentSample> samples = augment(data, vf, false, 3);
  ScorerConfig cfg;
  cfg.epochs = 10;
  const BinaryScorer scorer = train_binary_scorer(samples, cfg);
  const LabelLogProbOracle oracle = [&](std::span<const double> x, int k) {
    std::vector<double> payload(x.begin(), x.end());
    for (std::size_t j = 0; j < vf.blocks.cols(); ++j)
      payload.push_back(vf.blocks(k - 1, j));
    return scorer.score(payload);
  };
  for (std::size_t r = 0; r < data.n(); ++r) {
    const int via_oracle =
        constrained_label_argmax(oracle, data.x.row(r), data.space);
    const int via_infer = infer_entailment(data.x.row(r), vf, scorer).label;
    CHECK(via_oracle == via_infer);
  }
}

TEST_CASE("constrained_label_argmax: error contracts") {
  const LabelSpace space(3);
  const std::vector<double> x = {0.0};
  const LabelLogProbOracle nan_oracle = [](std::span<const double>, int k) {
    return k == 2 ? std::nan("") : 0.0;
  };
  CHECK_THROWS_AS(constrained_label_argmax(nan_oracle, x, space),
                  std::domain_error);
  struct OracleBoom {};
  const LabelLogProbOracle throwing = [](std::span<const double>,
                                         int k) -> double {
    if (k == 3) throw OracleBoom{};
    return 0.0;
  };
  CHECK_THROWS_AS(constrained_label_argmax(throwing, x, space), OracleBoom);
}

TEST_CASE("constrained_label_argmax: fuzzed oracles stay in the label set") {
  Rng rng(515151);
  for (int trial = 0; trial < 5000; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_below(9));
    const LabelSpace space(k);
    const std::uint64_t oracle_seed = rng.raw();
    const LabelLogProbOracle oracle = [oracle_seed](
                                          std::span<const double> x,
                                          int label) {
      Rng inner(derive_seed(oracle_seed, static_cast<std::uint64_t>(label)));
      double v = (inner.uniform01() - 0.5) *
                 std::pow(10.0, static_cast<double>(inner.uniform_below(7)));
      if (!x.empty()) v += x[0] * inner.normal();
      return v;
    };
    const std::vector<double> x = {rng.normal()};
    const int label = constrained_label_argmax(oracle, x, space);
    CHECK(label >= 1);
    CHECK(label <= k);
  }
}

// ---------------------------------------------------------------------------
// Ablation protocol

TEST_CASE("ablate_verbalisers: cell shape, completeness, determinism") {
  const OrdinalDataset data = tiny_dataset(400, 12, 4, 0.5, 71);
  AblationConfig cfg;
  cfg.fractions = {0.5};
  cfg.seeds = {1, 2};
  cfg.block_dim = 8;
  cfg.scorer.epochs = 15;
  const std::vector<AblationCell> cells = ablate_verbalisers(data, cfg);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].mode == VerbaliserMode::kInformative);
  CHECK(cells[1].mode == VerbaliserMode::kUninformative);
  for (const AblationCell& cell : cells) {
    CHECK(cell.fraction == 0.5);
    REQUIRE(cell.per_seed.size() == 2);
    CHECK(cell.aggregate.n_reports == 2);
    for (const MetricReport& rep : cell.per_seed) {
      CHECK(rep.f1_weighted >= 0.0);
      CHECK(rep.f1_weighted <= 1.0);
      CHECK(rep.ob_k.size() == 4);
    }
  }
  const std::vector<AblationCell> rerun = ablate_verbalisers(data, cfg);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(rerun[i].aggregate.f1_weighted.mean ==
          cells[i].aggregate.f1_weighted.mean);
    CHECK(rerun[i].aggregate.mae.mean == cells[i].aggregate.mae.mean);
  }
  AblationConfig bad = cfg;
  bad.fractions = {};
  CHECK_THROWS_AS(ablate_verbalisers(data, bad), std::invalid_argument);
}

TEST_CASE("entailment pipeline: near the direct CE model on easy data") {
  const OrdinalDataset data = tiny_dataset(1500, 16, 5, 0.0, 61);
  const VerbaliserFeatures vf = verbaliser_features(
      VerbaliserSet::informative(data.space), 16, 424242);
  const std::vector<EntailmentSample> all = augment(data, vf, true, 11);
  std::vector<EntailmentSample> train_s;
  for (const EntailmentSample& s : all)
    if (data.split[s.source] == SplitTag::kTrain) train_s.push_back(s);
  ScorerConfig sc;
  sc.seed = 19;
  const BinaryScorer scorer = train_binary_scorer(train_s, sc);

  const auto test_idx = data.indices_of(SplitTag::kTest);
  std::vector<int> pred_ent(test_idx.size()), truth(test_idx.size());
  for (std::size_t r = 0; r < test_idx.size(); ++r) {
    pred_ent[r] =
        infer_entailment(data.x.row(test_idx[r]), vf, scorer).label;
    truth[r] = data.y[test_idx[r]];
  }

  TrainConfig tc;
  tc.loss = LossSpec::make(LossKind::kCe);
  tc.batch_size = 16;
  tc.momentum = 0.95;
  tc.seed = 3;
  const TrainResult ce = train(ModelKind::kLinearSoftmax, data, tc);
  Matrix xt(test_idx.size(), data.dim());
  for (std::size_t r = 0; r < test_idx.size(); ++r)
    for (std::size_t j = 0; j < data.dim(); ++j)
      xt(r, j) = data.x(test_idx[r], j);
  const std::vector<int> pred_ce = ce.predict(xt);

  const double mae_ent = mae(pred_ent, truth);
  const double mae_ce = mae(pred_ce, truth);
  CHECK(std::abs(mae_ent - mae_ce) < 0.1);
  CHECK(mae_ent < 0.2);  // both near zero on separable data
  CHECK(mae_ce < 0.2);
}
