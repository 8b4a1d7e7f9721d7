#include "ordinal/entailment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "ordinal/errors.hpp"
#include "ordinal/rng.hpp"

namespace ordinal {

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
Matrix cholesky(const Matrix& g) {
  const std::size_t n = g.rows();
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = g(i, j);
      for (std::size_t m = 0; m < j; ++m) sum -= l(i, m) * l(j, m);
      if (i == j) {
        if (sum <= 0.0)
          throw std::logic_error("cholesky: matrix not positive definite");
        l(i, i) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return l;
}

// K orthonormal rows of dimension dim, deterministically seeded.
Matrix orthonormal_rows(int k, int dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 227));
  Matrix q(k, dim);
  for (int i = 0; i < k; ++i) {
    while (true) {
      for (int j = 0; j < dim; ++j) q(i, j) = rng.normal();
      for (int m = 0; m < i; ++m) {
        double dot = 0.0;
        for (int j = 0; j < dim; ++j) dot += q(i, j) * q(m, j);
        for (int j = 0; j < dim; ++j) q(i, j) -= dot * q(m, j);
      }
      double norm = 0.0;
      for (int j = 0; j < dim; ++j) norm += q(i, j) * q(i, j);
      norm = std::sqrt(norm);
      if (norm > 1e-8) {
        for (int j = 0; j < dim; ++j) q(i, j) /= norm;
        break;
      }
    }
  }
  return q;
}

}  // namespace

VerbaliserSet VerbaliserSet::informative(const LabelSpace& space) {
  VerbaliserSet v;
  v.mode = VerbaliserMode::kInformative;
  v.templates = space.verbalisers(VerbaliserMode::kInformative);
  return v;
}

VerbaliserSet VerbaliserSet::uninformative(const LabelSpace& space) {
  VerbaliserSet v;
  v.mode = VerbaliserMode::kUninformative;
  v.templates = space.verbalisers(VerbaliserMode::kUninformative);
  return v;
}

VerbaliserSet VerbaliserSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("VerbaliserSet: cannot open " + path);
  VerbaliserSet v;
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("VerbaliserSet: empty file " + path);
  if (line == "informative")
    v.mode = VerbaliserMode::kInformative;
  else if (line == "uninformative")
    v.mode = VerbaliserMode::kUninformative;
  else
    throw std::invalid_argument("VerbaliserSet: unknown mode '" + line + "'");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) v.templates.push_back(line);
  }
  v.validate(static_cast<int>(v.templates.size()));
  return v;
}

void VerbaliserSet::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("VerbaliserSet: cannot write " + path);
  out << (mode == VerbaliserMode::kInformative ? "informative"
                                               : "uninformative")
      << "\n";
  for (const std::string& t : templates) out << t << "\n";
}

void VerbaliserSet::validate(int k_classes) const {
  if (static_cast<int>(templates.size()) != k_classes)
    throw std::invalid_argument(
        "VerbaliserSet: template count does not match K");
  std::set<std::string> seen;
  for (const std::string& t : templates) {
    if (t.empty())
      throw std::invalid_argument("VerbaliserSet: empty template");
    if (!seen.insert(t).second)
      throw std::invalid_argument("VerbaliserSet: duplicate template '" + t +
                                  "'");
  }
}

VerbaliserFeatures verbaliser_features(const VerbaliserSet& verbs,
                                       int block_dim, std::uint64_t seed) {
  const int k = static_cast<int>(verbs.templates.size());
  if (k < 2) throw std::invalid_argument("verbaliser_features: K must be >= 2");
  verbs.validate(k);
  if (block_dim < k)
    throw std::invalid_argument(
        "verbaliser_features: block_dim must be >= K for the ordinal "
        "structure to embed");
  VerbaliserFeatures out;
  out.mode = verbs.mode;
  out.blocks = Matrix(k, block_dim);
  if (verbs.mode == VerbaliserMode::kInformative) {
    // Target Gram G_ij = 1 - |i-j|/K (triangular kernel, positive
    // definite); blocks = chol(G) * orthonormal basis gives exactly that
    // cosine structure with unit rows.
    Matrix g(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        g(i, j) = 1.0 - static_cast<double>(std::abs(i - j)) / k;
    const Matrix l = cholesky(g);
    const Matrix q = orthonormal_rows(k, block_dim, seed);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < block_dim; ++j) {
        double v = 0.0;
        for (int m = 0; m <= i; ++m) v += l(i, m) * q(m, j);
        out.blocks(i, j) = v;
      }
  } else {
    // Independent unit blocks, each seeded from its own template text.
    for (int i = 0; i < k; ++i) {
      Rng rng(derive_seed(seed, fnv1a64(verbs.templates[i])));
      double norm = 0.0;
      for (int j = 0; j < block_dim; ++j) {
        out.blocks(i, j) = rng.normal();
        norm += out.blocks(i, j) * out.blocks(i, j);
      }
      norm = std::sqrt(norm);
      for (int j = 0; j < block_dim; ++j) out.blocks(i, j) /= norm;
    }
  }
  return out;
}

std::vector<EntailmentSample> augment(const OrdinalDataset& data,
                                      const VerbaliserFeatures& verbs,
                                      bool oversample_positive,
                                      std::uint64_t seed) {
  data.validate();
  const int k = data.k();
  if (static_cast<int>(verbs.blocks.rows()) != k)
    throw std::invalid_argument(
        "augment: verbaliser block count does not match K");
  const std::size_t d = data.dim();
  const std::size_t block_dim = verbs.blocks.cols();

  std::vector<EntailmentSample> out;
  out.reserve(data.n() * (k + (oversample_positive ? 1 : 0)));
  Rng rng(derive_seed(seed, 191));
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (int cand = 1; cand <= k; ++cand) {
      EntailmentSample s;
      s.payload.resize(d + block_dim);
      for (std::size_t j = 0; j < d; ++j) s.payload[j] = data.x(i, j);
      for (std::size_t j = 0; j < block_dim; ++j)
        s.payload[d + j] = verbs.blocks(cand - 1, j);
      s.indicator = cand == data.y[i] ? 1 : 0;
      s.source = i;
      s.candidate = cand;
      out.push_back(std::move(s));
    }
    if (oversample_positive) {
      EntailmentSample s;
      s.payload.resize(d + block_dim);
      for (std::size_t j = 0; j < d; ++j) {
        const bool drop = rng.uniform01() < 0.05;
        s.payload[j] = drop ? 0.0 : data.x(i, j);
      }
      for (std::size_t j = 0; j < block_dim; ++j)
        s.payload[d + j] = verbs.blocks(data.y[i] - 1, j);
      s.indicator = 1;
      s.source = i;
      s.candidate = data.y[i];
      out.push_back(std::move(s));
    }
  }
  return out;
}

double BinaryScorer::score(std::span<const double> payload) const {
  if (payload.size() != w1.cols())
    throw std::domain_error("BinaryScorer: payload dimension mismatch");
  double out = b2;
  for (std::size_t h = 0; h < w1.rows(); ++h) {
    double a = b1[h];
    for (std::size_t j = 0; j < payload.size(); ++j)
      a += w1(h, j) * payload[j];
    out += w2[h] * std::tanh(a);
  }
  return out;
}

BinaryScorer train_binary_scorer(const std::vector<EntailmentSample>& samples,
                                 const ScorerConfig& cfg) {
  if (samples.empty())
    throw std::invalid_argument("train_binary_scorer: no samples");
  if (cfg.hidden < 1 || cfg.learning_rate <= 0.0 || cfg.epochs < 1 ||
      cfg.batch_size < 0)
    throw std::invalid_argument("train_binary_scorer: bad config");
  const std::size_t p = samples.front().payload.size();
  bool any_pos = false, any_neg = false;
  for (const EntailmentSample& s : samples) {
    if (s.payload.size() != p)
      throw std::invalid_argument("train_binary_scorer: ragged payloads");
    (s.indicator ? any_pos : any_neg) = true;
  }
  if (!any_pos || !any_neg)
    throw DegenerateTrainingError(
        "train_binary_scorer: both indicator classes required");

  // Canonical total order, so the trained scorer is independent of the
  // order the samples arrived in.
  std::vector<std::size_t> canon(samples.size());
  std::iota(canon.begin(), canon.end(), 0);
  std::sort(canon.begin(), canon.end(),
            [&](std::size_t a, std::size_t b) {
              const EntailmentSample& sa = samples[a];
              const EntailmentSample& sb = samples[b];
              if (sa.source != sb.source) return sa.source < sb.source;
              if (sa.candidate != sb.candidate)
                return sa.candidate < sb.candidate;
              if (sa.indicator != sb.indicator)
                return sa.indicator < sb.indicator;
              return sa.payload < sb.payload;
            });

  const std::size_t n = samples.size();
  const int h = cfg.hidden;
  Rng rng(derive_seed(cfg.seed, 211));
  BinaryScorer sc;
  sc.w1 = Matrix(h, p);
  for (double& v : sc.w1.data())
    v = cfg.init_scale * rng.normal() / std::sqrt(static_cast<double>(p));
  sc.b1.assign(h, 0.0);
  sc.w2.resize(h);
  for (double& v : sc.w2)
    v = cfg.init_scale * rng.normal() / std::sqrt(static_cast<double>(h));
  sc.b2 = 0.0;

  Matrix vel_w1(h, p);
  std::vector<double> vel_b1(h, 0.0), vel_w2(h, 0.0);
  double vel_b2 = 0.0;

  const std::size_t batch =
      cfg.batch_size == 0 ? n : std::min<std::size_t>(cfg.batch_size, n);
  std::vector<std::size_t> order = canon;
  std::vector<double> act(h), hidden_out(h);
  Matrix gw1(h, p);
  std::vector<double> gb1(h), gw2(h);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.batch_size != 0) rng.shuffle(order);
    for (std::size_t begin = 0; begin < n; begin += batch) {
      const std::size_t size = std::min(batch, n - begin);
      std::fill(gw1.data().begin(), gw1.data().end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      double gb2 = 0.0;
      for (std::size_t r = 0; r < size; ++r) {
        const EntailmentSample& s = samples[order[begin + r]];
        double logit = sc.b2;
        for (int m = 0; m < h; ++m) {
          double a = sc.b1[m];
          for (std::size_t j = 0; j < p; ++j)
            a += sc.w1(m, j) * s.payload[j];
          act[m] = a;
          hidden_out[m] = std::tanh(a);
          logit += sc.w2[m] * hidden_out[m];
        }
        const double dl = sigmoid(logit) - s.indicator;
        gb2 += dl;
        for (int m = 0; m < h; ++m) {
          gw2[m] += dl * hidden_out[m];
          const double da =
              dl * sc.w2[m] * (1.0 - hidden_out[m] * hidden_out[m]);
          gb1[m] += da;
          for (std::size_t j = 0; j < p; ++j)
            gw1(m, j) += da * s.payload[j];
        }
      }
      const double inv = 1.0 / static_cast<double>(size);
      const auto step = [&](double& param, double& vel, double grad) {
        vel = cfg.momentum * vel - cfg.learning_rate * grad * inv;
        param += vel;
      };
      for (int m = 0; m < h; ++m) {
        step(sc.b1[m], vel_b1[m], gb1[m]);
        step(sc.w2[m], vel_w2[m], gw2[m]);
        for (std::size_t j = 0; j < p; ++j)
          step(sc.w1(m, j), vel_w1(m, j), gw1(m, j));
      }
      step(sc.b2, vel_b2, gb2);
    }
    bool finite = std::isfinite(sc.b2);
    for (const double v : sc.w1.data()) finite = finite && std::isfinite(v);
    for (const double v : sc.w2) finite = finite && std::isfinite(v);
    for (const double v : sc.b1) finite = finite && std::isfinite(v);
    if (!finite)
      throw TrainingDivergedError(
          epoch, "train_binary_scorer: diverged at epoch " +
                     std::to_string(epoch));
  }
  return sc;
}

EntailmentPrediction infer_entailment(std::span<const double> x,
                                      const VerbaliserFeatures& verbs,
                                      const BinaryScorer& scorer) {
  const std::size_t k = verbs.blocks.rows();
  const std::size_t block_dim = verbs.blocks.cols();
  std::vector<double> payload(x.size() + block_dim);
  std::copy(x.begin(), x.end(), payload.begin());
  std::vector<double> scores(k);
  for (std::size_t cand = 0; cand < k; ++cand) {
    for (std::size_t j = 0; j < block_dim; ++j)
      payload[x.size() + j] = verbs.blocks(cand, j);
    scores[cand] = scorer.score(payload);
  }
  EntailmentPrediction pred;
  pred.proba = softmax(scores);
  pred.label = argmax_class(pred.proba);
  return pred;
}

int constrained_label_argmax(const LabelLogProbOracle& oracle,
                             std::span<const double> x,
                             const LabelSpace& space) {
  int best = 1;
  double best_score = 0.0;
  for (int label = 1; label <= space.k(); ++label) {
    const double s = oracle(x, label);
    if (!std::isfinite(s))
      throw std::domain_error(
          "constrained_label_argmax: oracle returned a non-finite score");
    if (label == 1 || s > best_score) {
      best = label;
      best_score = s;
    }
  }
  return best;
}

std::vector<AblationCell> ablate_verbalisers(const OrdinalDataset& data,
                                             const AblationConfig& cfg) {
  data.validate();
  if (cfg.fractions.empty() || cfg.seeds.empty())
    throw std::invalid_argument(
        "ablate_verbalisers: need at least one fraction and one seed");
  std::vector<AblationCell> cells;
  for (const VerbaliserMode mode :
       {VerbaliserMode::kInformative, VerbaliserMode::kUninformative}) {
    const VerbaliserSet verbs = mode == VerbaliserMode::kInformative
                                    ? VerbaliserSet::informative(data.space)
                                    : VerbaliserSet::uninformative(data.space);
    const VerbaliserFeatures vf = verbaliser_features(
        verbs, cfg.block_dim,
        derive_seed(cfg.verbaliser_seed,
                    mode == VerbaliserMode::kInformative ? 1 : 2));
    for (const double fraction : cfg.fractions) {
      AblationCell cell;
      cell.mode = mode;
      cell.fraction = fraction;
      for (const std::uint64_t seed : cfg.seeds) {
        const OrdinalDataset sub = subsample(data, fraction, seed);
        const std::vector<EntailmentSample> all =
            augment(sub, vf, cfg.oversample_positive, derive_seed(seed, 97));
        std::vector<EntailmentSample> train_samples;
        for (const EntailmentSample& s : all)
          if (sub.split[s.source] == SplitTag::kTrain)
            train_samples.push_back(s);
        ScorerConfig sc = cfg.scorer;
        sc.seed = derive_seed(cfg.scorer.seed, seed);
        const BinaryScorer scorer = train_binary_scorer(train_samples, sc);

        const std::vector<std::size_t> test_idx =
            sub.indices_of(SplitTag::kTest);
        std::vector<int> pred(test_idx.size()), truth(test_idx.size());
        for (std::size_t r = 0; r < test_idx.size(); ++r) {
          pred[r] =
              infer_entailment(sub.x.row(test_idx[r]), vf, scorer).label;
          truth[r] = sub.y[test_idx[r]];
        }
        cell.per_seed.push_back(compute_metrics(pred, truth, data.k()));
      }
      cell.aggregate = mean_std_over_seeds(cell.per_seed);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace ordinal
