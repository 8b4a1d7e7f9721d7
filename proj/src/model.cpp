#include "ordinal/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "ordinal/errors.hpp"
#include "ordinal/rng.hpp"

namespace ordinal {

namespace {

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Thresholds in latent-sd units: K-1 cuts evenly spaced over [-2, 2].
std::vector<double> standard_thresholds(int k) {
  std::vector<double> t(k - 1);
  for (int i = 1; i < k; ++i) t[i - 1] = -2.0 + 4.0 * i / k;
  return t;
}

}  // namespace

std::vector<std::size_t> OrdinalDataset::indices_of(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == tag) out.push_back(i);
  return out;
}

void OrdinalDataset::validate() const {
  if (x.rows() == 0 || x.cols() == 0)
    throw std::invalid_argument("OrdinalDataset: N and D must be positive");
  if (y.size() != x.rows() || split.size() != x.rows())
    throw std::invalid_argument("OrdinalDataset: row count mismatch");
  for (const int label : y) {
    if (label < 1 || label > space.k())
      throw std::invalid_argument("OrdinalDataset: label outside 1..K");
  }
}

OrdinalDataset generate_synthetic(int n, int d, int k_classes, double sigma,
                                  std::uint64_t seed, double skew,
                                  double noise_asym) {
  if (n <= 0 || d <= 0 || k_classes < 2)
    throw std::invalid_argument("generate_synthetic: bad shape");
  if (sigma < 0.0)
    throw std::invalid_argument("generate_synthetic: sigma must be >= 0");
  if (noise_asym < -1.0 || noise_asym > 1.0)
    throw std::invalid_argument(
        "generate_synthetic: noise_asym must be in [-1, 1]");

  // Centered unit-variance skew-normal draw; delta = 0 degenerates to one
  // plain normal draw, leaving the historical byte stream untouched.
  const double delta = noise_asym;
  const double asym_scale =
      std::sqrt(1.0 - (2.0 / std::numbers::pi) * delta * delta);
  const double asym_mean = delta * std::sqrt(2.0 / std::numbers::pi);

  Rng rng(derive_seed(seed, 101));
  std::vector<double> v(d);
  double norm = 0.0;
  for (int j = 0; j < d; ++j) {
    v[j] = rng.normal();
    norm += v[j] * v[j];
  }
  norm = std::sqrt(norm);
  for (double& c : v) c /= norm;  // v.x is exactly standard normal

  const double sigma_lat = std::sqrt(1.0 + sigma * sigma);
  std::vector<double> thresholds = standard_thresholds(k_classes);
  for (double& t : thresholds) t *= sigma_lat;
  const double shift = skew * sigma_lat;

  OrdinalDataset data;
  data.x = Matrix(n, d);
  data.y.resize(n);
  data.split.resize(n);
  data.space = LabelSpace(k_classes);
  for (int i = 0; i < n; ++i) {
    double proj = 0.0;
    for (int j = 0; j < d; ++j) {
      data.x(i, j) = rng.normal();
      proj += v[j] * data.x(i, j);
    }
    double noise = rng.normal();
    if (delta != 0.0)
      noise = (delta * std::abs(noise) +
               std::sqrt(1.0 - delta * delta) * rng.normal() - asym_mean) /
              asym_scale;
    const double z = proj + sigma * noise + shift;
    int label = 1;
    for (const double t : thresholds)
      if (z > t) ++label;
    data.y[i] = label;
    const int slot = i % 20;
    data.split[i] = slot < 14  ? SplitTag::kTrain
                    : slot < 17 ? SplitTag::kValidation
                                : SplitTag::kTest;
  }
  data.provenance = "synthetic seed=" + std::to_string(seed) +
                    " n=" + std::to_string(n) + " d=" + std::to_string(d) +
                    " k=" + std::to_string(k_classes) +
                    " sigma=" + std::to_string(sigma) +
                    " skew=" + std::to_string(skew);
  if (noise_asym != 0.0)
    data.provenance += " noise_asym=" + std::to_string(noise_asym);
  return data;
}

std::vector<double> synthetic_class_masses(int k_classes, double skew) {
  if (k_classes < 2)
    throw std::invalid_argument("synthetic_class_masses: K must be >= 2");
  const std::vector<double> t = standard_thresholds(k_classes);
  std::vector<double> masses(k_classes);
  double below = 0.0;
  for (int c = 0; c + 1 < k_classes; ++c) {
    const double cum = std_normal_cdf(t[c] - skew);
    masses[c] = cum - below;
    below = cum;
  }
  masses[k_classes - 1] = 1.0 - below;
  return masses;
}

FeaturizeResult featurize_text(const std::vector<std::string>& docs, int d,
                               std::uint64_t seed) {
  if (d < 64)
    throw std::invalid_argument("featurize_text: D must be >= 64");
  FeaturizeResult res;
  res.x = Matrix(docs.size(), d);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string token;
    bool any = false;
    const auto flush = [&]() {
      if (token.empty()) return;
      const std::uint64_t h = derive_seed(seed, fnv1a64(token));
      const std::size_t idx = static_cast<std::size_t>(h % d);
      const double sign = ((h >> 32) & 1u) ? 1.0 : -1.0;
      res.x(i, idx) += sign;
      any = true;
      token.clear();
    };
    for (const char ch : docs[i]) {
      if (std::isalnum(static_cast<unsigned char>(ch)))
        token.push_back(static_cast<char>(
            std::tolower(static_cast<unsigned char>(ch))));
      else
        flush();
    }
    flush();
    if (!any) {
      res.empty_rows.push_back(i);
      continue;
    }
    double norm = 0.0;
    for (int j = 0; j < d; ++j) norm += res.x(i, j) * res.x(i, j);
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (int j = 0; j < d; ++j) res.x(i, j) /= norm;
    else
      res.empty_rows.push_back(i);  // tokens hashed to cancellation
  }
  return res;
}

Matrix LinearSoftmaxModel::predict_proba(const Matrix& x) const {
  if (x.cols() != w.cols())
    throw std::domain_error("LinearSoftmaxModel: feature dimension mismatch");
  const std::size_t k = w.rows();
  Matrix out(x.rows(), k);
  std::vector<double> logits(k);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      double z = b[c];
      for (std::size_t j = 0; j < x.cols(); ++j) z += w(c, j) * x(r, j);
      logits[c] = z;
    }
    const ProbVector p = softmax(logits);
    for (std::size_t c = 0; c < k; ++c) out(r, c) = p[c];
  }
  return out;
}

std::vector<int> LinearSoftmaxModel::predict(const Matrix& x) const {
  const Matrix p = predict_proba(x);
  std::vector<int> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) out[r] = argmax_class(p.row(r));
  return out;
}

double BinomialModel::f_of(std::span<const double> x) const {
  if (x.size() != w.size())
    throw std::domain_error("BinomialModel: feature dimension mismatch");
  double t = b;
  for (std::size_t j = 0; j < w.size(); ++j) t += w[j] * x[j];
  return sigmoid(t);
}

Matrix BinomialModel::predict_proba(const Matrix& x) const {
  Matrix out(x.rows(), k_classes);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const ProbVector p = binomial_pmf({f_of(x.row(r)), k_classes});
    for (int c = 0; c < k_classes; ++c) out(r, c) = p[c];
  }
  return out;
}

std::vector<int> BinomialModel::predict(const Matrix& x) const {
  const Matrix p = predict_proba(x);
  std::vector<int> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) out[r] = argmax_class(p.row(r));
  return out;
}

Matrix TrainResult::predict_proba(const Matrix& x) const {
  return kind == ModelKind::kLinearSoftmax ? linear.predict_proba(x)
                                           : binomial.predict_proba(x);
}

std::vector<int> TrainResult::predict(const Matrix& x) const {
  return kind == ModelKind::kLinearSoftmax ? linear.predict(x)
                                           : binomial.predict(x);
}

TrainResult train(ModelKind kind, const OrdinalDataset& data,
                  const TrainConfig& cfg) {
  data.validate();
  cfg.loss.validate();
  if (cfg.learning_rate <= 0.0 || cfg.epochs < 1 || cfg.batch_size < 0)
    throw std::invalid_argument("train: bad config");
  const std::vector<std::size_t> train_idx = data.indices_of(SplitTag::kTrain);
  if (train_idx.empty())
    throw std::invalid_argument("train: empty train split");
  const std::size_t n_train = train_idx.size();
  const int k = data.k();
  const std::size_t d = data.dim();

  std::size_t batch = cfg.batch_size == 0
                          ? n_train
                          : std::min<std::size_t>(cfg.batch_size, n_train);
  if (cfg.loss.kind == LossKind::kWkl && batch < 32)
    throw std::invalid_argument(
        "train: WKL needs batches of >= 32 (kappa is a batch statistic)");

  Rng rng(derive_seed(cfg.seed, 131));
  TrainResult res;
  res.kind = kind;
  const bool is_linear = kind == ModelKind::kLinearSoftmax;
  if (is_linear) {
    res.linear.w = Matrix(k, d);
    for (double& c : res.linear.w.data()) c = cfg.init_scale * rng.normal();
    res.linear.b.assign(k, 0.0);
  } else {
    res.binomial.w.resize(d);
    for (double& c : res.binomial.w) c = cfg.init_scale * rng.normal();
    res.binomial.b = 0.0;
    res.binomial.k_classes = k;
  }

  // Momentum state mirrors the parameter layout.
  Matrix vel_w(is_linear ? k : 1, d);
  std::vector<double> vel_b(is_linear ? k : 1, 0.0);

  std::vector<std::size_t> order = train_idx;
  std::vector<int> yb;
  Matrix xb, pb;
  std::vector<double> fb;  // binomial scalar head per batch row

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.batch_size != 0) rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0;
    for (std::size_t begin = 0; begin < n_train; begin += batch) {
      const std::size_t size = std::min(batch, n_train - begin);
      if (cfg.loss.kind == LossKind::kWkl && size < 32) break;
      xb = Matrix(size, d);
      yb.resize(size);
      for (std::size_t r = 0; r < size; ++r) {
        const std::size_t src = order[begin + r];
        for (std::size_t j = 0; j < d; ++j) xb(r, j) = data.x(src, j);
        yb[r] = data.y[src];
      }

      pb = Matrix(size, k);
      if (is_linear) {
        std::vector<double> logits(k);
        for (std::size_t r = 0; r < size; ++r) {
          for (int c = 0; c < k; ++c) {
            double z = res.linear.b[c];
            for (std::size_t j = 0; j < d; ++j)
              z += res.linear.w(c, j) * xb(r, j);
            if (!std::isfinite(z))
              throw TrainingDivergedError(
                  epoch, "train: non-finite logits at epoch " +
                             std::to_string(epoch));
            logits[c] = z;
          }
          const ProbVector p = softmax(logits);
          for (int c = 0; c < k; ++c) pb(r, c) = p[c];
        }
      } else {
        fb.resize(size);
        for (std::size_t r = 0; r < size; ++r) {
          fb[r] = res.binomial.f_of(xb.row(r));
          const ProbVector p = binomial_pmf({fb[r], k});
          for (int c = 0; c < k; ++c) pb(r, c) = p[c];
        }
      }

      BatchLossEval ev;
      try {
        ev = evaluate_batch(cfg.loss, pb, yb);
      } catch (const DegenerateBatchError&) {
        ++res.skipped_saturated_steps;  // undefined batch, same skip contract
        continue;
      }
      if (ev.saturated) {
        ++res.skipped_saturated_steps;
        continue;
      }
      epoch_loss += ev.value;
      ++epoch_batches;

      if (is_linear) {
        // d objective / d W = grad_z^T X; grad_z already carries the 1/N.
        for (int c = 0; c < k; ++c) {
          double gb = 0.0;
          for (std::size_t r = 0; r < size; ++r) gb += ev.grad_z(r, c);
          const double step_b =
              cfg.optimizer == Optimizer::kMomentum
                  ? (vel_b[c] = cfg.momentum * vel_b[c] -
                                cfg.learning_rate * gb)
                  : -cfg.learning_rate * gb;
          res.linear.b[c] += step_b;
          for (std::size_t j = 0; j < d; ++j) {
            double g = 0.0;
            for (std::size_t r = 0; r < size; ++r)
              g += ev.grad_z(r, c) * xb(r, j);
            const double step =
                cfg.optimizer == Optimizer::kMomentum
                    ? (vel_w(c, j) = cfg.momentum * vel_w(c, j) -
                                     cfg.learning_rate * g)
                    : -cfg.learning_rate * g;
            res.linear.w(c, j) += step;
          }
        }
      } else {
        double gb_total = 0.0;
        std::vector<double> gw(d, 0.0);
        for (std::size_t r = 0; r < size; ++r) {
          const std::vector<double> df =
              binomial_pmf_df({fb[r], k});
          double dl_df = 0.0;
          for (int c = 0; c < k; ++c) dl_df += ev.grad_p(r, c) * df[c];
          const double u = dl_df * fb[r] * (1.0 - fb[r]);
          gb_total += u;
          for (std::size_t j = 0; j < d; ++j) gw[j] += u * xb(r, j);
        }
        const double step_b =
            cfg.optimizer == Optimizer::kMomentum
                ? (vel_b[0] = cfg.momentum * vel_b[0] -
                              cfg.learning_rate * gb_total)
                : -cfg.learning_rate * gb_total;
        res.binomial.b += step_b;
        for (std::size_t j = 0; j < d; ++j) {
          const double step =
              cfg.optimizer == Optimizer::kMomentum
                  ? (vel_w(0, j) = cfg.momentum * vel_w(0, j) -
                                   cfg.learning_rate * gw[j])
                  : -cfg.learning_rate * gw[j];
          res.binomial.w[j] += step;
        }
      }
    }

    const double trace_value =
        epoch_batches > 0
            ? epoch_loss / static_cast<double>(epoch_batches)
            : (res.trace.empty() ? std::numeric_limits<double>::infinity()
                                 : res.trace.back());
    res.trace.push_back(trace_value);

    bool finite = std::isfinite(trace_value) && trace_value < 1e12;
    if (is_linear) {
      for (const double c : res.linear.w.data())
        finite = finite && std::isfinite(c);
      for (const double c : res.linear.b) finite = finite && std::isfinite(c);
    } else {
      for (const double c : res.binomial.w)
        finite = finite && std::isfinite(c);
      finite = finite && std::isfinite(res.binomial.b);
    }
    if (!finite)
      throw TrainingDivergedError(
          epoch, "train: objective diverged at epoch " + std::to_string(epoch));
  }
  return res;
}

OrdinalDataset subsample(const OrdinalDataset& data, double fraction,
                         std::uint64_t seed) {
  data.validate();
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("subsample: fraction must lie in (0, 1]");
  if (fraction == 1.0) return data;

  std::vector<std::size_t> train_idx = data.indices_of(SplitTag::kTrain);
  const std::size_t m = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(train_idx.size())));
  Rng rng(derive_seed(seed, 151));
  rng.shuffle(train_idx);
  train_idx.resize(m);

  std::vector<char> keep(data.n(), 0);
  for (std::size_t i = 0; i < data.n(); ++i)
    if (data.split[i] != SplitTag::kTrain) keep[i] = 1;
  for (const std::size_t i : train_idx) keep[i] = 1;

  OrdinalDataset out;
  out.space = data.space;
  const std::size_t rows =
      static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));
  out.x = Matrix(rows, data.dim());
  out.y.reserve(rows);
  out.split.reserve(rows);
  std::size_t w = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (!keep[i]) continue;
    for (std::size_t j = 0; j < data.dim(); ++j) out.x(w, j) = data.x(i, j);
    out.y.push_back(data.y[i]);
    out.split.push_back(data.split[i]);
    ++w;
  }

  std::vector<char> before(data.k() + 1, 0), after(data.k() + 1, 0);
  for (std::size_t i = 0; i < data.n(); ++i)
    if (data.split[i] == SplitTag::kTrain) before[data.y[i]] = 1;
  for (std::size_t i = 0; i < out.n(); ++i)
    if (out.split[i] == SplitTag::kTrain) after[out.y[i]] = 1;
  const bool dropped = before != after;

  out.class_drop_warning = data.class_drop_warning || dropped;
  out.provenance = data.provenance + " | subsample f=" +
                   std::to_string(fraction) + " seed=" + std::to_string(seed);
  if (dropped) out.provenance += " [warn: dropped train class]";
  return out;
}

}  // namespace ordinal
