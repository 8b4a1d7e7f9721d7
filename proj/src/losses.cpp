#include "ordinal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ordinal/errors.hpp"

namespace ordinal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGradClamp = 1e30;

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

void check_class(int y, int k) {
  if (y < 1 || y > k)
    throw std::invalid_argument("loss: class index out of range");
}

// Distance weight |k-y|^alpha with integer distance.
double dist_pow(int d, double alpha) {
  return std::pow(static_cast<double>(d), alpha);
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kCe: return "ce";
    case LossKind::kOll: return "oll";
    case LossKind::kSoft: return "soft";
    case LossKind::kEmd: return "emd";
    case LossKind::kWkl: return "wkl";
    case LossKind::kMll: return "mll";
    case LossKind::kBinomialNll: return "binomial_nll";
  }
  return "?";
}

std::optional<LossKind> parse_loss_kind(const std::string& name) {
  if (name == "ce") return LossKind::kCe;
  if (name == "oll") return LossKind::kOll;
  if (name == "soft") return LossKind::kSoft;
  if (name == "emd") return LossKind::kEmd;
  if (name == "wkl") return LossKind::kWkl;
  if (name == "mll") return LossKind::kMll;
  if (name == "binomial_nll") return LossKind::kBinomialNll;
  return std::nullopt;
}

LossSpec LossSpec::make(LossKind kind) {
  LossSpec spec;
  spec.kind = kind;
  return spec;
}

void LossSpec::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("LossSpec: alpha must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("LossSpec: beta must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("LossSpec: lambda must lie in [0, 1]");
  if (!wkl_weights.empty()) {
    if (wkl_weights.rows() != wkl_weights.cols())
      throw std::invalid_argument("LossSpec: wkl_weights must be square");
    for (std::size_t i = 0; i < wkl_weights.rows(); ++i) {
      if (wkl_weights(i, i) != 0.0)
        throw std::invalid_argument("LossSpec: wkl_weights diagonal must be 0");
      for (std::size_t j = 0; j < wkl_weights.cols(); ++j) {
        if (wkl_weights(i, j) < 0.0 ||
            wkl_weights(i, j) != wkl_weights(j, i))
          throw std::invalid_argument(
              "LossSpec: wkl_weights must be symmetric and non-negative");
      }
    }
  }
}

Matrix quadratic_weights(int k_classes) {
  Matrix w(k_classes, k_classes);
  for (int i = 0; i < k_classes; ++i)
    for (int j = 0; j < k_classes; ++j)
      w(i, j) = static_cast<double>((i - j) * (i - j));
  return w;
}

std::vector<double> grad_z_from_grad_p(std::span<const double> p,
                                       std::span<const double> grad_p) {
  double dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * grad_p[i];
  std::vector<double> gz(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) gz[i] = p[i] * (grad_p[i] - dot);
  return gz;
}

LossEval ce(std::span<const double> p, int y) {
  const int k = static_cast<int>(p.size());
  check_class(y, k);
  LossEval ev;
  ev.grad_p.assign(k, 0.0);
  const double py = p[y - 1];
  if (py <= 0.0) {
    ev.value = kInf;
    ev.grad_p[y - 1] = -kGradClamp;
    ev.saturated = true;
  } else {
    ev.value = -std::log(py);
    ev.grad_p[y - 1] = -1.0 / py;
  }
  ev.grad_z = grad_z_from_grad_p(p, ev.grad_p);
  return ev;
}

LossEval oll(std::span<const double> p, int y, double alpha) {
  const int k = static_cast<int>(p.size());
  check_class(y, k);
  if (!(alpha > 0.0)) throw std::invalid_argument("oll: alpha must be > 0");
  LossEval ev;
  ev.grad_p.assign(k, 0.0);
  for (int j = 1; j <= k; ++j) {
    if (j == y) continue;
    const double w = dist_pow(std::abs(j - y), alpha);
    const double q = 1.0 - p[j - 1];
    if (q <= 0.0) {
      ev.value = kInf;
      ev.grad_p[j - 1] = kGradClamp;
      ev.saturated = true;
    } else {
      if (!ev.saturated) ev.value += w * -std::log1p(-p[j - 1]);
      ev.grad_p[j - 1] = w / q;
    }
  }
  ev.grad_z = grad_z_from_grad_p(p, ev.grad_p);
  return ev;
}

ProbVector soft_labels(int y, double beta, int k_classes) {
  check_class(y, k_classes);
  if (!(beta > 0.0))
    throw std::invalid_argument("soft_labels: beta must be > 0");
  std::vector<double> t(k_classes);
  double sum = 0.0;
  for (int j = 1; j <= k_classes; ++j) {
    t[j - 1] = std::exp(-beta * std::abs(j - y));
    sum += t[j - 1];
  }
  for (double& v : t) v /= sum;
  return ProbVector(std::move(t));
}

ProbVector soft_labels(int y, double beta, const LabelSpace& space) {
  return soft_labels(y, beta, space.k());
}

LossEval soft_loss(std::span<const double> p, int y, double beta) {
  const int k = static_cast<int>(p.size());
  const ProbVector t = soft_labels(y, beta, k);
  LossEval ev;
  ev.grad_p.assign(k, 0.0);
  for (int j = 0; j < k; ++j) {
    if (t[j] == 0.0) continue;  // underflowed tail weight contributes nothing
    if (p[j] <= 0.0) {
      ev.value = kInf;
      ev.grad_p[j] = -kGradClamp;
      ev.saturated = true;
    } else {
      if (!ev.saturated) ev.value += t[j] * -std::log(p[j]);
      ev.grad_p[j] = -t[j] / p[j];
    }
  }
  ev.grad_z = grad_z_from_grad_p(p, ev.grad_p);
  return ev;
}

LossEval emd(std::span<const double> p, int y) {
  const int k = static_cast<int>(p.size());
  check_class(y, k);
  LossEval ev;
  ev.grad_p.assign(k, 0.0);
  // Running CDF gap; the truth CDF is the step function 1[j >= y].
  std::vector<double> gap(k);
  double run = 0.0;
  for (int j = 0; j < k; ++j) {
    run += p[j];
    const double truth = (j >= y - 1) ? 1.0 : 0.0;
    gap[j] = run - truth;
    ev.value += gap[j] * gap[j];
  }
  // d value / d p_i = sum over prefixes containing i of 2 * gap.
  double suffix = 0.0;
  for (int j = k - 1; j >= 0; --j) {
    suffix += 2.0 * gap[j];
    ev.grad_p[j] = suffix;
  }
  ev.grad_z = grad_z_from_grad_p(p, ev.grad_p);
  return ev;
}

LossEval mll(std::span<const double> p, int y, double lambda, double alpha) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("mll: lambda must lie in [0, 1]");
  // Exact identity at the endpoints, bit for bit.
  if (lambda == 1.0) return ce(p, y);
  if (lambda == 0.0) return oll(p, y, alpha);
  const LossEval a = ce(p, y);
  const LossEval b = oll(p, y, alpha);
  LossEval ev;
  ev.saturated = a.saturated || b.saturated;
  ev.value = ev.saturated ? kInf : lambda * a.value + (1.0 - lambda) * b.value;
  ev.grad_p.resize(p.size());
  ev.grad_z.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    ev.grad_p[i] = lambda * a.grad_p[i] + (1.0 - lambda) * b.grad_p[i];
    ev.grad_z[i] = lambda * a.grad_z[i] + (1.0 - lambda) * b.grad_z[i];
  }
  return ev;
}

WklAccumulators wkl_accumulators(const Matrix& p_batch,
                                 const std::vector<int>& y_batch) {
  const std::size_t n = p_batch.rows();
  const std::size_t k = p_batch.cols();
  if (n < 2) throw std::invalid_argument("wkl: batch must hold at least 2 samples");
  if (y_batch.size() != n)
    throw std::invalid_argument("wkl: batch size mismatch");
  WklAccumulators acc;
  acc.observed = Matrix(k, k);
  acc.expected = Matrix(k, k);
  std::vector<double> r(k, 0.0), c(k, 0.0);
  for (std::size_t row = 0; row < n; ++row) {
    const int y = y_batch[row];
    check_class(y, static_cast<int>(k));
    r[y - 1] += 1.0 / n;
    for (std::size_t j = 0; j < k; ++j) {
      acc.observed(y - 1, j) += p_batch(row, j) / n;
      c[j] += p_batch(row, j) / n;
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) acc.expected(i, j) = r[i] * c[j];
  return acc;
}

BatchLossEval wkl(const Matrix& p_batch, const std::vector<int>& y_batch,
                  const Matrix& weights) {
  const std::size_t n = p_batch.rows();
  const std::size_t k = p_batch.cols();
  Matrix w = weights.empty() ? quadratic_weights(static_cast<int>(k)) : weights;
  if (w.rows() != k || w.cols() != k)
    throw std::invalid_argument("wkl: weight matrix shape mismatch");

  WklAccumulators acc = wkl_accumulators(p_batch, y_batch);
  std::vector<double> r(k, 0.0), c(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      r[i] += acc.observed(i, j);
      c[j] += acc.expected(i, j);
    }
  }
  // c above sums E over i = r_i c_j, giving c_j directly because sum r = 1.
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      num += w(i, j) * acc.observed(i, j);
      den += w(i, j) * acc.expected(i, j);
    }
  }
  if (den < 1e-12)
    throw DegenerateBatchError("wkl: chance-agreement mass below 1e-12");
  acc.kappa = 1.0 - num / den;

  BatchLossEval ev;
  ev.value = -acc.kappa;
  ev.grad_p = Matrix(n, k);
  ev.grad_z = Matrix(n, k);
  // s_j = sum_i w_ij r_i is the column weight of the chance term.
  std::vector<double> s(k, 0.0);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < k; ++i) s[j] += w(i, j) * r[i];
  for (std::size_t row = 0; row < n; ++row) {
    const int y = y_batch[row];
    for (std::size_t j = 0; j < k; ++j) {
      ev.grad_p(row, j) =
          (w(y - 1, j) * den - num * s[j]) / (den * den) / n;
    }
    const auto gz = grad_z_from_grad_p(p_batch.row(row), ev.grad_p.row(row));
    for (std::size_t j = 0; j < k; ++j) ev.grad_z(row, j) = gz[j];
  }
  return ev;
}

ProbVector binomial_pmf(const BinomialHead& head) {
  if (head.k_classes < 2)
    throw std::invalid_argument("binomial_pmf: K must be >= 2");
  if (!(head.f >= 0.0 && head.f <= 1.0))
    throw std::invalid_argument("binomial_pmf: f must lie in [0, 1]");
  const int m = head.k_classes - 1;
  // Pascal row for C(m, j).
  std::vector<double> coef(m + 1, 1.0);
  for (int j = 1; j <= m; ++j) coef[j] = coef[j - 1] * (m - j + 1) / j;
  std::vector<double> pmf(head.k_classes);
  for (int j = 0; j <= m; ++j)
    pmf[j] = coef[j] * ipow(head.f, j) * ipow(1.0 - head.f, m - j);
  return ProbVector(std::move(pmf));
}

std::vector<double> binomial_pmf_df(const BinomialHead& head) {
  const int m = head.k_classes - 1;
  std::vector<double> coef(m + 1, 1.0);
  for (int j = 1; j <= m; ++j) coef[j] = coef[j - 1] * (m - j + 1) / j;
  std::vector<double> d(head.k_classes, 0.0);
  const double f = head.f;
  for (int j = 0; j <= m; ++j) {
    double grow = 0.0, shrink = 0.0;
    if (j > 0) grow = j * ipow(f, j - 1) * ipow(1.0 - f, m - j);
    if (m - j > 0) shrink = (m - j) * ipow(f, j) * ipow(1.0 - f, m - j - 1);
    d[j] = coef[j] * (grow - shrink);
  }
  return d;
}

LossEval evaluate(const LossSpec& spec, std::span<const double> p, int y) {
  spec.validate();
  switch (spec.kind) {
    case LossKind::kCe: return ce(p, y);
    case LossKind::kOll: return oll(p, y, spec.alpha);
    case LossKind::kSoft: return soft_loss(p, y, spec.beta);
    case LossKind::kEmd: return emd(p, y);
    case LossKind::kMll: return mll(p, y, spec.lambda, spec.alpha);
    case LossKind::kBinomialNll: return ce(p, y);
    case LossKind::kWkl:
      throw std::invalid_argument(
          "evaluate: wkl is batch-level; use evaluate_batch");
  }
  throw std::invalid_argument("evaluate: unknown loss kind");
}

BatchLossEval evaluate_batch(const LossSpec& spec, const Matrix& p_batch,
                             const std::vector<int>& y_batch) {
  if (spec.kind == LossKind::kWkl)
    return wkl(p_batch, y_batch, spec.wkl_weights);
  const std::size_t n = p_batch.rows();
  const std::size_t k = p_batch.cols();
  if (n == 0) throw std::invalid_argument("evaluate_batch: empty batch");
  if (y_batch.size() != n)
    throw std::invalid_argument("evaluate_batch: batch size mismatch");
  BatchLossEval ev;
  ev.grad_p = Matrix(n, k);
  ev.grad_z = Matrix(n, k);
  for (std::size_t row = 0; row < n; ++row) {
    const LossEval e = evaluate(spec, p_batch.row(row), y_batch[row]);
    ev.saturated = ev.saturated || e.saturated;
    ev.value += e.value / n;
    for (std::size_t j = 0; j < k; ++j) {
      ev.grad_p(row, j) = e.grad_p[j] / n;
      ev.grad_z(row, j) = e.grad_z[j] / n;
    }
  }
  return ev;
}

namespace {

// Max |a - fd| over coordinates, scaled by the largest gradient magnitude at
// the point (or 1 when the gradient is tiny) so near-zero entries do not
// inflate the report.
double max_scaled_err(const std::vector<double>& analytic,
                      const std::vector<double>& fd) {
  double scale = 1e-8;
  for (double v : analytic) scale = std::max(scale, std::abs(v));
  for (double v : fd) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / scale);
  return worst;
}

}  // namespace

double grad_check(const LossSpec& spec, std::span<const double> point, int y,
                  double h, bool through_softmax) {
  const std::size_t k = point.size();
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> analytic, fd(k);
  if (through_softmax) {
    analytic = evaluate(spec, softmax(x), y).grad_z;
  } else {
    analytic = evaluate(spec, x, y).grad_p;
  }
  for (std::size_t i = 0; i < k; ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = through_softmax ? evaluate(spec, softmax(x), y).value
                                      : evaluate(spec, x, y).value;
    x[i] = keep - h;
    const double dn = through_softmax ? evaluate(spec, softmax(x), y).value
                                      : evaluate(spec, x, y).value;
    x[i] = keep;
    fd[i] = (up - dn) / (2.0 * h);
  }
  return max_scaled_err(analytic, fd);
}

double grad_check_wkl(const Matrix& point, const std::vector<int>& y_batch,
                      const Matrix& weights, double h, bool through_softmax) {
  const std::size_t n = point.rows();
  const std::size_t k = point.cols();
  Matrix probs = point;
  if (through_softmax) {
    for (std::size_t row = 0; row < n; ++row) {
      const ProbVector p = softmax(point.row(row));
      for (std::size_t j = 0; j < k; ++j) probs(row, j) = p[j];
    }
  }
  const BatchLossEval ev = wkl(probs, y_batch, weights);
  const Matrix& analytic = through_softmax ? ev.grad_z : ev.grad_p;

  Matrix x = point;
  std::vector<double> flat_a, flat_fd;
  auto value_at = [&](const Matrix& pt) {
    if (!through_softmax) return wkl(pt, y_batch, weights).value;
    Matrix pr(n, k);
    for (std::size_t row = 0; row < n; ++row) {
      const ProbVector p = softmax(pt.row(row));
      for (std::size_t j = 0; j < k; ++j) pr(row, j) = p[j];
    }
    return wkl(pr, y_batch, weights).value;
  };
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t j = 0; j < k; ++j) {
      const double keep = x(row, j);
      x(row, j) = keep + h;
      const double up = value_at(x);
      x(row, j) = keep - h;
      const double dn = value_at(x);
      x(row, j) = keep;
      flat_a.push_back(analytic(row, j));
      flat_fd.push_back((up - dn) / (2.0 * h));
    }
  }
  return max_scaled_err(flat_a, flat_fd);
}

}  // namespace ordinal
