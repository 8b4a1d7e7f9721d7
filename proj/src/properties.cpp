#include "ordinal/properties.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include "ordinal/errors.hpp"
#include "ordinal/rng.hpp"

namespace ordinal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPsrTol = 1e-3;
constexpr double kJensenSlack = 1e-9;   // numerical allowance, never stored
constexpr double kJensenFail = 1e-7;    // violation size that flips a verdict

std::vector<double> dirichlet_uniform(Rng& rng, int k) {
  std::vector<double> p(k);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    p[i] = -std::log(rng.uniform_open01());
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> interior_point(Rng& rng, int k, double margin) {
  std::vector<double> p = dirichlet_uniform(rng, k);
  for (int i = 0; i < k; ++i)
    p[i] = (1.0 - margin) * p[i] + margin / k;
  return p;
}

double linf_gap(std::span<const double> a, std::span<const double> b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    gap = std::max(gap, std::abs(a[i] - b[i]));
  return gap;
}

// ---------------------------------------------------------------------------
// Exponentiated-gradient descent on a product of simplices. Rows of the
// iterate are renormalized after each multiplicative update; a backtracking
// step size keeps every accepted move a strict descent.

struct EgdResult {
  Matrix point;
  double value = kInf;
  bool converged = false;
};

EgdResult egd_minimize(const std::function<double(const Matrix&)>& value_of,
                       const std::function<Matrix(const Matrix&)>& grad_of,
                       Matrix start, int max_iters) {
  const std::size_t n = start.rows(), k = start.cols();
  EgdResult res;
  res.point = std::move(start);
  res.value = value_of(res.point);
  if (!std::isfinite(res.value)) return res;

  double eta = 0.5;
  int stall = 0;
  for (int iter = 0; iter < max_iters; ++iter) {
    const Matrix g = grad_of(res.point);
    Matrix cand(n, k);
    for (std::size_t r = 0; r < n; ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double step = std::clamp(eta * g(r, j), -40.0, 40.0);
        cand(r, j) = res.point(r, j) * std::exp(-step);
        sum += cand(r, j);
      }
      for (std::size_t j = 0; j < k; ++j) cand(r, j) /= sum;
    }
    const double cv = value_of(cand);
    if (std::isfinite(cv) && cv < res.value) {
      const double improve = res.value - cv;
      double move = 0.0;
      for (std::size_t i = 0; i < cand.data().size(); ++i)
        move = std::max(move,
                        std::abs(cand.data()[i] - res.point.data()[i]));
      res.point = std::move(cand);
      res.value = cv;
      eta = std::min(eta * 1.3, 1e3);
      if (improve < 1e-15 * (1.0 + std::abs(cv)) && move < 1e-12) {
        if (++stall >= 25) {
          res.converged = true;
          return res;
        }
      } else {
        stall = 0;
      }
    } else {
      eta *= 0.5;
      if (eta < 1e-14) {
        res.converged = true;  // no numerically expressible descent remains
        return res;
      }
    }
  }
  return res;  // budget exhausted while still descending
}

Matrix single_row(std::span<const double> p) {
  Matrix m(1, p.size());
  for (std::size_t j = 0; j < p.size(); ++j) m(0, j) = p[j];
  return m;
}

std::vector<int> balanced_batch_labels(int k) {
  std::vector<int> y;
  for (int c = 1; c <= k; ++c) {
    y.push_back(c);
    y.push_back(c);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi for symmetric matrices; returns the smallest eigenvalue and
// its eigenvector. Plenty for the reduced Hessian sizes this module probes.

std::pair<double, std::vector<double>> min_eigen_sym(Matrix a) {
  const std::size_t n = a.rows();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (a(i, i) < a(arg, arg)) arg = i;
  std::vector<double> vec(n);
  for (std::size_t i = 0; i < n; ++i) vec[i] = v(i, arg);
  return {a(arg, arg), vec};
}

// Reduced finite-difference Hessian of `f` restricted to the affine hull of
// the product of simplices: coordinates u_(r,i) move row r along e_i - e_K.
Matrix reduced_fd_hessian(const std::function<double(const Matrix&)>& f,
                          const Matrix& x, double h) {
  const std::size_t n = x.rows(), k = x.cols(), dim = n * (k - 1);
  auto shifted = [&](std::span<const double> u) {
    Matrix p = x;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i + 1 < k; ++i) {
        p(r, i) += u[r * (k - 1) + i];
        p(r, k - 1) -= u[r * (k - 1) + i];
      }
    }
    return p;
  };
  std::vector<double> u(dim, 0.0);
  const double f0 = f(x);
  Matrix hess(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    u[i] = h;
    const double fp = f(shifted(u));
    u[i] = -h;
    const double fm = f(shifted(u));
    u[i] = 0.0;
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < dim; ++j) {
      u[i] = h;
      u[j] = h;
      const double fpp = f(shifted(u));
      u[j] = -h;
      const double fpm = f(shifted(u));
      u[i] = -h;
      u[j] = h;
      const double fmp = f(shifted(u));
      u[j] = -h;
      const double fmm = f(shifted(u));
      u[i] = 0.0;
      u[j] = 0.0;
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  return hess;
}

}  // namespace

const char* profile_shape_name(ProfileShape shape) {
  switch (shape) {
    case ProfileShape::kFlat: return "FLAT";
    case ProfileShape::kIncreasing: return "INCREASING";
    case ProfileShape::kMixed: return "MIXED";
  }
  return "?";
}

PsrReport verify_psr(const LossSpec& spec, int y, int k_classes,
                     std::uint64_t seed) {
  spec.validate();
  if (k_classes < 2)
    throw std::invalid_argument("verify_psr: K must be >= 2");
  const bool batch_loss = spec.kind == LossKind::kWkl;
  const std::vector<int> y_batch =
      batch_loss ? balanced_batch_labels(k_classes) : std::vector<int>{y};
  if (!batch_loss && (y < 1 || y > k_classes))
    throw std::invalid_argument("verify_psr: class index out of range");
  const std::size_t rows = batch_loss ? y_batch.size() : 1;

  const auto value_of = [&](const Matrix& p) -> double {
    try {
      if (batch_loss) return wkl(p, y_batch, spec.wkl_weights).value;
      return evaluate(spec, p.row(0), y).value;
    } catch (const DegenerateBatchError&) {
      return kInf;
    }
  };
  const auto grad_of = [&](const Matrix& p) -> Matrix {
    if (batch_loss) return wkl(p, y_batch, spec.wkl_weights).grad_p;
    return single_row(evaluate(spec, p.row(0), y).grad_p);
  };

  // Start set: near-one-hot, uniform, then 20 seeded random restarts.
  std::vector<Matrix> starts;
  {
    Matrix hot(rows, k_classes), flat(rows, k_classes, 1.0 / k_classes);
    for (std::size_t r = 0; r < rows; ++r) {
      const ProbVector ph =
          perturbed_one_hot(y_batch[batch_loss ? r : 0], 1e-4, k_classes);
      for (int j = 0; j < k_classes; ++j) hot(r, j) = ph[j];
    }
    starts.push_back(std::move(hot));
    starts.push_back(std::move(flat));
    Rng rng(derive_seed(seed, 17));
    for (int s = 0; s < 20; ++s) {
      Matrix m(rows, k_classes);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::vector<double> p = dirichlet_uniform(rng, k_classes);
        for (int j = 0; j < k_classes; ++j) m(r, j) = p[j];
      }
      starts.push_back(std::move(m));
    }
  }

  const int max_iters = batch_loss ? 15000 : 30000;
  EgdResult best;
  for (Matrix& start : starts) {
    EgdResult run =
        egd_minimize(value_of, grad_of, std::move(start), max_iters);
    if (run.value < best.value) best = std::move(run);
  }

  PsrReport rep;
  double gap = 0.0;
  std::size_t worst_row = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double row_gap = linf_gap(
        best.point.row(r), one_hot(y_batch[batch_loss ? r : 0], k_classes));
    if (row_gap >= gap) {
      gap = row_gap;
      worst_row = r;
    }
  }
  rep.gap = gap;
  rep.minimizer = ProbVector(std::vector<double>(
      best.point.row(worst_row).begin(), best.point.row(worst_row).end()));
  rep.holds = gap <= kPsrTol;
  rep.inconclusive = !rep.holds && !best.converged;
  return rep;
}

namespace {

// Try to turn a negative-curvature direction into a verified Jensen witness:
// step to both sides along the direction, staying strictly inside the
// simplex, and keep the witness only if the actual midpoint check fails.
std::optional<ConvexityWitness> confirm_direction(
    const std::function<double(const Matrix&)>& value_of, const Matrix& x,
    const std::vector<double>& direction, int k) {
  const std::size_t n = x.rows();
  Matrix dir(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    for (int i = 0; i + 1 < k; ++i) {
      dir(r, i) += direction[r * (k - 1) + i];
      dir(r, k - 1) -= direction[r * (k - 1) + i];
    }
  }
  double limit = kInf;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    if (dir.data()[i] != 0.0)
      limit = std::min(limit, x.data()[i] / std::abs(dir.data()[i]));
  }
  if (!std::isfinite(limit) || limit <= 0.0) return std::nullopt;
  const double delta = 0.9 * limit;
  Matrix p = x, q = x;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    p.data()[i] += delta * dir.data()[i];
    q.data()[i] -= delta * dir.data()[i];
  }
  const double fp = value_of(p), fq = value_of(q), fm = value_of(x);
  if (!std::isfinite(fp) || !std::isfinite(fq) || !std::isfinite(fm))
    return std::nullopt;
  const double gap = 0.5 * fp + 0.5 * fq - fm;
  if (gap >= -kJensenFail) return std::nullopt;
  ConvexityWitness w;
  w.p = p.data();
  w.q = q.data();
  w.lambda = 0.5;
  w.violation = -gap;
  return w;
}

}  // namespace

ConvexityReport verify_convexity(const LossSpec& spec, int k_classes,
                                 int trials, std::uint64_t seed) {
  spec.validate();
  if (k_classes < 2)
    throw std::invalid_argument("verify_convexity: K must be >= 2");
  if (trials < 1000)
    throw std::invalid_argument("verify_convexity: need at least 1000 trials");

  const bool batch_loss = spec.kind == LossKind::kWkl;
  const std::vector<int> y_batch =
      batch_loss ? balanced_batch_labels(k_classes) : std::vector<int>{};
  const std::size_t rows = batch_loss ? y_batch.size() : 1;

  ConvexityReport rep;
  rep.trials = trials;
  Rng rng(derive_seed(seed, 23));

  int current_y = 1;
  const auto value_of = [&](const Matrix& p) -> double {
    try {
      if (batch_loss) return wkl(p, y_batch, spec.wkl_weights).value;
      return evaluate(spec, p.row(0), current_y).value;
    } catch (const DegenerateBatchError&) {
      return kInf;
    }
  };
  const auto random_point = [&]() {
    Matrix m(rows, k_classes);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::vector<double> p = dirichlet_uniform(rng, k_classes);
      for (int j = 0; j < k_classes; ++j) m(r, j) = p[j];
    }
    return m;
  };

  for (int t = 0; t < trials; ++t) {
    current_y = 1 + static_cast<int>(rng.uniform_below(k_classes));
    const Matrix p = random_point();
    const Matrix q = random_point();
    const double lambda = rng.uniform01();
    const double fp = value_of(p), fq = value_of(q);
    if (!std::isfinite(fp) || !std::isfinite(fq)) continue;
    Matrix mix(rows, k_classes);
    for (std::size_t i = 0; i < mix.data().size(); ++i)
      mix.data()[i] = lambda * p.data()[i] + (1.0 - lambda) * q.data()[i];
    const double fm = value_of(mix);
    if (!std::isfinite(fm)) continue;
    const double gap = lambda * fp + (1.0 - lambda) * fq - fm;
    (void)kJensenSlack;  // gaps in (-1e-7, -1e-9] are tolerated, not stored
    if (gap < -kJensenFail) {
      ConvexityWitness w;
      w.p = p.data();
      w.q = q.data();
      w.lambda = lambda;
      w.violation = -gap;
      if (batch_loss)
        w.y_batch = y_batch;
      else
        w.y = current_y;
      rep.witness = std::move(w);
      rep.holds = false;
      return rep;
    }
  }

  // Hessian probes on the affine hull; any negative direction must survive
  // an explicit midpoint check before it can flip the verdict.
  const int probes = 100;
  const double h = 1e-4;
  for (int probe = 0; probe < probes; ++probe) {
    current_y = 1 + static_cast<int>(rng.uniform_below(k_classes));
    Matrix x(rows, k_classes);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::vector<double> p = interior_point(rng, k_classes, 0.15);
      for (int j = 0; j < k_classes; ++j) x(r, j) = p[j];
    }
    const Matrix hess = reduced_fd_hessian(value_of, x, h);
    double scale = 1.0;
    for (double v : hess.data()) scale = std::max(scale, std::abs(v));
    const auto [lmin, direction] = min_eigen_sym(hess);
    if (lmin < -1e-4 * scale) {
      auto w = confirm_direction(value_of, x, direction, k_classes);
      if (w.has_value()) {
        if (batch_loss)
          w->y_batch = y_batch;
        else
          w->y = current_y;
        rep.witness = std::move(w);
        rep.holds = false;
        return rep;
      }
    }
  }
  return rep;
}

bool is_unimodal(std::span<const double> p) {
  const int k = static_cast<int>(p.size());
  if (k == 0) throw std::invalid_argument("is_unimodal: empty vector");
  // A strict dip needs a strictly larger entry somewhere on each side.
  std::vector<double> left_max(k), right_max(k);
  double run = -kInf;
  for (int i = 0; i < k; ++i) {
    left_max[i] = run;
    run = std::max(run, p[i]);
  }
  run = -kInf;
  for (int i = k - 1; i >= 0; --i) {
    right_max[i] = run;
    run = std::max(run, p[i]);
  }
  for (int l = 1; l + 1 < k; ++l) {
    if (left_max[l] > p[l] && right_max[l] > p[l]) return false;
  }
  return true;
}

bool is_unimodal(const ProbVector& p) {
  return is_unimodal(static_cast<std::span<const double>>(p));
}

UmStats um_stats_of(const Matrix& preds) {
  if (preds.rows() == 0)
    throw std::domain_error("um_stats_of: no prediction rows");
  UmStats stats;
  stats.n_checked = preds.rows();
  for (std::size_t r = 0; r < preds.rows(); ++r) {
    if (is_unimodal(preds.row(r))) ++stats.n_unimodal;
  }
  stats.fraction =
      static_cast<double>(stats.n_unimodal) / static_cast<double>(stats.n_checked);
  return stats;
}

double um_fraction(const Matrix& preds) { return um_stats_of(preds).fraction; }

namespace {

ProfileShape classify_profile(const std::vector<std::pair<int, double>>& pts) {
  if (pts.size() < 2) return ProfileShape::kMixed;
  double off_min = kInf, off_max = -kInf;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    off_min = std::min(off_min, pts[i].second);
    off_max = std::max(off_max, pts[i].second);
  }
  if (off_max - off_min < 1e-9) return ProfileShape::kFlat;
  bool increasing = true;
  for (std::size_t i = 1; i < pts.size(); ++i)
    increasing = increasing && pts[i].second > pts[i - 1].second;
  return increasing ? ProfileShape::kIncreasing : ProfileShape::kMixed;
}

}  // namespace

OrdinalityProfile ordinality_profile(const LossSpec& spec, int y,
                                     int k_classes, double eps) {
  spec.validate();
  if (k_classes < 2)
    throw std::invalid_argument("ordinality_profile: K must be >= 2");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("ordinality_profile: eps must lie in (0, 1)");

  OrdinalityProfile profile;
  if (spec.kind == LossKind::kWkl) {
    // Batch probe: every row of a balanced batch misses its own truth by d,
    // displaced toward whichever side stays on the axis. The profile covers
    // the d-range realizable by every row.
    const std::vector<int> y_batch = balanced_batch_labels(k_classes);
    int d_common = k_classes - 1;
    for (int c = 1; c <= k_classes; ++c)
      d_common = std::min(d_common, std::max(c - 1, k_classes - c));
    for (int d = 0; d <= d_common; ++d) {
      Matrix p(y_batch.size(), k_classes);
      for (std::size_t r = 0; r < y_batch.size(); ++r) {
        const int target =
            (y_batch[r] + d <= k_classes) ? y_batch[r] + d : y_batch[r] - d;
        const ProbVector row = perturbed_one_hot(target, eps, k_classes);
        for (int j = 0; j < k_classes; ++j) p(r, j) = row[j];
      }
      profile.points.emplace_back(d, wkl(p, y_batch, spec.wkl_weights).value);
    }
  } else {
    if (y < 1 || y > k_classes)
      throw std::invalid_argument("ordinality_profile: class out of range");
    const int d_max = std::max(y - 1, k_classes - y);
    for (int d = 0; d <= d_max; ++d) {
      double worst = -kInf;
      for (const int target : {y - d, y + d}) {
        if (target < 1 || target > k_classes) continue;
        const ProbVector p = perturbed_one_hot(target, eps, k_classes);
        worst = std::max(worst, evaluate(spec, p, y).value);
      }
      profile.points.emplace_back(d, worst);
    }
  }
  profile.shape = classify_profile(profile.points);
  return profile;
}

std::vector<PropertyReport> property_matrix(const std::vector<LossSpec>& specs,
                                            int k_classes, int trials) {
  if (specs.empty())
    throw std::invalid_argument("property_matrix: empty spec list");
  std::vector<PropertyReport> out;
  out.reserve(specs.size());
  for (const LossSpec& spec : specs) {
    PropertyReport rep;
    rep.loss = spec;
    if (spec.kind == LossKind::kWkl) {
      rep.psr = verify_psr(spec, 1, k_classes);
    } else {
      // Certify at every class; keep the worst gap on record.
      bool holds = true, inconclusive = false;
      for (int y = 1; y <= k_classes; ++y) {
        PsrReport one = verify_psr(spec, y, k_classes, 90001 + y);
        holds = holds && one.holds;
        inconclusive = inconclusive || one.inconclusive;
        if (y == 1 || one.gap > rep.psr.gap) rep.psr = std::move(one);
      }
      rep.psr.holds = holds;
      rep.psr.inconclusive = inconclusive;
    }
    rep.convex = verify_convexity(spec, k_classes, trials);
    rep.ordinality = ordinality_profile(spec, 1, k_classes, 0.1);
    rep.um_guaranteed = spec.kind == LossKind::kBinomialNll;
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace ordinal
