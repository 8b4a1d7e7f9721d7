#include "ordinal/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace ordinal {

namespace {

void check_pair(std::span<const int> pred, std::span<const int> truth) {
  if (pred.empty() || truth.empty())
    throw std::domain_error("metrics: empty input");
  if (pred.size() != truth.size())
    throw std::domain_error("metrics: pred/truth length mismatch");
}

}  // namespace

double weighted_f1(std::span<const int> pred, std::span<const int> truth,
                   int k_classes) {
  check_pair(pred, truth);
  if (k_classes < 1) throw std::domain_error("weighted_f1: K must be >= 1");
  std::vector<double> tp(k_classes, 0.0), fp(k_classes, 0.0),
      fn(k_classes, 0.0), support(k_classes, 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i], t = truth[i];
    if (p < 1 || p > k_classes || t < 1 || t > k_classes)
      throw std::domain_error("weighted_f1: class index out of range");
    support[t - 1] += 1.0;
    if (p == t) {
      tp[t - 1] += 1.0;
    } else {
      fp[p - 1] += 1.0;
      fn[t - 1] += 1.0;
    }
  }
  double sum = 0.0;
  for (int c = 0; c < k_classes; ++c) {
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    const double f1 = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
    sum += support[c] * f1;
  }
  return sum / static_cast<double>(pred.size());
}

double mse(std::span<const int> pred, std::span<const int> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(truth[i] - pred[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double mae(std::span<const int> pred, std::span<const int> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum += std::abs(static_cast<double>(truth[i] - pred[i]));
  return sum / static_cast<double>(pred.size());
}

double ob_k(std::span<const int> pred, std::span<const int> truth, int k) {
  check_pair(pred, truth);
  if (k < 0) throw std::domain_error("ob_k: k must be >= 0");
  std::size_t within = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(truth[i] - pred[i]) <= k) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(pred.size());
}

MetricReport compute_metrics(std::span<const int> pred,
                             std::span<const int> truth, int k_classes) {
  MetricReport rep;
  rep.f1_weighted = weighted_f1(pred, truth, k_classes);
  rep.mse = mse(pred, truth);
  rep.mae = mae(pred, truth);
  for (int k = 0; k < k_classes; ++k) rep.ob_k[k] = ob_k(pred, truth, k);
  return rep;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::domain_error("mean_std: no values");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

AggregatedReport mean_std_over_seeds(
    const std::vector<MetricReport>& reports) {
  if (reports.empty())
    throw std::domain_error("mean_std_over_seeds: no reports");
  AggregatedReport agg;
  agg.n_reports = reports.size();
  std::vector<double> buf;
  buf.reserve(reports.size());
  const auto collect = [&](auto field) {
    buf.clear();
    for (const MetricReport& r : reports) buf.push_back(field(r));
    return mean_std(buf);
  };
  agg.f1_weighted = collect([](const MetricReport& r) { return r.f1_weighted; });
  agg.mse = collect([](const MetricReport& r) { return r.mse; });
  agg.mae = collect([](const MetricReport& r) { return r.mae; });
  for (const auto& [k, v] : reports.front().ob_k) {
    (void)v;
    bool everywhere = true;
    for (const MetricReport& r : reports)
      everywhere = everywhere && r.ob_k.count(k) > 0;
    if (!everywhere) continue;
    buf.clear();
    for (const MetricReport& r : reports) buf.push_back(r.ob_k.at(k));
    agg.ob_k[k] = mean_std(buf);
  }
  return agg;
}

std::string format_mean_std(const MeanStd& m) {
  char out[64];
  std::snprintf(out, sizeof(out), "%.3f (%.3f)", m.mean, m.std);
  return out;
}

}  // namespace ordinal
