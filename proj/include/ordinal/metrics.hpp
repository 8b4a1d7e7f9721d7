#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace ordinal {

// Evaluation metrics over predicted vs true class indices (1-based).
// OB-k values are fractions in [0, 1]; any x100 scaling happens at report
// rendering, never here.
struct MetricReport {
  double f1_weighted = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::map<int, double> ob_k;  // k -> fraction within k positions
};

// Per-class F1 (0/0 cases scored 0) averaged with true-class-support
// weights. Throws std::domain_error on empty or mismatched inputs.
double weighted_f1(std::span<const int> pred, std::span<const int> truth,
                   int k_classes);

// Mean squared / absolute difference of class indices.
double mse(std::span<const int> pred, std::span<const int> truth);
double mae(std::span<const int> pred, std::span<const int> truth);

// Fraction of samples with |truth - pred| <= k (absolute index distance).
// k = 0 is plain accuracy.
double ob_k(std::span<const int> pred, std::span<const int> truth, int k);

// Full report with ob_k populated for k = 0 .. K-1.
MetricReport compute_metrics(std::span<const int> pred,
                             std::span<const int> truth, int k_classes);

// Mean and population standard deviation of one metric across seeds.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Per-metric aggregate over per-seed reports; ob_k aggregated over the keys
// common to every report.
struct AggregatedReport {
  std::size_t n_reports = 0;
  MeanStd f1_weighted;
  MeanStd mse;
  MeanStd mae;
  std::map<int, MeanStd> ob_k;
};

AggregatedReport mean_std_over_seeds(const std::vector<MetricReport>& reports);

MeanStd mean_std(std::span<const double> values);

// "mean (std)" with three decimals, the table cell format.
std::string format_mean_std(const MeanStd& m);

}  // namespace ordinal
