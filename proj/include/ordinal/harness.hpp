#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ordinal/losses.hpp"
#include "ordinal/metrics.hpp"
#include "ordinal/model.hpp"
#include "ordinal/properties.hpp"

namespace ordinal {

// Canonical loss naming used in configs, tables, and golden files.
std::string loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);

// Where the experiment's rows come from.
enum class DataSource { kSynthetic, kFile };
enum class FileFormat { kText, kNumeric };

// Parsed experiment description. The config grammar is plain text: one
// `key = value` per line, `#` starts a comment, lists are comma-separated.
// Unknown keys are errors, never silently ignored.
struct ExperimentConfig {
  DataSource source = DataSource::kSynthetic;
  std::string path;                         // data.path (file source)
  FileFormat format = FileFormat::kNumeric; // data.format
  int hash_dim = 512;                       // data.hash_dim (text ingestion)
  int n = 1000;                             // data.n
  int d = 10;                               // data.d
  int k = 5;                                // data.k
  double sigma = 0.5;                       // data.sigma
  double skew = 0.0;                        // data.skew
  double noise_asym = 0.0;                  // data.noise_asym
  std::uint64_t data_seed = 1;              // data.seed

  std::vector<LossKind> losses = {LossKind::kCe};
  double alpha = 1.5;   // OLL exponent (also inside MLL)
  double beta = 1.0;    // SOFT temperature
  double lambda = 0.5;  // MLL mixing weight

  std::vector<double> fractions = {1.0};
  std::vector<std::uint64_t> seeds = {1};
  TrainConfig train;       // loss field is overwritten per grid cell
  std::string out = "out";

  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical round trip: serialize always emits the same bytes for logically
// equal configs, whatever the source file looked like.
std::string serialize_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// One grid cell's outcome. wall_ms is measured but never serialized, so
// emitted artifacts stay byte-identical across reruns.
struct RunRecord {
  std::uint64_t config_hash = 0;
  LossKind loss = LossKind::kCe;
  double fraction = 1.0;
  std::uint64_t seed = 1;
  bool ok = false;
  std::string reason;       // empty when ok
  MetricReport metrics;     // valid when ok
  double um_percent = 0.0;  // % of test rows with unimodal predicted rows
  double wall_ms = 0.0;
  double trace_first = 0.0;
  double trace_last = 0.0;
};

// Dataset materialization per the config (synthetic or ingested file).
OrdinalDataset build_dataset(const ExperimentConfig& cfg);

// CSV ingestion. numeric: `label,f1,...,fD` with a fixed D inferred from
// the first row; text: `label,anything...` split at the first comma and
// hash-featurized to hash_dim L2-normalized rows. Labels are positive
// integers; K is the largest label seen, unless expect_k > 0 declares the
// label space, in which case any label above it is an error. Rows are
// tagged train/validation/test 70/15/15 in file order. Malformed input
// throws IngestError naming the first offending line.
OrdinalDataset ingest_csv(const std::string& path, FileFormat format,
                          int hash_dim, int expect_k = 0);

// Runs the full loss x fraction x seed grid. Diverged or degenerate cells
// come back ok=false with a reason; the grid always completes.
std::vector<RunRecord> run_grid(const ExperimentConfig& cfg,
                                const OrdinalDataset& data,
                                const std::string& out_dir);

// results.tsv: one row per (loss, fraction), columns F1/MSE/MAE/OB1 as
// "mean (std)" over the seeds that succeeded, seed count, and the failure
// reason when a row has no surviving seeds.
std::string render_results_table(const ExperimentConfig& cfg,
                                 const std::vector<RunRecord>& records);

// bench: dataset + grid + artifacts (results.tsv, records.jsonl,
// runs/<cell>/preds.tsv). Returns the records.
std::vector<RunRecord> cmd_bench(const ExperimentConfig& cfg,
                                 const std::string& out_dir);

// certify: property matrix over the requested losses, written as a TSV
// plus convexity witnesses as line-delimited JSON. When golden_path is
// given, PSR and CX verdicts are compared against it; any contradiction
// makes the exit code nonzero. Inconclusive optimizer verdicts are
// reported distinctly and only fail under strict.
struct CertifyOutcome {
  std::vector<PropertyReport> matrix;
  int exit_code = 0;
  std::vector<std::string> mismatches;    // golden contradictions
  std::vector<std::string> inconclusive;  // losses with unconverged searches
};
CertifyOutcome cmd_certify(const std::vector<LossSpec>& specs, int k_classes,
                           int trials, std::uint64_t seed,
                           const std::string& out_dir,
                           const std::string& golden_path, bool strict);

// Renders the certify matrix in golden-file form (also what ships as the
// bundled golden).
std::string render_property_matrix(const std::vector<PropertyReport>& matrix);

// um-report: recomputes %UM from the stored prediction rows of every run
// under out_dir (or just run_id when given) and cross-checks the recorded
// value. Unknown run ids throw std::invalid_argument.
struct UmReportRow {
  std::string run_id;
  LossKind loss = LossKind::kCe;
  double fraction = 1.0;
  std::uint64_t seed = 1;
  double um_percent = 0.0;
};
std::vector<UmReportRow> cmd_um_report(const std::string& out_dir,
                                       const std::string& run_id = "");

// profile: ordinality profile rows for one loss at a perturbation level.
std::string render_profile(const OrdinalityProfile& profile);

}  // namespace ordinal
