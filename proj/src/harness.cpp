#include "ordinal/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ordinal/errors.hpp"
#include "ordinal/rng.hpp"

namespace ordinal {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string num17(double v) { return fmt("%.17g", v); }
std::string numg(double v) { return fmt("%g", v); }

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v +
                                "'");
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v +
                                "'");
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string cell_id(LossKind loss, double fraction, std::uint64_t seed) {
  return loss_name(loss) + "_f" + numg(fraction) + "_s" +
         std::to_string(seed);
}

LossSpec cell_spec(const ExperimentConfig& cfg, LossKind kind) {
  LossSpec spec = LossSpec::make(kind);
  spec.alpha = cfg.alpha;
  spec.beta = cfg.beta;
  spec.lambda = cfg.lambda;
  return spec;
}

}  // namespace

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kCe: return "ce";
    case LossKind::kOll: return "oll";
    case LossKind::kSoft: return "soft";
    case LossKind::kEmd: return "emd";
    case LossKind::kWkl: return "wkl";
    case LossKind::kMll: return "mll";
    case LossKind::kBinomialNll: return "binomial_nll";
  }
  throw std::invalid_argument("loss_name: unknown kind");
}

LossKind loss_from_name(const std::string& name) {
  for (LossKind kind :
       {LossKind::kCe, LossKind::kOll, LossKind::kSoft, LossKind::kEmd,
        LossKind::kWkl, LossKind::kMll, LossKind::kBinomialNll})
    if (loss_name(kind) == name) return kind;
  throw std::invalid_argument("unknown loss name '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (losses.empty()) throw std::invalid_argument("config: no losses");
  if (fractions.empty()) throw std::invalid_argument("config: no fractions");
  if (seeds.empty()) throw std::invalid_argument("config: no seeds");
  for (const double f : fractions)
    if (!(f > 0.0) || f > 1.0)
      throw std::invalid_argument("config: fraction " + numg(f) +
                                  " outside (0, 1]");
  if (source == DataSource::kFile && path.empty())
    throw std::invalid_argument("config: data.source=file needs data.path");
  if (source == DataSource::kSynthetic) {
    if (n <= 0 || d <= 0 || k < 2)
      throw std::invalid_argument("config: bad synthetic shape");
    if (sigma < 0.0)
      throw std::invalid_argument("config: data.sigma must be >= 0");
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");

    if (key == "data.source") {
      if (value == "synthetic") cfg.source = DataSource::kSynthetic;
      else if (value == "file") cfg.source = DataSource::kFile;
      else
        throw std::invalid_argument("config: data.source must be "
                                    "synthetic or file, got '" + value + "'");
    } else if (key == "data.path") {
      cfg.path = value;
    } else if (key == "data.format") {
      if (value == "text") cfg.format = FileFormat::kText;
      else if (value == "numeric") cfg.format = FileFormat::kNumeric;
      else
        throw std::invalid_argument(
            "config: data.format must be text or numeric, got '" + value +
            "'");
    } else if (key == "data.hash_dim") {
      cfg.hash_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "data.n") {
      cfg.n = static_cast<int>(parse_int(key, value));
    } else if (key == "data.d") {
      cfg.d = static_cast<int>(parse_int(key, value));
    } else if (key == "data.k") {
      cfg.k = static_cast<int>(parse_int(key, value));
    } else if (key == "data.sigma") {
      cfg.sigma = parse_double(key, value);
    } else if (key == "data.skew") {
      cfg.skew = parse_double(key, value);
    } else if (key == "data.noise_asym") {
      cfg.noise_asym = parse_double(key, value);
    } else if (key == "data.seed") {
      cfg.data_seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "losses") {
      cfg.losses.clear();
      for (const std::string& name : split_list(value))
        cfg.losses.push_back(loss_from_name(name));
    } else if (key == "alpha") {
      cfg.alpha = parse_double(key, value);
    } else if (key == "beta") {
      cfg.beta = parse_double(key, value);
    } else if (key == "lambda") {
      cfg.lambda = parse_double(key, value);
    } else if (key == "fractions") {
      cfg.fractions.clear();
      for (const std::string& f : split_list(value))
        cfg.fractions.push_back(parse_double(key, f));
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const std::string& s : split_list(value))
        cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, s)));
    } else if (key == "train.lr") {
      cfg.train.learning_rate = parse_double(key, value);
    } else if (key == "train.epochs") {
      cfg.train.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.batch") {
      cfg.train.batch_size = static_cast<int>(parse_int(key, value));
    } else if (key == "train.momentum") {
      cfg.train.momentum = parse_double(key, value);
    } else if (key == "train.init_scale") {
      cfg.train.init_scale = parse_double(key, value);
    } else if (key == "train.optimizer") {
      if (value == "gd") cfg.train.optimizer = Optimizer::kGd;
      else if (value == "momentum") cfg.train.optimizer = Optimizer::kMomentum;
      else
        throw std::invalid_argument(
            "config: train.optimizer must be gd or momentum, got '" + value +
            "'");
    } else if (key == "out") {
      cfg.out = value;
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "alpha = " << num17(cfg.alpha) << "\n";
  out << "beta = " << num17(cfg.beta) << "\n";
  out << "data.format = "
      << (cfg.format == FileFormat::kText ? "text" : "numeric") << "\n";
  out << "data.hash_dim = " << cfg.hash_dim << "\n";
  out << "data.seed = " << cfg.data_seed << "\n";
  out << "data.source = "
      << (cfg.source == DataSource::kSynthetic ? "synthetic" : "file") << "\n";
  if (cfg.source == DataSource::kSynthetic) {
    out << "data.n = " << cfg.n << "\n";
    out << "data.d = " << cfg.d << "\n";
    out << "data.k = " << cfg.k << "\n";
    out << "data.noise_asym = " << num17(cfg.noise_asym) << "\n";
    out << "data.sigma = " << num17(cfg.sigma) << "\n";
    out << "data.skew = " << num17(cfg.skew) << "\n";
  } else {
    out << "data.path = " << cfg.path << "\n";
  }
  out << "fractions =";
  for (std::size_t i = 0; i < cfg.fractions.size(); ++i)
    out << (i ? "," : " ") << num17(cfg.fractions[i]);
  out << "\n";
  out << "lambda = " << num17(cfg.lambda) << "\n";
  out << "losses =";
  for (std::size_t i = 0; i < cfg.losses.size(); ++i)
    out << (i ? "," : " ") << loss_name(cfg.losses[i]);
  out << "\n";
  out << "seeds =";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    out << (i ? "," : " ") << cfg.seeds[i];
  out << "\n";
  out << "train.batch = " << cfg.train.batch_size << "\n";
  out << "train.epochs = " << cfg.train.epochs << "\n";
  out << "train.init_scale = " << num17(cfg.train.init_scale) << "\n";
  out << "train.lr = " << num17(cfg.train.learning_rate) << "\n";
  out << "train.momentum = " << num17(cfg.train.momentum) << "\n";
  out << "train.optimizer = "
      << (cfg.train.optimizer == Optimizer::kGd ? "gd" : "momentum") << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string canon = serialize_config(cfg);
  return fnv1a64(canon.data(), canon.size());
}

OrdinalDataset build_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.source == DataSource::kSynthetic)
    return generate_synthetic(cfg.n, cfg.d, cfg.k, cfg.sigma, cfg.data_seed,
                              cfg.skew, cfg.noise_asym);
  return ingest_csv(cfg.path, cfg.format, cfg.hash_dim);
}

OrdinalDataset ingest_csv(const std::string& path, FileFormat format,
                          int hash_dim, int expect_k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(0, path + ": cannot open");
  std::vector<int> labels;
  std::vector<std::vector<double>> numeric_rows;
  std::vector<std::string> texts;
  std::string line;
  int line_no = 0;
  std::size_t expect_cols = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty())
      throw IngestError(line_no, path + ":" + std::to_string(line_no) + ": empty row");
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                        ": expected label,payload");
    const std::string label_str = trim(line.substr(0, comma));
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(label_str, &used);
      if (used != label_str.size()) throw std::invalid_argument(label_str);
    } catch (const std::exception&) {
      throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                        ": bad label '" + label_str + "'");
    }
    if (label < 1)
      throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                      ": label " + std::to_string(label) +
                                      " below 1");
    if (expect_k > 0 && label > expect_k)
      throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                      ": label " + std::to_string(label) +
                                      " outside 1.." + std::to_string(expect_k));
    labels.push_back(label);
    const std::string payload = line.substr(comma + 1);
    if (format == FileFormat::kText) {
      texts.push_back(payload);
      continue;
    }
    std::vector<double> row;
    for (const std::string& cell : split_list(payload)) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                          ": bad number '" + cell + "'");
      }
    }
    if (row.empty())
      throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                        ": no feature columns");
    if (expect_cols == 0) expect_cols = row.size();
    if (row.size() != expect_cols)
      throw IngestError(line_no, path + ":" + std::to_string(line_no) +
                                        ": expected " +
                                        std::to_string(expect_cols) +
                                        " columns, got " +
                                        std::to_string(row.size()));
    numeric_rows.push_back(std::move(row));
  }
  if (labels.empty()) throw IngestError(0, path + ": empty file");

  OrdinalDataset data;
  const std::size_t n = labels.size();
  const int k = expect_k > 0
                    ? expect_k
                    : *std::max_element(labels.begin(), labels.end());
  if (k < 2) throw IngestError(0, path + ": needs at least two classes");
  data.space = LabelSpace(k);
  data.y = labels;
  if (format == FileFormat::kText) {
    FeaturizeResult feat = featurize_text(texts, hash_dim, 1);
    data.x = std::move(feat.x);
  } else {
    data.x = Matrix(n, expect_cols);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < expect_cols; ++j)
        data.x(i, j) = numeric_rows[i][j];
  }
  data.split.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = i % 20;
    data.split[i] = slot < 14   ? SplitTag::kTrain
                    : slot < 17 ? SplitTag::kValidation
                                : SplitTag::kTest;
  }
  data.provenance = "file " + path + " format=" +
                    (format == FileFormat::kText ? std::string("text")
                                                 : std::string("numeric")) +
                    " n=" + std::to_string(n) + " k=" + std::to_string(k);
  data.validate();
  return data;
}

namespace {

struct CellResult {
  RunRecord record;
  Matrix proba;             // test-row probability predictions (ok only)
  std::vector<int> pred;    // test-row labels
  std::vector<int> truth;
};

CellResult run_cell(const ExperimentConfig& cfg, const OrdinalDataset& data,
                    LossKind kind, double fraction, std::uint64_t seed) {
  CellResult cell;
  RunRecord& rec = cell.record;
  rec.config_hash = config_hash(cfg);
  rec.loss = kind;
  rec.fraction = fraction;
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const OrdinalDataset sub =
        subsample(data, fraction, derive_seed(seed, 7));
    TrainConfig tc = cfg.train;
    tc.loss = cell_spec(cfg, kind);
    tc.seed = seed;
    const ModelKind head = kind == LossKind::kBinomialNll
                               ? ModelKind::kBinomial
                               : ModelKind::kLinearSoftmax;
    const TrainResult trained = train(head, sub, tc);

    const auto idx = data.indices_of(SplitTag::kTest);
    if (idx.empty()) throw std::runtime_error("no test rows");
    Matrix xt(idx.size(), data.dim());
    cell.truth.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t j = 0; j < data.dim(); ++j)
        xt(r, j) = data.x(idx[r], j);
      cell.truth[r] = data.y[idx[r]];
    }
    cell.proba = trained.predict_proba(xt);
    cell.pred = trained.predict(xt);
    rec.metrics = compute_metrics(cell.pred, cell.truth, data.k());
    rec.um_percent = 100.0 * um_fraction(cell.proba);
    rec.trace_first = trained.trace.empty() ? 0.0 : trained.trace.front();
    rec.trace_last = trained.trace.empty() ? 0.0 : trained.trace.back();
    rec.ok = true;
  } catch (const TrainingDivergedError& e) {
    rec.reason = std::string("diverged: ") + e.what();
  } catch (const DegenerateBatchError& e) {
    rec.reason = std::string("degenerate batch: ") + e.what();
  } catch (const std::invalid_argument& e) {
    rec.reason = std::string("invalid cell: ") + e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return cell;
}

std::string preds_tsv(const CellResult& cell) {
  std::ostringstream out;
  out << "row\ttruth\tpred";
  const std::size_t k = cell.proba.cols();
  for (std::size_t c = 1; c <= k; ++c) out << "\tp" << c;
  out << "\n";
  for (std::size_t r = 0; r < cell.proba.rows(); ++r) {
    out << r << "\t" << cell.truth[r] << "\t" << cell.pred[r];
    for (std::size_t c = 0; c < k; ++c)
      out << "\t" << num17(cell.proba(r, c));
    out << "\n";
  }
  return out.str();
}

json record_json(const RunRecord& rec) {
  json j;
  j["config_hash"] = rec.config_hash;
  j["loss"] = loss_name(rec.loss);
  j["fraction"] = rec.fraction;
  j["seed"] = rec.seed;
  j["ok"] = rec.ok;
  if (!rec.ok) {
    j["reason"] = rec.reason;
    return j;
  }
  j["f1_weighted"] = rec.metrics.f1_weighted;
  j["mse"] = rec.metrics.mse;
  j["mae"] = rec.metrics.mae;
  json ob;
  for (const auto& [k, v] : rec.metrics.ob_k) ob["ob" + std::to_string(k)] = v;
  j["ob_k"] = ob;
  j["um_percent"] = rec.um_percent;
  j["trace_first"] = rec.trace_first;
  j["trace_last"] = rec.trace_last;
  return j;
}

}  // namespace

std::vector<RunRecord> run_grid(const ExperimentConfig& cfg,
                                const OrdinalDataset& data,
                                const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(fs::path(out_dir) / "runs");
  std::vector<RunRecord> records;
  std::ostringstream jsonl;
  for (const LossKind kind : cfg.losses) {
    for (const double fraction : cfg.fractions) {
      for (const std::uint64_t seed : cfg.seeds) {
        CellResult cell = run_cell(cfg, data, kind, fraction, seed);
        const std::string id = cell_id(kind, fraction, seed);
        if (cell.record.ok) {
          const fs::path dir = fs::path(out_dir) / "runs" / id;
          fs::create_directories(dir);
          write_file((dir / "preds.tsv").string(), preds_tsv(cell));
        }
        jsonl << record_json(cell.record).dump() << "\n";
        records.push_back(std::move(cell.record));
      }
    }
  }
  write_file((fs::path(out_dir) / "records.jsonl").string(), jsonl.str());
  return records;
}

std::string render_results_table(const ExperimentConfig& cfg,
                                 const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out << "dataset\tfraction\tloss\tf1\tmse\tmae\tob1\tseeds\tnote\n";
  const std::string dataset =
      cfg.source == DataSource::kSynthetic
          ? "synthetic_k" + std::to_string(cfg.k) + "_seed" +
                std::to_string(cfg.data_seed)
          : cfg.path;
  for (const double fraction : cfg.fractions) {
    for (const LossKind kind : cfg.losses) {
      std::vector<MetricReport> ok_reports;
      std::size_t failed = 0;
      std::string first_reason;
      for (const RunRecord& rec : records) {
        if (rec.loss != kind || rec.fraction != fraction) continue;
        if (rec.ok) {
          ok_reports.push_back(rec.metrics);
        } else {
          ++failed;
          if (first_reason.empty()) first_reason = rec.reason;
        }
      }
      out << dataset << "\t" << numg(fraction) << "\t" << loss_name(kind);
      if (ok_reports.empty()) {
        out << "\t-\t-\t-\t-\t0\t"
            << (first_reason.empty() ? "no runs" : first_reason) << "\n";
        continue;
      }
      const AggregatedReport agg = mean_std_over_seeds(ok_reports);
      out << "\t" << format_mean_std(agg.f1_weighted) << "\t"
          << format_mean_std(agg.mse) << "\t" << format_mean_std(agg.mae)
          << "\t"
          << (agg.ob_k.count(1) ? format_mean_std(agg.ob_k.at(1)) : "-")
          << "\t" << ok_reports.size();
      if (failed > 0)
        out << "\t" << failed << " failed: " << first_reason;
      else
        out << "\t";
      out << "\n";
    }
  }
  return out.str();
}

std::vector<RunRecord> cmd_bench(const ExperimentConfig& cfg,
                                 const std::string& out_dir) {
  const OrdinalDataset data = build_dataset(cfg);
  std::vector<RunRecord> records = run_grid(cfg, data, out_dir);
  write_file((fs::path(out_dir) / "results.tsv").string(),
             render_results_table(cfg, records));
  write_file((fs::path(out_dir) / "config.resolved").string(),
             serialize_config(cfg));
  return records;
}

namespace {

std::string verdict_mark(bool holds, bool inconclusive) {
  if (inconclusive) return "?";
  return holds ? "yes" : "no";
}

}  // namespace

std::string render_property_matrix(const std::vector<PropertyReport>& matrix) {
  std::ostringstream out;
  out << "loss\tpsr\tcx\tord\tum_guaranteed\tpsr_gap\n";
  for (const PropertyReport& row : matrix) {
    out << loss_name(row.loss.kind) << "\t"
        << verdict_mark(row.psr.holds, row.psr.inconclusive) << "\t"
        << verdict_mark(row.convex.holds, false) << "\t"
        << profile_shape_name(row.ordinality.shape) << "\t"
        << (row.um_guaranteed ? "yes" : "no") << "\t"
        << fmt("%.3e", row.psr.gap) << "\n";
  }
  return out.str();
}

CertifyOutcome cmd_certify(const std::vector<LossSpec>& specs, int k_classes,
                           int trials, std::uint64_t seed,
                           const std::string& out_dir,
                           const std::string& golden_path, bool strict) {
  (void)seed;  // the property searches use their own fixed seeds
  CertifyOutcome outcome;
  outcome.matrix = property_matrix(specs, k_classes, trials);
  fs::create_directories(out_dir);

  const std::string rendered = render_property_matrix(outcome.matrix);
  write_file((fs::path(out_dir) / "property_matrix.tsv").string(), rendered);

  std::ostringstream witnesses;
  for (const PropertyReport& row : outcome.matrix) {
    if (row.convex.holds || !row.convex.witness) continue;
    const ConvexityWitness& w = *row.convex.witness;
    json j;
    j["loss"] = loss_name(row.loss.kind);
    j["lambda"] = w.lambda;
    j["violation"] = w.violation;
    j["p"] = w.p;
    j["q"] = w.q;
    if (w.y_batch.empty()) j["y"] = w.y;
    else j["y_batch"] = w.y_batch;
    witnesses << j.dump() << "\n";
  }
  write_file((fs::path(out_dir) / "witnesses.jsonl").string(),
             witnesses.str());

  for (const PropertyReport& row : outcome.matrix)
    if (row.psr.inconclusive)
      outcome.inconclusive.push_back(loss_name(row.loss.kind));

  if (!golden_path.empty()) {
    std::ifstream in(golden_path, std::ios::binary);
    if (!in)
      throw std::invalid_argument("certify: cannot open golden file " +
                                  golden_path);
    std::map<std::string, std::pair<std::string, std::string>> golden;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      std::vector<std::string> cols;
      std::istringstream ls(line);
      std::string col;
      while (std::getline(ls, col, '\t')) cols.push_back(col);
      if (cols.size() < 3)
        throw std::invalid_argument("certify: malformed golden line '" +
                                    line + "'");
      golden[cols[0]] = {cols[1], cols[2]};
    }
    for (const PropertyReport& row : outcome.matrix) {
      const std::string name = loss_name(row.loss.kind);
      const auto it = golden.find(name);
      if (it == golden.end()) continue;  // golden file may cover a subset
      const std::string psr = verdict_mark(row.psr.holds,
                                           row.psr.inconclusive);
      const std::string cx = verdict_mark(row.convex.holds, false);
      if (psr != "?" && psr != it->second.first)
        outcome.mismatches.push_back(name + ": psr " + psr + " vs golden " +
                                     it->second.first);
      if (psr == "?" && it->second.first != "?" && strict)
        outcome.mismatches.push_back(name + ": psr inconclusive under strict");
      if (cx != it->second.second)
        outcome.mismatches.push_back(name + ": cx " + cx + " vs golden " +
                                     it->second.second);
    }
  }

  if (!outcome.mismatches.empty())
    outcome.exit_code = 1;
  else if (strict && !outcome.inconclusive.empty())
    outcome.exit_code = 2;
  return outcome;
}

std::vector<UmReportRow> cmd_um_report(const std::string& out_dir,
                                       const std::string& run_id) {
  const fs::path runs = fs::path(out_dir) / "runs";
  if (!fs::is_directory(runs))
    throw std::invalid_argument("um-report: no runs under " + out_dir);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(runs))
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  if (!run_id.empty()) {
    if (std::find(ids.begin(), ids.end(), run_id) == ids.end())
      throw std::invalid_argument("um-report: run '" + run_id +
                                  "' not found under " + out_dir);
    ids = {run_id};
  }

  std::vector<UmReportRow> rows;
  for (const std::string& id : ids) {
    UmReportRow row;
    row.run_id = id;
    // id = <loss>_f<fraction>_s<seed>
    const std::size_t fpos = id.rfind("_f");
    const std::size_t spos = id.rfind("_s");
    if (fpos == std::string::npos || spos == std::string::npos || spos <= fpos)
      throw std::invalid_argument("um-report: unparseable run id '" + id +
                                  "'");
    row.loss = loss_from_name(id.substr(0, fpos));
    row.fraction = std::stod(id.substr(fpos + 2, spos - fpos - 2));
    row.seed = std::stoull(id.substr(spos + 2));

    std::ifstream in(runs / id / "preds.tsv");
    if (!in)
      throw std::invalid_argument("um-report: missing preds.tsv for " + id);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> prows;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      std::istringstream ls(line);
      std::string col;
      std::vector<std::string> cols;
      while (std::getline(ls, col, '\t')) cols.push_back(col);
      if (cols.size() < 4)
        throw std::invalid_argument("um-report: malformed preds row in " +
                                    id);
      std::vector<double> p;
      for (std::size_t c = 3; c < cols.size(); ++c)
        p.push_back(std::stod(cols[c]));
      prows.push_back(std::move(p));
    }
    if (prows.empty())
      throw std::invalid_argument("um-report: empty preds.tsv for " + id);
    Matrix m(prows.size(), prows[0].size());
    for (std::size_t r = 0; r < prows.size(); ++r)
      for (std::size_t c = 0; c < prows[r].size(); ++c)
        m(r, c) = prows[r][c];
    row.um_percent = 100.0 * um_fraction(m);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_profile(const OrdinalityProfile& profile) {
  std::ostringstream out;
  out << "d\tvalue\n";
  for (const auto& [d, value] : profile.points)
    out << d << "\t" << num17(value) << "\n";
  out << "# shape = " << profile_shape_name(profile.shape) << "\n";
  return out.str();
}

}  // namespace ordinal
