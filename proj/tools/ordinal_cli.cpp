// Command-line front door: certify / bench / um-report / ingest / profile.
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ordinal/errors.hpp"
#include "ordinal/harness.hpp"

namespace {

std::vector<ordinal::LossKind> parse_losses(const std::string& csv) {
  std::vector<ordinal::LossKind> kinds;
  std::string item;
  std::istringstream in(csv);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) kinds.push_back(ordinal::loss_from_name(item));
  }
  if (kinds.empty()) throw std::invalid_argument("no losses given");
  return kinds;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ordinal;
  CLI::App app{"ordinal loss laboratory"};
  app.require_subcommand(1);

  // ---- certify ----------------------------------------------------------
  auto* certify = app.add_subcommand(
      "certify", "certify PSR/convexity/ordinality per loss");
  std::string c_losses = "ce,oll,mll,soft,emd,wkl";
  int c_k = 5, c_trials = 10000;
  std::string c_golden, c_out = "out/certify";
  bool c_strict = false;
  double c_alpha = 1.5, c_beta = 1.0, c_lambda = 0.5;
  certify->add_option("--loss", c_losses, "comma list of losses");
  certify->add_option("--k", c_k, "number of classes");
  certify->add_option("--trials", c_trials, "convexity sampling trials");
  certify->add_option("--golden", c_golden, "golden verdict file to compare");
  certify->add_flag("--strict", c_strict,
                    "fail on inconclusive optimizer verdicts");
  certify->add_option("--out", c_out, "output directory");
  certify->add_option("--alpha", c_alpha, "OLL exponent");
  certify->add_option("--beta", c_beta, "SOFT temperature");
  certify->add_option("--lambda", c_lambda, "MLL mixing weight");

  // ---- bench ------------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "run the loss grid benchmark");
  std::string b_config, b_seeds, b_fractions, b_loss, b_out;
  double b_alpha = -1.0, b_beta = -1.0, b_lambda = -1.0;
  bench->add_option("--config", b_config, "experiment config file")
      ->required();
  bench->add_option("--seeds", b_seeds, "override: comma list of seeds");
  bench->add_option("--fractions", b_fractions,
                    "override: comma list of fractions");
  bench->add_option("--loss", b_loss, "override: comma list of losses");
  bench->add_option("--alpha", b_alpha, "override: OLL exponent");
  bench->add_option("--beta", b_beta, "override: SOFT temperature");
  bench->add_option("--lambda", b_lambda, "override: MLL mixing weight");
  bench->add_option("--out", b_out, "override: output directory");

  // ---- um-report --------------------------------------------------------
  auto* um = app.add_subcommand("um-report",
                                "%UM per stored run, recomputed from preds");
  std::string u_out = "out", u_run;
  um->add_option("--out", u_out, "bench output directory");
  um->add_option("--run", u_run, "single run id");

  // ---- ingest -----------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "validate and summarize a CSV");
  std::string i_path, i_format = "numeric";
  int i_hash_dim = 512, i_k = 0;
  ingest->add_option("--path", i_path, "CSV file")->required();
  ingest->add_option("--format", i_format, "text | numeric");
  ingest->add_option("--hash-dim", i_hash_dim, "hashing dimension (text)");
  ingest->add_option("--k", i_k, "declared label count (0 = infer)");

  // ---- profile ----------------------------------------------------------
  auto* profile = app.add_subcommand("profile",
                                     "ordinality profile for one loss");
  std::string p_loss = "oll";
  int p_k = 5, p_y = 1;
  double p_eps = 0.1, p_alpha = 1.5, p_beta = 1.0, p_lambda = 0.5;
  profile->add_option("--loss", p_loss, "loss name");
  profile->add_option("--k", p_k, "number of classes");
  profile->add_option("--y", p_y, "true class");
  profile->add_option("--eps", p_eps, "perturbation level");
  profile->add_option("--alpha", p_alpha, "OLL exponent");
  profile->add_option("--beta", p_beta, "SOFT temperature");
  profile->add_option("--lambda", p_lambda, "MLL mixing weight");

  CLI11_PARSE(app, argc, argv);

  try {
    if (certify->parsed()) {
      std::vector<LossSpec> specs;
      for (const LossKind kind : parse_losses(c_losses)) {
        LossSpec spec = LossSpec::make(kind);
        spec.alpha = c_alpha;
        spec.beta = c_beta;
        spec.lambda = c_lambda;
        specs.push_back(spec);
      }
      const CertifyOutcome outcome = cmd_certify(
          specs, c_k, c_trials, 90001, c_out, c_golden, c_strict);
      std::fputs(render_property_matrix(outcome.matrix).c_str(), stdout);
      for (const std::string& m : outcome.mismatches)
        std::fprintf(stderr, "golden mismatch: %s\n", m.c_str());
      for (const std::string& l : outcome.inconclusive)
        std::fprintf(stderr, "inconclusive: %s\n", l.c_str());
      return outcome.exit_code;
    }

    if (bench->parsed()) {
      ExperimentConfig cfg = load_config(b_config);
      if (!b_seeds.empty()) {
        cfg.seeds.clear();
        std::string item;
        std::istringstream in(b_seeds);
        while (std::getline(in, item, ','))
          if (!item.empty()) cfg.seeds.push_back(std::stoull(item));
      }
      if (!b_fractions.empty()) {
        cfg.fractions.clear();
        std::string item;
        std::istringstream in(b_fractions);
        while (std::getline(in, item, ','))
          if (!item.empty()) cfg.fractions.push_back(std::stod(item));
      }
      if (!b_loss.empty()) cfg.losses = parse_losses(b_loss);
      if (b_alpha >= 0.0) cfg.alpha = b_alpha;
      if (b_beta >= 0.0) cfg.beta = b_beta;
      if (b_lambda >= 0.0) cfg.lambda = b_lambda;
      if (!b_out.empty()) cfg.out = b_out;
      cfg.validate();
      const std::vector<RunRecord> records = cmd_bench(cfg, cfg.out);
      std::size_t failed = 0;
      for (const RunRecord& rec : records) failed += rec.ok ? 0 : 1;
      std::printf("%zu runs, %zu failed; artifacts in %s\n", records.size(),
                  failed, cfg.out.c_str());
      return 0;
    }

    if (um->parsed()) {
      const std::vector<UmReportRow> rows = cmd_um_report(u_out, u_run);
      std::printf("run\tum_percent\n");
      for (const UmReportRow& row : rows)
        std::printf("%s\t%.1f\n", row.run_id.c_str(), row.um_percent);
      return 0;
    }

    if (ingest->parsed()) {
      const FileFormat format =
          i_format == "text" ? FileFormat::kText : FileFormat::kNumeric;
      const OrdinalDataset data = ingest_csv(i_path, format, i_hash_dim, i_k);
      std::printf("N=%zu D=%zu K=%d\n", data.n(), data.dim(), data.k());
      std::vector<std::size_t> hist(static_cast<std::size_t>(data.k()), 0);
      for (const int y : data.y) ++hist[static_cast<std::size_t>(y - 1)];
      for (int c = 1; c <= data.k(); ++c)
        std::printf("class %d: %zu\n", c,
                    hist[static_cast<std::size_t>(c - 1)]);
      return 0;
    }

    if (profile->parsed()) {
      LossSpec spec = LossSpec::make(loss_from_name(p_loss));
      spec.alpha = p_alpha;
      spec.beta = p_beta;
      spec.lambda = p_lambda;
      const OrdinalityProfile prof =
          ordinality_profile(spec, p_y, p_k, p_eps);
      std::fputs(render_profile(prof).c_str(), stdout);
      return 0;
    }
  } catch (const IngestError& e) {
    std::fprintf(stderr, "ingest error (line %zu): %s\n", e.line(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
