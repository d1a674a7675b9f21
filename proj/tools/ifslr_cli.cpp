// Batch front door: every capability behind one subcommand, with a config
// file as the single source of experiment parameters and CSV/JSON emitters
// suitable for external plotting. All randomness flows from one master seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ifslr/engine.hpp"
#include "ifslr/moments.hpp"
#include "ifslr/response.hpp"
#include "ifslr/witness.hpp"
#include "run_config.hpp"

namespace {

using namespace ifslr;
using cli::RunConfig;
using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int exit_code_for(const Error& err) {
  return err.code() == ErrorCode::NoFeasibleM ? 3 : 2;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + path.string());
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  bool json = false;
  int threads = 0;
  long long seed_override = -1;
};

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = cli::load_config(args.config_path);
  if (args.seed_override >= 0) cfg.seed = uint64_t(args.seed_override);
  return cfg;
}

McOptions mc_options(const RunConfig& cfg, const CommonArgs& args) {
  McOptions opts;
  opts.replicas = cfg.replicas;
  opts.truncation = cfg.truncation;
  opts.master_seed = cfg.seed;
  opts.threads = args.threads;
  return opts;
}

int cmd_analyze(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ProbabilisticIFS ifs = cli::config_ifs(cfg);
  const SpectralReport rep = spectral_report(ifs);

  ordered_json doc;
  doc["lyapunov_exponent"] = rep.lyapunov_exponent;
  doc["entropy"] = rep.entropy;
  doc["lyapunov_dimension"] = rep.lyapunov_dimension;
  doc["tail_exponent"] = rep.tail.finite ? rep.tail.value : -1.0;
  doc["tail_exponent_finite"] = rep.tail.finite;
  doc["tail_residual"] = rep.tail.residual;
  doc["rate_available"] = rep.rate_available;

  if (args.json) {
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "lyapunov_exponent   " << fmt(rep.lyapunov_exponent) << "\n"
              << "entropy             " << fmt(rep.entropy) << "\n"
              << "lyapunov_dimension  " << fmt(rep.lyapunov_dimension) << "\n"
              << "tail_exponent       "
              << (rep.tail.finite ? fmt(rep.tail.value) : std::string("inf")) << "\n"
              << "rate_available      " << (rep.rate_available ? "yes" : "no") << "\n";
  }
  return 0;
}

int cmd_moments(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ProbabilisticIFS ifs = cli::config_ifs(cfg);
  const McOptions opts = mc_options(cfg, args);

  std::string csv = "k,exact,mc_mean,mc_se\n";
  ordered_json rows = ordered_json::array();
  for (int k = 1; k <= cfg.moment_max_order; ++k) {
    const double exact = exact_moment(ifs, k);
    const MCEstimate mc = estimate_expectation(
        ifs,
        [k](const PathView& path) {
          double v = 1.0;
          for (int i = 0; i < k; ++i) v *= path.x_n;
          return v;
        },
        opts);
    csv += std::to_string(k) + "," + fmt(exact) + "," + fmt(mc.mean) + "," + fmt(mc.std_error) +
           "\n";
    rows.push_back({{"k", k}, {"exact", exact}, {"mc_mean", mc.mean}, {"mc_se", mc.std_error}});
  }
  write_file(std::filesystem::path(args.out_dir) / "moments.csv", csv);
  if (args.json)
    write_file(std::filesystem::path(args.out_dir) / "moments.json", rows.dump(2) + "\n");
  std::cout << "wrote moments.csv (orders 1.." << cfg.moment_max_order << ")\n";
  return 0;
}

std::unique_ptr<TestFunction> config_phi(const RunConfig& cfg, const ProbabilisticIFS& ifs) {
  if (cfg.phi_kind == "power") return make_power_moment(cfg.phi_t);
  if (cfg.phi_kind == "capped")
    return make_capped_polynomial(cfg.phi_r, cfg.phi_cap > 0.0 ? cfg.phi_cap : default_cap(ifs));
  if (cfg.phi_kind == "bump") {
    double center = cfg.bump_center, inner = cfg.bump_inner, outer = cfg.bump_outer;
    if (outer <= 0.0) {  // default: around the bulk of the measure
      center = exact_moment(ifs, 1);
      inner = 0.3 * center;
      outer = 0.6 * center;
    }
    return make_smooth_bump(center, inner, outer);
  }
  throw Error(ErrorCode::BadConfig, "response.phi must be power, capped or bump");
}

int cmd_response(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ProbabilisticIFS ifs = cli::config_ifs(cfg);
  const ParamDirection dir = cli::config_direction(cfg, ifs);
  const auto phi = config_phi(cfg, ifs);
  const McOptions opts = mc_options(cfg, args);
  const FdScheme scheme =
      cfg.fd_scheme == "central4" ? FdScheme::Central4 : FdScheme::Central2;
  const double step = cfg.fd_steps.empty() ? 1e-4 : cfg.fd_steps[0];

  std::string csv = "order,formula_mean,formula_se,fd_mean,fd_se,fd_step,verdict\n";
  ordered_json rows = ordered_json::array();
  bool all_pass = true;
  for (int order : cfg.response_orders) {
    const ResponseComparison cmp =
        run_response_comparison(ifs, *phi, order, dir, step, scheme, opts, cfg.gate_z);
    const bool pass = cmp.agreement.pass;
    all_pass = all_pass && pass;
    csv += std::to_string(order) + "," + fmt(cmp.formula.estimate.mean) + "," +
           fmt(cmp.formula.estimate.std_error) + "," + fmt(cmp.fd.mean) + "," +
           fmt(cmp.fd.std_error) + "," + fmt(cmp.fd_step) + "," + (pass ? "pass" : "fail") + "\n";
    ordered_json row;
    row["order"] = order;
    row["formula_mean"] = cmp.formula.estimate.mean;
    row["formula_se"] = cmp.formula.estimate.std_error;
    row["fd_mean"] = cmp.fd.mean;
    row["fd_se"] = cmp.fd.std_error;
    row["fd_step"] = cmp.fd_step;
    row["verdict"] = pass ? "pass" : "fail";
    row["regime_ok"] = cmp.formula.regime_ok;
    if (!cmp.formula.regime_ok) row["regime_note"] = cmp.formula.regime_note;
    rows.push_back(std::move(row));
    if (!cmp.formula.regime_ok)
      std::cerr << "note: order " << order << " outside covered regime: "
                << cmp.formula.regime_note << "\n";
  }
  write_file(std::filesystem::path(args.out_dir) / "response.csv", csv);
  if (args.json)
    write_file(std::filesystem::path(args.out_dir) / "response.json", rows.dump(2) + "\n");
  std::cout << (all_pass ? "agreement gate passed\n" : "agreement gate FAILED\n");
  return all_pass ? 0 : 4;
}

int cmd_tail(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ProbabilisticIFS ifs = cli::config_ifs(cfg);
  const McOptions opts = mc_options(cfg, args);
  const TailExponent s0 = tail_exponent(ifs);
  const auto points = empirical_tail(ifs, cfg.tail_thresholds, opts);

  std::string csv = "R,p_hat,se,hits,scaled\n";
  ordered_json rows = ordered_json::array();
  for (const auto& pt : points) {
    const double scaled =
        s0.finite ? pt.p_hat * std::pow(pt.threshold, s0.value) : pt.p_hat;
    csv += fmt(pt.threshold) + "," + fmt(pt.p_hat) + "," + fmt(pt.std_error) + "," +
           std::to_string(pt.hits) + "," + fmt(scaled) + "\n";
    rows.push_back({{"R", pt.threshold},
                    {"p_hat", pt.p_hat},
                    {"se", pt.std_error},
                    {"hits", pt.hits},
                    {"scaled", scaled}});
  }
  write_file(std::filesystem::path(args.out_dir) / "tail.csv", csv);
  if (args.json) {
    ordered_json doc;
    doc["tail_exponent"] = s0.finite ? s0.value : -1.0;
    doc["points"] = rows;
    write_file(std::filesystem::path(args.out_dir) / "tail.json", doc.dump(2) + "\n");
  }
  std::cout << "wrote tail.csv (" << points.size() << " thresholds)\n";
  return 0;
}

int cmd_nondiff(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ProbabilisticIFS ifs = cli::config_ifs(cfg);

  const RegimeParams regime = detect_regime(ifs);
  char choice = cfg.nd_regime;
  if (choice == '?') choice = regime.regime_a ? 'A' : (regime.regime_b ? 'B' : 'N');
  if (choice == 'N' || (choice == 'A' && !regime.regime_a) || (choice == 'B' && !regime.regime_b)) {
    std::cerr << "no usable region for these ratios\n";
    return 3;
  }

  DivergenceOptions opts;
  opts.tail_samples = cfg.nd_tail_samples;
  opts.ball_replicas = cfg.nd_ball_replicas;
  opts.quantile_replicas = cfg.replicas;
  opts.truncation = 0;
  opts.master_seed = cfg.seed;
  opts.threads = args.threads;
  const DivergenceReport rep = divergence_report(ifs, choice, cfg.nd_n_lo, cfg.nd_n_hi, opts);

  std::string csv =
      "N,estimate,se,lower_bound,bound_ok,ratio_prev,ratio_se,ratio_ok,l1,l1_bound,l1_ok,"
      "M,p_n,q_n,ball_prob,ball_se,ball_bound\n";
  for (const auto& row : rep.rows) {
    csv += std::to_string(row.depth) + "," + fmt(row.estimate) + "," + fmt(row.std_error) + "," +
           fmt(row.lower_bound) + "," + (row.bound_pass ? "1" : "0") + "," + fmt(row.ratio) + "," +
           fmt(row.ratio_se) + "," + (row.ratio_pass ? "1" : "0") + "," + fmt(row.l1) + "," +
           fmt(row.l1_bound) + "," + (row.l1_pass ? "1" : "0") + "," +
           std::to_string(row.threshold_m) + "," + fmt(row.p_n) + "," + fmt(row.q_n) + "," +
           fmt(row.ball_prob) + "," + fmt(row.ball_se) + "," + fmt(row.ball_bound) + "\n";
  }
  write_file(std::filesystem::path(args.out_dir) / "nondiff.csv", csv);

  // witness document for reuse
  std::vector<WitnessA> wa;
  std::vector<WitnessB> wb;
  for (int n = cfg.nd_n_lo; n <= cfg.nd_n_hi; ++n) {
    if (rep.regime == 'A')
      wa.push_back(build_witness_a(ifs, regime, n, rep.median_r).first);
    else
      wb.push_back(build_witness_b(ifs, regime, n, rep.median_r).first);
  }
  write_file(std::filesystem::path(args.out_dir) / "witness.json",
             witness_family_to_json(ifs, regime, rep.median_r, wa, wb) + "\n");

  if (args.json) {
    ordered_json doc;
    doc["regime"] = std::string(1, rep.regime);
    doc["median_r"] = rep.median_r;
    doc["rho"] = rep.rho;
    doc["kappa"] = rep.kappa;
    doc["delta"] = rep.delta;
    doc["c_lower"] = rep.c_lower;
    doc["partial_sum"] = rep.partial_sum;
    doc["l1_total"] = rep.l1_total;
    doc["l1_bound_total"] = rep.l1_bound_total;
    doc["rows"] = ordered_json::array();
    for (const auto& row : rep.rows) {
      ordered_json r;
      r["N"] = row.depth;
      r["estimate"] = row.estimate;
      r["se"] = row.std_error;
      r["lower_bound"] = row.lower_bound;
      r["bound_ok"] = row.bound_pass;
      r["ratio_prev"] = row.ratio;
      r["ratio_ok"] = row.ratio_pass;
      r["l1"] = row.l1;
      r["l1_bound"] = row.l1_bound;
      doc["rows"].push_back(std::move(r));
    }
    write_file(std::filesystem::path(args.out_dir) / "nondiff.json", doc.dump(2) + "\n");
  }
  std::cout << "wrote nondiff.csv and witness.json (regime " << rep.regime << ")\n";
  return 0;
}

int cmd_sample(const CommonArgs& args) {
  const RunConfig cfg = load(args);
  const ProbabilisticIFS ifs = cli::config_ifs(cfg);
  const ParamDirection dir = cli::config_direction(cfg, ifs);

  std::string csv = "replica,x_n,lambda_n";
  for (int j = 1; j <= cfg.sample_deriv_order; ++j) csv += ",d" + std::to_string(j);
  csv += "\n";
  for (long long r = 0; r < cfg.sample_count; ++r) {
    const TruncatedPath path = sample_path(ifs, cfg.truncation, cfg.seed, uint64_t(r));
    csv += std::to_string(r) + "," + fmt(path.x_n) + "," + fmt(path.partial_products.back());
    if (cfg.sample_deriv_order > 0) {
      const FormalDerivatives d =
          eval_formal_derivatives(path, ifs, cfg.sample_deriv_order, dir);
      for (double v : d.values) csv += "," + fmt(v);
    }
    csv += "\n";
  }
  write_file(std::filesystem::path(args.out_dir) / "sample.csv", csv);
  std::cout << "wrote sample.csv (" << cfg.sample_count << " replicas)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stationary measures of contracting-on-average affine systems: "
               "analysis, response derivatives, tails, and witness constructions"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--config", args.config_path, "experiment config file")->required();
  app.add_option("--out", args.out_dir, "output directory");
  app.add_flag("--json", args.json, "also emit JSON documents");
  app.add_option("--threads", args.threads, "worker count (results do not depend on it)");
  app.add_option("--seed", args.seed_override, "override the config master seed");

  auto* analyze = app.add_subcommand("analyze", "scalar characteristics of the system");
  auto* moments = app.add_subcommand("moments", "exact moments vs Monte Carlo");
  auto* response = app.add_subcommand("response", "derivative formulas vs finite differences");
  auto* tail = app.add_subcommand("tail", "empirical exceedance probabilities");
  auto* nondiff = app.add_subcommand("nondiff", "divergence evidence for the witness family");
  auto* sample = app.add_subcommand("sample", "dump sampled truncated paths");

  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(args.out_dir);
    if (analyze->parsed()) return cmd_analyze(args);
    if (moments->parsed()) return cmd_moments(args);
    if (response->parsed()) return cmd_response(args);
    if (tail->parsed()) return cmd_tail(args);
    if (nondiff->parsed()) return cmd_nondiff(args);
    if (sample->parsed()) return cmd_sample(args);
  } catch (const ifslr::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
