#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bwdep/clustering.hpp"
#include "bwdep/coefficients.hpp"
#include "bwdep/io.hpp"
#include "bwdep/montecarlo.hpp"
#include "bwdep/parallel.hpp"

namespace bwdep {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct NonConvergence : Error {
  using Error::Error;
};

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Manifest {
  std::string command;
  std::vector<std::string> inputs;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::string started = timestamp();

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command;
    j["input_paths"] = inputs;
    j["config"] = config;
    j["seed"] = seed;
    j["tool_version"] = kToolVersion;
    j["started"] = started;
    j["finished"] = timestamp();
    write_text((dir / "manifest.json").string(), j.dump(2) + "\n");
  }
};

fs::path prepare_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

void write_long_matrix(const std::string& path, const MatrixXd& m, const std::vector<std::string>& names) {
  std::string s = "row,col,value\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += csv_field(names[i]) + "," + csv_field(names[j]) + "," + format_double(m(i, j)) + "\n";
  write_text(path, s);
}

struct CommonOptions {
  std::string out = "out";
  int threads = 0;
  bool tidy = false;
};

struct PenaltyOptions {
  std::string penalty = "none";
  std::string tune = "auto";
  int folds = 5;
  double omega = -1.0;
  bool force = false;
  std::uint64_t seed = 1;
};

void add_penalty_flags(CLI::App* app, PenaltyOptions& p) {
  app->add_option("--penalty", p.penalty, "none | ridge | lasso | adaptive_lasso | scad | group_lasso");
  app->add_option("--tune", p.tune, "auto | bic | cv (auto: cv for ridge, bic otherwise)");
  app->add_option("--folds", p.folds, "cross-validation folds for ridge");
  app->add_option("--omega", p.omega, "fixed tuning value instead of a search");
  app->add_flag("--force", p.force, "allow singular Sigma_hat_n for sparse penalties");
  app->add_option("--seed", p.seed, "seed for cross-validation folds");
}

PenaltySpec make_spec(const PenaltyOptions& p) {
  PenaltySpec spec = default_spec(parse_penalty_kind(p.penalty));
  spec.folds = p.folds;
  spec.force = p.force;
  spec.seed = p.seed;
  const bool ridge_kind = spec.kind == PenaltyKind::ridge;
  if (p.tune != "auto" && p.tune != "bic" && p.tune != "cv") throw InputError("--tune must be auto, bic or cv");
  if (ridge_kind && p.tune == "bic") throw InputError("ridge is tuned by cross-validation (--tune cv)");
  if (!ridge_kind && spec.kind != PenaltyKind::none && p.tune == "cv") {
    throw InputError("sparse penalties are tuned by BIC (--tune bic)");
  }
  if (p.omega >= 0.0) {
    if (spec.kind == PenaltyKind::adaptive_lasso) {
      spec.rho_threshold_grid = {p.omega};
    } else {
      spec.omega_grid = {p.omega};
    }
  }
  validate(spec);
  return spec;
}

std::map<std::string, std::string> spec_config(const PenaltyOptions& p) {
  return {{"penalty", p.penalty}, {"tune", p.tune},   {"folds", std::to_string(p.folds)},
          {"omega", p.omega >= 0 ? format_double(p.omega) : "search"}, {"force", p.force ? "true" : "false"}};
}

json report_json(const DependenceReport& r, bool all) {
  json j;
  j["d1"] = r.d1;
  j["d2"] = r.d2;
  if (all) {
    j["mutual_information"] = r.mutual_information ? json(*r.mutual_information) : json(nullptr);
    j["hellinger"] = r.hellinger ? json(*r.hellinger) : json(nullptr);
  }
  if (r.asymptotic_sd_d1) {
    j["zeta1"] = *r.asymptotic_sd_d1;
    j["zeta2"] = *r.asymptotic_sd_d2;
  }
  if (r.n) j["n"] = *r.n;
  if (r.ci_d1) {
    j["ci_level"] = *r.ci_level;
    j["ci_d1"] = {r.ci_d1->first, r.ci_d1->second};
    j["ci_d2"] = {r.ci_d2->first, r.ci_d2->second};
  }
  return j;
}

int cmd_estimate(const std::string& input, const std::string& dims, const PenaltyOptions& po, const CommonOptions& co,
                 std::ostream& out) {
  Manifest man{"estimate", {input}, spec_config(po), po.seed};
  man.config["dims"] = dims;
  const PenaltySpec spec = make_spec(po);
  const DataMatrix x = read_csv(input);
  const Partition p = Partition::parse(dims);
  const ScoresEstimate est = normal_scores_matrix(x, p);
  const PenalizedEstimate fit = tune(est, spec, p);
  const fs::path dir = prepare_dir(co.out);
  const MatrixXd& r = fit.correlation.matrix();
  if (co.tidy) {
    write_long_matrix((dir / "correlation.csv").string(), r, x.column_names);
  } else {
    write_matrix_csv((dir / "correlation.csv").string(), r, x.column_names);
  }
  if (spec.kind != PenaltyKind::none && spec.kind != PenaltyKind::ridge) {
    write_mask_csv((dir / "support.csv").string(), fit.support, x.column_names);
  }
  man.config["omega_selected"] = format_double(fit.omega_selected);
  man.config["converged"] = fit.converged ? "true" : "false";
  man.config["tied_columns"] = std::to_string(est.tied_columns.size());
  man.write(dir);
  for (int c : est.tied_columns) out << "warning: ties in column " << x.column_names[c] << " were given midranks\n";
  out << "wrote " << (dir / "correlation.csv").string() << "\n";
  if (!fit.converged) throw NonConvergence("penalized fit did not converge; partial output written");
  return 0;
}

int cmd_dependence(const std::string& input, const std::string& dims, bool matrix_input, bool asymptotics,
                   const std::string& measures, std::optional<int> n, double level, const PenaltyOptions& po,
                   const CommonOptions& co, bool write_out, std::ostream& out) {
  if (measures != "d" && measures != "all") throw InputError("--measures must be d or all");
  const Partition p = Partition::parse(dims);
  GroupedCorrelation r;
  if (matrix_input) {
    r = GroupedCorrelation(read_csv(input).values, p);
  } else {
    const DataMatrix x = read_csv(input);
    const ScoresEstimate est = normal_scores_matrix(x, p);
    r = tune(est, make_spec(po), p).correlation;
    if (!n) n = x.n();
  }
  const DependenceReport rep = dependence_report(r, asymptotics, asymptotics ? n : std::nullopt, level);
  const json j = report_json(rep, measures == "all");
  out << j.dump(2) << "\n";
  if (write_out) {
    const fs::path dir = prepare_dir(co.out);
    write_text((dir / "report.json").string(), j.dump(2) + "\n");
    Manifest man{"dependence", {input}, spec_config(po), po.seed};
    man.config["dims"] = dims;
    man.config["matrix"] = matrix_input ? "true" : "false";
    man.config["asymptotics"] = asymptotics ? "true" : "false";
    man.config["measures"] = measures;
    man.write(dir);
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> reps,
                 bool paper_scale, const CommonOptions& co, std::ostream& out) {
  std::map<std::string, std::string> kv = read_kv_config(config_path);
  if (seed) kv["seed"] = std::to_string(*seed);
  if (reps) kv["reps"] = std::to_string(*reps);
  if (paper_scale) kv["paper_scale"] = "true";
  const ExperimentConfig cfg = resolve(config_from_kv(kv));
  const fs::path dir = prepare_dir(co.out);
  const ExperimentResult res = run_experiment(cfg);
  std::string s = "replicate,n,q,estimator,metric,value\n";
  for (const ReplicateRecord& r : res.replicates) {
    s += std::to_string(r.replicate) + "," + std::to_string(r.n) + "," + std::to_string(r.q) + "," +
         csv_field(r.estimator) + "," + csv_field(r.metric) + "," + format_double(r.value) + "\n";
  }
  write_text((dir / "replicates.csv").string(), s);
  std::string sm = "n,q,estimator,metric,count,mean,variance\n";
  json js;
  js["config"] = res.config_echo;
  js["summary"] = json::array();
  for (const SummaryRow& r : res.summary) {
    sm += std::to_string(r.n) + "," + std::to_string(r.q) + "," + csv_field(r.estimator) + "," + csv_field(r.metric) +
          "," + std::to_string(r.count) + "," + format_double(r.mean) + "," + format_double(r.variance) + "\n";
    js["summary"].push_back({{"n", r.n}, {"q", r.q}, {"estimator", r.estimator}, {"metric", r.metric},
                             {"count", r.count}, {"mean", r.mean}, {"variance", r.variance}});
  }
  write_text((dir / "summary.csv").string(), sm);
  write_text((dir / "summary.json").string(), js.dump(2) + "\n");
  Manifest man{"simulate", {config_path}, kv, res.seed};
  man.write(dir);
  out << "wrote " << res.replicates.size() << " replicate records to " << (dir / "replicates.csv").string() << "\n";
  return 0;
}

int cmd_cluster(const std::string& input, std::optional<double> prune, const std::string& cut, bool retune,
                const PenaltyOptions& po, const CommonOptions& co, std::ostream& out) {
  PenaltyOptions p = po;
  if (p.penalty == "none" && p.omega < 0.0) p.penalty = "ridge";
  Manifest man{"cluster", {input}, spec_config(p), p.seed};
  man.config["cut"] = cut;
  man.config["retune_per_pair"] = retune ? "true" : "false";
  man.config["prune_abs_corr"] = prune ? format_double(*prune) : "off";
  ClusterOptions opt;
  opt.spec = make_spec(p);
  opt.retune_per_pair = retune;
  DataMatrix x = read_csv(input);
  if (prune) {
    const ScoresEstimate est = normal_scores_matrix(x, Partition::singletons(x.q()));
    const std::vector<int> kept = prune_by_abs_corr(est.correlation.matrix(), *prune);
    DataMatrix y;
    y.values = x.values(Eigen::all, kept);
    for (int j : kept) y.column_names.push_back(x.column_names[j]);
    out << "pruning kept " << kept.size() << " of " << x.q() << " variables\n";
    x = std::move(y);
  }
  std::optional<int> cut_k;
  if (!cut.empty() && cut != "min-redundancy") {
    try {
      cut_k = std::stoi(cut);
    } catch (const std::exception&) {
      throw InputError("--cut must be an integer or min-redundancy");
    }
  }
  const Dendrogram d = cluster_variables(x, opt);
  const fs::path dir = prepare_dir(co.out);
  write_text((dir / "dendrogram.json").string(), to_json(d).dump(2) + "\n");
  write_text((dir / "dendrogram.nwk").string(), to_newick(d) + "\n");
  std::string red = "k,redundancy\n";
  for (int k = 2; k <= d.q(); ++k) red += std::to_string(k) + "," + format_double(d.redundancy[k]) + "\n";
  write_text((dir / "redundancy.csv").string(), red);
  if (cut == "min-redundancy") cut_k = min_redundancy_level(d);
  if (cut_k) {
    const Assignment a = cut_dendrogram(d, *cut_k);
    std::string s = "variable,cluster\n";
    for (int v = 0; v < d.q(); ++v) s += csv_field(d.variables[v]) + "," + std::to_string(a[v] + 1) + "\n";
    write_text((dir / "assignment.csv").string(), s);
    man.config["selected_k"] = std::to_string(*cut_k);
    out << "selected k = " << *cut_k << "\n";
  }
  man.config["omega_selected"] = format_double(d.omega);
  man.write(dir);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bures-Wasserstein dependence coefficients under a Gaussian copula"};
  app.require_subcommand(1);
  CommonOptions co;
  app.add_option("--threads", co.threads, "worker threads (default: BWDEP_THREADS or hardware)");
  app.add_flag("--tidy", co.tidy, "long-format CSV output");
  app.set_version_flag("--version", kToolVersion);

  std::string input, dims, config_path, measures = "d", cut;
  PenaltyOptions po;
  bool matrix_input = false, asymptotics = false, paper_scale = false, retune = false, write_out = false;
  std::optional<int> n, reps;
  std::optional<std::uint64_t> seed;
  std::optional<double> prune;
  double level = 0.95;

  auto* est = app.add_subcommand("estimate", "estimate the normal-scores correlation matrix");
  est->add_option("csv", input, "data CSV")->required();
  est->add_option("--dims", dims, "group dimensions, e.g. 2,2")->required();
  est->add_option("--out", co.out, "output directory");
  add_penalty_flags(est, po);

  auto* dep = app.add_subcommand("dependence", "dependence coefficients as JSON");
  dep->add_option("input", input, "data CSV or correlation matrix CSV")->required();
  dep->add_option("--dims", dims, "group dimensions")->required();
  dep->add_flag("--matrix", matrix_input, "input is a correlation matrix");
  dep->add_flag("--asymptotics", asymptotics, "add asymptotic standard deviations and confidence intervals");
  dep->add_option("--measures", measures, "d | all");
  dep->add_option("--n", n, "sample size for intervals with matrix input");
  dep->add_option("--level", level, "confidence level");
  dep->add_option("--out", co.out, "also write report.json and a manifest here")->each([&](const std::string&) {
    write_out = true;
  });
  add_penalty_flags(dep, po);

  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  sim->add_option("config", config_path, "experiment config (TOML-style or JSON)")->required();
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--reps", reps, "replications");
  sim->add_flag("--paper-scale", paper_scale, "paper-scale grids and replications");
  sim->add_option("--out", co.out, "output directory");

  auto* clu = app.add_subcommand("cluster", "hierarchical variable clustering");
  clu->add_option("csv", input, "data CSV")->required();
  clu->add_option("--prune-abs-corr", prune, "drop variables with |r| above this against an earlier one");
  clu->add_option("--cut", cut, "k or min-redundancy");
  clu->add_flag("--retune", retune, "re-tune ridge by CV for every merged pair");
  clu->add_option("--out", co.out, "output directory");
  add_penalty_flags(clu, po);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (co.threads < 0) throw InputError("--threads must be non-negative");
    set_default_threads(co.threads);
    if (*est) return cmd_estimate(input, dims, po, co, out);
    if (*dep) return cmd_dependence(input, dims, matrix_input, asymptotics, measures, n, level, po, co, write_out, out);
    if (*sim) return cmd_simulate(config_path, seed, reps, paper_scale, co, out);
    if (*clu) return cmd_cluster(input, prune, cut, retune, po, co, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    err << "warning: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace bwdep
