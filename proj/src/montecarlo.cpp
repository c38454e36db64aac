#include "bwdep/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "bwdep/asymptotics.hpp"
#include "bwdep/coefficients.hpp"
#include "bwdep/io.hpp"
#include "bwdep/parallel.hpp"
#include "bwdep/rng.hpp"

namespace bwdep {

namespace {

template <typename Dist>
double copula_quantile(const Dist& dist, double z) {
  if (z <= 0.0) return boost::math::quantile(dist, normal_cdf(z));
  return boost::math::quantile(boost::math::complement(dist, normal_cdf(-z)));
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](char c) { return c == ' ' || c == '[' || c == ']'; }),
               item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("invalid number '" + item + "' in list '" + text + "'");
    }
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_number_list(text)) {
    if (v != std::floor(v)) throw InputError("expected integers in list '" + text + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<std::string> split_top_level(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ' && c != '[' && c != ']' && c != '"') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

GroupedCorrelation checked(MatrixXd m, Partition p, const char* what) {
  if (sym_eigenvalues<double>(m).minCoeff() <= 1e-10) {
    throw InputError(std::string(what) + ": parameters do not give a positive definite correlation matrix");
  }
  return GroupedCorrelation(std::move(m), std::move(p));
}

}  // namespace

double Marginal::transform(double z) const {
  switch (kind) {
    case Kind::standard_normal: return z;
    case Kind::uniform: return normal_cdf(z);
    case Kind::student_t: return copula_quantile(boost::math::students_t_distribution<double>(a), z);
    case Kind::exponential: return copula_quantile(boost::math::exponential_distribution<double>(a), z);
    case Kind::beta: return copula_quantile(boost::math::beta_distribution<double>(a, b), z);
    case Kind::f: return copula_quantile(boost::math::fisher_f_distribution<double>(a, b), z);
  }
  return z;
}

std::string Marginal::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::standard_normal: os << "normal"; break;
    case Kind::uniform: os << "uniform"; break;
    case Kind::student_t: os << "t(" << a << ")"; break;
    case Kind::exponential: os << "exp(" << a << ")"; break;
    case Kind::beta: os << "beta(" << a << "," << b << ")"; break;
    case Kind::f: os << "f(" << a << "," << b << ")"; break;
  }
  return os.str();
}

Marginal Marginal::parse(const std::string& text) {
  Marginal m;
  const auto open = text.find('(');
  const std::string name = text.substr(0, open);
  std::vector<double> args;
  if (open != std::string::npos) {
    const auto close = text.find(')', open);
    if (close == std::string::npos) throw InputError("marginal '" + text + "': missing ')'");
    args = parse_number_list(text.substr(open + 1, close - open - 1));
  }
  auto need = [&](std::size_t count) {
    if (args.size() != count) throw InputError("marginal '" + text + "': wrong number of parameters");
  };
  if (name == "normal" || name == "standard_normal") {
    need(0);
  } else if (name == "uniform") {
    need(0);
    m.kind = Kind::uniform;
  } else if (name == "t" || name == "student_t") {
    need(1);
    m.kind = Kind::student_t;
    m.a = args[0];
  } else if (name == "exp" || name == "exponential") {
    need(1);
    m.kind = Kind::exponential;
    m.a = args[0];
  } else if (name == "beta") {
    need(2);
    m.kind = Kind::beta;
    m.a = args[0];
    m.b = args[1];
  } else if (name == "f" || name == "F") {
    need(2);
    m.kind = Kind::f;
    m.a = args[0];
    m.b = args[1];
  } else {
    throw InputError("unknown marginal '" + text + "'");
  }
  if ((m.kind != Kind::standard_normal && m.kind != Kind::uniform && !(m.a > 0.0)) ||
      ((m.kind == Kind::beta || m.kind == Kind::f) && !(m.b > 0.0))) {
    throw InputError("marginal '" + text + "': parameters must be positive");
  }
  return m;
}

DataMatrix sample_gaussian_copula(const CopulaModel& model, int n, std::uint64_t seed) {
  const MatrixXd& r = model.correlation.matrix();
  const int q = static_cast<int>(r.rows());
  if (n < 1) throw InputError("sample_gaussian_copula: n must be positive");
  if (!model.marginals.empty() && static_cast<int>(model.marginals.size()) != q) {
    throw InputError("sample_gaussian_copula: marginal count does not match q");
  }
  const Spectrum<double> sp = sym_eigen<double>(r);
  if (sp.values.minCoeff() <= 1e-12) throw InputError("sample_gaussian_copula: correlation is not positive definite");
  const MatrixXd factor = sp.vectors * sp.values.cwiseSqrt().asDiagonal();
  Rng rng(seed);
  MatrixXd g(n, q);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < q; ++j) g(i, j) = rng.normal();
  DataMatrix out;
  out.values = g * factor.transpose();
  if (!model.marginals.empty()) {
    for (int j = 0; j < q; ++j)
      for (int i = 0; i < n; ++i) out.values(i, j) = model.marginals[j].transform(out.values(i, j));
  }
  return out;
}

MatrixXd structured_correlation(StructureKind kind, int q, double rho) {
  if (q < 1) throw InputError("structured_correlation: q must be positive");
  MatrixXd m(q, q);
  if (kind == StructureKind::ar1) {
    if (!(std::abs(rho) < 1.0)) throw InputError("ar1: |rho| must be below 1");
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) m(i, j) = i == j ? 1.0 : std::pow(rho, std::abs(i - j));
  } else {
    if (!(rho < 1.0 && (q == 1 || rho > -1.0 / (q - 1)))) throw InputError("equicorrelation: rho outside PD range");
    m.setConstant(rho);
    m.diagonal().setOnes();
  }
  return m;
}

CopulaModel setting_model(int setting) {
  CopulaModel m;
  switch (setting) {
    case 1:
      m.correlation = GroupedCorrelation(structured_correlation(StructureKind::ar1, 4, 0.25), Partition({2, 2}));
      break;
    case 2:
      m.correlation = GroupedCorrelation(structured_correlation(StructureKind::ar1, 4, 0.25), Partition({2, 2}));
      m.marginals = {Marginal::parse("t(3)"), Marginal::parse("exp(1)"), Marginal::parse("beta(2,2)"),
                     Marginal::parse("f(2,6)")};
      break;
    case 3:
      m.correlation = GroupedCorrelation(structured_correlation(StructureKind::ar1, 4, 0.8), Partition({2, 2}));
      break;
    case 4:
      m.correlation =
          GroupedCorrelation(structured_correlation(StructureKind::equicorrelation, 15, 0.5), Partition({4, 5, 3, 1, 2}));
      break;
    default: throw InputError("setting must be 1, 2, 3 or 4");
  }
  return m;
}

GroupedCorrelation example3_correlation(double rho1, double rho2) {
  MatrixXd m(4, 4);
  m << 1, rho1, rho2, rho2, rho1, 1, rho2, rho2, rho2, rho2, 1, rho1, rho2, rho2, rho1, 1;
  return GroupedCorrelation(std::move(m), Partition({2, 2}));
}

GroupedCorrelation design_correlation(int design, int q) {
  if (q < 4 || q % 2 != 0) throw InputError("design q must be an even number >= 4");
  MatrixXd m = structured_correlation(StructureKind::ar1, q, 0.5);
  if (design == 1) return GroupedCorrelation(std::move(m), Partition(std::vector<int>(q / 2, 2)));
  if (design == 2) return GroupedCorrelation(std::move(m), Partition({q / 2, q / 2}));
  throw InputError("design must be 1 or 2");
}

GroupedCorrelation scenario_correlation(int scenario, const ScenarioParams& prm) {
  if (scenario == 1) {
    const int q = 20;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < q; ++i)
      for (int j = i + 1; j < q; ++j) pairs.emplace_back(i, j);
    if (prm.graph_zero_pairs < 0 || prm.graph_zero_pairs > static_cast<int>(pairs.size())) {
      throw InputError("scenario 1: graph_zero_pairs out of range");
    }
    const std::vector<int> perm = seeded_permutation(static_cast<int>(pairs.size()), prm.graph_seed);
    Rng rng(stream_seed(prm.graph_seed, 1));
    MatrixXd a = MatrixXd::Zero(q, q);
    for (std::size_t t = prm.graph_zero_pairs; t < perm.size(); ++t) {
      const auto [i, j] = pairs[perm[t]];
      const double mag = prm.graph_lo + (prm.graph_hi - prm.graph_lo) * rng.uniform();
      const double v = rng.uniform() < 0.5 ? -mag : mag;
      a(i, j) = a(j, i) = v;
    }
    const double shift = 1.0 - sym_eigenvalues<double>(a).minCoeff();
    a.diagonal().setConstant(shift);
    MatrixXd r = a / shift;
    r.diagonal().setOnes();
    return checked(std::move(r), Partition({3, 3, 3, 3, 3, 3, 2}), "scenario 1");
  }
  if (scenario == 2) {
    MatrixXd r = MatrixXd::Identity(20, 20);
    r(18, 19) = r(19, 18) = prm.x7_within;
    r.block(0, 18, 18, 2).setConstant(prm.x7_cross);
    r.block(18, 0, 2, 18).setConstant(prm.x7_cross);
    return checked(std::move(r), Partition({3, 3, 3, 3, 3, 3, 2}), "scenario 2");
  }
  if (scenario == 3) {
    MatrixXd r = MatrixXd::Identity(70, 70);
    r.block(63, 63, 7, 7).setConstant(prm.x4_within);
    r.block(63, 63, 7, 7).diagonal().setOnes();
    r.block(0, 63, 63, 7).setConstant(prm.x4_cross);
    r.block(63, 0, 7, 63).setConstant(prm.x4_cross);
    return checked(std::move(r), Partition({21, 21, 21, 7}), "scenario 3");
  }
  throw InputError("scenario must be 1, 2 or 3");
}

RecoveryRates tpr_fpr(const MaskXb& est, const MaskXb& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols() || est.rows() != est.cols()) {
    throw InputError("tpr_fpr: masks must be square and of equal shape");
  }
  if (est != est.transpose() || truth != truth.transpose()) throw InputError("tpr_fpr: masks must be symmetric");
  long zeros = 0, nonzeros = 0, hit = 0, false_zero = 0;
  for (Eigen::Index j = 0; j < est.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      if (!truth(i, j)) {
        ++zeros;
        if (!est(i, j)) ++hit;
      } else {
        ++nonzeros;
        if (!est(i, j)) ++false_zero;
      }
    }
  RecoveryRates out;
  if (zeros > 0) out.tpr = static_cast<double>(hit) / zeros;
  if (nonzeros > 0) out.fpr = static_cast<double>(false_zero) / nonzeros;
  return out;
}

ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  c.reps = 0;
  for (const auto& [full_key, value] : kv) {
    // Keys inside a TOML table arrive as "table.key"; the table name is cosmetic.
    const std::string key = full_key.substr(full_key.rfind('.') == std::string::npos ? 0 : full_key.rfind('.') + 1);
    try {
      if (key == "type") c.type = value;
      else if (key == "model" || key == "setting") c.model = key == "setting" ? "setting" + value : value;
      else if (key == "design") c.design = std::stoi(value);
      else if (key == "scenario") c.scenario = std::stoi(value);
      else if (key == "rho1") c.rho1 = std::stod(value);
      else if (key == "rho2") c.rho2 = std::stod(value);
      else if (key == "n") c.n_grid = parse_int_list(value);
      else if (key == "q") c.q_grid = parse_int_list(value);
      else if (key == "reps") c.reps = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "paper_scale") c.paper_scale = value == "true" || value == "1";
      else if (key == "folds") c.folds = std::stoi(value);
      else if (key == "penalties") {
        for (const std::string& p : split_top_level(value)) c.penalties.push_back(parse_penalty_kind(p));
      } else if (key == "x7_within") c.scenario_params.x7_within = std::stod(value);
      else if (key == "x7_cross") c.scenario_params.x7_cross = std::stod(value);
      else if (key == "x4_within") c.scenario_params.x4_within = std::stod(value);
      else if (key == "x4_cross") c.scenario_params.x4_cross = std::stod(value);
      else if (key == "graph_seed") c.scenario_params.graph_seed = std::stoull(value);
      else if (key == "graph_zero_pairs") c.scenario_params.graph_zero_pairs = std::stoi(value);
      else if (key == "marginals") {
        for (const std::string& m : split_top_level(value)) c.custom_marginals.push_back(Marginal::parse(m));
      } else if (key == "matrix" || key == "dims") {
        continue;  // handled below
      } else {
        throw InputError("unknown config key '" + key + "'");
      }
    } catch (const InputError&) {
      throw;
    } catch (const std::exception&) {
      throw InputError("invalid value '" + value + "' for config key '" + key + "'");
    }
  }
  if (kv.count("matrix")) {
    if (!kv.count("dims")) throw InputError("config: 'matrix' requires 'dims'");
    const DataMatrix m = read_csv(kv.at("matrix"));
    c.custom_correlation = GroupedCorrelation(m.values, Partition::parse(kv.at("dims")));
    if (!kv.count("model")) c.model = "custom";
  }
  return c;
}

ExperimentConfig resolve(ExperimentConfig c) {
  if (c.reps <= 0) c.reps = c.paper_scale ? 1000 : 200;
  if (c.type == "studentized") {
    if (c.n_grid.empty()) c.n_grid = c.paper_scale ? std::vector<int>{50, 200, 1000, 5000} : std::vector<int>{50, 200, 1000};
    if (c.model == "custom" && !c.custom_correlation) throw InputError("config: custom model needs a matrix");
    if (c.model != "custom" && c.model != "example3" && c.model.rfind("setting", 0) != 0) {
      throw InputError("config: unknown model '" + c.model + "'");
    }
    if (c.model.rfind("setting", 0) == 0) setting_model(std::stoi(c.model.substr(7)));
    if (c.model == "example3") example3_correlation(c.rho1, c.rho2);
  } else if (c.type == "ridge_curve") {
    if (c.design != 1 && c.design != 2) throw InputError("config: design must be 1 or 2");
    if (c.n_grid.empty()) c.n_grid = c.paper_scale ? std::vector<int>{50, 100, 500} : std::vector<int>{50, 100};
    if (c.q_grid.empty()) {
      if (c.paper_scale) {
        for (int q = 4; q <= 98; q += 2) c.q_grid.push_back(q);
      } else {
        c.q_grid = {4, 10, 20, 30, 40, 60};
      }
    }
    for (int q : c.q_grid)
      if (q < 4 || q % 2) throw InputError("config: design q values must be even and >= 4");
  } else if (c.type == "sparsity") {
    if (c.scenario < 1 || c.scenario > 3) throw InputError("config: scenario must be 1, 2 or 3");
    if (c.n_grid.empty()) c.n_grid = c.scenario == 3 ? std::vector<int>{100, 500} : std::vector<int>{50, 100, 500};
    if (c.penalties.empty()) {
      c.penalties = {PenaltyKind::none, PenaltyKind::lasso, PenaltyKind::adaptive_lasso, PenaltyKind::scad,
                     PenaltyKind::group_lasso};
    }
    const int q = c.scenario == 3 ? 70 : 20;
    scenario_correlation(c.scenario, c.scenario_params);
    for (PenaltyKind k : c.penalties) {
      if (k == PenaltyKind::ridge) throw InputError("config: ridge belongs to the ridge_curve experiment");
      for (int n : c.n_grid)
        if (k != PenaltyKind::none && n < q) {
          throw InputError("config: q > n is infeasible for sparse penalties (n = " + std::to_string(n) + ")");
        }
    }
  } else {
    throw InputError("config: unknown experiment type '" + c.type + "'");
  }
  for (int n : c.n_grid)
    if (n < 10) throw InputError("config: sample sizes must be at least 10");
  if (c.folds < 2) throw InputError("config: folds must be at least 2");
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["type"] = c.type;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["paper_scale"] = c.paper_scale;
  j["n"] = c.n_grid;
  if (c.type == "studentized") {
    j["model"] = c.model;
    if (c.model == "example3") {
      j["rho1"] = c.rho1;
      j["rho2"] = c.rho2;
    }
  } else if (c.type == "ridge_curve") {
    j["design"] = c.design;
    j["q"] = c.q_grid;
    j["folds"] = c.folds;
  } else {
    j["scenario"] = c.scenario;
    std::vector<std::string> pens;
    for (PenaltyKind k : c.penalties) pens.push_back(to_string(k));
    j["penalties"] = pens;
    const ScenarioParams& p = c.scenario_params;
    j["scenario_params"] = {{"x7_within", p.x7_within}, {"x7_cross", p.x7_cross},   {"x4_within", p.x4_within},
                            {"x4_cross", p.x4_cross},   {"graph_seed", p.graph_seed}, {"graph_zero_pairs", p.graph_zero_pairs},
                            {"graph_lo", p.graph_lo},   {"graph_hi", p.graph_hi}};
  }
  if (!c.custom_marginals.empty()) {
    std::vector<std::string> ms;
    for (const Marginal& m : c.custom_marginals) ms.push_back(m.to_string());
    j["marginals"] = ms;
  }
  return j;
}

std::vector<SummaryRow> summarize(const std::vector<ReplicateRecord>& records) {
  std::map<std::tuple<int, int, std::string, std::string>, std::vector<double>> groups;
  for (const ReplicateRecord& r : records) groups[{r.n, r.q, r.estimator, r.metric}].push_back(r.value);
  std::vector<SummaryRow> out;
  for (const auto& [key, vals] : groups) {
    SummaryRow row;
    std::tie(row.n, row.q, row.estimator, row.metric) = key;
    row.count = static_cast<int>(vals.size());
    double s = 0.0;
    for (double v : vals) s += v;
    row.mean = s / row.count;
    double ss = 0.0;
    for (double v : vals) ss += (v - row.mean) * (v - row.mean);
    row.variance = row.count > 1 ? ss / (row.count - 1) : 0.0;
    out.push_back(row);
  }
  return out;
}

namespace {

using Records = std::vector<ReplicateRecord>;

void push(Records& out, int rep, int n, int q, const std::string& est, const std::string& metric, double v) {
  out.push_back({rep, n, q, est, metric, v});
}

void run_studentized(const ExperimentConfig& c, const GroupedCorrelation& truth, const CopulaModel& model,
                     std::vector<Records>& slots) {
  const int q = truth.order();
  const double t1 = d1(truth), t2 = d2(truth);
  const int reps = c.reps;
  parallel_for(static_cast<int>(c.n_grid.size()) * reps, [&](int idx) {
    const int n = c.n_grid[idx / reps];
    const int rep = idx % reps;
    Records& out = slots[idx];
    const DataMatrix x = sample_gaussian_copula(model, n, stream_seed(c.seed, idx));
    const ScoresEstimate est = normal_scores_matrix(x, truth.partition());
    const double h1 = d1(est.correlation), h2 = d2(est.correlation);
    push(out, rep, n, q, "none", "D1_hat", h1);
    push(out, rep, n, q, "none", "D2_hat", h2);
    try {
      const DerivativePair dp = m_matrix(est.correlation, 1);
      const double z1 = std::sqrt(asymptotic_variance(est.correlation, dp, 1));
      const double z2 = std::sqrt(asymptotic_variance(est.correlation, dp, 2));
      const double rn = std::sqrt(static_cast<double>(n));
      push(out, rep, n, q, "none", "zeta1_hat", z1);
      push(out, rep, n, q, "none", "zeta2_hat", z2);
      if (z1 > 0.0) push(out, rep, n, q, "none", "studentized_D1", rn * (h1 - t1) / z1);
      if (z2 > 0.0) push(out, rep, n, q, "none", "studentized_D2", rn * (h2 - t2) / z2);
    } catch (const NumericalError&) {
      push(out, rep, n, q, "none", "asymptotics_failed", 1.0);
    }
  });
}

void push_sq_errors(Records& out, int rep, int n, int q, const std::string& est, const GroupedCorrelation& r,
                    const double truth[4]) {
  push(out, rep, n, q, est, "D1_sqerr", std::pow(d1(r) - truth[0], 2));
  push(out, rep, n, q, est, "D2_sqerr", std::pow(d2(r) - truth[1], 2));
  push(out, rep, n, q, est, "MI_sqerr", std::pow(phi_dependence(r, PhiKind::mutual_information) - truth[2], 2));
  push(out, rep, n, q, est, "Hellinger_sqerr", std::pow(phi_dependence(r, PhiKind::hellinger) - truth[3], 2));
}

void run_ridge_curve(const ExperimentConfig& c, std::vector<Records>& slots) {
  const int reps = c.reps;
  const int nq = static_cast<int>(c.q_grid.size());
  std::vector<GroupedCorrelation> truths;
  std::vector<std::array<double, 4>> truth_values;
  for (int q : c.q_grid) {
    truths.push_back(design_correlation(c.design, q));
    const GroupedCorrelation& t = truths.back();
    truth_values.push_back({d1(t), d2(t), phi_dependence(t, PhiKind::mutual_information),
                            phi_dependence(t, PhiKind::hellinger)});
  }
  PenaltySpec spec = default_spec(PenaltyKind::ridge);
  spec.folds = c.folds;
  parallel_for(static_cast<int>(c.n_grid.size()) * nq * reps, [&](int idx) {
    const int rep = idx % reps;
    const int qi = (idx / reps) % nq;
    const int n = c.n_grid[idx / (reps * nq)];
    const int q = c.q_grid[qi];
    Records& out = slots[idx];
    CopulaModel model{truths[qi], {}};
    const DataMatrix x = sample_gaussian_copula(model, n, stream_seed(c.seed, idx));
    const ScoresEstimate est = normal_scores_matrix(x, truths[qi].partition());
    const double* tv = truth_values[qi].data();
    const bool singular = sym_eigenvalues<double>(est.correlation.matrix()).minCoeff() <= 1e-10;
    push(out, rep, n, q, "none", "defined", singular ? 0.0 : 1.0);
    if (!singular) push_sq_errors(out, rep, n, q, "none", est.correlation, tv);
    PenaltySpec s = spec;
    s.seed = stream_seed(c.seed ^ 0x5EEDULL, idx);
    const double omega = ridge_cv(est, s);
    push(out, rep, n, q, "ridge", "defined", 1.0);
    push(out, rep, n, q, "ridge", "omega", omega);
    push_sq_errors(out, rep, n, q, "ridge", ridge(est.correlation, omega), tv);
  });
}

void run_sparsity(const ExperimentConfig& c, std::vector<Records>& slots) {
  const GroupedCorrelation truth = scenario_correlation(c.scenario, c.scenario_params);
  const int q = truth.order();
  const MaskXb true_support = (truth.matrix().array().abs() > 0.0).matrix();
  const double tv[4] = {d1(truth), d2(truth), phi_dependence(truth, PhiKind::mutual_information),
                        phi_dependence(truth, PhiKind::hellinger)};
  const int reps = c.reps;
  parallel_for(static_cast<int>(c.n_grid.size()) * reps, [&](int idx) {
    const int n = c.n_grid[idx / reps];
    const int rep = idx % reps;
    Records& out = slots[idx];
    CopulaModel model{truth, {}};
    const DataMatrix x = sample_gaussian_copula(model, n, stream_seed(c.seed, idx));
    const ScoresEstimate est = normal_scores_matrix(x, truth.partition());
    for (PenaltyKind kind : c.penalties) {
      const std::string name = to_string(kind);
      PenaltySpec spec = default_spec(kind);
      try {
        const PenalizedEstimate fit = tune(est, spec, truth.partition());
        const RecoveryRates rates = tpr_fpr(fit.support, true_support);
        if (rates.tpr) push(out, rep, n, q, name, "TPR", *rates.tpr);
        if (rates.fpr) push(out, rep, n, q, name, "FPR", *rates.fpr);
        push(out, rep, n, q, name, "frobenius", (fit.correlation.matrix() - truth.matrix()).norm() / q);
        push(out, rep, n, q, name, "omega", fit.omega_selected);
        push(out, rep, n, q, name, "converged", fit.converged ? 1.0 : 0.0);
        push_sq_errors(out, rep, n, q, name, fit.correlation, tv);
      } catch (const NumericalError&) {
        push(out, rep, n, q, name, "failed", 1.0);
      }
    }
  });
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const ExperimentConfig c = resolve(config);
  ExperimentResult res;
  res.seed = c.seed;
  res.config_echo = to_json(c);
  std::vector<Records> slots;
  if (c.type == "studentized") {
    CopulaModel model;
    if (c.model == "custom") {
      model.correlation = *c.custom_correlation;
      model.marginals = c.custom_marginals;
    } else if (c.model == "example3") {
      model.correlation = example3_correlation(c.rho1, c.rho2);
    } else {
      model = setting_model(std::stoi(c.model.substr(7)));
    }
    res.config_echo["truth"] = {{"D1", d1(model.correlation)}, {"D2", d2(model.correlation)}};
    slots.resize(c.n_grid.size() * c.reps);
    run_studentized(c, model.correlation, model, slots);
  } else if (c.type == "ridge_curve") {
    slots.resize(c.n_grid.size() * c.q_grid.size() * c.reps);
    run_ridge_curve(c, slots);
  } else {
    const GroupedCorrelation truth = scenario_correlation(c.scenario, c.scenario_params);
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < truth.matrix().rows(); ++i) {
      rows.emplace_back(truth.matrix().row(i).data(), truth.matrix().row(i).data() + truth.matrix().cols());
    }
    res.config_echo["truth_matrix"] = rows;
    slots.resize(c.n_grid.size() * c.reps);
    run_sparsity(c, slots);
  }
  for (Records& s : slots) res.replicates.insert(res.replicates.end(), s.begin(), s.end());
  res.summary = summarize(res.replicates);
  return res;
}

double ks_distance_normal(std::vector<double> v) {
  if (v.empty()) throw InputError("ks_distance_normal: empty sample");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace bwdep
