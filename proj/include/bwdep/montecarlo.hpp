#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bwdep/penalties.hpp"

namespace bwdep {

struct Marginal {
  enum class Kind { standard_normal, student_t, exponential, beta, f, uniform };
  Kind kind = Kind::standard_normal;
  double a = 0.0;  // df, rate, alpha, df1
  double b = 0.0;  // beta, df2

  // Value of F^{-1}(Phi(z)); the upper tail uses complements for accuracy.
  double transform(double z) const;
  std::string to_string() const;
  static Marginal parse(const std::string& text);  // normal | uniform | t(3) | exp(1) | beta(2,2) | f(2,6)
};

struct CopulaModel {
  GroupedCorrelation correlation;
  std::vector<Marginal> marginals;  // empty means standard normal
};

DataMatrix sample_gaussian_copula(const CopulaModel& model, int n, std::uint64_t seed);

enum class StructureKind { ar1, equicorrelation };
MatrixXd structured_correlation(StructureKind kind, int q, double rho);

CopulaModel setting_model(int setting);  // Settings 1-4 of the studentized study
GroupedCorrelation example3_correlation(double rho1, double rho2);
GroupedCorrelation design_correlation(int design, int q);  // AR(1), rho = 0.5

struct ScenarioParams {
  double x7_within = 0.5;   // Scenario 2: correlation inside X_7
  double x7_cross = 0.16;   // Scenario 2: X_7 against X_1..X_6
  double x4_within = 0.5;   // Scenario 3: correlation inside X_4
  double x4_cross = 0.08;   // Scenario 3: X_4 against X_1..X_3
  std::uint64_t graph_seed = 20240101;  // Scenario 1 random covariance graph
  int graph_zero_pairs = 65;            // 130 of 400 entries = 32.5%
  double graph_lo = 0.2, graph_hi = 0.5;
};

GroupedCorrelation scenario_correlation(int scenario, const ScenarioParams& params = {});

struct RecoveryRates {
  std::optional<double> tpr;
  std::optional<double> fpr;
};

// Positives are true zeros; evaluated on the strict upper triangle.
RecoveryRates tpr_fpr(const MaskXb& estimated_support, const MaskXb& true_support);

struct ExperimentConfig {
  std::string type = "studentized";  // studentized | ridge_curve | sparsity
  std::string model = "setting1";    // studentized: setting1..4 | example3 | custom
  int design = 1;
  int scenario = 2;
  double rho1 = 0.0, rho2 = 0.3;  // example3 model
  std::vector<int> n_grid;
  std::vector<int> q_grid;
  std::vector<PenaltyKind> penalties;
  int reps = 200;
  std::uint64_t seed = 1;
  bool paper_scale = false;
  int folds = 5;
  ScenarioParams scenario_params;
  std::optional<GroupedCorrelation> custom_correlation;
  std::vector<Marginal> custom_marginals;
};

// Builds a config from flat key-value pairs (see README for the keys).
ExperimentConfig config_from_kv(const std::map<std::string, std::string>& kv);
// Fills defaults and rejects infeasible settings before any sampling.
ExperimentConfig resolve(ExperimentConfig config);
nlohmann::json to_json(const ExperimentConfig& config);

struct ReplicateRecord {
  int replicate = 0;
  int n = 0;
  int q = 0;
  std::string estimator;
  std::string metric;
  double value = 0.0;
};

struct SummaryRow {
  int n = 0;
  int q = 0;
  std::string estimator;
  std::string metric;
  int count = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance
};

struct ExperimentResult {
  std::vector<ReplicateRecord> replicates;
  std::vector<SummaryRow> summary;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
};

std::vector<SummaryRow> summarize(const std::vector<ReplicateRecord>& records);
ExperimentResult run_experiment(const ExperimentConfig& config);

// Kolmogorov-Smirnov distance of a sample to N(0,1).
double ks_distance_normal(std::vector<double> values);

}  // namespace bwdep
