#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "momcert/certificates.hpp"

namespace momcert {

/// kind: "gaussian" (N(0, sigma^2 I) or N(0, covariance) when given),
/// "rademacher", "uniform_ball" or "none".
struct NoiseSpec {
  std::string kind = "gaussian";
  double sigma = 0.0;
  std::optional<Mat> covariance;

  NoiseOracle build(Eigen::Index dim) const;
  nlohmann::json to_json() const;
  static NoiseSpec from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
  nlohmann::json objective;  // objective_from_json schema
  Method method = Method::AG;
  std::optional<Preset> preset;  // otherwise alpha, beta are used as given
  double alpha = 0.0;
  double beta = 0.0;
  NoiseSpec noise;
  long n_paths = 1;
  long k_max = 0;
  std::vector<long> snapshot_ks;
  std::uint64_t master_seed = 0;
  std::string output_dir;  // empty: nothing written
  std::optional<Vec> x0;   // default: all ones, x_{-1} = x0
  std::optional<ConstraintSet> set;
  int hist_bins = 40;

  /// Throws InvalidInput on n_paths < 1, k_max < 0 or snapshots outside [0, k_max].
  void validate() const;
  MomentumParams resolve_params(const Objective& obj) const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct CurvePoint {
  long k;
  double mean_gap;
  double se_gap;  // standard error of mean_gap; not part of the CSV
  double q05, q25, q50, q75, q95;
  long n_alive;
};

struct Histogram {
  long k;
  std::vector<double> edges;  // bins + 1 edges; the last bin is closed
  std::vector<long> counts;

  long total() const;
  /// bin_left,bin_right,count
  std::string to_csv() const;
};

struct AggregateResult {
  std::vector<CurvePoint> curve;
  std::vector<Histogram> histograms;
  std::map<long, std::vector<double>> snapshot_gaps;  // path-index order, alive paths only
  long n_paths = 0;
  long n_diverged = 0;
  Vec final_mean;     // empirical mean of xi_{k_max}
  Mat final_cov;      // empirical covariance of xi_{k_max}
  Mat final_cov_se;   // entrywise standard error of final_cov

  /// k,mean_gap,q05,q25,q50,q75,q95,n_alive
  std::string curve_csv() const;
  nlohmann::json summary() const;
};

/// MC_THREADS if set and positive, else the hardware concurrency.
int default_thread_count();

/// Paths run concurrently; each draws from CounterRng(derive_seed(master_seed, i))
/// and results are reduced in path order, so the output does not depend on
/// thread count. Writes curve.csv, hist_k<k>.csv and summary.json to
/// output_dir when set. Throws Diverged only when every path diverges.
AggregateResult run_experiment(const ExperimentConfig& cfg, int threads = 0);

/// Writes the files run_experiment would write for cfg.
void write_experiment(const ExperimentConfig& cfg, const AggregateResult& res);

/// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

struct KsResult {
  double statistic;
  double p_value;
};

/// P(K > lambda) for the Kolmogorov distribution.
double kolmogorov_tail(double lambda);

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Figure-1 panels: "left" (d = 1, f = x^2/2, alpha = 1, beta = 0),
/// "middle" (d = 10, Q_ii = 1/i, AG preset), "right" (middle's problem at
/// sigma = 1 with histograms at k in {5, 25, 125, 625}).
struct PanelRun {
  std::string label;  // e.g. "sigma=0.1"
  double sigma;
  ExperimentConfig config;
  AggregateResult result;
};

struct PanelResult {
  std::string panel;
  std::vector<PanelRun> runs;
  std::optional<KsResult> ks;  // right panel: k = 125 vs k = 625
};

std::vector<ExperimentConfig> figure1_configs(const std::string& panel, std::uint64_t seed,
                                              const std::string& out_dir, long n_paths = 10000);
PanelResult figure1(const std::string& panel, std::uint64_t seed, const std::string& out_dir,
                    long n_paths = 10000, int threads = 0);

}  // namespace momcert
