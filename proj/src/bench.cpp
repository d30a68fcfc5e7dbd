#include "momcert/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

#include "momcert/io.hpp"

namespace momcert {

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n == 0 ? 0 : static_cast<Eigen::Index>(rows[0].size());
  Mat out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m)
      throw Error(ErrorKind::InvalidInput, "config: ragged matrix");
    for (Eigen::Index j = 0; j < m; ++j)
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

json vec_to_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec vec_from_json(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

Histogram make_histogram(long k, const std::vector<double>& values, int bins) {
  Histogram h;
  h.k = k;
  double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  double hi = values.empty() ? 1.0 : *std::max_element(values.begin(), values.end());
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  h.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) h.edges[static_cast<std::size_t>(b)] = lo + width * b;
  h.edges.back() = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    auto b = static_cast<long>((v - lo) / width);
    b = std::clamp(b, 0L, static_cast<long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

std::string sigma_label(double s) {
  std::ostringstream out;
  out << s;
  return out.str();
}

}  // namespace

NoiseOracle NoiseSpec::build(Eigen::Index dim) const {
  if (kind == "none") return NoiseOracle::isotropic_gaussian(dim, 0.0);
  if (kind == "gaussian") {
    if (covariance) {
      if (covariance->rows() != dim)
        throw Error(ErrorKind::InvalidInput, "noise: covariance has wrong dimension");
      return NoiseOracle::gaussian(*covariance);
    }
    return NoiseOracle::isotropic_gaussian(dim, sigma);
  }
  if (kind == "rademacher") return NoiseOracle::scaled_rademacher(dim, sigma);
  if (kind == "uniform_ball") return NoiseOracle::uniform_ball(dim, sigma);
  throw Error(ErrorKind::InvalidInput, "noise: unknown kind '" + kind + "'");
}

json NoiseSpec::to_json() const {
  json j{{"kind", kind}, {"sigma", sigma}};
  if (covariance) j["covariance"] = mat_to_json(*covariance);
  return j;
}

NoiseSpec NoiseSpec::from_json(const json& j) {
  NoiseSpec s;
  s.kind = j.value("kind", std::string("gaussian"));
  s.sigma = j.value("sigma", 0.0);
  if (j.contains("covariance")) s.covariance = mat_from_json(j.at("covariance"));
  if (!(s.sigma >= 0.0)) throw Error(ErrorKind::InvalidInput, "noise: sigma must be >= 0");
  return s;
}

void ExperimentConfig::validate() const {
  if (n_paths < 1) throw Error(ErrorKind::InvalidInput, "config: n_paths must be >= 1");
  if (k_max < 0) throw Error(ErrorKind::InvalidInput, "config: k_max must be >= 0");
  if (hist_bins < 1) throw Error(ErrorKind::InvalidInput, "config: hist_bins must be >= 1");
  for (long k : snapshot_ks)
    if (k < 0 || k > k_max)
      throw Error(ErrorKind::InvalidInput, "config: snapshot k outside [0, k_max]");
  if (method == Method::ASPG && !set)
    throw Error(ErrorKind::InvalidInput, "config: aspg needs a constraint set");
}

MomentumParams ExperimentConfig::resolve_params(const Objective& obj) const {
  MomentumParams p;
  if (preset) {
    p = preset_params(*preset, obj.mu(), obj.ell()).params();
  } else {
    p.alpha = alpha;
    p.beta = beta;
  }
  p.method = method;
  p.validate();
  return p;
}

json ExperimentConfig::to_json() const {
  json j{{"objective", objective},
         {"method", to_string(method)},
         {"noise", noise.to_json()},
         {"n_paths", n_paths},
         {"k_max", k_max},
         {"snapshot_ks", snapshot_ks},
         {"master_seed", master_seed},
         {"hist_bins", hist_bins}};
  if (preset)
    j["preset"] = to_string(*preset);
  else
    j["params"] = {{"alpha", alpha}, {"beta", beta}};
  if (x0) j["x0"] = vec_to_json(*x0);
  if (set) j["set"] = set->to_json();
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.objective = j.at("objective");
    c.method = method_from_string(j.value("method", std::string("ag")));
    if (j.contains("preset")) c.preset = preset_from_string(j.at("preset").get<std::string>());
    if (j.contains("params")) {
      c.alpha = j.at("params").at("alpha").get<double>();
      c.beta = j.at("params").value("beta", 0.0);
    }
    if (!c.preset && !j.contains("params"))
      throw Error(ErrorKind::InvalidInput, "config: give either preset or params");
    if (j.contains("noise")) c.noise = NoiseSpec::from_json(j.at("noise"));
    c.n_paths = j.value("n_paths", 1L);
    c.k_max = j.at("k_max").get<long>();
    c.snapshot_ks = j.value("snapshot_ks", std::vector<long>{});
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", std::string());
    c.hist_bins = j.value("hist_bins", 40);
    if (j.contains("x0")) c.x0 = vec_from_json(j.at("x0"));
    if (j.contains("set")) c.set = ConstraintSet::from_json(j.at("set"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

long Histogram::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

std::string Histogram::to_csv() const {
  std::ostringstream out;
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < counts.size(); ++b)
    out << format_double(edges[b]) << ',' << format_double(edges[b + 1]) << ',' << counts[b]
        << '\n';
  return out.str();
}

std::string AggregateResult::curve_csv() const {
  std::ostringstream out;
  out << "k,mean_gap,q05,q25,q50,q75,q95,n_alive\n";
  for (const auto& p : curve)
    out << p.k << ',' << format_double(p.mean_gap) << ',' << format_double(p.q05) << ','
        << format_double(p.q25) << ',' << format_double(p.q50) << ',' << format_double(p.q75)
        << ',' << format_double(p.q95) << ',' << p.n_alive << '\n';
  return out.str();
}

json AggregateResult::summary() const {
  json j{{"n_paths", n_paths}, {"n_diverged", n_diverged}};
  if (!curve.empty()) {
    j["final_mean_gap"] = curve.back().mean_gap;
    j["final_mean_gap_se"] = curve.back().se_gap;
  }
  j["final_mean"] = vec_to_json(final_mean);
  j["final_cov"] = mat_to_json(final_cov);
  j["final_cov_se"] = mat_to_json(final_cov_se);
  json hs = json::array();
  for (const auto& h : histograms) hs.push_back({{"k", h.k}, {"total", h.total()}});
  j["histograms"] = hs;
  return j;
}

int default_thread_count() {
  if (const char* env = std::getenv("MC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AggregateResult run_experiment(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const auto obj = objective_from_json(cfg.objective);
  const Eigen::Index d = obj->dim();
  const MomentumParams params = cfg.resolve_params(*obj);
  const NoiseOracle noise = cfg.noise.build(d);
  const Vec x0 = cfg.x0 ? *cfg.x0 : Vec(Vec::Ones(d));
  if (x0.size() != d) throw Error(ErrorKind::InvalidInput, "config: x0 has wrong dimension");
  if (cfg.set && cfg.set->dim() != d)
    throw Error(ErrorKind::InvalidInput, "config: set has wrong dimension");

  RunOptions opts;
  opts.record_states = false;
  opts.throw_on_divergence = false;
  opts.set = cfg.set ? &*cfg.set : nullptr;

  const auto n = static_cast<std::size_t>(cfg.n_paths);
  std::vector<TrajectoryRecord> paths(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < n; i = next++)
      paths[i] = run_path(cfg.method, StateVec::at(x0), *obj, params, noise, cfg.k_max,
                          derive_seed(cfg.master_seed, i), opts);
  };
  const int t = std::max(1, std::min<int>(threads > 0 ? threads : default_thread_count(),
                                          static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int w = 1; w < t; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  AggregateResult res;
  res.n_paths = cfg.n_paths;
  for (const auto& p : paths)
    if (p.diverged_at) ++res.n_diverged;
  if (res.n_diverged == cfg.n_paths)
    throw DivergedError(*paths.front().diverged_at, "run_experiment: every path diverged");

  std::vector<double> col;
  col.reserve(n);
  for (long k = 0; k <= cfg.k_max; ++k) {
    col.clear();
    for (const auto& p : paths)
      if (static_cast<long>(p.subopt.size()) > k) col.push_back(p.subopt[static_cast<std::size_t>(k)]);
    CurvePoint cp{};
    cp.k = k;
    cp.n_alive = static_cast<long>(col.size());
    double sum = 0.0;
    for (double v : col) sum += v;
    cp.mean_gap = sum / static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += (v - cp.mean_gap) * (v - cp.mean_gap);
    cp.se_gap = col.size() > 1 ? std::sqrt(ss / static_cast<double>(col.size() - 1) /
                                           static_cast<double>(col.size()))
                               : 0.0;
    if (std::find(cfg.snapshot_ks.begin(), cfg.snapshot_ks.end(), k) != cfg.snapshot_ks.end()) {
      res.snapshot_gaps[k] = col;
      res.histograms.push_back(make_histogram(k, col, cfg.hist_bins));
    }
    std::sort(col.begin(), col.end());
    cp.q05 = quantile_sorted(col, 0.05);
    cp.q25 = quantile_sorted(col, 0.25);
    cp.q50 = quantile_sorted(col, 0.50);
    cp.q75 = quantile_sorted(col, 0.75);
    cp.q95 = quantile_sorted(col, 0.95);
    res.curve.push_back(cp);
  }

  // Empirical law of xi_{k_max} over the surviving paths.
  std::vector<const StateVec*> alive;
  for (const auto& p : paths)
    if (!p.diverged_at) alive.push_back(&p.final_state);
  const auto m = static_cast<double>(alive.size());
  res.final_mean = Vec::Zero(2 * d);
  for (const auto* s : alive) res.final_mean += s->stacked();
  res.final_mean /= m;
  Mat centred(2 * d, static_cast<Eigen::Index>(alive.size()));
  for (std::size_t i = 0; i < alive.size(); ++i)
    centred.col(static_cast<Eigen::Index>(i)) = alive[i]->stacked() - res.final_mean;
  res.final_cov = Mat::Zero(2 * d, 2 * d);
  res.final_cov_se = Mat::Zero(2 * d, 2 * d);
  if (alive.size() > 1) {
    for (Eigen::Index i = 0; i < 2 * d; ++i)
      for (Eigen::Index j = 0; j < 2 * d; ++j) {
        const Eigen::ArrayXd prod = centred.row(i).array() * centred.row(j).array();
        const double est = prod.sum() / (m - 1.0);
        res.final_cov(i, j) = est;
        res.final_cov_se(i, j) = std::sqrt((prod - prod.mean()).square().sum() / (m - 1.0) / m);
      }
  }

  if (!cfg.output_dir.empty()) write_experiment(cfg, res);
  return res;
}

void write_experiment(const ExperimentConfig& cfg, const AggregateResult& res) {
  write_file_atomic(join_path(cfg.output_dir, "curve.csv"), res.curve_csv());
  for (const auto& h : res.histograms)
    write_file_atomic(join_path(cfg.output_dir, "hist_k" + std::to_string(h.k) + ".csv"),
                      h.to_csv());
  json s = res.summary();
  s["config"] = cfg.to_json();
  s["config"].erase("output_dir");
  write_file_atomic(join_path(cfg.output_dir, "summary.json"), s.dump(2) + "\n");
}

double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  // 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)
  double p = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidInput, "ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double stat = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    stat = std::max(stat, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {stat, kolmogorov_tail((en + 0.12 + 0.11 / en) * stat)};
}

std::vector<ExperimentConfig> figure1_configs(const std::string& panel, std::uint64_t seed,
                                              const std::string& out_dir, long n_paths) {
  const std::vector<double> sigmas{0.01, 0.1, 1.0, 2.0};
  json diag_q = {{"type", "quadratic"}, {"eigenvalues", json::array()}};
  for (int i = 1; i <= 10; ++i) diag_q["eigenvalues"].push_back(1.0 / i);

  std::vector<ExperimentConfig> out;
  auto base = [&](double sigma, std::uint64_t stream) {
    ExperimentConfig c;
    c.method = Method::AG;
    c.noise.kind = "gaussian";
    c.noise.sigma = sigma;
    c.n_paths = n_paths;
    c.master_seed = derive_seed(seed, stream);
    return c;
  };
  if (panel == "left") {
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      auto c = base(sigmas[i], i);
      c.objective = {{"type", "quadratic"}, {"eigenvalues", {1.0}}};
      c.alpha = 1.0;  // kappa = 1: no certificate, simulation only
      c.beta = 0.0;
      c.k_max = 100;
      if (!out_dir.empty())
        c.output_dir = join_path(join_path(out_dir, "left"), "sigma_" + sigma_label(sigmas[i]));
      out.push_back(c);
    }
  } else if (panel == "middle") {
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      auto c = base(sigmas[i], 100 + i);
      c.objective = diag_q;
      c.preset = Preset::AG;
      c.k_max = 300;
      if (!out_dir.empty())
        c.output_dir = join_path(join_path(out_dir, "middle"), "sigma_" + sigma_label(sigmas[i]));
      out.push_back(c);
    }
  } else if (panel == "right") {
    auto c = base(1.0, 200);
    c.objective = diag_q;
    c.preset = Preset::AG;
    c.k_max = 625;
    c.snapshot_ks = {5, 25, 125, 625};
    if (!out_dir.empty()) c.output_dir = join_path(out_dir, "right");
    out.push_back(c);
  } else {
    throw Error(ErrorKind::InvalidInput, "figure1: panel must be left, middle or right");
  }
  return out;
}

PanelResult figure1(const std::string& panel, std::uint64_t seed, const std::string& out_dir,
                    long n_paths, int threads) {
  PanelResult pr;
  pr.panel = panel;
  for (auto& cfg : figure1_configs(panel, seed, out_dir, n_paths)) {
    PanelRun run;
    run.sigma = cfg.noise.sigma;
    run.label = "sigma=" + sigma_label(run.sigma);
    run.result = run_experiment(cfg, threads);
    run.config = std::move(cfg);
    pr.runs.push_back(std::move(run));
  }
  if (panel == "right") {
    const auto& snaps = pr.runs.front().result.snapshot_gaps;
    pr.ks = ks_two_sample(snaps.at(125), snaps.at(625));
    if (!out_dir.empty()) {
      json j{{"k_a", 125}, {"k_b", 625}, {"statistic", pr.ks->statistic},
             {"p_value", pr.ks->p_value}, {"accept_at_0.01", pr.ks->p_value > 0.01}};
      write_file_atomic(join_path(join_path(out_dir, "right"), "ks.json"), j.dump(2) + "\n");
    }
  }
  return pr;
}

}  // namespace momcert
