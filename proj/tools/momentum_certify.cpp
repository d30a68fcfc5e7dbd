// momentum-certify: simulate | certify | stationary | contraction | figure1

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "momcert/bench.hpp"
#include "momcert/io.hpp"
#include "momcert/transport.hpp"

using namespace momcert;
using nlohmann::json;

namespace {

constexpr int kExitInfeasible = 1;
constexpr int kExitKappaOne = 2;
constexpr int kExitError = 3;

Vec to_vec(const std::vector<double>& xs) {
  return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json constant_json(const Constant& c) { return {{"value", c.value}, {"formula", c.provenance}}; }

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file_atomic(out_path, text);
}

struct CertifyArgs {
  std::string preset = "ag";
  double mu = 1.0;
  double ell = 4.0;
  double aybat_alpha = 0.0;
  double sigma = 1.0;
  int dim = 1;
  double eta = 0.5;
  std::optional<double> R;
};

int run_certify(const CertifyArgs& a) {
  const CertificatePair cert = preset_params(preset_from_string(a.preset), a.mu, a.ell, a.aybat_alpha);
  json rep{{"preset", to_string(cert.preset)},
           {"mu", a.mu},
           {"L", a.ell},
           {"params", {{"alpha", cert.alpha}, {"beta", cert.beta}}},
           {"rho", cert.rho}};
  json constants = json::object();
  bool feasible = false;
  if (cert.p_tilde) {
    const auto verdict = verify_lmi(cert);
    feasible = verdict.feasible;
    rep["lmi_max_eig"] = verdict.max_eigenvalue;
    rep["feasible"] = verdict.feasible;
    rep["p_tilde"] = {{(*cert.p_tilde)(0, 0), (*cert.p_tilde)(0, 1)},
                      {(*cert.p_tilde)(1, 0), (*cert.p_tilde)(1, 1)}};
  } else {
    rep["lmi"] = "omitted: preset carries no P~";
    rep["feasible"] = nullptr;
  }

  std::optional<double> R = a.R;
  const Mat sigma_mat = a.sigma * a.sigma * Mat::Identity(a.dim, a.dim);
  if (a.sigma > 0.0) {
    try {
      const auto m = gaussian_minorization(a.mu, a.ell, sigma_mat);
      constants["M"] = constant_json(m.M);
      constants["R"] = constant_json(m.R);
      if (!R) R = m.R.value;
    } catch (const Error& e) {
      constants["minorization_error"] = e.what();
    }
  }
  if (R) {
    constants["R_used"] = *R;
    constants["sigma_max"] =
        constant_json(noise_budget(NoiseVariant::UNCONSTRAINED, {*R, a.mu, a.ell, 0.0, 0.0}));
  }
  if (cert.p_tilde) {
    const auto drift = drift_constants(cert, a.sigma);
    constants["gamma"] = constant_json(drift.gamma);
    constants["K"] = constant_json(drift.K);
    if (R && drift.K.value > 0.0) {
      try {
        const auto b = ergodicity_budget(a.eta, *R, cert.rho, drift.K.value);
        constants["eta"] = a.eta;
        constants["psi"] = constant_json(b.psi);
        constants["eta_bar"] = constant_json(b.eta_bar);
        constants["slack"] = b.slack;
      } catch (const InfeasibleError& e) {
        constants["ergodicity"] = {{"feasible", false}, {"slack", e.slack()}};
      }
    }
    const auto c0 = c0_constant(*cert.p_tilde, a.mu, constants.contains("psi")
                                                         ? constants["psi"]["value"].get<double>()
                                                         : 1.0);
    constants["c0"] = c0.c0;
    constants["c_hat0"] = c0.c_hat0;
  }
  rep["constants"] = constants;
  std::cout << rep.dump(2) << "\n";
  return feasible ? 0 : kExitInfeasible;
}

struct QuadArgs {
  std::vector<double> eigs{1.0, 4.0};
  std::string method;  // default: the preset's own method
  std::string preset;
  std::optional<double> alpha;
  double beta = 0.0;
  double sigma = 1.0;
  std::vector<double> x0;
  long k_max = 100;
  std::string out;
};

struct Resolved {
  QuadraticObjective obj;
  Method method;
  MomentumParams params;
  std::optional<CertificatePair> cert;
  Vec x0;
};

Resolved resolve(const QuadArgs& a) {
  Resolved r{QuadraticObjective::diagonal(to_vec(a.eigs)), Method::AG, {}, {}, Vec()};
  if (!a.preset.empty()) {
    r.cert = preset_params(preset_from_string(a.preset), r.obj.mu(), r.obj.ell());
    r.params = r.cert->params();
  } else if (a.alpha) {
    if (a.method.empty()) throw Error(ErrorKind::InvalidInput, "--alpha needs --method");
    r.params.alpha = *a.alpha;
    r.params.beta = a.beta;
  } else {
    throw Error(ErrorKind::InvalidInput, "give --preset or --alpha");
  }
  if (!a.method.empty()) r.params.method = method_from_string(a.method);
  r.method = r.params.method;
  r.params.validate();
  r.x0 = a.x0.empty() ? Vec(Vec::Ones(r.obj.dim())) : to_vec(a.x0);
  if (r.x0.size() != r.obj.dim()) throw Error(ErrorKind::InvalidInput, "--x0 has wrong dimension");
  return r;
}

int run_stationary(const QuadArgs& a) {
  const Resolved r = resolve(a);
  const Eigen::Index d = r.obj.dim();
  const Mat sigma = a.sigma * a.sigma * Mat::Identity(d, d);
  const StationaryReport rep = stationary_cov(r.method, r.obj, r.params, sigma);
  json j{{"method", to_string(r.method)},
         {"alpha", r.params.alpha},
         {"beta", r.params.beta},
         {"solver", rep.solver},
         {"trace_solver", rep.trace}};
  if (rep.trace_closed_form) {
    j["trace_closed"] = *rep.trace_closed_form;
    j["per_eigenvalue_terms"] = rep.per_eigenvalue_terms;
    j["trace_block"] = *rep.trace_block_form;
    j["per_eigenvalue_block_terms"] = rep.per_eigenvalue_block_terms;
  }
  if (r.cert) {
    const auto start = GaussianChainState::point_mass(StateVec::at(r.x0));
    j["V_prefactor"] = v_prefactor(start, StateVec::at(r.obj.minimizer()).stacked(),
                                   r.params.alpha, sigma, r.cert->rho);
    j["rho"] = r.cert->rho;
  }
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

int run_contraction(const QuadArgs& a, bool unweighted) {
  const Resolved r = resolve(a);
  if (!r.cert) throw Error(ErrorKind::InvalidInput, "contraction needs --preset for its rate");
  const Eigen::Index d = r.obj.dim();
  const Mat sigma = a.sigma * a.sigma * Mat::Identity(d, d);
  std::optional<WeightedNorm> w;
  if (!unweighted) {
    if (!r.cert->p_tilde)
      throw Error(ErrorKind::NoCertificate, "preset has no P~; pass --unweighted");
    w = build_weighted_norm(*r.cert->p_tilde, r.obj);
  }
  const auto curve =
      contraction_curve(r.method, r.obj, r.params, sigma,
                        GaussianChainState::point_mass(StateVec::at(r.x0)), a.k_max, r.cert->rho,
                        w ? &*w : nullptr);
  emit(a.out, curve.to_csv());
  std::cerr << json{{"rho", curve.rho},
                    {"max_ratio", curve.max_ratio},
                    {"squared_holds", curve.squared_holds},
                    {"unsquared_holds", curve.unsquared_holds}}
                   .dump()
            << "\n";
  return curve.squared_holds ? 0 : kExitInfeasible;
}

struct SimArgs {
  std::string config;
  std::vector<double> eigs{1.0, 4.0};
  std::string method = "ag";
  std::string preset = "ag";
  std::optional<double> alpha;
  double beta = 0.0;
  std::string noise = "gaussian";
  double sigma = 1.0;
  long paths = 1000;
  long k_max = 100;
  std::vector<long> snapshots;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
};

int run_simulate(const SimArgs& a) {
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw Error(ErrorKind::InvalidInput, "cannot read " + a.config);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::InvalidInput, std::string("config: ") + e.what());
    }
    cfg = ExperimentConfig::from_json(j);
  } else {
    cfg.objective = {{"type", "quadratic"}, {"eigenvalues", a.eigs}};
    cfg.method = method_from_string(a.method);
    if (a.alpha) {
      cfg.alpha = *a.alpha;
      cfg.beta = a.beta;
    } else {
      cfg.preset = preset_from_string(a.preset);
    }
    cfg.noise.kind = a.noise;
    cfg.noise.sigma = a.sigma;
    cfg.n_paths = a.paths;
    cfg.k_max = a.k_max;
    cfg.snapshot_ks = a.snapshots;
    cfg.master_seed = a.seed;
  }
  if (!a.out.empty()) cfg.output_dir = a.out;
  const auto res = run_experiment(cfg, a.threads);
  json s = res.summary();
  s["config"] = cfg.to_json();
  std::cout << s.dump(2) << "\n";
  return 0;
}

int run_figure1(const std::string& panel, std::uint64_t seed, const std::string& out, long paths,
                int threads) {
  const std::vector<std::string> panels =
      panel == "all" ? std::vector<std::string>{"left", "middle", "right"}
                     : std::vector<std::string>{panel};
  json report = json::object();
  for (const auto& p : panels) {
    const auto pr = figure1(p, seed, out, paths, threads);
    json runs = json::array();
    for (const auto& run : pr.runs)
      runs.push_back({{"label", run.label},
                      {"output_dir", run.config.output_dir},
                      {"plateau_mean_gap", run.result.curve.back().mean_gap},
                      {"n_diverged", run.result.n_diverged}});
    report[p] = {{"runs", runs}};
    if (pr.ks)
      report[p]["ks_125_vs_625"] = {{"statistic", pr.ks->statistic}, {"p_value", pr.ks->p_value}};
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified rates and Monte Carlo checks for stochastic momentum methods"};
  app.require_subcommand(1);

  CertifyArgs ca;
  auto* certify = app.add_subcommand("certify", "LMI certificate and constants for a preset");
  certify->add_option("--preset", ca.preset, "ag | ag_star | hb | aybat")->required();
  certify->add_option("--mu", ca.mu, "strong convexity modulus")->required();
  certify->add_option("--L", ca.ell, "smoothness modulus")->required();
  certify->add_option("--alpha", ca.aybat_alpha, "step size for the aybat preset");
  certify->add_option("--sigma", ca.sigma, "noise level; Sigma = sigma^2 I")->capture_default_str();
  certify->add_option("--dim", ca.dim, "dimension for the minorization constants")
      ->capture_default_str();
  certify->add_option("--eta", ca.eta, "minorization level")->capture_default_str();
  certify->add_option("--R", ca.R, "level-set radius (default: the Gaussian minorization R)");

  QuadArgs qa;
  auto add_quad = [&qa](CLI::App* sub) {
    sub->add_option("--eigs", qa.eigs, "Hessian eigenvalues (diagonal quadratic)")->delimiter(',');
    sub->add_option("--method", qa.method, "gd | hb | ag (default: the preset's method)");
    sub->add_option("--preset", qa.preset, "ag | ag_star | hb | aybat");
    sub->add_option("--alpha", qa.alpha, "explicit step size");
    sub->add_option("--beta", qa.beta, "explicit momentum");
    sub->add_option("--sigma", qa.sigma, "noise level; Sigma = sigma^2 I")->capture_default_str();
    sub->add_option("--x0", qa.x0, "start point (default all ones)")->delimiter(',');
    sub->add_option("--out", qa.out, "output file (default stdout)");
  };
  auto* stationary = app.add_subcommand("stationary", "stationary covariance and traces");
  add_quad(stationary);
  auto* contraction = app.add_subcommand("contraction", "exact W2 contraction curve");
  add_quad(contraction);
  bool unweighted = false;
  contraction->add_option("--kmax", qa.k_max, "last step")->capture_default_str();
  contraction->add_flag("--unweighted", unweighted, "Euclidean W2 instead of the S-weighted one");

  SimArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiment");
  simulate->add_option("--config", sa.config, "experiment JSON (other flags ignored except --out)");
  simulate->add_option("--eigs", sa.eigs, "Hessian eigenvalues")->delimiter(',');
  simulate->add_option("--method", sa.method)->capture_default_str();
  simulate->add_option("--preset", sa.preset)->capture_default_str();
  simulate->add_option("--alpha", sa.alpha, "explicit step size (overrides --preset)");
  simulate->add_option("--beta", sa.beta);
  simulate->add_option("--noise", sa.noise, "gaussian | rademacher | uniform_ball | none")
      ->capture_default_str();
  simulate->add_option("--sigma", sa.sigma)->capture_default_str();
  simulate->add_option("--paths", sa.paths)->capture_default_str();
  simulate->add_option("--kmax", sa.k_max)->capture_default_str();
  simulate->add_option("--snapshots", sa.snapshots)->delimiter(',');
  simulate->add_option("--seed", sa.seed)->capture_default_str();
  simulate->add_option("--out", sa.out, "output directory");
  simulate->add_option("--threads", sa.threads, "worker threads (default MC_THREADS or all cores)");

  std::string panel = "all";
  std::uint64_t fig_seed = 2024;
  std::string fig_out = "figure1";
  long fig_paths = 10000;
  int fig_threads = 0;
  auto* fig = app.add_subcommand("figure1", "Figure-1 protocol");
  fig->add_option("--panel", panel, "left | middle | right | all")->capture_default_str();
  fig->add_option("--seed", fig_seed)->capture_default_str();
  fig->add_option("--out", fig_out)->capture_default_str();
  fig->add_option("--paths", fig_paths)->capture_default_str();
  fig->add_option("--threads", fig_threads);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*certify) return run_certify(ca);
    if (*stationary) return run_stationary(qa);
    if (*contraction) return run_contraction(qa, unweighted);
    if (*simulate) return run_simulate(sa);
    if (*fig) return run_figure1(panel, fig_seed, fig_out, fig_paths, fig_threads);
  } catch (const Error& e) {
    std::cerr << "momentum-certify: " << e.what() << "\n";
    return e.kind() == ErrorKind::KappaOne ? kExitKappaOne : kExitError;
  }
  return 0;
}
