#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "msorte/certificate.hpp"
#include "msorte/conjugate.hpp"
#include "msorte/equilibrium.hpp"
#include "msorte/exponential_oracle.hpp"
#include "msorte/scenario_io.hpp"
#include "msorte/solver.hpp"

namespace {

using msorte::Allocation;
using msorte::BudgetSpec;
using msorte::ClusterPartition;
using msorte::InputError;
using msorte::ScenarioSpace;
using msorte::SolverError;
using msorte::UtilitySpec;
using msorte::Vector;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitSolver = 2;
constexpr int kExitVerification = 3;

struct RunConfig {
  ScenarioSpace space{{"s1"}, Vector::Ones(1)};
  Allocation X;
  UtilitySpec utility;
  double budget = 0.0;
  ClusterPartition partition = ClusterPartition::single(1);
  msorte::SolverConfig solver;
  std::string output_dir = ".";
  bool emit_plots = false;
  std::string config_hash;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Vector json_vector(const nlohmann::json& j) {
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

RunConfig load_config(const std::string& path) {
  std::string text = slurp(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.config_hash = msorte::fnv1a_hex(text);
  try {
    std::string scen = j.at("scenarios").get<std::string>();
    if (!std::filesystem::exists(scen)) {
      auto sibling = std::filesystem::path(path).parent_path() / scen;
      if (std::filesystem::exists(sibling)) scen = sibling.string();
    }
    auto [space, X] = msorte::load_scenarios(scen);
    cfg.space = std::move(space);
    cfg.X = std::move(X);

    const auto& u = j.at("utility");
    cfg.utility.family = msorte::family_from_name(u.at("family").get<std::string>());
    cfg.utility.alpha = json_vector(u.at("alpha"));
    if (u.contains("beta")) cfg.utility.beta_weights = json_vector(u.at("beta"));
    if (u.contains("agg")) {
      std::string kind = u.at("agg").at("kind").get<std::string>();
      if (kind == "exponential") cfg.utility.agg.kind = msorte::AggregatorKind::Exponential;
      else if (kind == "rational") cfg.utility.agg.kind = msorte::AggregatorKind::Rational;
      else if (kind == "arctan") cfg.utility.agg.kind = msorte::AggregatorKind::Arctan;
      else throw InputError("config: unknown aggregator kind: " + kind);
      cfg.utility.agg.p = u.at("agg").at("p").get<double>();
    }
    if (u.contains("gamma")) cfg.utility.gamma = json_vector(u.at("gamma"));
    if (u.contains("kink")) cfg.utility.kink = json_vector(u.at("kink"));
    if (u.contains("exponent")) cfg.utility.exponent = u.at("exponent").get<double>();

    cfg.budget = j.at("budget").get<double>();

    const int n = cfg.X.agents();
    if (j.contains("clusters")) {
      std::vector<std::vector<int>> groups;
      for (const auto& grp : j.at("clusters")) {
        std::vector<int> g;
        for (const auto& idx : grp) {
          int one_based = idx.get<int>();
          if (one_based < 1 || one_based > n)
            throw InputError("config: cluster index out of range: " + std::to_string(one_based));
          g.push_back(one_based - 1);
        }
        groups.push_back(std::move(g));
      }
      cfg.partition = ClusterPartition(n, std::move(groups));
    } else {
      cfg.partition = ClusterPartition::single(n);
    }

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      if (s.contains("newton_tol")) cfg.solver.newton_tol = s.at("newton_tol").get<double>();
      if (s.contains("max_iter")) cfg.solver.max_iter = s.at("max_iter").get<int>();
      if (s.contains("outer_tol")) cfg.solver.outer_tol = s.at("outer_tol").get<double>();
      if (s.contains("parallel")) cfg.solver.parallel = s.at("parallel").get<bool>();
      if (s.contains("threads")) cfg.solver.threads = s.at("threads").get<int>();
      if (s.contains("init_jitter")) cfg.solver.init_jitter = s.at("init_jitter").get<double>();
      if (s.contains("jitter_seed"))
        cfg.solver.jitter_seed = s.at("jitter_seed").get<std::uint64_t>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("emit_plots")) cfg.emit_plots = j.at("emit_plots").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: missing or mistyped field: ") + e.what());
  }
  if (cfg.utility.agents() != cfg.X.agents())
    throw InputError("config: utility alpha size must match agent count");
  auto report = msorte::validate(cfg.utility);
  if (!report.valid) {
    std::string msg = "config: invalid utility:";
    for (const auto& v : report.violations) msg += " " + v + ";";
    throw InputError(msg);
  }
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << content;
}

void emit_plot_tables(const RunConfig& cfg, const msorte::PrimalSolution& p,
                      const msorte::EquilibriumTriple& t) {
  const int n = cfg.X.agents();
  const int m = cfg.space.size();
  Vector xbar = msorte::aggregate(cfg.X);
  std::ostringstream per_scenario;
  per_scenario << "scenario,prob,xbar";
  for (int j = 0; j < n; ++j) per_scenario << ",q" << j + 1;
  for (int j = 0; j < n; ++j) per_scenario << ",X" << j + 1;
  for (int j = 0; j < n; ++j) per_scenario << ",Yhat" << j + 1;
  for (int j = 0; j < n; ++j) per_scenario << ",Ytilde" << j + 1;
  per_scenario << "\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    per_scenario << ',' << buf;
  };
  for (int w = 0; w < m; ++w) {
    per_scenario << cfg.space.labels()[w];
    put(cfg.space.prob(w));
    put(xbar[w]);
    for (int j = 0; j < n; ++j) put(t.Q(j, w));
    for (int j = 0; j < n; ++j) put(cfg.X(j, w));
    for (int j = 0; j < n; ++j) put(p.Y_hat(j, w));
    for (int j = 0; j < n; ++j) put(t.Y_tilde(j, w));
    per_scenario << "\n";
  }
  write_file(cfg.output_dir + "/per_scenario.csv", per_scenario.str());

  Vector mean_x = msorte::expectation(cfg.space, cfg.X);
  std::ostringstream per_agent;
  per_agent << "agent,a,mean_X\n";
  for (int j = 0; j < n; ++j) {
    char line[96];
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g", j + 1, t.a[j], mean_x[j]);
    per_agent << line << "\n";
  }
  write_file(cfg.output_dir + "/per_agent.csv", per_agent.str());
}

/// Full pipeline shared by `solve` and `oracle`: given primal/dual results,
/// assemble, verify, and emit the certificate.
int certify_and_emit(const RunConfig& cfg, const msorte::PrimalSolution& p,
                     const msorte::DualSolution& d, const std::string& out_name, bool quiet) {
  auto triple = msorte::assemble(p, d, cfg.space, cfg.X, BudgetSpec{cfg.budget});

  msorte::EquilibriumCertificate cert;
  cert.triple = triple;
  cert.lambda = d.lambda_hat;
  cert.primal_value = p.value;
  cert.dual_value = d.value;
  cert.gap = msorte::duality_gap(p, d);
  cert.config_hash = cfg.config_hash;
  cert.version = msorte::kCertificateVersion;
  cert.flags.differentiable = msorte::smoothness(cfg.utility).differentiable;
  cert.flags.unique = cert.flags.differentiable && !p.approximate && !d.approximate;

  cert.residuals.clearing_max = msorte::aggregate(triple.Y_tilde).cwiseAbs().maxCoeff();
  cert.residuals.budget_expectation_max =
      msorte::expectation(cfg.space, triple.Y_tilde, triple.Q).cwiseAbs().maxCoeff();
  cert.residuals.nash_max_improvement =
      msorte::verify_nash(triple, cfg.space, cfg.X, cfg.utility, cfg.solver);
  cert.residuals.fairness_min_slack =
      msorte::fairness_min_slack(triple, cfg.space, cfg.partition, 200, 7);
  auto meas = msorte::verify_measurability(triple, cfg.space, cfg.X, cfg.partition,
                                           cert.flags.differentiable);
  cert.residuals.measurability_max_spread = meas.max_spread;
  {
    auto [lam, val] = msorte::solve_fixed_q_dual(cfg.space, cfg.X, cfg.utility,
                                                 BudgetSpec{cfg.budget}, triple.Q, cfg.solver);
    (void)lam;
    cert.residuals.fixed_q_consistency = std::abs(val - d.value);
  }
  if (cfg.utility.family == msorte::UtilityFamily::ExpPairwise && cfg.partition.groups() == 1) {
    msorte::ExponentialInstance inst(cfg.utility.alpha, cfg.X, cfg.budget);
    double y_diff =
        (msorte::oracle_allocation(inst).values() - p.Y_hat.values()).cwiseAbs().maxCoeff();
    double q_diff = (msorte::oracle_density(inst, cfg.space).densities() -
                     triple.Q.densities())
                        .cwiseAbs()
                        .maxCoeff();
    cert.flags.oracle_checked = y_diff <= 1e-7 && q_diff <= 1e-8;
  }

  std::filesystem::create_directories(cfg.output_dir);
  write_file(cfg.output_dir + "/" + out_name, msorte::certificate_to_json(cert));
  if (cfg.emit_plots) emit_plot_tables(cfg, p, triple);

  const double scale = std::max(1.0, std::abs(p.value));
  bool ok = cert.residuals.clearing_max <= 1e-10 &&
            cert.residuals.budget_expectation_max <= 1e-8 &&
            cert.residuals.nash_max_improvement <= 1e-7 * scale &&
            cert.gap >= -1e-9 && cert.gap <= 1e-8 * scale &&
            cert.residuals.fairness_min_slack >= -1e-9 &&
            (!meas.applicable || cert.residuals.measurability_max_spread <= 1e-8) &&
            cert.residuals.fixed_q_consistency <= 1e-8 * scale;

  if (!quiet) {
    std::printf("primal %.12g  dual %.12g  gap %.3e  lambda %.12g\n", p.value, d.value, cert.gap,
                d.lambda_hat);
    std::printf("residuals: clearing %.3e  budget-exp %.3e  nash %.3e  fixed-Q %.3e\n",
                cert.residuals.clearing_max, cert.residuals.budget_expectation_max,
                cert.residuals.nash_max_improvement, cert.residuals.fixed_q_consistency);
    std::printf("flags: unique=%d differentiable=%d oracle_checked=%d\n", cert.flags.unique,
                cert.flags.differentiable, cert.flags.oracle_checked);
    if (!cert.flags.differentiable)
      std::printf("note: nondifferentiable family, dual optimum may be non-unique; "
                  "results marked approximate\n");
    std::printf("certificate: %s/%s\n", cfg.output_dir.c_str(), out_name.c_str());
  }
  if (!ok) {
    std::fprintf(stderr, "verification failed: residuals exceed tolerance\n");
    return kExitVerification;
  }
  return kExitOk;
}

int cmd_solve(const RunConfig& cfg, bool quiet) {
  auto p = msorte::solve_primal(cfg.space, cfg.X, cfg.utility, BudgetSpec{cfg.budget},
                                cfg.partition, cfg.solver);
  auto d = msorte::solve_dual(cfg.space, cfg.X, cfg.utility, BudgetSpec{cfg.budget},
                              cfg.partition, cfg.solver);
  return certify_and_emit(cfg, p, d, "certificate.json", quiet);
}

int cmd_det(const RunConfig& cfg, bool quiet) {
  auto [a, value] = msorte::solve_det(cfg.space, cfg.X, cfg.utility, BudgetSpec{cfg.budget},
                                      cfg.solver);
  if (!quiet) {
    std::printf("deterministic value %.12g\n", value);
    std::printf("a:");
    for (int j = 0; j < a.size(); ++j) std::printf(" %.12g", a[j]);
    std::printf("\n");
  }
  auto cert_path = cfg.output_dir + "/certificate.json";
  if (std::filesystem::exists(cert_path)) {
    auto cert = msorte::certificate_from_json(slurp(cert_path), cfg.space);
    if (!quiet)
      std::printf("randomized value %.12g (deterministic <= randomized: %s)\n",
                  cert.primal_value, value <= cert.primal_value + 1e-9 ? "yes" : "NO");
  }
  return kExitOk;
}

int cmd_check(const std::string& cert_path, const RunConfig& cfg, bool quiet) {
  auto cert = msorte::certificate_from_json(slurp(cert_path), cfg.space);
  auto rep = msorte::check_certificate(cert, cfg.space, cfg.X, cfg.utility, cfg.partition,
                                       cfg.solver);
  if (!quiet) {
    std::printf("clearing %.3e  budget-exp %.3e  nash %.3e  fixed-Q %.3e  fairness %.3e\n",
                rep.recomputed.clearing_max, rep.recomputed.budget_expectation_max,
                rep.recomputed.nash_max_improvement, rep.recomputed.fixed_q_consistency,
                rep.recomputed.fairness_min_slack);
    std::printf("check: %s\n", rep.pass ? "pass" : "fail");
  }
  if (!rep.pass) {
    for (const auto& f : rep.failures) std::fprintf(stderr, "check failure: %s\n", f.c_str());
    return kExitVerification;
  }
  return kExitOk;
}

int cmd_oracle(const RunConfig& cfg, bool quiet) {
  if (cfg.utility.family != msorte::UtilityFamily::ExpPairwise)
    throw InputError("oracle: closed form exists only for EXP_PAIRWISE");
  if (cfg.partition.groups() != 1)
    throw InputError("oracle: closed form requires the trivial cluster partition");
  msorte::ExponentialInstance inst(cfg.utility.alpha, cfg.X, cfg.budget);

  msorte::PrimalSolution p;
  p.Y_hat = msorte::oracle_allocation(inst);
  p.value = 0.0;
  for (int w = 0; w < cfg.space.size(); ++w)
    p.value += cfg.space.prob(w) *
               msorte::evaluate(cfg.utility, (cfg.X.column(w) + p.Y_hat.column(w)).eval());
  p.group_budgets = Vector::Constant(1, cfg.budget);

  msorte::DualSolution d;
  d.Q_hat = msorte::oracle_density(inst, cfg.space);
  d.lambda_hat = msorte::oracle_lambda(inst, cfg.space);
  {
    Vector e = msorte::expectation(cfg.space, cfg.X, d.Q_hat);
    d.value = d.lambda_hat * (e.sum() + cfg.budget);
    for (int w = 0; w < cfg.space.size(); ++w)
      d.value += cfg.space.prob(w) *
                 msorte::conjugate_eval(cfg.utility,
                                        (d.lambda_hat * d.Q_hat.densities().col(w)).eval());
  }
  return certify_and_emit(cfg, p, d, "oracle_certificate.json", quiet);
}

int cmd_conjugate(const std::string& family, const std::vector<double>& alpha,
                  const std::vector<double>& w, bool quiet) {
  UtilitySpec spec;
  spec.family = msorte::family_from_name(family);
  spec.alpha = Eigen::Map<const Vector>(alpha.data(), alpha.size());
  auto report = msorte::validate(spec);
  if (!report.valid) throw InputError("conjugate: invalid utility parameters");
  Vector wv = Eigen::Map<const Vector>(w.data(), w.size());
  if (wv.size() != spec.agents())
    throw InputError("conjugate: w must have one weight per agent");
  double numeric = msorte::conjugate_eval_numeric(spec, wv).value;
  if (msorte::has_analytic_conjugate(spec)) {
    double analytic = msorte::conjugate_eval_analytic(spec, wv);
    std::printf("analytic %.17g\nnumeric %.17g\ndifference %.3e\n", analytic, numeric,
                std::abs(analytic - numeric));
  } else {
    std::printf("numeric %.17g\n", numeric);
  }
  (void)quiet;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mSORTE solver and certifier"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads for per-scenario subproblems");
  app.add_flag("--quiet", quiet, "suppress the human-readable summary");

  std::string config_path, cert_path, family;
  std::vector<double> w_values, alpha_values;

  auto* solve = app.add_subcommand("solve", "solve and certify the equilibrium");
  solve->add_option("-c,--config", config_path)->required();
  auto* det = app.add_subcommand("det", "solve the deterministic allocation problem");
  det->add_option("-c,--config", config_path)->required();
  auto* check = app.add_subcommand("check", "re-verify a certificate");
  check->add_option("certificate", cert_path)->required();
  check->add_option("-c,--config", config_path)->required();
  auto* oracle = app.add_subcommand("oracle", "emit the closed-form certificate");
  oracle->add_option("-c,--config", config_path)->required();
  auto* conj = app.add_subcommand("conjugate", "evaluate the convex conjugate");
  conj->add_option("--family", family)->required();
  conj->add_option("--alpha", alpha_values, "risk aversion parameters")->required();
  conj->add_option("--w", w_values, "dual weights")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (conj->parsed()) return cmd_conjugate(family, alpha_values, w_values, quiet);
    RunConfig cfg = load_config(config_path);
    if (threads > 0) {
      cfg.solver.threads = threads;
      cfg.solver.parallel = threads > 1;
    }
    if (solve->parsed()) return cmd_solve(cfg, quiet);
    if (det->parsed()) return cmd_det(cfg, quiet);
    if (check->parsed()) return cmd_check(cert_path, cfg, quiet);
    if (oracle->parsed()) return cmd_oracle(cfg, quiet);
  } catch (const InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
  return kExitInput;
}
