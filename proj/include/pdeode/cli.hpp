#pragma once

// Command-line front end. `run` parses arguments, dispatches a subcommand and
// returns the process exit code:
//   0 ok, 1 certificate not found / audit failed, 2 configuration error,
//   3 envelope violation, 4 divergence.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pdeode/certifier.hpp"
#include "pdeode/config.hpp"
#include "pdeode/errors.hpp"
#include "pdeode/reduction.hpp"
#include "pdeode/scenarios.hpp"
#include "pdeode/simulator.hpp"
#include "pdeode/spectral.hpp"

namespace pdeode::cli {

enum ExitCode : int { kOk = 0, kNotFound = 1, kConfig = 2, kEnvelope = 3, kDivergence = 4 };

namespace detail {

namespace fs = std::filesystem;

inline std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string signed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.4g", v);
  return buf;
}

inline ScenarioConfig resolve_config(const std::string& ref) {
  if (fs::exists(ref)) return load_config(ref);
  if (auto text = scenarios::find(ref)) return parse_config_text(std::string(*text));
  throw ConfigError("no configuration file or bundled scenario named '" + ref + "'");
}

inline double parse_scalar_flag(const std::string& text, const char* flag) {
  try {
    const Expression e = Expression::parse(text);
    if (!e.is_constant()) throw ConfigError(std::string(flag) + ": expression must be constant");
    return e(0.0);
  } catch (const ExpressionError& err) {
    throw ConfigError(std::string(flag) + ": " + err.what());
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path.string() + "'");
  f << text;
}

inline std::string certificate_file_name(const std::string& scenario, std::size_t n, double eta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "_N%zu_eta%g.json", n, eta);
  return scenario + buf;
}

inline SpectralBasis build_basis(const ScenarioConfig& cfg, const SturmLiouvilleProblem& sl, std::size_t n_max) {
  try {
    return default_basis(sl, n_max, cfg.spectral.grid_size);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("spectral: ") + e.what());
  }
}

struct RunOutcome {
  std::optional<Certificate> certificate;
  std::optional<ReducedModel> model;  // model of the certificate, or of the last attempt
  SearchResult search;
  std::optional<double> epsilon;
};

/// Certifies one (N, eta) pair, trying each epsilon in order for a Neumann trace.
inline RunOutcome certify_run(const ScenarioConfig& cfg, const CoupledPlant& plant, const SpectralBasis& basis,
                              std::size_t n, double eta, const std::vector<double>& epsilons,
                              const SearchGrids& grids) {
  RunOutcome out;
  std::vector<std::optional<double>> eps_list;
  if (plant.trace_kind() == TraceKind::Neumann) {
    for (double e : epsilons) eps_list.emplace_back(e);
  } else {
    eps_list.emplace_back(std::nullopt);
  }
  for (const auto& eps : eps_list) {
    ReducedModel m = assemble(basis, plant, n, eps, sup_bounds(cfg));
    SearchResult r = search_certificate({m, eta, grids});
    out.model = std::move(m);
    out.epsilon = eps;
    out.search = std::move(r);
    if (out.search.certificate) {
      out.certificate = out.search.certificate;
      break;
    }
  }
  return out;
}

inline nlohmann::json certificate_document(const ScenarioConfig& cfg, const Certificate& c, const ReducedModel& m) {
  nlohmann::json j = to_json(c);
  j["scenario"] = cfg.name;
  j["model"] = {{"lambda_next", m.lambda_next()},
                {"q_c", m.q_c},
                {"tail_constant", m.tail_const.value},
                {"tail_a", m.tail_a},
                {"tail_b", m.tail_b},
                {"cb", m.cb}};
  return j;
}

inline void print_found(std::ostream& out, std::size_t n, double eta, const RunOutcome& r) {
  const Certificate& c = *r.certificate;
  out << "N=" << n << " eta=" << g4(eta);
  if (r.epsilon) out << " epsilon=" << g4(*r.epsilon);
  out << ": certificate found (alpha=" << g4(c.alpha) << ", beta=" << g4(c.beta)
      << ", lambda_max(Theta1)=" << g4(c.margins.theta1_max) << ", lambda_max(Theta2)=" << g4(c.margins.theta2_max);
  if (c.margins.theta3_min) out << ", lambda_min(Theta3)=" << g4(*c.margins.theta3_min);
  out << ", lambda_min(P)=" << g4(c.margins.p_min) << ")\n";
}

inline void print_not_found(std::ostream& out, std::size_t n, double eta, const RunOutcome& r) {
  const auto& f = r.search.failures;
  out << "N=" << n << " eta=" << g4(eta);
  if (r.epsilon) out << " epsilon=" << g4(*r.epsilon);
  out << ": certificate not found on the searched grid (" << r.search.points << " points; Theta3 " << f.theta3
      << ", Theta2 " << f.theta2 << ", s<=0 " << f.schur << ", F+eta I not Hurwitz " << f.not_hurwitz
      << ", no P " << f.theta1 << ", audit " << f.verify << ")\n";
}

inline std::vector<double> unstable_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  std::vector<double> v;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto z = es.eigenvalues()[i];
    if (z.real() > 0.0 && z.imag() >= 0.0) v.push_back(z.real());
  }
  std::sort(v.rbegin(), v.rend());
  return v;
}

struct SimulationOutcome {
  Trajectory trajectory;
  std::optional<EnvelopeReport> envelope;
};

inline SimulationOutcome simulate_scenario(const ScenarioConfig& cfg, const CoupledPlant& plant,
                                           const SpectralBasis& basis, const Certificate* cert) {
  const SimulateSection& ss = *cfg.simulate;
  const SimulationConfig sc = ss.config();
  const ModalSystem sys = build_modal_system(basis, plant, sc.n_sim);
  const ScalarField init = ScalarField::parse(ss.initial);
  const Eigen::VectorXd w0 =
      initial_modes(basis, plant, [&](double x) { return init(x); }, ss.initial_is_z0, ss.x0, sc.n_sim);
  SimulationOutcome out;
  out.trajectory = integrate(sc, w0, ss.x0, sys);
  observe(out.trajectory, sys, cert);
  if (cert && out.trajectory.size() >= 2) out.envelope = envelope_check(out.trajectory, cert->eta);
  return out;
}

inline void print_envelope(std::ostream& out, const EnvelopeReport& rep, const Trajectory& tr, double eta,
                           TraceKind kind, const std::string& indent = "") {
  out << indent << "envelope V(t) <= exp(-2 eta t) V(0), eta=" << g4(eta) << ": " << (rep.holds ? "holds" : "VIOLATED")
      << " (worst ratio " << g4(rep.worst_ratio) << ")";
  if (rep.first_violation) out << ", first violation at t=" << g4(tr.times[*rep.first_violation]);
  out << "\n";
  out << indent << "fitted decay rate of ||z||_H1^2 + ||x||^2 over the final half horizon: " << g4(rep.fitted_rate)
      << " (2 eta = " << g4(2.0 * eta) << ")\n";
  out << indent << "fitted decay rate of the " << (kind == TraceKind::Dirichlet ? "z(t, zeta_m)^2" : "z_xi(t, zeta_m)^2")
      << " envelope over the final half horizon: " << g4(rep.trace_rate) << "\n";
}

inline nlohmann::json sidecar(const ScenarioConfig& cfg, const Trajectory& tr, const std::string& csv,
                              const Certificate* cert, const std::string& cert_path) {
  nlohmann::json j;
  j["format"] = "pdeode-trajectory/1";
  j["config"] = to_json(cfg);
  j["csv"] = csv;
  j["samples"] = tr.size();
  j["diverged"] = tr.diverged;
  if (tr.diverged) j["divergence_time"] = tr.divergence_time;
  if (cert) {
    j["certificate"] = {{"path", cert_path},   {"n_modes", cert->n_modes}, {"eta", cert->eta},
                        {"alpha", cert->alpha}, {"beta", cert->beta},       {"trace_kind", to_string(cert->trace_kind)}};
    j["certificate"]["epsilon"] = cert->epsilon ? nlohmann::json(*cert->epsilon) : nlohmann::json(nullptr);
  } else {
    j["certificate"] = nullptr;
  }
  return j;
}

inline void write_trajectory(const fs::path& csv, const ScenarioConfig& cfg, const Trajectory& tr,
                             const Certificate* cert, const std::string& cert_path) {
  std::ostringstream os;
  write_csv(os, tr);
  write_text(csv, os.str());
  write_text(fs::path(csv.string() + ".meta.json"), sidecar(cfg, tr, csv.filename().string(), cert, cert_path).dump(2) + "\n");
}

// Subcommands -------------------------------------------------------------

struct EigenArgs {
  std::string config;
  std::size_t n = 10;
};

inline int cmd_eigen(const EigenArgs& a, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a.config);
  const SturmLiouvilleProblem sl = make_problem(cfg);
  const ReactionSplit split = decompose_reaction(ScalarField::parse(cfg.plant.q_tilde), cfg.plant.q_c);
  std::size_t n_max = std::max<std::size_t>(a.n, 1);
  if (cfg.certify)
    for (const auto& r : cfg.certify->runs) n_max = std::max(n_max, r.N + 1);
  const SpectralBasis basis = build_basis(cfg, sl, n_max);
  const double z = cfg.plant.zeta_m;
  out << "scenario " << cfg.name << ": basis " << to_string(basis.origin()) << ", q_c = " << g4(split.q_c)
      << ", zeta_m = " << g4(z) << "\n";
  out << "    n        lambda_n  q_c-lambda_n   phi_n(zeta)  dphi_n(zeta)\n";
  for (std::size_t i = 1; i <= a.n; ++i) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%5zu %15.4g %13.4g %13.4g %13.4g\n", i, basis.lambda(i), split.q_c - basis.lambda(i),
                  basis.phi(i, z), basis.dphi(i, z));
    out << buf;
  }
  std::vector<std::size_t> orders;
  if (cfg.certify)
    for (const auto& r : cfg.certify->runs) orders.push_back(r.N);
  if (orders.empty()) orders = {1, 2, 3};
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  const TailSupBounds sup = sup_bounds(cfg);
  auto describe = [](const TailBound& t) {
    return t.method == TailMethod::PrintedClosedForm ? std::string("closed-form bound")
                                                     : "partial sum to " + std::to_string(t.cutoff) + " + remainder";
  };
  for (std::size_t n : orders) {
    try {
      if (cfg.plant.trace_kind == TraceKind::Dirichlet) {
        const TailBound t = tail_m1(basis, n, z, sup);
        out << "M1(N=" << n << ") <= " << g4(t.value) << " [" << describe(t) << "]\n";
      } else {
        const std::vector<double> eps = cfg.certify ? cfg.certify->epsilon : std::vector<double>{1.0 / 6, 0.25, 0.5};
        for (double e : eps) {
          const TailBound t = tail_m2(basis, n, z, e, sup);
          out << "M2(N=" << n << ", epsilon=" << g4(e) << ") <= " << g4(t.value) << " [" << describe(t) << "]\n";
        }
      }
    } catch (const TailBoundUnavailable& e) {
      out << "tail constant at N=" << n << " unavailable: " << e.what() << "\n";
    }
  }
  return kOk;
}

struct CertifyArgs {
  std::string config;
  std::optional<std::size_t> n;
  std::optional<std::string> eta;
  std::optional<std::string> epsilon;
  bool max_decay = false;
  std::optional<std::string> out;
  std::string out_dir = ".";
};

inline int cmd_certify(const CertifyArgs& a, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a.config);
  const CoupledPlant plant = make_plant(cfg);
  const CertifySection cs = cfg.certify.value_or(CertifySection{});
  std::vector<CertifyRun> runs = cs.runs;
  if (a.n) {
    runs = {{*a.n, a.eta ? parse_scalar_flag(*a.eta, "--eta") : 0.0}};
  } else if (a.eta) {
    for (auto& r : runs) r.eta = parse_scalar_flag(*a.eta, "--eta");
  }
  if (runs.empty()) throw ConfigError("certify: no runs configured; pass --n");
  for (const auto& r : runs) {
    if (r.N == 0) throw ConfigError("--n must be >= 1");
    if (!(r.eta >= 0.0)) throw ConfigError("--eta must be nonnegative");
  }
  std::vector<double> eps = cs.epsilon;
  if (a.epsilon) {
    eps = {parse_scalar_flag(*a.epsilon, "--epsilon")};
    if (!(eps[0] > 0.0 && eps[0] <= 0.5)) throw ConfigError("--epsilon must lie in (0, 1/2]");
  }
  if (a.out && runs.size() != 1) throw ConfigError("--out needs exactly one run; use --out-dir");
  std::size_t n_max = 0;
  for (const auto& r : runs) n_max = std::max(n_max, r.N + 1);
  const SpectralBasis basis = build_basis(cfg, plant.sl(), n_max);
  const SearchGrids grids = cs.grids();

  int code = kOk;
  for (const auto& r : runs) {
    std::optional<Certificate> cert;
    std::optional<ReducedModel> model;
    if (a.max_decay) {
      bool done = false;
      for (std::size_t k = 0; k < (plant.trace_kind() == TraceKind::Neumann ? eps.size() : 1) && !done; ++k) {
        std::optional<double> e;
        if (plant.trace_kind() == TraceKind::Neumann) e = eps[k];
        ReducedModel m = assemble(basis, plant, r.N, e, sup_bounds(cfg));
        try {
          const MaxDecayResult md = max_decay(m, grids);
          out << "N=" << r.N;
          if (e) out << " epsilon=" << g4(*e);
          out << ": largest certified decay rate eta* = " << g4(md.eta_star) << " (" << md.trace.size()
              << " probes, " << (md.monotone ? "monotone" : "NOT monotone") << ")\n";
          cert = md.certificate;
          model = std::move(m);
          done = true;
        } catch (const CertificateNotFound&) {
          out << "N=" << r.N;
          if (e) out << " epsilon=" << g4(*e);
          out << ": certificate not found at eta = 0\n";
        }
      }
    } else {
      RunOutcome ro = certify_run(cfg, plant, basis, r.N, r.eta, eps, grids);
      if (ro.certificate) {
        print_found(out, r.N, r.eta, ro);
        cert = ro.certificate;
        model = ro.model;
      } else {
        print_not_found(out, r.N, r.eta, ro);
      }
    }
    if (!cert) {
      code = kNotFound;
      continue;
    }
    const fs::path path = a.out ? fs::path(*a.out) : fs::path(a.out_dir) / certificate_file_name(cfg.name, r.N, cert->eta);
    write_text(path, certificate_document(cfg, *cert, *model).dump(2) + "\n");
    out << "certificate written to " << path.string() << "\n";
  }
  return code;
}

inline Certificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open certificate '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("certificate: ") + e.what());
  }
  return certificate_from_json(j);
}

struct VerifyArgs {
  std::string config;
  std::string certificate;
};

inline int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const ScenarioConfig cfg = resolve_config(a.config);
  const CoupledPlant plant = make_plant(cfg);
  const Certificate cert = load_certificate(a.certificate);
  if (cert.trace_kind != plant.trace_kind()) {
    out << "verdict: FAIL (certificate trace kind does not match the plant)\n";
    return kNotFound;
  }
  if (plant.trace_kind() == TraceKind::Neumann && !cert.epsilon) {
    out << "verdict: FAIL (Neumann certificate without epsilon)\n";
    return kNotFound;
  }
  if (cert.n_modes == 0) throw ConfigError("certificate: n_modes must be >= 1");
  const SpectralBasis basis = build_basis(cfg, plant.sl(), cert.n_modes + 1);
  const ReducedModel m = assemble(basis, plant, cert.n_modes, cert.epsilon, sup_bounds(cfg));
  const VerifyReport rep = verify(cert, m);
  out << "lambda_min(P) = " << g4(rep.margins.p_min) << "\n";
  out << "lambda_max(Theta1) = " << g4(rep.margins.theta1_max) << "\n";
  out << "lambda_max(Theta2) = " << g4(rep.margins.theta2_max) << "\n";
  if (rep.margins.theta3_min) out << "lambda_min(Theta3) = " << g4(*rep.margins.theta3_min) << "\n";
  for (const auto& f : rep.failures) out << "failed: " << f << "\n";
  out << "verdict: " << (rep.verdict ? "PASS" : "FAIL") << "\n";
  return rep.verdict ? kOk : kNotFound;
}

struct SimulateArgs {
  std::string config;
  std::optional<std::string> certificate;
  std::optional<std::string> out;
  std::optional<std::size_t> n_sim;
  std::optional<double> t_end;
  std::optional<double> dt_out;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ScenarioConfig cfg = resolve_config(a.config);
  if (!cfg.simulate) throw ConfigError("simulate: section missing");
  if (a.n_sim) cfg.simulate->n_sim = *a.n_sim;
  if (a.t_end) cfg.simulate->t_end = *a.t_end;
  if (a.dt_out) cfg.simulate->dt_out = *a.dt_out;
  cfg.simulate->config().validate();
  const CoupledPlant plant = make_plant(cfg);
  if (cfg.simulate->x0.size() != plant.ode().n()) throw ConfigError("simulate.x0: wrong dimension");
  std::optional<Certificate> cert;
  if (a.certificate) {
    cert = load_certificate(*a.certificate);
    if (cert->trace_kind != plant.trace_kind()) throw ConfigError("certificate trace kind does not match the plant");
    if (cert->n_modes + 1 > cfg.simulate->n_sim) throw ConfigError("n_sim must exceed the certified order N");
    if (cert->P.rows() != static_cast<Eigen::Index>(cert->n_modes) + plant.ode().n())
      throw ConfigError("certificate dimension does not match the plant");
  }
  const SpectralBasis basis = build_basis(cfg, plant.sl(), cfg.simulate->n_sim);
  const SimulationOutcome so = simulate_scenario(cfg, plant, basis, cert ? &*cert : nullptr);
  const fs::path csv = a.out ? fs::path(*a.out) : fs::path(cfg.name + "_trajectory.csv");
  write_trajectory(csv, cfg, so.trajectory, cert ? &*cert : nullptr, a.certificate.value_or(""));
  out << "trajectory written to " << csv.string() << " (" << so.trajectory.size() << " samples)\n";
  if (so.trajectory.diverged) {
    out << "divergence: state norm exceeded the threshold at t=" << g4(so.trajectory.divergence_time) << "\n";
    return kDivergence;
  }
  if (so.envelope) {
    print_envelope(out, *so.envelope, so.trajectory, cert->eta, plant.trace_kind());
    if (!so.envelope->holds) return kEnvelope;
  }
  return kOk;
}

struct Reference {
  double pde_dominant;
  std::vector<double> ode_unstable;
};

inline Reference reference_values(const std::string& id) {
  if (id == "dirichlet") return {0.533, {1.046, 0.247}};
  return {0.533, {0.393}};
}

struct ReproduceArgs {
  std::string id;
  std::optional<std::string> out_dir;
};

inline int cmd_reproduce(const ReproduceArgs& a, std::ostream& out) {
  const auto text = scenarios::find(a.id);
  if (!text) throw ConfigError("unknown example '" + a.id + "' (expected dirichlet or neumann)");
  const ScenarioConfig cfg = parse_config_text(std::string(*text));
  const CoupledPlant plant = make_plant(cfg);
  const Reference ref = reference_values(a.id);
  const CertifySection& cs = *cfg.certify;
  std::size_t n_max = cfg.simulate->n_sim;
  for (const auto& r : cs.runs) n_max = std::max(n_max, r.N + 1);
  const SpectralBasis basis = build_basis(cfg, plant.sl(), n_max);

  out << "== " << cfg.name << " example ==\n";
  out << "open loop\n";
  out << "  PDE dominant eigenvalue q_c - lambda_1: " << signed4(plant.q_c() - basis.lambda(1)) << "   (reference "
      << signed4(ref.pde_dominant) << ")\n";
  out << "  ODE eigenvalues of A with positive real part:";
  for (double v : unstable_eigenvalues(plant.ode().A)) out << " " << signed4(v);
  out << "   (reference";
  for (double v : ref.ode_unstable) out << " " << signed4(v);
  out << ")\n";

  out << "certification\n";
  std::vector<std::optional<Certificate>> certs;
  int code = kOk;
  for (std::size_t k = 0; k < cs.runs.size(); ++k) {
    const auto& r = cs.runs[k];
    const RunOutcome ro = certify_run(cfg, plant, basis, r.N, r.eta, cs.epsilon, cs.grids());
    out << "  ";
    if (ro.certificate) {
      print_found(out, r.N, r.eta, ro);
      if (a.out_dir)
        write_text(fs::path(*a.out_dir) / certificate_file_name(cfg.name, r.N, r.eta),
                   certificate_document(cfg, *ro.certificate, *ro.model).dump(2) + "\n");
    } else {
      print_not_found(out, r.N, r.eta, ro);
      code = kNotFound;
    }
    certs.push_back(ro.certificate);
  }
  if (code != kOk) return code;

  const std::size_t which = cfg.simulate->certificate_run.value_or(cs.runs.size());
  if (which == 0 || which > certs.size()) throw ConfigError("simulate.certificate_run out of range");
  const Certificate& cert = *certs[which - 1];
  out << "simulation (n_sim=" << cfg.simulate->n_sim << ", t in [0, " << g4(cfg.simulate->t_end)
      << "], certificate N=" << cert.n_modes << ", eta=" << g4(cert.eta) << ")\n";
  const SimulationOutcome so = simulate_scenario(cfg, plant, basis, &cert);
  if (a.out_dir) {
    const std::string cert_name = certificate_file_name(cfg.name, cert.n_modes, cert.eta);
    write_trajectory(fs::path(*a.out_dir) / (cfg.name + "_trajectory.csv"), cfg, so.trajectory, &cert, cert_name);
  }
  if (so.trajectory.diverged) {
    out << "  divergence at t=" << g4(so.trajectory.divergence_time) << "\n";
    return kDivergence;
  }
  print_envelope(out, *so.envelope, so.trajectory, cert.eta, plant.trace_kind(), "  ");
  const bool rate_ok = so.envelope->fitted_rate >= 2.0 * cert.eta - 0.05;
  out << "  decay rate check (fitted >= 2 eta - 0.05): " << (rate_ok ? "pass" : "FAIL") << "\n";
  if (!so.envelope->holds) return kEnvelope;
  return kOk;
}

}  // namespace detail

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Stability certificates for reaction-diffusion PDE / ODE loops", "pdeode"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  EigenArgs ea;
  auto* eigen = app.add_subcommand("eigen", "Eigenvalues, traces and tail constants of the plant");
  eigen->add_option("config", ea.config, "Scenario file or bundled scenario name")->required();
  eigen->add_option("--n", ea.n, "Number of modes to print")->check(CLI::PositiveNumber);

  CertifyArgs ca;
  auto* certify = app.add_subcommand("certify", "Search stability certificates");
  certify->add_option("config", ca.config, "Scenario file or bundled scenario name")->required();
  certify->add_option("--n", ca.n, "Truncation order N (overrides the configured runs)");
  certify->add_option("--eta", ca.eta, "Requested decay rate");
  certify->add_option("--epsilon", ca.epsilon, "Exponent epsilon in (0, 1/2] for a Neumann trace");
  certify->add_flag("--max-decay", ca.max_decay, "Bisect for the largest certified decay rate");
  certify->add_option("--out", ca.out, "Certificate file (single run)");
  certify->add_option("--out-dir", ca.out_dir, "Directory for certificate files");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Audit a stored certificate");
  verify_cmd->add_option("config", va.config, "Scenario file or bundled scenario name")->required();
  verify_cmd->add_option("--certificate", va.certificate, "Certificate file")->required();

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Modal closed-loop simulation");
  simulate->add_option("config", sa.config, "Scenario file or bundled scenario name")->required();
  simulate->add_option("--certificate", sa.certificate, "Certificate for the Lyapunov envelope check");
  simulate->add_option("--out", sa.out, "CSV output path");
  simulate->add_option("--n-sim", sa.n_sim, "Number of simulated modes");
  simulate->add_option("--t-end", sa.t_end, "Horizon");
  simulate->add_option("--dt-out", sa.dt_out, "Output sampling step");

  ReproduceArgs ra;
  auto* reproduce = app.add_subcommand("reproduce", "Run a bundled example end to end");
  reproduce->add_option("example", ra.id, "dirichlet or neumann")->required()->check(CLI::IsMember({"dirichlet", "neumann"}));
  reproduce->add_option("--out-dir", ra.out_dir, "Directory for certificates and trajectories");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }

  try {
    if (*eigen) return cmd_eigen(ea, out);
    if (*certify) return cmd_certify(ca, out);
    if (*verify_cmd) return cmd_verify(va, out);
    if (*simulate) return cmd_simulate(sa, out);
    if (*reproduce) return cmd_reproduce(ra, out);
  } catch (const CertificateNotFound& e) {
    err << "error: " << e.what() << "\n";
    return kNotFound;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kConfig;
}

}  // namespace pdeode::cli
