#pragma once

// Scenario files (JSON). Scalars that are angles, locations or exponents may
// be written as numbers or as constant expressions ("pi/2", "1/6");
// coefficient fields and initial conditions are expressions in xi.
//
//   {
//     "name": "dirichlet",
//     "plant": {"theta1": "pi/2", "theta2": 0, "p": "1", "q_tilde": "-3",
//               "zeta_m": 0.25, "trace_kind": "dirichlet", "q_c": 4},
//     "ode": {"A": [[...], ...], "B": [...], "C": [...]},
//     "spectral": {"grid_size": 8192, "phi_sup": null, "dphi_sup": null},
//     "certify": {"runs": [{"N": 3, "eta": 0}], "epsilon": ["1/6", "1/4", "1/2"],
//                 "alpha_grid": {"min": 2.01, "max": 1000, "count": 40},
//                 "beta_grid": {"min": 1e-4, "max": 1e6, "count": 60}},
//     "simulate": {"n_sim": 100, "t_end": 10, "dt_out": 0.01,
//                  "integrator": "exact-propagator", "substeps": 1,
//                  "w0": "-1 + xi^2", "x0": [...], "certificate_run": 1}
//   }

#include <Eigen/Dense>
#include <cstddef>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdeode/certifier.hpp"
#include "pdeode/errors.hpp"
#include "pdeode/expression.hpp"
#include "pdeode/reduction.hpp"
#include "pdeode/simulator.hpp"

namespace pdeode {

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;

  [[nodiscard]] std::vector<double> points() const { return log_grid(min, max, count); }
  bool operator==(const GridSpec&) const = default;
};

struct PlantSection {
  double theta1 = 0.0;
  double theta2 = 0.0;
  std::string p = "1";
  std::string q_tilde = "0";
  double zeta_m = 0.0;
  TraceKind trace_kind = TraceKind::Dirichlet;
  std::optional<double> q_c;
  bool operator==(const PlantSection&) const = default;
};

struct OdeSection {
  Eigen::MatrixXd A;
  Eigen::VectorXd B;
  Eigen::RowVectorXd C;
  bool operator==(const OdeSection& o) const { return A == o.A && B == o.B && C == o.C; }
};

struct SpectralSection {
  std::size_t grid_size = 0;  // 0: automatic
  std::optional<double> phi_sup;
  std::optional<double> dphi_sup;
  bool operator==(const SpectralSection&) const = default;
};

struct CertifyRun {
  std::size_t N = 1;
  double eta = 0.0;
  bool operator==(const CertifyRun&) const = default;
};

struct CertifySection {
  std::vector<CertifyRun> runs;
  std::vector<double> epsilon = {1.0 / 6.0, 1.0 / 4.0, 1.0 / 2.0};
  GridSpec alpha_grid{2.01, 1e3, 40};
  GridSpec beta_grid{1e-4, 1e6, 60};
  bool operator==(const CertifySection&) const = default;

  [[nodiscard]] SearchGrids grids() const { return {alpha_grid.points(), beta_grid.points()}; }
};

struct SimulateSection {
  std::size_t n_sim = 100;
  double t_end = 10.0;
  double dt_out = 0.01;
  Integrator integrator = Integrator::ExactPropagator;
  std::size_t substeps = 1;
  std::string initial = "0";
  bool initial_is_z0 = false;
  Eigen::VectorXd x0;
  std::optional<std::size_t> certificate_run;  // 1-based index into certify.runs
  bool operator==(const SimulateSection& o) const {
    return n_sim == o.n_sim && t_end == o.t_end && dt_out == o.dt_out && integrator == o.integrator &&
           substeps == o.substeps && initial == o.initial && initial_is_z0 == o.initial_is_z0 && x0 == o.x0 &&
           certificate_run == o.certificate_run;
  }

  [[nodiscard]] SimulationConfig config() const {
    SimulationConfig c;
    c.n_sim = n_sim;
    c.t_end = t_end;
    c.dt_out = dt_out;
    c.integrator = integrator;
    c.substeps = substeps;
    return c;
  }
};

struct ScenarioConfig {
  std::string name = "scenario";
  PlantSection plant;
  std::optional<OdeSection> ode;
  SpectralSection spectral;
  std::optional<CertifySection> certify;
  std::optional<SimulateSection> simulate;
  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline ConfigError field_error(const std::string& path, const std::string& what) {
  return ConfigError(path + ": " + what);
}

inline double scalar(const nlohmann::json& j, const std::string& path) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      const Expression e = Expression::parse(j.get<std::string>());
      if (!e.is_constant()) throw field_error(path, "expression must not depend on xi");
      return e(0.0);
    } catch (const ExpressionError& err) {
      throw field_error(path, err.what());
    }
  }
  throw field_error(path, "expected a number or a constant expression");
}

inline std::string field_expression(const nlohmann::json& j, const std::string& path) {
  std::string text;
  if (j.is_number()) {
    text = ScalarField::format_number(j.get<double>());
  } else if (j.is_string()) {
    text = j.get<std::string>();
  } else {
    throw field_error(path, "expected a number or an expression in xi");
  }
  try {
    (void)Expression::parse(text);
  } catch (const ExpressionError& err) {
    throw field_error(path, err.what());
  }
  return text;
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw field_error(path + "." + key, "missing");
  return j.at(key);
}

inline std::size_t count_value(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw field_error(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw field_error(path, "expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(scalar(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline GridSpec grid_spec(const nlohmann::json& j, const std::string& path, GridSpec dflt) {
  if (!j.is_object()) throw field_error(path, "expected {min, max, count}");
  if (j.contains("min")) dflt.min = scalar(j.at("min"), path + ".min");
  if (j.contains("max")) dflt.max = scalar(j.at("max"), path + ".max");
  if (j.contains("count")) dflt.count = count_value(j.at("count"), path + ".count");
  if (!(dflt.min > 0.0) || dflt.max < dflt.min || dflt.count == 0)
    throw field_error(path, "need 0 < min <= max and count >= 1");
  return dflt;
}

inline TraceKind trace_kind(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) throw field_error(path, "expected \"dirichlet\" or \"neumann\"");
  const std::string s = j.get<std::string>();
  if (s == "dirichlet") return TraceKind::Dirichlet;
  if (s == "neumann") return TraceKind::Neumann;
  throw field_error(path, "unknown trace kind '" + s + "'");
}

inline Integrator integrator(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) throw field_error(path, "expected an integrator name");
  const std::string s = j.get<std::string>();
  if (s == "exact-propagator") return Integrator::ExactPropagator;
  if (s == "implicit-trapezoid") return Integrator::ImplicitTrapezoid;
  throw field_error(path, "unknown integrator '" + s + "'");
}

}  // namespace detail

[[nodiscard]] inline ScenarioConfig parse_config(const nlohmann::json& root) {
  using namespace detail;
  if (!root.is_object()) throw ConfigError("configuration root must be an object");
  ScenarioConfig cfg;
  if (root.contains("name")) {
    if (!root.at("name").is_string()) throw field_error("name", "expected a string");
    cfg.name = root.at("name").get<std::string>();
  }

  const auto& pj = require(root, "plant", "");
  PlantSection& pl = cfg.plant;
  pl.theta1 = scalar(require(pj, "theta1", "plant"), "plant.theta1");
  pl.theta2 = scalar(require(pj, "theta2", "plant"), "plant.theta2");
  for (auto [v, key] : {std::pair{pl.theta1, "theta1"}, std::pair{pl.theta2, "theta2"}})
    if (!(v >= 0.0 && v <= kHalfPi + 1e-12))
      throw field_error(std::string("plant.") + key, "angle " + ScalarField::format_number(v) + " outside [0, pi/2]");
  pl.p = field_expression(require(pj, "p", "plant"), "plant.p");
  pl.q_tilde = field_expression(require(pj, "q_tilde", "plant"), "plant.q_tilde");
  pl.zeta_m = scalar(require(pj, "zeta_m", "plant"), "plant.zeta_m");
  if (!(pl.zeta_m >= 0.0 && pl.zeta_m <= 1.0)) throw field_error("plant.zeta_m", "must lie in [0, 1]");
  pl.trace_kind = trace_kind(require(pj, "trace_kind", "plant"), "plant.trace_kind");
  if (pj.contains("q_c") && !pj.at("q_c").is_null()) pl.q_c = scalar(pj.at("q_c"), "plant.q_c");

  if (root.contains("ode")) {
    const auto& oj = root.at("ode");
    OdeSection o;
    const auto& aj = require(oj, "A", "ode");
    if (!aj.is_array() || aj.empty()) throw field_error("ode.A", "expected a nonempty array of rows");
    const auto n = static_cast<Eigen::Index>(aj.size());
    o.A.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::string rp = "ode.A[" + std::to_string(i) + "]";
      const auto row = number_list(aj[static_cast<std::size_t>(i)], rp);
      if (static_cast<Eigen::Index>(row.size()) != n) throw field_error(rp, "A must be square");
      for (Eigen::Index k = 0; k < n; ++k) o.A(i, k) = row[static_cast<std::size_t>(k)];
    }
    const auto b = number_list(require(oj, "B", "ode"), "ode.B");
    const auto c = number_list(require(oj, "C", "ode"), "ode.C");
    if (static_cast<Eigen::Index>(b.size()) != n) throw field_error("ode.B", "must have as many entries as A has rows");
    if (static_cast<Eigen::Index>(c.size()) != n) throw field_error("ode.C", "must have as many entries as A has rows");
    o.B = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
    o.C = Eigen::Map<const Eigen::RowVectorXd>(c.data(), n);
    cfg.ode = std::move(o);
  }

  if (root.contains("spectral")) {
    const auto& sj = root.at("spectral");
    if (sj.contains("grid_size")) cfg.spectral.grid_size = count_value(sj.at("grid_size"), "spectral.grid_size");
    if (sj.contains("phi_sup") && !sj.at("phi_sup").is_null())
      cfg.spectral.phi_sup = scalar(sj.at("phi_sup"), "spectral.phi_sup");
    if (sj.contains("dphi_sup") && !sj.at("dphi_sup").is_null())
      cfg.spectral.dphi_sup = scalar(sj.at("dphi_sup"), "spectral.dphi_sup");
  }

  if (root.contains("certify")) {
    const auto& cj = root.at("certify");
    CertifySection cs;
    if (cj.contains("runs")) {
      const auto& rj = cj.at("runs");
      if (!rj.is_array()) throw field_error("certify.runs", "expected an array");
      for (std::size_t i = 0; i < rj.size(); ++i) {
        const std::string rp = "certify.runs[" + std::to_string(i) + "]";
        CertifyRun r;
        r.N = count_value(require(rj[i], "N", rp), rp + ".N");
        if (r.N == 0) throw field_error(rp + ".N", "must be >= 1");
        if (rj[i].contains("eta")) r.eta = scalar(rj[i].at("eta"), rp + ".eta");
        if (!(r.eta >= 0.0)) throw field_error(rp + ".eta", "must be nonnegative");
        cs.runs.push_back(r);
      }
    }
    if (cj.contains("epsilon")) {
      cs.epsilon = number_list(cj.at("epsilon"), "certify.epsilon");
      for (double e : cs.epsilon)
        if (!(e > 0.0 && e <= 0.5)) throw field_error("certify.epsilon", "values must lie in (0, 1/2]");
    }
    if (cj.contains("alpha_grid")) cs.alpha_grid = grid_spec(cj.at("alpha_grid"), "certify.alpha_grid", cs.alpha_grid);
    if (cj.contains("beta_grid")) cs.beta_grid = grid_spec(cj.at("beta_grid"), "certify.beta_grid", cs.beta_grid);
    if (!(cs.alpha_grid.min > 2.0)) throw field_error("certify.alpha_grid.min", "alpha must exceed 2");
    cfg.certify = std::move(cs);
  }

  if (root.contains("simulate")) {
    const auto& sj = root.at("simulate");
    SimulateSection ss;
    if (sj.contains("n_sim")) ss.n_sim = count_value(sj.at("n_sim"), "simulate.n_sim");
    if (sj.contains("t_end")) ss.t_end = scalar(sj.at("t_end"), "simulate.t_end");
    if (sj.contains("dt_out")) ss.dt_out = scalar(sj.at("dt_out"), "simulate.dt_out");
    if (sj.contains("integrator")) ss.integrator = integrator(sj.at("integrator"), "simulate.integrator");
    if (sj.contains("substeps")) ss.substeps = count_value(sj.at("substeps"), "simulate.substeps");
    if (sj.contains("w0") && sj.contains("z0")) throw field_error("simulate", "give either w0 or z0, not both");
    if (sj.contains("w0")) {
      ss.initial = field_expression(sj.at("w0"), "simulate.w0");
    } else if (sj.contains("z0")) {
      ss.initial = field_expression(sj.at("z0"), "simulate.z0");
      ss.initial_is_z0 = true;
    }
    if (sj.contains("x0")) {
      const auto x = number_list(sj.at("x0"), "simulate.x0");
      ss.x0 = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    }
    if (sj.contains("certificate_run") && !sj.at("certificate_run").is_null())
      ss.certificate_run = count_value(sj.at("certificate_run"), "simulate.certificate_run");
    if (ss.n_sim == 0) throw field_error("simulate.n_sim", "must be >= 1");
    if (!(ss.t_end > 0.0)) throw field_error("simulate.t_end", "must be positive");
    if (!(ss.dt_out > 0.0)) throw field_error("simulate.dt_out", "must be positive");
    if (ss.substeps == 0) throw field_error("simulate.substeps", "must be >= 1");
    if (cfg.ode && ss.x0.size() != cfg.ode->A.rows())
      throw field_error("simulate.x0", "must have as many entries as ode.A has rows");
    cfg.simulate = std::move(ss);
  }
  return cfg;
}

[[nodiscard]] inline ScenarioConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(j);
}

[[nodiscard]] inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

[[nodiscard]] inline nlohmann::json to_json(const ScenarioConfig& cfg) {
  using nlohmann::json;
  json j;
  j["name"] = cfg.name;
  json pj;
  pj["theta1"] = cfg.plant.theta1;
  pj["theta2"] = cfg.plant.theta2;
  pj["p"] = cfg.plant.p;
  pj["q_tilde"] = cfg.plant.q_tilde;
  pj["zeta_m"] = cfg.plant.zeta_m;
  pj["trace_kind"] = to_string(cfg.plant.trace_kind);
  pj["q_c"] = cfg.plant.q_c ? json(*cfg.plant.q_c) : json(nullptr);
  j["plant"] = pj;
  if (cfg.ode) {
    json a = json::array();
    for (Eigen::Index i = 0; i < cfg.ode->A.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < cfg.ode->A.cols(); ++k) row.push_back(cfg.ode->A(i, k));
      a.push_back(row);
    }
    j["ode"]["A"] = a;
    j["ode"]["B"] = std::vector<double>(cfg.ode->B.data(), cfg.ode->B.data() + cfg.ode->B.size());
    j["ode"]["C"] = std::vector<double>(cfg.ode->C.data(), cfg.ode->C.data() + cfg.ode->C.size());
  }
  j["spectral"]["grid_size"] = cfg.spectral.grid_size;
  j["spectral"]["phi_sup"] = cfg.spectral.phi_sup ? json(*cfg.spectral.phi_sup) : json(nullptr);
  j["spectral"]["dphi_sup"] = cfg.spectral.dphi_sup ? json(*cfg.spectral.dphi_sup) : json(nullptr);
  if (cfg.certify) {
    json cj;
    cj["runs"] = json::array();
    for (const auto& r : cfg.certify->runs) cj["runs"].push_back({{"N", r.N}, {"eta", r.eta}});
    cj["epsilon"] = cfg.certify->epsilon;
    for (auto [key, g] : {std::pair{"alpha_grid", cfg.certify->alpha_grid}, std::pair{"beta_grid", cfg.certify->beta_grid}})
      cj[key] = {{"min", g.min}, {"max", g.max}, {"count", g.count}};
    j["certify"] = cj;
  }
  if (cfg.simulate) {
    const auto& s = *cfg.simulate;
    json sj;
    sj["n_sim"] = s.n_sim;
    sj["t_end"] = s.t_end;
    sj["dt_out"] = s.dt_out;
    sj["integrator"] = to_string(s.integrator);
    sj["substeps"] = s.substeps;
    sj[s.initial_is_z0 ? "z0" : "w0"] = s.initial;
    sj["x0"] = std::vector<double>(s.x0.data(), s.x0.data() + s.x0.size());
    sj["certificate_run"] = s.certificate_run ? json(*s.certificate_run) : json(nullptr);
    j["simulate"] = sj;
  }
  return j;
}

/// Plant described by the plant and ode sections.
[[nodiscard]] inline CoupledPlant make_plant(const ScenarioConfig& cfg) {
  if (!cfg.ode) throw ConfigError("ode: section missing");
  try {
    return CoupledPlant(ScalarField::parse(cfg.plant.p), ScalarField::parse(cfg.plant.q_tilde), cfg.plant.theta1,
                        cfg.plant.theta2, OdePlant(cfg.ode->A, cfg.ode->B, cfg.ode->C), cfg.plant.zeta_m,
                        cfg.plant.trace_kind, cfg.plant.q_c);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("plant: ") + e.what());
  }
}

/// Spectral problem of the plant section alone (no ODE needed).
[[nodiscard]] inline SturmLiouvilleProblem make_problem(const ScenarioConfig& cfg) {
  try {
    const ReactionSplit split = decompose_reaction(ScalarField::parse(cfg.plant.q_tilde), cfg.plant.q_c);
    return SturmLiouvilleProblem(ScalarField::parse(cfg.plant.p), split.q, cfg.plant.theta1, cfg.plant.theta2);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("plant: ") + e.what());
  }
}

[[nodiscard]] inline TailSupBounds sup_bounds(const ScenarioConfig& cfg) {
  return {cfg.spectral.phi_sup, cfg.spectral.dphi_sup};
}

}  // namespace pdeode
