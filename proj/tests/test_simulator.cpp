#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "pdeode/simulator.hpp"
#include "support.hpp"

using namespace pdeode;

namespace {

struct Scenario {
  ScenarioConfig cfg;
  CoupledPlant plant;
  SpectralBasis basis;
};

Scenario load(const std::string& id, std::size_t n_sim = 100) {
  ScenarioConfig cfg = test::bundled(id);
  CoupledPlant plant = make_plant(cfg);
  SpectralBasis basis = default_basis(plant.sl(), n_sim);
  return {std::move(cfg), std::move(plant), std::move(basis)};
}

CoupledPlant decoupled_plant(const Eigen::MatrixXd& a, double q_tilde) {
  const Eigen::Index n = a.rows();
  return {ScalarField::constant(1.0), ScalarField::constant(q_tilde), kPi / 2, 0.0,
          OdePlant(a, Eigen::VectorXd::Zero(n), Eigen::RowVectorXd::Zero(n)), 0.25, TraceKind::Dirichlet};
}

Trajectory run(const Scenario& s, std::size_t n_sim, SimulationConfig sc, const Certificate* cert = nullptr) {
  sc.n_sim = n_sim;
  const ModalSystem sys = build_modal_system(s.basis, s.plant, n_sim);
  const ScalarField init = ScalarField::parse(s.cfg.simulate->initial);
  const Eigen::VectorXd w0 = initial_modes(s.basis, s.plant, [&](double x) { return init(x); },
                                           s.cfg.simulate->initial_is_z0, s.cfg.simulate->x0, n_sim);
  Trajectory tr = integrate(sc, w0, s.cfg.simulate->x0, sys);
  observe(tr, sys, cert);
  return tr;
}

}  // namespace

TEST(Rhs, TruncationConsistency) {
  for (const char* id : {"dirichlet", "neumann"}) {
    const Scenario s = load(id, 60);
    const ModalSystem sys = build_modal_system(s.basis, s.plant, 60);
    const std::optional<double> eps =
        s.plant.trace_kind() == TraceKind::Neumann ? std::optional<double>(1.0 / 6.0) : std::nullopt;
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    for (std::size_t n : {2u, 3u, 9u, 10u}) {
      const ReducedModel m = assemble(s.basis, s.plant, n, eps);
      const auto nn = static_cast<Eigen::Index>(n);
      for (int trial = 0; trial < 25; ++trial) {
        ModalState st{Eigen::VectorXd(60), Eigen::VectorXd(5)};
        for (Eigen::Index i = 0; i < 60; ++i) st.w[i] = nd(rng) / (1.0 + i);
        for (Eigen::Index i = 0; i < 5; ++i) st.x[i] = nd(rng);
        const ModalState d = rhs(st, sys);
        Eigen::VectorXd X(nn + 5);
        X << st.w.head(nn), st.x;
        const double r = sys.c.tail(60 - nn).dot(st.w.tail(60 - nn));
        const Eigen::VectorXd reduced = m.F * X + m.G * r;
        Eigen::VectorXd direct(nn + 5);
        direct << d.w.head(nn), d.x;
        const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
        EXPECT_LT((reduced - direct).cwiseAbs().maxCoeff(), 1e-12 * scale) << id << " N=" << n;
      }
    }
  }
}

TEST(Rhs, DecoupledAndSingleMode) {
  Eigen::MatrixXd a(2, 2);
  a << -1.0, 0.0, 0.0, -3.0;
  const CoupledPlant pl = decoupled_plant(a, 2.0);
  const SpectralBasis b = default_basis(pl.sl(), 8);
  const ModalSystem sys = build_modal_system(b, pl, 8);
  ModalState st{Eigen::VectorXd::LinSpaced(8, 1.0, 2.0), Eigen::VectorXd::Ones(2)};
  const ModalState d = rhs(st, sys);
  for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(d.w[i], (-sys.lambda[i] + sys.q_c) * st.w[i], 1e-12);
  EXPECT_LT((d.x - a * st.x).norm(), 1e-15);

  const Scenario s = load("dirichlet", 20);
  const ModalSystem ps = build_modal_system(s.basis, s.plant, 20);
  ModalState e1{Eigen::VectorXd::Zero(20), Eigen::VectorXd::LinSpaced(5, -1.0, 1.0)};
  e1.w[0] = 0.7;
  const ModalState de = rhs(e1, ps);
  const OdePlant& ode = s.plant.ode();
  const Eigen::VectorXd expect = (ode.A + ps.mu_m * ode.B * ode.C) * e1.x + ode.B * ps.c[0] * 0.7;
  EXPECT_LT((de.x - expect).norm(), 1e-13);
}

TEST(Integrate, DecoupledEnvelope) {
  Eigen::MatrixXd a(2, 2);
  a << -0.3, 0.0, 0.0, -2.0;
  const CoupledPlant pl = decoupled_plant(a, 0.0);  // q_c = 1 < lambda_1
  const SpectralBasis b = default_basis(pl.sl(), 30);
  const ModalSystem sys = build_modal_system(b, pl, 30);
  SimulationConfig sc;
  sc.n_sim = 30;
  sc.t_end = 5.0;
  sc.dt_out = 0.05;
  const Eigen::VectorXd w0 = project(b, [](double x) { return 1.0 - x * x; }, 30);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(2);
  const Trajectory tr = integrate(sc, w0, x0, sys);
  const double rate = std::max(sys.q_c - sys.lambda[0], -0.3);
  const double n0 = std::sqrt(w0.squaredNorm() + x0.squaredNorm());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& st = tr.states[k];
    const double n = std::sqrt(st.w.squaredNorm() + st.x.squaredNorm());
    EXPECT_LE(n, 1.05 * std::exp(rate * tr.times[k]) * n0);
    for (Eigen::Index i = 0; i < 30; ++i)
      EXPECT_NEAR(st.w[i], w0[i] * std::exp((sys.q_c - sys.lambda[i]) * tr.times[k]), 1e-10 * (1 + std::abs(w0[i])));
  }
  EXPECT_NEAR(tr.states.back().x[0], std::exp(-0.3 * 5.0), 1e-12);
}

TEST(Integrate, DivergenceStopsEarly) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(1, 1, 10.0);
  const CoupledPlant pl = decoupled_plant(a, 2.0);
  const SpectralBasis b = default_basis(pl.sl(), 5);
  const ModalSystem sys = build_modal_system(b, pl, 5);
  SimulationConfig sc;
  sc.n_sim = 5;
  sc.t_end = 10.0;
  sc.dt_out = 0.1;
  const Trajectory tr = integrate(sc, Eigen::VectorXd::Zero(5), Eigen::VectorXd::Ones(1), sys);
  EXPECT_TRUE(tr.diverged);
  EXPECT_LT(tr.size(), sc.samples());
  EXPECT_NEAR(tr.divergence_time, 2.8, 0.15);
  EXPECT_TRUE(tr.states.back().x.allFinite());
}

TEST(Observe, InitialReconstructionAndZeroOde) {
  const Scenario s = load("dirichlet", 100);
  const ModalSystem sys = build_modal_system(s.basis, s.plant, 100);
  // z0 given directly: reconstructed z(0, .) = w0 + xi^2 y0 must match it.
  const Eigen::VectorXd x0 = s.cfg.simulate->x0;
  const double y0 = s.plant.ode().C.dot(x0);
  auto z0 = [&](double x) { return (1 - x * x) * (1 - x * x) + x * x * y0; };
  auto dz0 = [&](double x) { return -4 * x * (1 - x * x) + 2 * x * y0; };
  const Eigen::VectorXd w0 = initial_modes(s.basis, s.plant, z0, true, x0, 100);
  for (double x : {0.1, 0.4, 0.8}) {
    double w = 0.0;
    for (std::size_t i = 1; i <= 100; ++i) w += w0[i - 1] * s.basis.phi(i, x);
    EXPECT_NEAR(w + x * x * y0, z0(x), 1e-6);
  }
  SimulationConfig sc;
  sc.t_end = 0.01;
  sc.dt_out = 0.01;
  Trajectory tr = integrate(sc, w0, x0, sys);
  observe(tr, sys);
  const double h1 = test::simpson([&](double x) { return dz0(x) * dz0(x) + z0(x) * z0(x); }, 0, 1);
  EXPECT_LT(test::rel_err(tr.h1_sq[0], h1), 1e-6);
  EXPECT_NEAR(tr.y[0], y0, 1e-15);

  // x = 0: z = w, so h1_sq is the plain H1 norm of the modal series.
  const Eigen::VectorXd w1 = project(s.basis, [](double x) { return 1.0 - x * x; }, 100);
  Trajectory tz = integrate(sc, w1, Eigen::VectorXd::Zero(5), sys);
  observe(tz, sys);
  const double h1w = test::simpson([](double x) { return 4 * x * x + (1 - x * x) * (1 - x * x); }, 0, 1);
  EXPECT_LT(test::rel_err(tz.h1_sq[0], h1w), 1e-6);
  EXPECT_EQ(tz.y[0], 0.0);
}

TEST(Observe, TraceMatchesPointwiseSummation) {
  for (const char* id : {"dirichlet", "neumann"}) {
    const Scenario s = load(id, 100);
    SimulationConfig sc;
    sc.t_end = 2.0;
    sc.dt_out = 0.25;
    const Trajectory tr = run(s, 100, sc);
    const double zeta = s.plant.zeta_m();
    const double d = s.plant.lifting_denominator();
    const bool dir = s.plant.trace_kind() == TraceKind::Dirichlet;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      double v = 0.0;
      for (std::size_t i = 1; i <= 100; ++i)
        v += tr.states[k].w[i - 1] * (dir ? s.basis.phi(i, zeta) : s.basis.dphi(i, zeta));
      v += (dir ? zeta * zeta : 2.0 * zeta) * tr.y[k] / d;
      EXPECT_NEAR(tr.trace[k], v, 1e-6 * std::max(1.0, std::abs(v))) << id << " k=" << k;
    }
  }
}

TEST(Integrate, StepRefinementAndTruncation) {
  for (const char* id : {"dirichlet", "neumann"}) {
    const Scenario s = load(id, 200);
    SimulationConfig sc;
    const double base = run(s, 100, sc).h1_sq.back();
    SimulationConfig half = sc;
    half.dt_out = 0.005;
    EXPECT_LT(test::rel_err(run(s, 100, half).h1_sq.back(), base), 1e-6) << id;
    SimulationConfig trap = sc;
    trap.integrator = Integrator::ImplicitTrapezoid;
    trap.substeps = 20;
    const double t20 = run(s, 100, trap).h1_sq.back();
    trap.substeps = 40;
    const double t40 = run(s, 100, trap).h1_sq.back();
    EXPECT_LT(test::rel_err(t40, t20), 1e-6) << id;
    EXPECT_LT(test::rel_err(t40, base), 1e-5) << id;
    const double wide = run(s, 200, sc).h1_sq.back();
    EXPECT_LT(test::rel_err(std::sqrt(wide), std::sqrt(base)), 1e-4) << id;
  }
}

TEST(Envelope, ZeroRateMeansNonincreasing) {
  Trajectory tr;
  tr.times = {0, 1, 2, 3};
  tr.h1_sq = {1, 0.5, 0.25, 0.125};
  tr.x_norm_sq = {0, 0, 0, 0};
  tr.trace = {1, 0.7, 0.5, 0.35};
  tr.lyapunov = std::vector<double>{1, 0.9, 0.9, 0.5};
  EXPECT_TRUE(envelope_check(tr, 0.0).holds);
  tr.lyapunov = std::vector<double>{1, 0.9, 0.95, 0.5};
  const EnvelopeReport rep = envelope_check(tr, 0.0);
  EXPECT_TRUE(rep.holds);  // still below V(0)
  const EnvelopeReport strict = envelope_check(tr, 0.1);
  EXPECT_FALSE(strict.holds);
  ASSERT_TRUE(strict.first_violation);
  EXPECT_EQ(*strict.first_violation, 1u);
  EXPECT_NEAR(rep.fitted_rate, std::log(2.0), 1e-12);
}

TEST(FitDecayRate, ExactExponential) {
  std::vector<double> t, v;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    v.push_back(3.0 * std::exp(-1.7 * t.back()));
  }
  EXPECT_NEAR(fit_decay_rate(t, v, 50), 1.7, 1e-12);
}

TEST(WriteCsv, HeaderAndRows) {
  const Scenario s = load("neumann", 10);
  SimulationConfig sc;
  sc.t_end = 0.02;
  const Trajectory tr = run(s, 10, sc);
  std::ostringstream os;
  write_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("t,", 0), 0u);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}
