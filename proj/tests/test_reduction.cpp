#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pdeode/reduction.hpp"
#include "support.hpp"

using namespace pdeode;
using std::numbers::pi;

namespace {

OdePlant bundled_ode(const std::string& id) {
  const ScenarioConfig cfg = test::bundled(id);
  return {cfg.ode->A, cfg.ode->B, cfg.ode->C};
}

CoupledPlant dirichlet_plant() { return make_plant(test::bundled("dirichlet")); }
CoupledPlant neumann_plant() { return make_plant(test::bundled("neumann")); }

}  // namespace

TEST(DecomposeReaction, ExplicitShift) {
  const ReactionSplit s = decompose_reaction(ScalarField::constant(-3.0), 4.0);
  EXPECT_EQ(s.q_c, 4.0);
  EXPECT_DOUBLE_EQ(s.q(0.3), 1.0);
}

TEST(DecomposeReaction, DefaultRuleForPositiveReaction) {
  const ReactionSplit s = decompose_reaction(ScalarField::constant(2.0));
  EXPECT_DOUBLE_EQ(s.q_c, 1.0);
  EXPECT_DOUBLE_EQ(s.q(0.5), 3.0);
}

TEST(DecomposeReaction, DefaultRuleForVariableReaction) {
  const ReactionSplit s = decompose_reaction(ScalarField::parse("xi^2 - 2"));
  EXPECT_NEAR(s.q_c, 3.0, 1e-12);
  EXPECT_NEAR(s.q(0.0), 1.0, 1e-12);
}

TEST(DecomposeReaction, RejectsNonPositiveRemainder) {
  EXPECT_THROW((void)decompose_reaction(ScalarField::constant(-3.0), 2.0), DomainError);
}

TEST(Lifting, DirichletExample) {
  const LiftingData l = lifting(dirichlet_plant());
  EXPECT_DOUBLE_EQ(l.denominator, 1.0);
  for (double x : {0.0, 0.4, 1.0}) {
    EXPECT_NEAR(l.a(x), 2.0 + 3.0 * x * x, 1e-14);
    EXPECT_NEAR(l.b(x), -x * x, 1e-14);
  }
  EXPECT_DOUBLE_EQ(l.mu_m, 0.0625);
}

TEST(Lifting, NeumannExample) {
  // b = -xi^2 / 2, so mu_m = -b'(1/4) = 1/4.
  const LiftingData l = lifting(neumann_plant());
  EXPECT_DOUBLE_EQ(l.denominator, 2.0);
  EXPECT_NEAR(l.b(0.5), -0.125, 1e-15);
  EXPECT_NEAR(-l.db(0.25), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(l.mu_m, 0.25);
  EXPECT_EQ(l.b(0.0), 0.0);
}

TEST(Lifting, MuBound) {
  for (double t2 : {0.0, 0.3, pi / 4, pi / 2})
    for (double z : {0.0, 0.5, 1.0})
      for (TraceKind k : {TraceKind::Dirichlet, TraceKind::Neumann}) {
        const CoupledPlant pl(ScalarField::constant(1.0), ScalarField::constant(-1.0), pi / 2, t2,
                              bundled_ode("dirichlet"), z, k);
        const LiftingData l = lifting(pl);
        const double lim = (k == TraceKind::Dirichlet ? 1.0 : 2.0) / l.denominator;
        EXPECT_LE(std::abs(l.mu_m), lim + 1e-15);
      }
}

TEST(TraceCoefficients, ReferenceValues) {
  const SpectralBasis bd = closed_form_basis(1.0, 1.0, pi / 2, 0.0, 3);
  const SpectralBasis bn = closed_form_basis(1.0, 1.0, 0.0, pi / 2, 3);
  EXPECT_NEAR(trace_coefficients(bd, 0.25, TraceKind::Dirichlet, 3)[0], std::sqrt(2.0) * std::cos(pi / 8), 1e-14);
  EXPECT_NEAR(trace_coefficients(bd, 0.25, TraceKind::Dirichlet, 3)[0], 1.3066, 1e-4);
  EXPECT_NEAR(trace_coefficients(bn, 0.25, TraceKind::Neumann, 3)[0], 2.0524, 1e-4);
  // phi_2 = sqrt2 cos(3 pi xi / 2) vanishes at 1/3.
  EXPECT_NEAR(trace_coefficients(bd, 1.0 / 3.0, TraceKind::Dirichlet, 3)[1], 0.0, 1e-14);
}

TEST(Assemble, DirichletShapes) {
  const CoupledPlant pl = dirichlet_plant();
  const SpectralBasis b = default_basis(pl.sl(), 4);
  const ReducedModel m = assemble(b, pl, 3);
  EXPECT_EQ(m.F.rows(), 8);
  EXPECT_EQ(m.G.size(), 8);
  EXPECT_NEAR(m.A_N(0, 0), 0.5326, 1e-4);
  EXPECT_NEAR(m.A_N(1, 1), -19.21, 1e-2);
  EXPECT_NEAR(m.A_N(2, 2), -58.69, 1e-2);
  EXPECT_NEAR(m.lambda_next(), 3.5 * 3.5 * pi * pi + 1.0, 1e-10);
  EXPECT_NEAR(m.tail_const.value, 2.0 / (pi * pi * 2.5), 1e-15);
  EXPECT_THROW((void)assemble(b, pl, 3, 0.25), DomainError);
  EXPECT_THROW((void)assemble(b, pl, 4), DomainError);
}

TEST(Assemble, NeumannRequiresEpsilon) {
  const CoupledPlant pl = neumann_plant();
  const SpectralBasis b = default_basis(pl.sl(), 3);
  EXPECT_THROW((void)assemble(b, pl, 2), DomainError);
  const ReducedModel m = assemble(b, pl, 2, 1.0 / 6.0);
  EXPECT_EQ(m.F.rows(), 7);
  EXPECT_DOUBLE_EQ(m.mu_m, 0.25);
}

TEST(Assemble, HIsPositiveSemidefinite) {
  for (const char* id : {"dirichlet", "neumann"}) {
    const ScenarioConfig cfg = test::bundled(id);
    const CoupledPlant pl = make_plant(cfg);
    const SpectralBasis b = default_basis(pl.sl(), 11);
    const std::optional<double> eps =
        pl.trace_kind() == TraceKind::Neumann ? std::optional<double>(1.0 / 6.0) : std::nullopt;
    for (std::size_t n : {2u, 5u, 10u}) {
      const ReducedModel m = assemble(b, pl, n, eps);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.H);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()));
      const auto nn = static_cast<Eigen::Index>(n);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(m.H.topLeftCorner(nn, nn));
      lu.setThreshold(1e-10);
      EXPECT_LE(lu.rank(), 1);
    }
  }
}

TEST(Assemble, ProjectionsMatchOracle) {
  const CoupledPlant pl = dirichlet_plant();
  const SpectralBasis b = default_basis(pl.sl(), 4);
  const ReducedModel m = assemble(b, pl, 3);
  for (int i = 0; i < 3; ++i) {
    const double mu = (i + 0.5) * pi;
    const double a = test::simpson([&](double x) { return (2 + 3 * x * x) * std::sqrt(2.0) * std::cos(mu * x); }, 0, 1);
    const double bb = test::simpson([&](double x) { return -x * x * std::sqrt(2.0) * std::cos(mu * x); }, 0, 1);
    EXPECT_NEAR(m.B_aN[i], a, 1e-11);
    EXPECT_NEAR(m.B_bN[i], bb, 1e-11);
  }
  const double norm_b = 0.2;
  EXPECT_NEAR(m.tail_b, norm_b - m.B_bN.squaredNorm(), 1e-12);
}

TEST(Assemble, DecoupledLimit) {
  const ScenarioConfig cfg = test::bundled("dirichlet");
  const Eigen::Index n = cfg.ode->A.rows();
  const OdePlant ode(cfg.ode->A, Eigen::VectorXd::Zero(n), Eigen::RowVectorXd::Zero(n));
  const CoupledPlant pl(ScalarField::constant(1.0), ScalarField::constant(-3.0), pi / 2, 0.0, ode, 0.25,
                        TraceKind::Dirichlet, 4.0);
  const SpectralBasis b = default_basis(pl.sl(), 4);
  const ReducedModel m = assemble(b, pl, 3);
  EXPECT_EQ(m.G.norm(), 0.0);
  EXPECT_EQ(m.F.topRightCorner(3, n).norm(), 0.0);
  EXPECT_EQ(m.F.bottomLeftCorner(n, 3).norm(), 0.0);
  EXPECT_EQ((m.F.bottomRightCorner(n, n) - cfg.ode->A).norm(), 0.0);
  EXPECT_EQ((m.F.topLeftCorner(3, 3) - m.A_N).norm(), 0.0);
}

TEST(DefaultBasis, PicksSolverByProblem) {
  auto make = [](const char* p, double t1, double t2) {
    return SturmLiouvilleProblem(ScalarField::parse(p), ScalarField::constant(1.0), t1, t2);
  };
  EXPECT_EQ(default_basis(make("1", pi / 2, 0.0), 4).origin(), BasisOrigin::ClosedForm);
  EXPECT_EQ(default_basis(make("1", pi / 4, 0.0), 4).origin(), BasisOrigin::TranscendentalRoot);
  EXPECT_EQ(default_basis(make("1 + xi", pi / 2, 0.0), 4, 256).origin(), BasisOrigin::Discretized);
}
