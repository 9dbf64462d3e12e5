#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "homoclinic/action.hpp"

using namespace homoclinic;
using std::numbers::pi;

namespace {

// Smooth random curve: a few random Fourier modes plus small node noise.
Trajectory random_trajectory(const PeriodicGrid& g, std::size_t dim, std::mt19937_64& rng, double amp = 1.0) {
  std::normal_distribution<double> z(0.0, 1.0);
  Trajectory q(g, dim);
  for (std::size_t c = 0; c < dim; ++c)
    for (int m = 0; m < 4; ++m) {
      double s = amp * z(rng) / (1 + m), ph = z(rng);
      for (std::size_t i = 0; i < g.size(); ++i) q(i, c) += s * std::cos(pi * m * g.node(i) / g.k() + ph);
    }
  for (double& v : q.data()) v += 0.05 * amp * z(rng);
  return q;
}

Problem unforced(Problem p) {
  p.f = [n = p.dim](double, std::span<double> o) {
    for (std::size_t c = 0; c < n; ++c) o[c] = 0.0;
  };
  return p;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

Trajectory shifted(const Trajectory& q, const Trajectory& v, double eps) {
  Trajectory out = q;
  for (std::size_t j = 0; j < out.data().size(); ++j) out.data()[j] += eps * v.data()[j];
  return out;
}

}  // namespace

TEST(ActionValue, ZeroTrajectory) {
  auto p = make_builtin_problem("example1");
  Trajectory q(PeriodicGrid(5.0, 320), 1);
  EXPECT_EQ(action_value(p, q), 0.0);
  EXPECT_EQ(pairing_identity_check(p, q), 0.0);
}

TEST(ActionValue, ConstantHalfMatchesClosedForm) {
  auto p = make_builtin_problem("example1");
  PeriodicGrid g(1.0, 256);
  Trajectory q(g, 1);
  for (double& v : q.data()) v = 0.5;
  // Exact integrals over [-1, 1] plus the h^2 Euler-Maclaurin term of the
  // rectangle rule (which equals the trapezoid rule for these even integrands).
  const double h = g.h();
  const double int_a = 0.2 * std::sqrt(pi) * std::erf(1.0) + 0.2;
  const double int_f = 0.4 * std::sqrt(2.0 * pi) * std::erf(1.0 / std::sqrt(2.0));
  const double da = -0.8 * std::exp(-1.0);  // a'(1) - a'(-1)
  const double df = -0.8 * std::exp(-0.5);  // f'(1) - f'(-1)
  const double quad_a = int_a + h * h / 12.0 * da;
  const double quad_f = int_f + h * h / 12.0 * df;
  const double expected = 0.5 * (2.0 * 0.25) - std::pow(0.5, 4) * quad_a + 0.5 * quad_f;
  EXPECT_NEAR(action_value(p, q), expected, 1e-6);
  // Without the correction the gap is still of order h^2.
  EXPECT_NEAR(action_value(p, q), 0.25 - 0.0625 * int_a + 0.5 * int_f, 3e-6);
}

TEST(ActionGradient, ZeroIsCriticalWithoutForcing) {
  auto p = unforced(make_builtin_problem("example2"));
  Trajectory q(PeriodicGrid(5.0, 320), 1);
  for (double v : action_gradient(p, q)) EXPECT_EQ(v, 0.0);
  const auto resid = el_residual(p, q);
  for (double v : resid.data()) EXPECT_EQ(v, 0.0);
}

TEST(ActionGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  const double eps = 1e-6;
  for (const char* id : {"example1", "example2"}) {
    auto p = make_builtin_problem(id);
    for (auto [k, n] : {std::pair{1.0, 128}, {5.0, 320}, {10.0, 640}}) {
      PeriodicGrid g(k, static_cast<std::size_t>(n));
      ActionFunctional I(p, g);
      for (int trial = 0; trial < 100; ++trial) {
        auto q = random_trajectory(g, 1, rng);
        auto v = random_trajectory(g, 1, rng);
        const double dir = dot(I.gradient(q), v.data());
        const double fd = (I.value(shifted(q, v, eps)) - I.value(shifted(q, v, -eps))) / (2 * eps);
        EXPECT_LE(std::abs(dir - fd), 1e-6 * (1.0 + std::abs(dir))) << id << " k=" << k;
      }
    }
  }
}

TEST(ActionGradient, TwoDimensionalProblem) {
  auto p = parse_problem_text("dim = 2\nmu = 4\na = 1 + exp(-t^2)\nf1 = exp(-t^2)\nf2 = t*exp(-t^2)\nG = (q1^2 + q2^2)^2 + q1^4");
  PeriodicGrid g(2.0, 128);
  ActionFunctional I(p, g);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = random_trajectory(g, 2, rng, 0.7);
    auto v = random_trajectory(g, 2, rng);
    const double dir = dot(I.gradient(q), v.data());
    const double fd = (I.value(shifted(q, v, 1e-6)) - I.value(shifted(q, v, -1e-6))) / 2e-6;
    EXPECT_LE(std::abs(dir - fd), 1e-6 * (1.0 + std::abs(dir)));
  }
}

TEST(PairingIdentity, RoundingLevelOnRandomTrajectories) {
  std::mt19937_64 rng(4);
  auto p = make_builtin_problem("example1");
  for (auto [k, n] : {std::pair{1.0, 128}, {5.0, 320}, {10.0, 640}}) {
    PeriodicGrid g(k, static_cast<std::size_t>(n));
    for (int trial = 0; trial < 100; ++trial) {
      auto q = random_trajectory(g, 1, rng);
      const double e = ek_norm(q);
      EXPECT_LE(pairing_identity_check(p, q), 1e-10 * (1.0 + e * e));
    }
  }
}

TEST(ElResidual, ManufacturedSolutionIsExactZero) {
  auto base = make_builtin_problem("example1_compliant");
  PeriodicGrid g(5.0, 640);
  auto q_star = Trajectory::from_function(g, [](double t) { return 0.4 * std::exp(std::cos(pi * t / 5.0)) - 0.3; });
  auto p = manufacture_forcing(base, q_star);
  const auto resid = el_residual(p, q_star);
  for (double v : resid.data()) EXPECT_LE(std::abs(v), 1e-11);
  // The forcing is the residual of the unforced problem at q*.
  auto r0 = el_residual(unforced(base), q_star);
  std::vector<double> fi(1);
  for (std::size_t i = 0; i < g.size(); i += 37) {
    p.f(g.node(i), fi);
    EXPECT_DOUBLE_EQ(fi[0], r0(i));
  }
  // Off-node times read the nearest node, including the wrap-around at +k.
  p.f(g.node(10) + 0.3 * g.h(), fi);
  EXPECT_DOUBLE_EQ(fi[0], r0(10));
  p.f(5.0 - 0.2 * g.h(), fi);
  EXPECT_DOUBLE_EQ(fi[0], r0(0));
}

TEST(Evaluate, FieldsAgree) {
  auto p = make_builtin_problem("example1");
  PeriodicGrid g(2.0, 128);
  std::mt19937_64 rng(11);
  auto q = random_trajectory(g, 1, rng);
  auto e = evaluate_action(p, q);
  EXPECT_EQ(e.value, action_value(p, q));
  EXPECT_EQ(e.grad, action_gradient(p, q));
  EXPECT_NEAR(e.grad_norm, std::sqrt(dot(e.grad, e.grad)), 1e-14 * e.grad_norm);
  double sup = 0.0;
  const auto resid = el_residual(p, q);
  for (double v : resid.data()) sup = std::max(sup, std::abs(v));
  EXPECT_EQ(e.residual_sup, sup);
}

TEST(Evaluate, Errors) {
  auto p = make_builtin_problem("example1");
  Trajectory q(PeriodicGrid(2.0, 128), 1);
  EXPECT_THROW(action_value(p, Trajectory(PeriodicGrid(2.0, 128), 2)), DomainError);
  ActionFunctional I(p, PeriodicGrid(2.0, 64));
  EXPECT_THROW(I.value(q), DomainError);
  q(7) = std::numeric_limits<double>::infinity();
  try {
    action_gradient(p, q);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos);
  }
  auto bad = p;
  bad.f = [](double t, std::span<double> o) { o[0] = t > 1.0 ? std::nan("") : 0.0; };
  EXPECT_THROW(ActionFunctional(bad, PeriodicGrid(2.0, 64)), EvaluationError);
}

TEST(HessVec, ZeroDirectionAndLinearPart) {
  auto p = make_builtin_problem("example1");
  PeriodicGrid g(3.0, 192);
  std::mt19937_64 rng(13);
  auto q = random_trajectory(g, 1, rng);
  for (double v : hess_vec(p, q, Trajectory(g, 1))) EXPECT_EQ(v, 0.0);

  auto v = random_trajectory(g, 1, rng);
  auto hv = hess_vec(p, Trajectory(g, 1), v);
  auto lap = diff2(v);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(hv[i], g.h() * (-lap(i) + v(i)), 1e-10 * (1 + std::abs(hv[i])));
}

TEST(HessVec, ClosedFormMatchesFiniteDifferenceAndIsSymmetric) {
  auto p = make_builtin_problem("example2");
  std::mt19937_64 rng(17);
  for (auto [k, n] : {std::pair{1.0, 128}, {5.0, 320}}) {
    PeriodicGrid g(k, static_cast<std::size_t>(n));
    ActionFunctional I(p, g);
    for (int trial = 0; trial < 20; ++trial) {
      auto q = random_trajectory(g, 1, rng);
      auto u = random_trajectory(g, 1, rng);
      auto v = random_trajectory(g, 1, rng);
      auto hu = I.hess_vec(q, u);
      auto fd = I.hess_vec_fd(q, u);
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < hu.size(); ++j) {
        num = std::max(num, std::abs(hu[j] - fd[j]));
        den = std::max(den, std::abs(hu[j]));
      }
      EXPECT_LE(num, 1e-5 * den);
      const double uv = dot(hu, v.data()), vu = dot(I.hess_vec(q, v), u.data());
      EXPECT_LE(std::abs(uv - vu), 1e-8 * (std::abs(uv) + std::abs(vu)));
    }
  }
}

TEST(HessVec, FallsBackToFiniteDifference) {
  auto p = make_builtin_problem("example1");
  p.hessG = nullptr;
  PeriodicGrid g(2.0, 128);
  std::mt19937_64 rng(19);
  auto q = random_trajectory(g, 1, rng);
  auto v = random_trajectory(g, 1, rng);
  auto exact = hess_vec(make_builtin_problem("example1"), q, v);
  auto fd = hess_vec(p, q, v);
  for (std::size_t j = 0; j < fd.size(); ++j) EXPECT_NEAR(fd[j], exact[j], 1e-5 * (1 + std::abs(exact[j])));
}

TEST(Properties, ReflectionEquivariance) {
  std::mt19937_64 rng(23);
  for (const char* id : {"example1", "example1_compliant"}) {
    auto p = make_builtin_problem(id);
    PeriodicGrid g(4.0, 256);
    for (int trial = 0; trial < 10; ++trial) {
      auto q = random_trajectory(g, 1, rng);
      Trajectory gq(g, 1, action_gradient(p, q));
      auto lhs = action_gradient(p, reflect(q));
      auto rhs = reflect(gq);
      for (std::size_t j = 0; j < lhs.size(); ++j) EXPECT_NEAR(lhs[j], rhs.data()[j], 1e-13 * (1 + std::abs(lhs[j])));
      EXPECT_NEAR(action_value(p, reflect(q)), action_value(p, q), 1e-12 * (1 + std::abs(action_value(p, q))));
    }
  }
}

TEST(Properties, ZetaLowerBound) {
  std::mt19937_64 rng(29);
  auto p = make_builtin_problem("example1");
  const double m = derived_constants(p).m;
  for (double k : {1.0, 5.0}) {
    PeriodicGrid g(k, static_cast<std::size_t>(64 * k));
    ActionFunctional I(p, g);
    for (double zeta : {-4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0})
      for (int trial = 0; trial < 20; ++trial) {
        auto q = random_trajectory(g, 1, rng);
        std::vector<double> aG(g.size()), qmu(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          double x = zeta * q(i);
          aG[i] = I.a_at(i) * p.G(std::span<const double>(&x, 1));
          qmu[i] = std::pow(std::abs(q(i)), p.mu);
        }
        double lhs = quadrature(aG, g);
        double rhs = m * std::pow(std::abs(zeta), p.mu) * quadrature(qmu, g) - 2 * k * m;
        EXPECT_GE(lhs, rhs - 1e-8);
      }
  }
}

TEST(Properties, SmallBallLowerBound) {
  std::mt19937_64 rng(31);
  const double rho = 1.0 / std::numbers::sqrt2;
  for (const char* id : {"example1", "example1_compliant"}) {
    auto p = make_builtin_problem(id);
    auto d = derived_constants(p);
    for (double k : {1.0, 5.0, 10.0}) {
      PeriodicGrid g(k, static_cast<std::size_t>(64 * k));
      for (int trial = 0; trial < 50; ++trial) {
        auto q = random_trajectory(g, 1, rng);
        const double s = rho / ek_norm(q);
        for (double& v : q.data()) v *= s;
        const double e = ek_norm(q);
        EXPECT_GE(action_value(p, q), 0.5 * (1 - 2 * d.M) * e * e - d.f_l2 * e - 1e-6) << id;
      }
    }
  }
}
