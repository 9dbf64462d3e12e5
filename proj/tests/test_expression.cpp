#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "homoclinic/expression.hpp"

using namespace homoclinic;
using std::numbers::pi;

namespace {

const std::map<std::string, std::size_t> kTime = {{"t", 0}};
const std::map<std::string, std::size_t> kSpace = {{"q1", 0}, {"q2", 1}};

double at(const Expr& e, double t) { return e.eval(std::span<const double>(&t, 1)); }

}  // namespace

TEST(Expression, PaperCoefficients) {
  auto a1 = parse_expression("(1/5)*exp(-t^2) + 1/10", kTime);
  auto a2 = parse_expression("arctan(t)/pi + 1/2", kTime);
  for (double t : {-3.0, -0.5, 0.0, 0.7, 2.0}) {
    EXPECT_NEAR(at(a1, t), 0.2 * std::exp(-t * t) + 0.1, 1e-15);
    EXPECT_NEAR(at(a2, t), std::atan(t) / pi + 0.5, 1e-15);
  }
}

TEST(Expression, UnaryMinusBindsLooserThanPower) {
  EXPECT_DOUBLE_EQ(at(parse_expression("-t^2", kTime), 3.0), -9.0);
  EXPECT_DOUBLE_EQ(at(parse_expression("exp(-t^2/2)", kTime), 2.0), std::exp(-2.0));
  EXPECT_DOUBLE_EQ(at(parse_expression("2^-1", kTime), 0.0), 0.5);
  EXPECT_DOUBLE_EQ(at(parse_expression("2^3^2", kTime), 0.0), 512.0);
  EXPECT_DOUBLE_EQ(at(parse_expression("--t", kTime), 4.0), 4.0);
}

TEST(Expression, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(at(parse_expression("1 + 2*3 - 4/2", kTime), 0.0), 5.0);
  EXPECT_DOUBLE_EQ(at(parse_expression("8/4/2", kTime), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(at(parse_expression("(1 + 2)*3", kTime), 0.0), 9.0);
  EXPECT_DOUBLE_EQ(at(parse_expression("sin(pi/2) + cos(0)", kTime), 0.0), 2.0);
}

TEST(Expression, SymbolicDerivativesMatchClosedForms) {
  auto g = parse_expression("q1^4 + 3*q1^2*q2 + sin(q2)*exp(q1)", kSpace);
  auto d1 = g.derivative(0);
  auto d2 = g.derivative(1);
  auto d12 = d1.derivative(1);
  std::vector<double> x = {0.3, -1.2};
  const double q1 = x[0], q2 = x[1];
  EXPECT_NEAR(d1.eval(x), 4 * q1 * q1 * q1 + 6 * q1 * q2 + std::sin(q2) * std::exp(q1), 1e-14);
  EXPECT_NEAR(d2.eval(x), 3 * q1 * q1 + std::cos(q2) * std::exp(q1), 1e-14);
  EXPECT_NEAR(d12.eval(x), 6 * q1 + std::cos(q2) * std::exp(q1), 1e-14);

  auto at_ = parse_expression("atan(2*t)", kTime).derivative(0);
  EXPECT_NEAR(at(at_, 0.5), 2.0 / (1.0 + 1.0), 1e-15);
  auto quot = parse_expression("t/(1 + t^2)", kTime).derivative(0);
  EXPECT_NEAR(at(quot, 2.0), (1.0 - 4.0) / 25.0, 1e-15);
}

TEST(Expression, QuarticIdentityHoldsToRounding) {
  auto G = parse_expression("q1^4", kSpace);
  auto dG = G.derivative(0);
  for (double q : {-2.5, -0.1, 0.0, 0.77, 3.0}) {
    std::vector<double> x = {q, 0.0};
    EXPECT_EQ(4.0 * G.eval(x), dG.eval(x) * q);
  }
}

TEST(Expression, ConstantFolding) {
  auto e = parse_expression("2*pi - pi", kTime);
  EXPECT_TRUE(e.is_constant());
  EXPECT_DOUBLE_EQ(e.constant_value(), pi);
  EXPECT_TRUE(parse_expression("t*0", kTime).is_constant());
}

TEST(Expression, ErrorsNameTheColumn) {
  auto expect_error = [](const char* text, const char* fragment) {
    try {
      parse_expression(text, kTime);
      ADD_FAILURE() << "no error for " << text;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
  };
  expect_error("t +", "unexpected end");
  expect_error("log(t)", "unknown name 'log'");
  expect_error("t^t", "exponent must be a constant");
  expect_error("(t + 1", "expected ')'");
  expect_error("t 1", "column 3");
  expect_error("q", "unknown name 'q'");
  expect_error("exp t", "expected '('");
}
