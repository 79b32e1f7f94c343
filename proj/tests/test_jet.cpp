// Jet arithmetic: seeds, primitives, extraction, and property checks against
// finite differences and an independent polynomial algebra.

#include <finsler/expr.hpp>
#include <finsler/jet.hpp>
#include <finsler/tensor.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>
#include <random>

using namespace finsler;

namespace {

TEST(JetLift, ActiveVariableHasUnitGradient) {
  const std::array<double, 1> values{3.0};
  const std::array<int, 1> active{0};
  const auto jets = lift(values, active, 2);
  ASSERT_EQ(jets.size(), 1u);
  EXPECT_EQ(jets[0].value(), 3.0);
  EXPECT_EQ(extract(jets[0], std::array{1}), 1.0);
  EXPECT_EQ(extract(jets[0], std::array{2}), 0.0);
}

TEST(JetLift, InactiveValueIsConstant) {
  const std::array<double, 2> values{5.0, 1.0};
  const std::array<int, 1> active{1};
  const auto jets = lift(values, active, 2);
  EXPECT_EQ(jets[0].value(), 5.0);
  EXPECT_TRUE(jets[0].is_constant());
  EXPECT_EQ(extract(jets[1], std::array{1}), 1.0);
}

TEST(JetLift, SquareHasTaylorCoefficients) {
  const Jet v = Jet::variable(3.0, 0, 1, 2);
  const Jet f = v * v;
  const auto c = f.coefficients();
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], 9.0);
  EXPECT_EQ(c[1], 6.0);
  EXPECT_EQ(c[2], 1.0);
}

TEST(JetLift, OrderBudgetGuard) {
  EXPECT_THROW(Jet::variable(1.0, 0, 1, kMaxJetOrder + 1), OrderBudgetError);
  EXPECT_THROW(Jet::constant(1.0, kMaxJetVars + 1, 2), OrderBudgetError);
  const std::array<double, 1> values{1.0};
  const std::array<int, 1> bad{3};
  EXPECT_THROW(lift(values, bad, 2), OrderBudgetError);
}

TEST(JetApply, ExpTaylorSeries) {
  const Jet f = exp(Jet::variable(0.0, 0, 1, 3));
  const auto c = f.coefficients();
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], 1.0);
  EXPECT_DOUBLE_EQ(c[2], 0.5);
  EXPECT_DOUBLE_EQ(c[3], 1.0 / 6.0);
}

TEST(JetApply, ProductRule) {
  const Jet a = Jet::variable(2.0, 0, 2, 2);
  const Jet b = Jet::variable(3.0, 1, 2, 2);
  const std::array<Jet, 2> args{a, b};
  const Jet p = jet_apply(JetOp::mul, args);
  EXPECT_EQ(p.value(), 6.0);
  EXPECT_EQ(extract(p, std::array{1, 0}), 3.0);
  EXPECT_EQ(extract(p, std::array{0, 1}), 2.0);
  EXPECT_EQ(p.coefficient(std::array{1, 1}), 1.0);
}

TEST(JetApply, EuclideanNormGradient) {
  const Jet y1 = Jet::variable(3.0, 0, 2, 2);
  const Jet y2 = Jet::variable(4.0, 1, 2, 2);
  const Jet r = sqrt(y1 * y1 + y2 * y2);
  EXPECT_DOUBLE_EQ(r.value(), 5.0);
  EXPECT_NEAR(extract(r, std::array{1, 0}), 0.6, 1e-15);
  EXPECT_NEAR(extract(r, std::array{0, 1}), 0.8, 1e-15);
  // d^2 r / dy1^2 = y2^2 / r^3
  EXPECT_NEAR(extract(r, std::array{2, 0}), 16.0 / 125.0, 1e-15);
}

TEST(JetApply, DomainErrors) {
  const Jet neg = Jet::variable(-1.0, 0, 1, 2);
  EXPECT_THROW(sqrt(neg), DomainError);
  EXPECT_THROW(log(neg), DomainError);
  EXPECT_THROW(pow(neg, 0.5), DomainError);
  EXPECT_THROW(reciprocal(Jet::constant(0.0, 1, 2)), DomainError);
  // Integer powers of negative bases are fine.
  EXPECT_DOUBLE_EQ(pow(neg, 2.0).value(), 1.0);
  EXPECT_DOUBLE_EQ(extract(pow(neg, 3), std::array{1}), 3.0);
}

TEST(JetApply, ExpressionErrorNamesSubexpression) {
  const std::array<double, 1> values{-2.0};
  const std::array<int, 1> active{0};
  const auto x = lift(values, active, 2);
  const Expr e = expr::binary(BinaryOp::add, expr::constant(1.0),
                              expr::call(Func::sqrt, expr::variable(VarKind::x, 0)));
  try {
    evaluate(e, Bindings<Jet>{x, {}, {}, {}});
    FAIL() << "expected an evaluation error";
  } catch (const EvaluationError& err) {
    EXPECT_EQ(err.subexpression(), "sqrt(x1)");
  }
}

TEST(JetExtract, Basics) {
  const Jet v = Jet::variable(0.7, 0, 1, 4);
  EXPECT_EQ(extract(v, std::array{0}), 0.7);
  const Jet xy = Jet::variable(2.0, 0, 2, 2) * Jet::variable(5.0, 1, 2, 2);
  EXPECT_EQ(extract(xy, std::array{1, 1}), 1.0);
  const Jet s = sin(Jet::variable(0.0, 0, 1, 3));
  EXPECT_DOUBLE_EQ(extract(s, std::array{3}), -1.0);
  EXPECT_THROW(extract(s, std::array{4}), OrderBudgetError);
  EXPECT_THROW(extract(s, std::array{1, 0}), OrderBudgetError);
}

TEST(JetDiff, DifferentiationDropsOrder) {
  const Jet x = Jet::variable(1.5, 0, 2, 4);
  const Jet y = Jet::variable(-0.5, 1, 2, 4);
  const Jet f = x * x * x * y + exp(y);
  const Jet fx = f.diff(0);
  EXPECT_EQ(fx.order(), 3);
  EXPECT_NEAR(fx.value(), 3 * 1.5 * 1.5 * -0.5, 1e-14);
  EXPECT_NEAR(extract(fx, std::array{1, 1}), 6 * 1.5, 1e-14);
  EXPECT_NEAR(extract(f, std::array{2, 1}), extract(fx, std::array{1, 1}), 1e-14);
  EXPECT_THROW(Jet::constant(1.0, 1, 0).diff(0), OrderBudgetError);
}

// ---------------------------------------------------------------------------
// Property checks

// Smooth expressions over x1..x3 built from the full primitive set.
Expr random_expression(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  std::uniform_int_distribution<int> var(0, 2);
  auto x = [&] { return expr::variable(VarKind::x, var(rng)); };
  switch (pick(rng)) {
    case 0: return x();
    case 1: return expr::binary(BinaryOp::mul, expr::constant(coef(rng)), x());
    case 2: return expr::binary(BinaryOp::add, random_expression(rng, depth - 1), random_expression(rng, depth - 1));
    case 3: return expr::binary(BinaryOp::sub, random_expression(rng, depth - 1), random_expression(rng, depth - 1));
    case 4: return expr::binary(BinaryOp::mul, random_expression(rng, depth - 1), random_expression(rng, depth - 1));
    case 5: return expr::call(Func::sin, random_expression(rng, depth - 1));
    case 6: return expr::call(Func::exp, expr::binary(BinaryOp::mul, expr::constant(0.3), random_expression(rng, depth - 1)));
    case 7: {
      Expr a = random_expression(rng, depth - 1);
      return expr::call(Func::sqrt, expr::binary(BinaryOp::add, expr::constant(1.0), expr::binary(BinaryOp::pow, a, expr::constant(2.0))));
    }
    default: {
      Expr a = random_expression(rng, depth - 1);
      Expr den = expr::binary(BinaryOp::add, expr::constant(2.5), expr::call(Func::cos, random_expression(rng, depth - 1)));
      Expr logged = expr::call(Func::log, expr::binary(BinaryOp::add, expr::constant(3.0), expr::call(Func::sin, a)));
      return expr::binary(BinaryOp::div, logged, den);
    }
  }
}

double eval_at(const Expr& e, std::array<double, 3> x) {
  return evaluate(e, Bindings<double>{x, {}, {}, {}});
}

TEST(JetProperty, AgreesWithCentralDifferences) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  constexpr std::array<int, 3> all{0, 1, 2};
  for (int trial = 0; trial < 60; ++trial) {
    const Expr e = random_expression(rng, 4);
    const std::array<double, 3> p{coord(rng), coord(rng), coord(rng)};
    const auto jets2 = lift(p, all, 2);
    const Jet f = evaluate(e, Bindings<Jet>{jets2, {}, {}, {}});
    EXPECT_NEAR(f.value(), eval_at(e, p), 1e-14 * std::max(1.0, std::abs(f.value())));

    for (int i = 0; i < 3; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(p[i]));
      auto shifted = [&](double s) {
        auto q = p;
        q[i] += s;
        return q;
      };
      // First derivatives against differences of the scalar evaluator.
      const double fd1 = (eval_at(e, shifted(h)) - eval_at(e, shifted(-h))) / (2 * h);
      std::array<int, 3> ei{0, 0, 0};
      ei[i] = 1;
      EXPECT_LE(relative_error(extract(f, ei), fd1), 1e-6) << to_string(e);

      // Second derivatives against differences of order-1 jets at shifted points.
      for (int j = 0; j < 3; ++j) {
        auto grad_j = [&](std::array<double, 3> q) {
          const auto jets1 = lift(q, all, 1);
          std::array<int, 3> ej{0, 0, 0};
          ej[j] = 1;
          return extract(evaluate(e, Bindings<Jet>{jets1, {}, {}, {}}), ej);
        };
        const double fd2 = (grad_j(shifted(h)) - grad_j(shifted(-h))) / (2 * h);
        std::array<int, 3> eij{0, 0, 0};
        eij[i] += 1;
        eij[j] += 1;
        EXPECT_LE(relative_error(extract(f, eij), fd2), 1e-6) << to_string(e);
      }
    }
  }
}

TEST(JetProperty, LeibnizRule) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  constexpr int order = 5;
  auto layout = JetLayout::get(2, order);
  for (int trial = 0; trial < 20; ++trial) {
    // Random jets are Taylor expansions of random polynomials.
    Jet f(layout, 0.0), g(layout, 0.0);
    for (std::size_t p = 0; p < layout->size(); ++p) {
      const auto& alpha = layout->multi_index(p);
      Jet mono_f = Jet::constant(coef(rng), 2, order);
      Jet mono_g = Jet::constant(coef(rng), 2, order);
      for (int k = 0; k < alpha[0]; ++k) {
        mono_f = mono_f * Jet::variable(0.0, 0, 2, order);
        mono_g = mono_g * Jet::variable(0.0, 0, 2, order);
      }
      for (int k = 0; k < alpha[1]; ++k) {
        mono_f = mono_f * Jet::variable(0.0, 1, 2, order);
        mono_g = mono_g * Jet::variable(0.0, 1, 2, order);
      }
      f += mono_f;
      g += mono_g;
    }
    const Jet fg = f * g;
    auto choose = [](int n, int k) { return static_cast<double>(detail::binomial(n, k)); };
    for (std::size_t p = 0; p < layout->size(); ++p) {
      const auto& d = layout->multi_index(p);
      double expected = 0.0;
      for (int e0 = 0; e0 <= d[0]; ++e0)
        for (int e1 = 0; e1 <= d[1]; ++e1)
          expected += choose(d[0], e0) * choose(d[1], e1) * extract(f, std::array{e0, e1}) *
                      extract(g, std::array{d[0] - e0, d[1] - e1});
      EXPECT_NEAR(extract(fg, d), expected, 1e-10 * std::max(1.0, std::abs(expected)));
    }
  }
}

// Sparse polynomials in two variables, used as an independent algebra.
using Poly = std::map<std::pair<int, int>, double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) r[{ea.first + eb.first, ea.second + eb.second}] += ca * cb;
  return r;
}

Poly poly_add(Poly a, const Poly& b, double scale = 1.0) {
  for (const auto& [e, c] : b) a[e] += scale * c;
  return a;
}

// d^(i,j) of the polynomial evaluated at (x0, y0).
double poly_derivative(const Poly& p, int i, int j, double x0, double y0) {
  double s = 0.0;
  for (const auto& [e, c] : p) {
    if (e.first < i || e.second < j) continue;
    double f = c;
    for (int k = 0; k < i; ++k) f *= e.first - k;
    for (int k = 0; k < j; ++k) f *= e.second - k;
    s += f * std::pow(x0, e.first - i) * std::pow(y0, e.second - j);
  }
  return s;
}

TEST(JetProperty, ChainRuleOnPolynomialComposition) {
  // q(v) = 1 + 2 v1 - v2 + v1 v2,  p(t) = t^3 - 2 t
  const Poly q = {{{0, 0}, 1.0}, {{1, 0}, 2.0}, {{0, 1}, -1.0}, {{1, 1}, 1.0}};
  const Poly composed = poly_add(poly_mul(q, poly_mul(q, q)), q, -2.0);
  const double x0 = 0.4, y0 = -1.3;
  constexpr int order = 6;
  const Jet v1 = Jet::variable(x0, 0, 2, order), v2 = Jet::variable(y0, 1, 2, order);
  const Jet qj = 1.0 + 2.0 * v1 - v2 + v1 * v2;
  const Jet via_mul = qj * qj * qj - 2.0 * qj;
  const Jet via_pow = pow(qj, 3.0) - 2.0 * qj;
  for (int i = 0; i <= order; ++i)
    for (int j = 0; i + j <= order; ++j) {
      const double expected = poly_derivative(composed, i, j, x0, y0);
      EXPECT_NEAR(extract(via_mul, std::array{i, j}), expected, 1e-12 * std::max(1.0, std::abs(expected)));
      EXPECT_NEAR(extract(via_pow, std::array{i, j}), expected, 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST(JetProperty, ReciprocalAndLogInvertExpAndDivision) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> coord(0.2, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Jet a = Jet::variable(coord(rng), 0, 2, 6) + 0.3 * Jet::variable(coord(rng), 1, 2, 6);
    const Jet one = a * reciprocal(a);
    const Jet back = log(exp(a));
    EXPECT_NEAR(one.value(), 1.0, 1e-14);
    for (std::size_t p = 1; p < one.coefficients().size(); ++p) {
      EXPECT_NEAR(one.coefficients()[p], 0.0, 1e-12);
      EXPECT_NEAR(back.coefficients()[p], a.coefficients()[p], 1e-12);
    }
    const Jet s = sqrt(a);
    const Jet sq = s * s;
    for (std::size_t p = 0; p < sq.coefficients().size(); ++p)
      EXPECT_NEAR(sq.coefficients()[p], a.coefficients()[p], 1e-12);
  }
}

}  // namespace
