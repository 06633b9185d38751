#include <gtest/gtest.h>

#include <random>
#include <set>

#include "kamest/model_io.hpp"

using namespace kamest;

namespace {

CVec cv(std::initializer_list<cplx> v) {
  CVec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (cplx c : v) x(i++) = c;
  return x;
}

// h = (p1^2 + p2^2)/2 + p1 p2^2
AnalyticModel cubic_coupled() {
  Polynomial h(2);
  h.add_term({2, 0}, 0.5);
  h.add_term({0, 2}, 0.5);
  h.add_term({1, 2}, 1.0);
  return AnalyticModel(2, h, {});
}

}  // namespace

TEST(Evaluate, PendulumRealPoint) {
  const auto m = builtin("forced_pendulum", {{"eps", 1e-3}});
  const cplx v = m.evaluate(cv({0.3, 0.0}), cv({0.0, 0.0}));
  EXPECT_NEAR(v.real(), 0.046, 1e-15);
  EXPECT_EQ(v.imag(), 0.0);
}

TEST(Evaluate, ZeroPerturbationIsH) {
  const auto m = builtin("free_rotors", {{"n", 3}});
  const CVec p = cv({0.2, -1.5, 0.7});
  const CVec q = cv({1.0, 2.0, 3.0});
  const cplx v = m.evaluate(p, q);
  EXPECT_DOUBLE_EQ(v.real(), 0.5 * (0.04 + 2.25 + 0.49));
}

TEST(Evaluate, ImaginaryAngleGivesCosh) {
  const double eps = 1e-3, s = 0.7;
  const auto m = builtin("forced_pendulum", {{"eps", eps}});
  const cplx v = m.evaluate(cv({0.4, 0.1}), cv({cplx(0.0, s), 0.0}));
  // cosh by its Taylor series
  double ch = 0.0, term = 1.0;
  for (int k = 0; k < 30; ++k) {
    ch += term;
    term *= s * s / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
  }
  EXPECT_NEAR(v.real(), 0.5 * (0.16 + 0.01) + eps * ch, 1e-15);
  EXPECT_NEAR(v.imag(), 0.0, 1e-18);
}

TEST(Evaluate, DimensionMismatchThrows) {
  const auto m = builtin("forced_pendulum");
  EXPECT_THROW(m.evaluate(cv({0.1, 0.2, 0.3}), cv({0.0, 0.0})), DimensionError);
  EXPECT_THROW(m.evaluate(cv({0.1, 0.2}), cv({0.0})), DimensionError);
}

TEST(Hessian, QuadraticIsIdentity) {
  const auto m = builtin("free_rotors", {{"n", 2}});
  const CMat H = m.hessian(cv({cplx(3.0, 1.0), -2.0}));
  EXPECT_EQ(H, CMat::Identity(2, 2));
}

TEST(Hessian, CubicAtOneOne) {
  const auto m = cubic_coupled();
  const CMat H = m.hessian(cv({1.0, 1.0}));
  EXPECT_EQ(H(0, 0), cplx(1.0));
  EXPECT_EQ(H(0, 1), cplx(2.0));
  EXPECT_EQ(H(1, 0), cplx(2.0));
  EXPECT_EQ(H(1, 1), cplx(3.0));
}

TEST(Hessian, ZeroQuadraticPartAtOrigin) {
  Polynomial h(2);
  h.add_term({3, 0}, 1.0);
  h.add_term({1, 3}, -2.0);
  h.add_term({2, 2}, 0.25);
  const AnalyticModel m(2, h, {});
  EXPECT_EQ(m.hessian(cv({0.0, 0.0})), CMat::Zero(2, 2));
}

TEST(Hessian, MatchesFiniteDifferencesOfGradient) {
  const auto m = cubic_coupled();
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    RVec p(2);
    p << u(gen), u(gen);
    const CMat H = m.hessian(p.data());
    for (int j = 0; j < 2; ++j) {
      RVec a = p, b = p;
      a(j) += h;
      b(j) -= h;
      const RVec fd = (m.frequency(a.data()).real() - m.frequency(b.data()).real()) / (2.0 * h);
      for (int i = 0; i < 2; ++i)
        EXPECT_NEAR(H(i, j).real(), fd(i), 1e-6 * std::max(1.0, std::abs(fd(i))));
    }
  }
}

TEST(Builtin, PendulumModes) {
  const auto m = builtin("forced_pendulum", {{"eps", 1e-3}});
  ASSERT_EQ(m.modes().size(), 2u);
  bool found = false;
  for (const auto& mode : m.modes()) {
    EXPECT_EQ(std::abs(mode.k[0]), 1);
    EXPECT_EQ(mode.k[1], 0);
    ASSERT_EQ(mode.coeff.size(), 1u);
    EXPECT_DOUBLE_EQ(mode.coeff.coeff(0).real(), 0.5e-3);
    found = found || mode.k[0] == 1;
  }
  EXPECT_TRUE(found);
}

TEST(Builtin, FreeRotorsHaveNoModes) {
  const auto m = builtin("free_rotors", {{"n", 3}});
  EXPECT_EQ(m.n(), 3);
  EXPECT_FALSE(m.has_perturbation());
}

TEST(Builtin, CoupledRotorModes) {
  const auto m = builtin("coupled_rotors", {{"eps", 1e-2}, {"a", 0.5}});
  std::set<std::vector<int>> ks;
  for (const auto& mode : m.modes()) ks.insert(mode.k);
  const std::set<std::vector<int>> want{{1, 0}, {-1, 0}, {1, 1}, {-1, -1}};
  EXPECT_EQ(ks, want);
}

TEST(Builtin, Errors) {
  EXPECT_THROW(builtin("no_such_family"), Error);
  EXPECT_THROW(builtin("forced_pendulum", {{"sigma", 1.0}}), Error);
  EXPECT_THROW(builtin("free_rotors", {{"n", 1}}), DimensionError);
  EXPECT_THROW(builtin("free_rotors", {{"n", 7}}), DimensionError);
}

TEST(Reality, UnpairedModeRejected) {
  std::vector<FourierMode> modes{{{1, 0}, Polynomial::constant(2, 1.0)}};
  EXPECT_THROW(AnalyticModel(2, detail::half_square_norm(2), modes), Error);
}

TEST(Reality, NonConjugatePartnerRejected) {
  std::vector<FourierMode> modes{{{1, 0}, Polynomial::constant(2, cplx(1.0, 1.0))},
                                 {{-1, 0}, Polynomial::constant(2, cplx(1.0, 1.0))}};
  EXPECT_THROW(AnalyticModel(2, detail::half_square_norm(2), modes), Error);
}

TEST(Reality, RealInputsGiveRealValues) {
  ModelTables t;
  t.n = 2;
  t.h_terms = {{{2, 0}, 0.5}, {{0, 2}, 0.5}, {{1, 1}, 0.1}};
  t.f_terms = {{{1, 2}, {1, 0}, cplx(0.3, -0.2)}, {{-1, -2}, {1, 0}, cplx(0.3, 0.2)}, {{0, 1}, {0, 0}, cplx(0.0, 0.5)},
               {{0, -1}, {0, 0}, cplx(0.0, -0.5)}};
  const auto m = model_from_tables(t);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const CVec p = cv({u(gen), u(gen)});
    const CVec q = cv({u(gen), u(gen)});
    const cplx v = m.evaluate(p, q);
    EXPECT_LE(std::abs(v.imag()), 1e-14 * std::max(1.0, std::abs(v)));
    EXPECT_EQ(v, m.evaluate(p, q));
  }
}

TEST(VectorField, MatchesFiniteDifferencesOfEnergy) {
  const auto m = builtin("coupled_rotors", {{"eps", 0.1}, {"a", 0.7}});
  const double p[2] = {0.3, -0.8}, q[2] = {1.1, 2.5};
  double pd[2], qd[2];
  m.vector_field(p, q, pd, qd);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    double pa[2] = {p[0], p[1]}, pb[2] = {p[0], p[1]}, qa[2] = {q[0], q[1]}, qb[2] = {q[0], q[1]};
    pa[i] += h;
    pb[i] -= h;
    qa[i] += h;
    qb[i] -= h;
    EXPECT_NEAR(qd[i], (m.energy(pa, q) - m.energy(pb, q)) / (2 * h), 1e-8);
    EXPECT_NEAR(pd[i], -(m.energy(p, qa) - m.energy(p, qb)) / (2 * h), 1e-8);
  }
}

TEST(Domain, Validation) {
  auto D = DomainSpec::make_box({{0, 1}, {0, 1}}, 0.1, 1.0, 1.5);
  EXPECT_NO_THROW(D.validate(2));
  EXPECT_DOUBLE_EQ(D.nu(), 2.5);
  EXPECT_DOUBLE_EQ(D.diam(), 1.0);
  EXPECT_THROW(D.validate(3), DimensionError);
  D.s = 1.5;
  EXPECT_THROW(D.validate(2), Error);
  D.s = 1.0;
  D.tau = 1.0;
  EXPECT_THROW(D.validate(2), Error);
  D.tau = 1.5;
  D.r0 = 0.0;
  EXPECT_THROW(D.validate(2), Error);
  const auto P = DomainSpec::make_points({RVec::Zero(2), RVec::Constant(2, 0.5)}, 0.1, 1.0, 1.5);
  EXPECT_DOUBLE_EQ(P.diam(), 0.5);
  EXPECT_EQ(P.measure(), 0.0);
}

TEST(ModelFile, ParsesTables) {
  const std::string text =
      "n = 2\n"
      "[h]\n"
      "2,0 = 1/2\n"
      "0,2 = 0.5\n"
      "[f]\n"
      "1,0 : 0,0 = 1/2000\n"
      "-1,0 : 0,0 = 1/2000\n";
  const auto m = parse_model_text(text);
  EXPECT_EQ(m.n(), 2);
  const auto ref = builtin("forced_pendulum", {{"eps", 1e-3}});
  const CVec p = cv({0.3, 0.4}), q = cv({0.9, -0.2});
  EXPECT_NEAR(std::abs(m.evaluate(p, q) - ref.evaluate(p, q)), 0.0, 1e-16);
}

TEST(ModelFile, Errors) {
  EXPECT_THROW(parse_model_text("[h]\n2,0 = 1\n"), ParseError);
  EXPECT_THROW(parse_model_text("n = 2\n[h]\n2,0,1 = 1\n"), ParseError);
  EXPECT_THROW(parse_model_text("n = 2\n[h]\n2,0 = x\n"), ParseError);
  EXPECT_THROW(parse_model_text("n = 2\n[h]\n2,0 = 1/0\n"), ParseError);
  EXPECT_THROW(parse_model_text("n = 2\n[f]\n1,0 = 1\n"), ParseError);
  EXPECT_THROW(parse_model_text("n = 2\n[h]\n5,0 = 1\n"), Error);
}

TEST(Text, Numbers) {
  EXPECT_DOUBLE_EQ(text::parse_number(" 3/4 "), 0.75);
  EXPECT_DOUBLE_EQ(text::parse_number("+1e-3"), 1e-3);
  EXPECT_EQ(text::parse_complex("1 -2"), cplx(1.0, -2.0));
  EXPECT_EQ(text::parse_int_list("1, -2,3"), (std::vector<int>{1, -2, 3}));
  EXPECT_EQ(text::parse_number_list("0.5, 1/4"), (std::vector<double>{0.5, 0.25}));
}
