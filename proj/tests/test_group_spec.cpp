#include <gtest/gtest.h>

#include <random>

#include "carnot/group_spec.hpp"
#include "generators.hpp"

using namespace carnot;

namespace {

const char* kH1 = "group H1\nstep 2\nlayer 1: X Y\nlayer 2: T\nbracket [X,Y]=T\n";

const char* kEngel =
    "# Engel algebra\n"
    "group engel\n"
    "step 3\n"
    "layer 1: X1 X2\n"
    "layer 2: X3\n"
    "layer 3: X4\n"
    "bracket [X1,X2] = X3\n"
    "bracket [X1,X3] = 1*X4\n";

GradedAlgebra parse(const std::string& s) { return parse_group_spec({s, "test"}); }

// Brute-force Jacobi defect scan, independent of validate_algebra.
bool jacobi_holds(const GradedAlgebra& a) {
  const int n = a.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int m = 0; m < n; ++m) {
          Rational s = 0;
          for (int r = 0; r < n; ++r)
            s += a.c(i, j, r) * a.c(k, r, m) + a.c(j, k, r) * a.c(i, r, m) +
                 a.c(k, i, r) * a.c(j, r, m);
          if (!is_zero(s)) return false;
        }
  return true;
}

}  // namespace

TEST(GroupSpec, ParsesHeisenbergOne) {
  auto a = parse(kH1);
  EXPECT_EQ(a.dim(), 3);
  EXPECT_EQ(a.layer_dims(), (std::vector<int>{2, 1}));
  EXPECT_EQ(a.c(0, 1, 2), Rational(1));
  EXPECT_EQ(a.c(1, 0, 2), Rational(-1));
  EXPECT_TRUE(a.stratified_flag);
  EXPECT_TRUE(validate_algebra(a).ok());
}

TEST(GroupSpec, GradingViolation) {
  std::string s = kH1;
  s.replace(s.find("=T"), 2, "=X");
  EXPECT_THROW(parse(s), GradingViolation);
}

TEST(GroupSpec, EngelIsStratified) {
  auto a = parse(kEngel);
  EXPECT_TRUE(a.stratified_flag);
  EXPECT_TRUE(jacobi_holds(a));
  EXPECT_EQ(a, builtin("engel", {}));
}

TEST(GroupSpec, Errors) {
  EXPECT_THROW(parse("layer 1: X Y\nbracket [X,Z] = X\n"), UnknownSymbol);
  EXPECT_THROW(parse("layer 1: X Y\nlayer 2: T\nbracket [X,Y] = T\nbracket [Y,X] = -1*T\n"),
               DuplicateBracket);
  EXPECT_THROW(parse("layer 1: X Y\nfoo bar\n"), SyntaxError);
  EXPECT_THROW(parse(""), SyntaxError);
  EXPECT_THROW(parse("step 1\nlayer 1: X\nlayer 2: T\n"), SyntaxError);
  EXPECT_THROW(parse("layer 1: X Y\nlayer 2: T\nbracket [X,Y] = 1/0*T\n"), SyntaxError);
  try {
    parse("layer 1: X Y\n\nlayer 2: T\nbracket X,Y = T\n");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(GroupSpec, JacobiViolationFromPerturbedEngel) {
  // Filiform(5) with [X2,X3] = X5 added breaks Jacobi on (X1,X2,X3).
  std::string s =
      "layer 1: A B\nlayer 2: C\nlayer 3: D\nlayer 4: E\n"
      "bracket [A,B] = C\nbracket [A,C] = D\nbracket [A,D] = E\nbracket [B,D] = E\n";
  EXPECT_THROW(parse(s), JacobiViolation);
  std::string ok =
      "layer 1: A B\nlayer 2: C\nlayer 3: D\nlayer 4: E\n"
      "bracket [A,B] = C\nbracket [A,C] = D\nbracket [A,D] = E\n";
  EXPECT_TRUE(jacobi_holds(parse(ok)));
}

TEST(GroupSpec, RationalCoefficients) {
  auto a = parse("layer 1: X Y Z\nlayer 2: T S\nbracket [X,Y] = 3/2*T - 1/3*S\nbracket [Y,Z] = -2*S\n");
  EXPECT_EQ(a.c(0, 1, 3), Rational(3, 2));
  EXPECT_EQ(a.c(0, 1, 4), Rational(-1, 3));
  EXPECT_EQ(a.c(2, 1, 4), Rational(2));
}

TEST(Builtin, Basics) {
  EXPECT_EQ(builtin("heis", {1}), parse(kH1));
  auto ab = builtin("abelian", {2});
  for (const auto& c : ab.constants) EXPECT_EQ(c, Rational(0));
  EXPECT_EQ(hom_dimension(builtin("heis", {2})), 6);
  EXPECT_THROW(builtin("sl2", {}), UnknownBuiltin);
  EXPECT_THROW(builtin("heis", {0}), BadParameter);
  EXPECT_THROW(builtin("heis", {}), BadParameter);
  EXPECT_EQ(builtin("filiform", {5}).step, 4);
}

TEST(Builtin, HeisenbergHasNIndependentCentralBrackets) {
  for (int n = 1; n <= 3; ++n) {
    auto a = builtin("heis", {n});
    int nonzero = 0;
    for (int i = 0; i < a.dim(); ++i)
      for (int j = i + 1; j < a.dim(); ++j)
        for (int k = 0; k < a.dim(); ++k)
          if (!is_zero(a.c(i, j, k))) {
            ++nonzero;
            EXPECT_EQ(k, 2 * n);
            EXPECT_EQ(a.c(i, j, k), Rational(1));
          }
    EXPECT_EQ(nonzero, n);
  }
}

TEST(Validate, ReportsWitnesses) {
  EXPECT_TRUE(validate_algebra(builtin("heis", {1})).ok());
  auto a = builtin("heis", {1});
  a.c(1, 0, 2) = 1;  // now c[X][Y][T] = c[Y][X][T] = 1
  auto rep = validate_algebra(a);
  ASSERT_FALSE(rep.ok());
  EXPECT_EQ(rep.violations[0].kind, Violation::Kind::Antisymmetry);
  EXPECT_EQ(rep.violations[0].i, 0);
  EXPECT_EQ(rep.violations[0].j, 1);
  EXPECT_EQ(rep.violations[0].k, 2);

  auto f = builtin("filiform", {5});
  detail::set_bracket(f, 1, 3, 4, 1);
  auto jr = validate_algebra(f);
  ASSERT_FALSE(jr.ok());
  EXPECT_EQ(jr.violations[0].kind, Violation::Kind::Jacobi);
  EXPECT_FALSE(jacobi_holds(f));

  auto s = builtin("heis", {1});
  s.c(0, 1, 2) = 0;
  s.c(1, 0, 2) = 0;
  s.stratified_flag = true;
  EXPECT_EQ(validate_algebra(s).violations.at(0).kind, Violation::Kind::Stratification);
}

// Property: parse(serialize(a)) == a on random graded algebras that satisfy Jacobi.
TEST(GroupSpecProperty, SerializeRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    // Random step-2 algebra: Jacobi holds automatically since [V1,[V1,V1]] = 0.
    std::uniform_int_distribution<int> d1(1, 4), d2(1, 3);
    int n1 = d1(rng), n2 = d2(rng);
    std::vector<std::string> names;
    std::vector<int> layers;
    for (int i = 0; i < n1; ++i) names.push_back("A" + std::to_string(i)), layers.push_back(1);
    for (int i = 0; i < n2; ++i) names.push_back("B" + std::to_string(i)), layers.push_back(2);
    auto a = detail::make_empty("r" + std::to_string(trial), names, layers);
    std::bernoulli_distribution coin(0.4);
    for (int i = 0; i < n1; ++i)
      for (int j = i + 1; j < n1; ++j)
        for (int k = n1; k < n1 + n2; ++k)
          if (coin(rng)) detail::set_bracket(a, i, j, k, gen::rational(rng));
    a.stratified_flag = is_stratified(a);
    auto b = parse(serialize_group_spec(a));
    EXPECT_EQ(a, b) << serialize_group_spec(a);
    EXPECT_EQ(a.stratified_flag, b.stratified_flag);
    EXPECT_TRUE(validate_algebra(b).ok());
  }
  for (auto a : {builtin("heis", {3}), builtin("engel", {}), builtin("filiform", {5})})
    EXPECT_EQ(parse(serialize_group_spec(a)), a);
}
