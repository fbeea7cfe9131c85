#include <gtest/gtest.h>

#include <cmath>

#include "carnot/measures.hpp"
#include "generators.hpp"

using namespace carnot;

namespace {

Mat cols(int rows, std::initializer_list<std::initializer_list<double>> cs) {
  Mat m(rows, cs.size());
  int c = 0;
  for (auto col : cs) {
    int r = 0;
    for (double x : col) m(r++, c) = x;
    ++c;
  }
  return m;
}

Vec v(std::initializer_list<double> xs) {
  Vec out(xs.size());
  int i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

struct Heis1 {
  GroupPtr g = make_group("heis:1");
  GroupPtr a1 = make_group("abelian:1");
  Normalizer N = make_normalizer(koranyi_norm(g));
  Normalizer NL = make_normalizer(euclidean(a1));
  Splitting s = make_splitting(coordinate_subgroup(g, {"Y1", "T"}), coordinate_subgroup(g, {"X1"}));

  HomSubgroup plane(double th) const {
    return span_subgroup(g, cols(3, {{std::cos(th), std::sin(th), 0}, {0, 0, 1}}));
  }
  HomMorphism row(double a, double b) const { return hom_morphism(cols(1, {{a}, {b}, {0}}), g, a1); }

  // f = x + t with its horizontal-frame differential.
  C1HFunction x_plus_t() const {
    C1HFunction f;
    f.source = g;
    f.target = a1;
    f.eval = [](const Vec& p) { return Vec::Constant(1, p[0] + p[2]); };
    auto src = g, tgt = a1;
    f.analytic_differential = [src, tgt](const Vec& p) {
      return hom_morphism((Mat(1, 3) << 1 - p[1] / 2, p[0] / 2, 0).finished(), src, tgt, 1e-9);
    };
    return f;
  }
};

double one(const Vec&) { return 1.0; }

}  // namespace

TEST(AreaFactor, IdentityGraph) {
  Heis1 h;
  auto a = area_factor(h.s.W, h.s, h.N);
  EXPECT_NEAR(a.value.value, 1.0, 1e-12);
  EXPECT_NEAR(a.secondary.value, 1.0, 3 * a.secondary.std_error + 1e-3);
}

TEST(AreaFactor, EuclideanLines) {
  auto a2 = make_group("abelian:2");
  auto N = make_normalizer(euclidean(a2));
  auto s = make_splitting(coordinate_subgroup(a2, {"E1"}), coordinate_subgroup(a2, {"E2"}));
  for (double th : {0.0, 0.4, 0.9, 1.2}) {
    auto P = span_subgroup(a2, cols(2, {{std::cos(th), std::sin(th)}}));
    auto a = area_factor(P, s, N);
    // Segment lengths carry a QMC discretization bias of order 1e-4.
    EXPECT_NEAR(a.value.value, 1 / std::cos(th), 3 * a.value.std_error + 1e-3) << th;
    EXPECT_NEAR(a.secondary.value, 1 / std::cos(th), 4 * a.secondary.std_error + 1e-3) << th;
  }
  EXPECT_THROW(area_factor(coordinate_subgroup(a2, {"E2"}), s, N), NotAGraph);
}

TEST(AreaFactor, ContinuousAlongVerticalPlanes) {
  Heis1 h;
  double prev = NAN, jump = 0;
  for (int i = 0; i <= 10; ++i) {
    const double th = 1.0 + 0.1 * i;
    auto a = area_factor(h.plane(th), h.s, h.N);
    // The Korányi distance is rotation invariant, so 𝒜 sin θ is constant.
    EXPECT_NEAR(a.value.value * std::sin(th), 1.0, 0.01);
    if (!std::isnan(prev)) jump = std::max(jump, std::abs(a.value.value - prev));
    prev = a.value.value;
  }
  EXPECT_LT(jump, 0.1);
}

TEST(AreaIntegrate, SubgroupWindowMatchesHaarMeasure) {
  Heis1 h;
  Box A{v({-0.5, -0.3}), v({0.4, 0.6})};
  for (double th : {0.7, 1.3, M_PI / 2}) {
    auto P = h.plane(th);
    auto graph = subgroup_graph(P, h.s, A);
    auto lhs = area_integrate(graph, one, h.N);
    auto rhs = subgroup_window_measure(P, h.s, A, h.N);
    EXPECT_NEAR(lhs.value, rhs.value, 3 * std::hypot(lhs.std_error, rhs.std_error)) << th;
  }
  auto zero = area_integrate(subgroup_graph(h.plane(1.0), h.s, A), [](const Vec&) { return 0.0; }, h.N);
  EXPECT_EQ(zero.value, 0.0);
}

TEST(AreaIntegrate, AdditiveOverDomainSplit) {
  Heis1 h;
  auto f = h.x_plus_t();
  auto whole = area_integrate(level_set_as_graph(f, v({0}), h.s, {v({-0.4, -0.4}), v({0.4, 0.4})}), one, h.N);
  auto left = area_integrate(level_set_as_graph(f, v({0}), h.s, {v({-0.4, -0.4}), v({0.0, 0.4})}), one, h.N);
  auto right = area_integrate(level_set_as_graph(f, v({0}), h.s, {v({0.0, -0.4}), v({0.4, 0.4})}), one, h.N);
  const double se = std::sqrt(whole.std_error * whole.std_error + left.std_error * left.std_error +
                              right.std_error * right.std_error);
  EXPECT_NEAR(whole.value, left.value + right.value, 3 * se + 1e-9);
}

TEST(AreaIntegrate, SplittingInvariance) {
  Heis1 h;
  auto f = h.x_plus_t();
  auto s2 = make_splitting(h.plane(-M_PI / 4), span_subgroup(h.g, cols(3, {{1, 1, 0}})));
  // Same piece of Σ cut out by a box in G.
  auto inR = [](const Vec& p) {
    return std::abs(p[0]) <= 0.3 && std::abs(p[1]) <= 0.3 && std::abs(p[2]) <= 0.3 ? 1.0 : 0.0;
  };
  Box big{v({-0.8, -0.8}), v({0.8, 0.8})};
  QuadratureOptions q{13, 8, 11};
  auto a = area_integrate(level_set_as_graph(f, v({0}), h.s, big), inR, h.N, q);
  auto b = area_integrate(level_set_as_graph(f, v({0}), s2, big), inR, h.N, q);
  EXPECT_GT(a.value, 0.1);
  EXPECT_NEAR(a.value, b.value, 3 * std::hypot(a.std_error, b.std_error));
}

TEST(CoareaFactor, EuclideanPlane) {
  auto a2 = make_group("abelian:2"), a1 = make_group("abelian:1");
  auto N = make_normalizer(euclidean(a2)), NL = make_normalizer(euclidean(a1));
  auto L = hom_morphism(cols(1, {{1}, {0}}), a2, a1);
  auto c = coarea_factor(whole_group(a2), L, N, NL);
  EXPECT_NEAR(c.value, M_PI / 4, 0.02 * M_PI / 4);
  auto cc = coarea_factor_closed(whole_group(a2), L, N, NL);
  EXPECT_NEAR(cc.value, M_PI / 4, 0.01);
  EXPECT_NEAR(c.value, cc.value, 0.01);
}

TEST(CoareaFactor, ZeroIffNotOnto) {
  Heis1 h;
  auto P = h.plane(0.8);
  // L vanishes on P's horizontal direction: L(P) = {0}.
  auto L = h.row(-std::sin(0.8), std::cos(0.8));
  EXPECT_EQ(coarea_factor(P, L, h.N, h.NL).value, 0.0);
  EXPECT_EQ(coarea_factor_closed(P, L, h.N, h.NL).value, 0.0);
  EXPECT_EQ(coarea_factor(P, zero_morphism(h.g, h.a1), h.N, h.NL).value, 0.0);
  EXPECT_GT(coarea_factor_closed(P, h.row(1, 0), h.N, h.NL).value, 0.0);
}

TEST(CoareaFactor, NumericMatchesClosedForm) {
  Heis1 h;
  auto G = whole_group(h.g);
  for (auto [a, b] : {std::pair{1.0, 0.0}, std::pair{0.6, -0.8}, std::pair{2.0, 1.0}}) {
    auto L = h.row(a, b);
    auto n = coarea_factor(G, L, h.N, h.NL);
    auto c = coarea_factor_closed(G, L, h.N, h.NL);
    EXPECT_NEAR(n.value / c.value, 1.0, 0.01) << a << "," << b;
  }
}

TEST(CoareaFactor, ContinuousInL) {
  Heis1 h;
  auto G = whole_group(h.g);
  auto limit = coarea_factor(G, h.row(1, 0), h.N, h.NL);
  double prev_gap = INFINITY;
  for (double eps : {0.2, 0.05, 0.0125}) {
    auto c = coarea_factor(G, h.row(1, eps), h.N, h.NL);
    double gap = std::abs(c.value - limit.value);
    EXPECT_LT(gap, prev_gap + 3 * c.std_error);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap / limit.value, 0.01);
}

TEST(SliceMeasure, VerticalCosetsInHeis2) {
  auto g = make_group("heis:2"), a1 = make_group("abelian:1");
  auto N = make_normalizer(koranyi_norm(g)), NL = make_normalizer(euclidean(a1));
  auto W = coordinate_subgroup(g, {"X2", "Y1", "Y2", "T"});
  auto s = make_splitting(W, coordinate_subgroup(g, {"X1"}));
  auto x1 = hom_morphism(cols(1, {{1}, {0}, {0}, {0}, {0}}), g, a1);
  auto x2 = hom_morphism(cols(1, {{0}, {1}, {0}, {0}, {0}}), g, a1);
  Box A = Box::cube(4, 0.5);
  auto sigma = surface_from_subgroup(W, s, A, x1);
  auto slices = make_splitting(coordinate_subgroup(g, {"Y1", "Y2", "T"}),
                               coordinate_subgroup(g, {"X1", "X2"}));
  SliceOptions opt;
  opt.cells = 8;
  auto sm = slice_measure(sigma, from_morphism(x2), one, slices, N, NL, opt);
  ASSERT_EQ(sm.per_slice.size(), 8u);
  for (std::size_t i = 0; i < sm.per_slice.size(); ++i) {
    EXPECT_GT(sm.per_slice[i].value.value, 0.0);
    if (i > 0)
      EXPECT_NEAR(sm.per_slice[i].value.value, sm.per_slice[i - 1].value.value,
                  0.05 * sm.per_slice[i].value.value);
  }
  EXPECT_EQ(sm.bad_cells, 0);
  // Morphism slicing of a subgroup: total = 𝒞(P, L) ψ(window).
  auto c = coarea_factor_closed(W, x2, N, NL);
  auto win = area_integrate(sigma.graph, one, N);
  EXPECT_NEAR(sm.total.value, c.value * win.value,
              3 * std::hypot(sm.total.std_error, c.std_error * win.value) + 1e-9);

  // A constant u has a single-point image.
  C1HFunction k;
  k.source = g;
  k.target = a1;
  k.eval = [](const Vec&) { return Vec::Constant(1, 0.25); };
  auto ck = coarea_check(sigma, k, one, N, NL);
  EXPECT_EQ(ck.rhs.value, 0.0);
  EXPECT_EQ(ck.lhs.value, 0.0);
  EXPECT_GT(ck.not_surjective, 0);
}

TEST(CoareaCheck, WholeHeis1SlicedByX) {
  Heis1 h;
  auto sigma = surface_whole(h.g, Box::cube(3, 0.5));
  auto u = from_morphism(h.row(1, 0));
  auto rep = coarea_check(sigma, u, one, h.N, h.NL);
  EXPECT_FALSE(rep.unsplittable_branch);
  EXPECT_LE(std::abs(rep.z), 3.0);
  EXPECT_NEAR(rep.ratio, 1.0, 0.05);
  EXPECT_TRUE(rep.passes(3.0, 0.05));

  auto zero = coarea_check(sigma, u, [](const Vec&) { return 0.0; }, h.N, h.NL);
  EXPECT_EQ(zero.lhs.value, 0.0);
  EXPECT_EQ(zero.rhs.value, 0.0);
}

TEST(CoareaCheck, CurvedWeight) {
  Heis1 h;
  auto sigma = surface_whole(h.g, Box::cube(3, 0.5));
  auto u = from_morphism(h.row(0.6, 0.8));
  auto w = [](const Vec& p) { return 1.0 + p[0] * p[0] + std::sin(3 * p[2]); };
  auto rep = coarea_check(sigma, u, w, h.N, h.NL);
  EXPECT_TRUE(rep.passes(3.0, 0.05)) << rep.z << " " << rep.ratio;
}

TEST(CoareaCheck, UnsplittableBranch) {
  Heis1 h;
  auto a2 = make_group("abelian:2");
  auto N2 = make_normalizer(euclidean(a2));
  auto u = from_morphism(hom_morphism(cols(2, {{1, 0}, {0, 1}, {0, 0}}), h.g, a2));
  auto rep = coarea_check(surface_whole(h.g, Box::cube(3, 0.5)), u, one, h.N, N2);
  EXPECT_TRUE(rep.unsplittable_branch);
  EXPECT_EQ(rep.lhs.value, 0.0);
  EXPECT_EQ(rep.rhs.value, 0.0);
  EXPECT_GT(rep.linearized_mass, 0.0);
  EXPECT_TRUE(rep.passes(3.0, 0.05));
}

TEST(CoareaInequality, SubgroupAndHomogeneity) {
  Heis1 h;
  const double C = calibrate_inequality_constant(h.g, h.a1, h.N, h.NL);
  EXPECT_GT(C, 0.0);
  auto sigma = surface_whole(h.g, Box::cube(3, 0.5));
  Box K = Box::cube(3, 0.5);
  SliceOptions opt;
  opt.cells = 8;
  auto base = coarea_inequality_check(sigma, from_morphism(h.row(1, 0)), K, h.s, C, h.N, h.NL, opt);
  EXPECT_TRUE(base.holds());
  EXPECT_GT(base.slack(), 1.0);

  auto scaled = coarea_inequality_check(sigma, from_morphism(h.row(0.25, 0)), K, h.s, C, h.N, h.NL, opt);
  EXPECT_TRUE(scaled.holds());
  EXPECT_NEAR(scaled.lhs / base.lhs, 0.25, 0.01);
  EXPECT_NEAR(scaled.rhs / base.rhs, 0.25, 0.01);

  C1HFunction k;
  k.source = h.g;
  k.target = h.a1;
  k.eval = [](const Vec&) { return Vec::Constant(1, 1.0); };
  auto c = coarea_inequality_check(sigma, k, K, h.s, C, h.N, h.NL, opt, 200);
  EXPECT_LE(c.lhs, c.rhs);
}

TEST(DensityConstant, Examples) {
  auto a2 = make_group("abelian:2");
  auto line = span_subgroup(a2, cols(2, {{0.6, 0.8}}));
  auto d = density_constant(line, make_normalizer(euclidean(a2)));
  EXPECT_NEAR(d.value, 2.0, 0.01);
  auto d2 = density_constant(line, make_normalizer(box_norm(a2, {2.0})));
  EXPECT_NEAR(d2.value, d.value, 0.01);

  Heis1 h;
  double prev = NAN;
  for (int i = 0; i <= 6; ++i) {
    auto e = density_constant(h.plane(0.3 * i), h.N);
    if (!std::isnan(prev)) EXPECT_NEAR(e.value, prev, 0.02 * prev);
    prev = e.value;
  }
}

TEST(ShRatio, Bounds) {
  auto a3 = make_group("abelian:3");
  auto Ne = make_normalizer(euclidean(a3));
  for (int k = 1; k <= 3; ++k) {
    Mat b = Mat::Identity(3, k);
    auto r = sh_ratio(span_subgroup(a3, b), Ne);
    ASSERT_TRUE(r.interval);
    EXPECT_TRUE(r.interval->contains(1.0));
  }
  Heis1 h;
  std::vector<Interval> iv;
  for (double th : {0.3, 1.1}) {
    auto r = sh_ratio(h.plane(th), h.N);
    EXPECT_GE(r.interval->lo, 1.0);
    EXPECT_LE(r.interval->hi, 8.0);
    iv.push_back(*r.interval);
  }
  EXPECT_LE(std::max(iv[0].lo, iv[1].lo), std::min(iv[0].hi, iv[1].hi));
}

// ψ^d(Σ ∩ B(p, r)) / r^d stays in a fixed band over a dyadic ladder.
TEST(AhlforsRegularity, CurvedGraph) {
  Heis1 h;
  auto f = h.x_plus_t();
  auto k = koranyi_norm(h.g);
  Vec p0 = v({0, 0, 0});
  for (double y0 : {0.0, 0.3}) {
    Vec w0 = v({0, y0, 0});
    auto base = level_set_as_graph(f, v({0}), h.s, Box::cube(2, 1.0));
    Vec p = base.point(w0);
    std::vector<double> ratios;
    for (double r : {0.4, 0.2, 0.1, 0.05}) {
      Box A{v({y0 - 1.5 * r, -1.5 * r * r - 1.5 * r}), v({y0 + 1.5 * r, 1.5 * r * r + 1.5 * r})};
      auto graph = level_set_as_graph(f, v({0}), h.s, A);
      auto m = area_integrate(graph, [&](const Vec& q) { return k.dist(p, q) <= r ? 1.0 : 0.0; }, h.N,
                              {11, 4, 3});
      ratios.push_back(m.value / std::pow(r, 3));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    EXPECT_GT(*lo, 0.0);
    EXPECT_LT(*hi / *lo, 1.5);
  }
}

// μ_{Σ,u}(B(p,r)) / ψ(Σ ∩ B(p,r)) equals 𝒞 at a split-regular point.
TEST(LocalDensity, MatchesCoareaFactor) {
  auto g = make_group("heis:2"), a1 = make_group("abelian:1");
  auto N = make_normalizer(koranyi_norm(g)), NL = make_normalizer(euclidean(a1));
  auto W = coordinate_subgroup(g, {"X2", "Y1", "Y2", "T"});
  auto s = make_splitting(W, coordinate_subgroup(g, {"X1"}));
  auto x1 = hom_morphism(cols(1, {{1}, {0}, {0}, {0}, {0}}), g, a1);
  auto x2 = hom_morphism(cols(1, {{0}, {1}, {0}, {0}, {0}}), g, a1);
  auto k = koranyi_norm(g);
  Vec p = Vec::Zero(5);
  p[3] = 0.1;
  const double r = 0.3;
  auto ball = [&](const Vec& q) { return k.dist(p, q) <= r ? 1.0 : 0.0; };
  auto sigma = surface_from_subgroup(W, s, Box::cube(4, 0.45), x1);
  auto slices = make_splitting(coordinate_subgroup(g, {"Y1", "Y2", "T"}),
                               coordinate_subgroup(g, {"X1", "X2"}));
  auto mu = slice_measure(sigma, from_morphism(x2), ball, slices, N, NL);
  auto psi = area_integrate(sigma.graph, ball, N);
  auto c = coarea_factor_closed(W, x2, N, NL);
  const double ratio = mu.total.value / psi.value;
  const double se = ratio * std::hypot(relative_error(mu.total), relative_error(psi));
  EXPECT_NEAR(ratio, c.value, 3 * std::hypot(se, c.std_error));
}
