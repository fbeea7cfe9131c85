#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "carnot/measures.hpp"

namespace carnot::cli {

inline Vec vec(std::initializer_list<double> xs) {
  Vec out(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

// Row morphism G -> abelian(1).
inline HomMorphism row_morphism(GroupPtr g, GroupPtr a1, std::initializer_list<double> coeffs) {
  Mat m = Mat::Zero(1, g->dim());
  int i = 0;
  for (double c : coeffs) m(0, i++) = c;
  return hom_morphism(m, g, a1);
}

struct CoareaScenario {
  std::string description;
  Surface sigma;
  C1HFunction u;
  std::function<double(const Vec&)> h;
  Normalizer N, NL;
};

struct AreaSide {
  std::string label;
  std::function<MeasureEstimate()> run;
};

struct AreaScenario {
  std::string description;
  AreaSide lhs, rhs;
};

inline double unit_weight(const Vec&) { return 1.0; }

inline CoareaScenario coarea_scenario(const std::string& name) {
  if (name == "heis1-plane-slice") {
    auto g = make_group("heis:1"), a1 = make_group("abelian:1");
    return {"heis(1), window [-1/2,1/2]^3, u = x", surface_whole(g, Box::cube(3, 0.5)),
            from_morphism(row_morphism(g, a1, {1, 0, 0})), unit_weight,
            make_normalizer(koranyi_norm(g)), make_normalizer(euclidean(a1))};
  }
  if (name == "heis2-vertical-slice") {
    auto g = make_group("heis:2"), a1 = make_group("abelian:1");
    auto W = coordinate_subgroup(g, {"X2", "Y1", "Y2", "T"});
    auto s = make_splitting(W, coordinate_subgroup(g, {"X1"}));
    return {"heis(2), surface {x1 = 0} over [-1/2,1/2]^4, u = x2",
            surface_from_subgroup(W, s, Box::cube(4, 0.5), row_morphism(g, a1, {1, 0, 0, 0, 0})),
            from_morphism(row_morphism(g, a1, {0, 1, 0, 0, 0})), unit_weight,
            make_normalizer(koranyi_norm(g)), make_normalizer(euclidean(a1))};
  }
  if (name == "heis1-xy") {
    auto g = make_group("heis:1"), a2 = make_group("abelian:2");
    Mat m = Mat::Zero(2, 3);
    m(0, 0) = m(1, 1) = 1;
    return {"heis(1), window [-1/2,1/2]^3, u = (x, y)", surface_whole(g, Box::cube(3, 0.5)),
            from_morphism(hom_morphism(m, g, a2)), unit_weight, make_normalizer(koranyi_norm(g)),
            make_normalizer(euclidean(a2))};
  }
  throw BadParameter("unknown coarea scenario '" + name + "'");
}

// f = x + t on heis(1) with its horizontal differential.
inline C1HFunction x_plus_t(GroupPtr g, GroupPtr a1) {
  C1HFunction f;
  f.source = g;
  f.target = a1;
  f.eval = [](const Vec& p) { return Vec::Constant(1, p[0] + p[2]); };
  f.analytic_differential = [g, a1](const Vec& p) {
    return hom_morphism((Mat(1, 3) << 1 - p[1] / 2, p[0] / 2, 0).finished(), g, a1, 1e-9);
  };
  return f;
}

inline AreaScenario area_scenario(const std::string& name, const QuadratureOptions& q) {
  auto g = make_group("heis:1"), a1 = make_group("abelian:1");
  auto N = make_normalizer(koranyi_norm(g));
  auto s = make_splitting(coordinate_subgroup(g, {"Y1", "T"}), coordinate_subgroup(g, {"X1"}));
  if (name == "heis1-subgroup-window") {
    Mat b = Mat::Zero(3, 2);
    b(0, 0) = std::cos(1.2), b(1, 0) = std::sin(1.2), b(2, 1) = 1;
    auto P = span_subgroup(g, b);
    Box A = Box::cube(2, 0.5);
    return {"heis(1), vertical plane at angle 1.2 over [-1/2,1/2]^2",
            {"area_integrate", [=] { return area_integrate(subgroup_graph(P, s, A), unit_weight, N, q); }},
            {"subgroup_window", [=] { return subgroup_window_measure(P, s, A, N, q); }}};
  }
  if (name == "heis1-xt-splittings") {
    Mat dir = Mat::Zero(3, 1);
    dir(0, 0) = dir(1, 0) = 1;
    Mat w = Mat::Zero(3, 2);
    w(0, 0) = std::cos(-M_PI / 4), w(1, 0) = std::sin(-M_PI / 4), w(2, 1) = 1;
    auto s2 = make_splitting(span_subgroup(g, w), span_subgroup(g, dir));
    auto f = x_plus_t(g, a1);
    auto inR = [](const Vec& p) {
      return std::abs(p[0]) <= 0.3 && std::abs(p[1]) <= 0.3 && std::abs(p[2]) <= 0.3 ? 1.0 : 0.0;
    };
    Box big = Box::cube(2, 0.8);
    return {"heis(1), {x + t = 0} cut by [-0.3,0.3]^3, two splittings",
            {"splitting_y_t", [=] { return area_integrate(level_set_as_graph(f, vec({0}), s, big), inR, N, q); }},
            {"splitting_rotated", [=] { return area_integrate(level_set_as_graph(f, vec({0}), s2, big), inR, N, q); }}};
  }
  throw BadParameter("unknown area scenario '" + name + "'");
}

inline std::vector<std::string> coarea_scenarios() {
  return {"heis1-plane-slice", "heis2-vertical-slice", "heis1-xy"};
}
inline std::vector<std::string> area_scenarios() {
  return {"heis1-subgroup-window", "heis1-xt-splittings"};
}

}  // namespace carnot::cli
