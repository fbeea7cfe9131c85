#pragma once

#include <cmath>
#include <random>
#include <string>

#include "carnot/measures.hpp"

namespace carnot {

// Vertical subgroup P = P1 × V2 of heis(n); k is the codimension.
struct VerticalSubgroup {
  HomSubgroup P;
  int n = 0;
  int k = 0;
};

inline int require_heis(const Group& g) {
  const int n = g.heis_n();
  if (n == 0) throw NotHeisenberg("group is not a Heisenberg group");
  return n;
}

inline VerticalSubgroup make_vertical(GroupPtr g, const Mat& p1) {
  const int n = require_heis(*g);
  Mat cols(g->dim(), p1.cols() + 1);
  cols << p1, Vec::Unit(g->dim(), 2 * n);
  HomSubgroup P = span_subgroup(g, cols);
  if (P.layer_dims()[0] != p1.cols()) throw NotVertical("P1 must lie in the first layer");
  return {P, n, 2 * n - static_cast<int>(p1.cols())};
}

inline VerticalSubgroup as_vertical(const HomSubgroup& P) {
  const int n = require_heis(*P.group);
  if (P.layer_dims().size() < 2 || P.layer_dims()[1] != 1) throw NotVertical("P does not contain the center");
  return {P, n, 2 * n - P.layer_dims()[0]};
}

// Vertical subgroup whose first layer is the orthogonal complement of span{X1..Xk}.
inline VerticalSubgroup coordinate_vertical(GroupPtr g, int k) {
  const int n = require_heis(*g);
  if (k < 0 || k > 2 * n) throw BadParameter("codimension out of range");
  Mat p1 = Mat::Zero(g->dim(), 2 * n - k);
  int c = 0;
  for (int i = k; i < 2 * n; ++i) p1(i, c++) = 1;
  return make_vertical(g, p1);
}

inline HomSubgroup horizontal_complement_heis(const VerticalSubgroup& V, std::uint64_t seed = 1) {
  if (V.k > V.n) throw CodimTooLarge("vertical subgroups of codimension > n have no horizontal complement");
  auto search = find_horizontal_complement(V.P, V.k, seed);
  if (!search.found()) throw NotVertical(search.reason);
  make_splitting(V.P, *search.complement);
  return *search.complement;
}

inline HomSubgroup horizontal_complement_heis(const HomSubgroup& P, std::uint64_t seed = 1) {
  const int n = require_heis(*P.group);
  if (P.layer_dims().size() < 2 || P.layer_dims()[1] != 1) {
    if (P.layer_dims()[0] == 0) throw CodimTooLarge("the center alone has codimension 2n > n");
    throw NotVertical("P does not contain the center");
  }
  return horizontal_complement_heis(VerticalSubgroup{P, n, 2 * n - P.layer_dims()[0]}, seed);
}

// Sampled check that ‖(z, t)‖ depends on |z| and t only.
inline bool is_rotationally_invariant(const HomDistance& d, int samples = 2000, std::uint64_t seed = 5,
                                      double tol = 1e-9) {
  const auto& g = *d.group;
  const int n = require_heis(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int i = 0; i < samples; ++i) {
    Vec p = g.dilate(1.0, sample_ball_box(d, rng, 2.0));
    Vec q = p;
    Vec z(2 * n);
    for (auto& x : z) x = nd(rng);
    z *= p.head(2 * n).norm() / z.norm();
    q.head(2 * n) = z;
    const double a = d.norm(p), b = d.norm(q);
    if (std::abs(a - b) > tol * std::max(1.0, a)) return false;
  }
  return true;
}

struct HeisConstant {
  int n = 0, k = 0;
  MeasureEstimate value;
  MeasureEstimate second;  // same constant on a rotated representative
  double z = 0.0;
};

// c = sup{𝓗_E(E ∩ P) : E ∋ 0 closed ball of diameter 1}, i.e. 1/β_P.
inline MeasureEstimate euclidean_hausdorff_constant(const HomSubgroup& P, const Normalizer& N) {
  HaarMeasure h = N(P);
  return h.theta;
}

inline HeisConstant c_constant(GroupPtr g, int k, const Normalizer& N, std::uint64_t seed = 0xc0de,
                               double z_tol = 3.0) {
  const int n = require_heis(*g);
  if (k < 0 || k > n) throw BadParameter("c(n,k) needs 0 <= k <= n");
  if (!is_rotationally_invariant(N.dist)) throw NotRotationallyInvariant(N.dist.description());
  Normalizer exact = N;
  exact.quant = 0;
  exact.representative = nullptr;
  HeisConstant out{n, k, {}, {}, 0.0};
  auto P = coordinate_vertical(g, k);
  out.value = euclidean_hausdorff_constant(P.P, exact);
  // Second representative: P1 moved by a random rotation of the first layer.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Mat r(2 * n, 2 * n);
  for (int i = 0; i < r.size(); ++i) r.data()[i] = nd(rng);
  Mat rot = Eigen::HouseholderQR<Mat>(r).householderQ();
  Mat p1 = Mat::Zero(g->dim(), 2 * n - k);
  p1.topRows(2 * n) = rot * P.P.layer_bases[0].topRows(2 * n);
  out.second = euclidean_hausdorff_constant(make_vertical(g, p1).P, exact);
  const double se = std::hypot(out.value.std_error, out.second.std_error);
  out.z = se > 0 ? (out.value.value - out.second.value) / se : 0.0;
  if (std::abs(out.z) > z_tol)
    throw RepresentativeDisagreement("c(" + std::to_string(n) + "," + std::to_string(k) + ") differs across P: " +
                                     std::to_string(out.value.value) + " vs " +
                                     std::to_string(out.second.value));
  return out;
}

// J^R = √det(L Lᵀ) for L given in coordinates of a (2n+1−m)-dimensional tangent.
inline double jru(const Mat& L, int n, int m) {
  if (L.cols() != 2 * n + 1 - m || L.rows() > L.cols() || L.rows() == 0)
    throw ShapeMismatch("expected an l x (2n+1-m) matrix with l <= 2n+1-m");
  if (rank(L) < L.rows()) return 0.0;
  const double d = (L * L.transpose()).determinant();
  return d > 0 ? std::sqrt(d) : 0.0;
}

// Representative map for rotation-invariant distances: vertical P ↦ coordinate vertical subgroup.
inline std::function<HomSubgroup(const HomSubgroup&)> vertical_representative() {
  return [](const HomSubgroup& P) {
    if (P.group->heis_n() == 0 || P.layer_dims().size() < 2 || P.layer_dims()[1] != 1) return P;
    return coordinate_vertical(P.group, 2 * P.group->heis_n() - P.layer_dims()[0]).P;
  };
}

// 𝒞(P, L) = β_𝕃 c(n,m) / c(n,m+ℓ) √det(L_P L_Pᵀ) for vertical P of codimension m.
inline MeasureEstimate heis_coarea_factor(const HomSubgroup& P, const HomMorphism& L, const Normalizer& N,
                                          const Normalizer& NL) {
  auto V = as_vertical(P);
  const int l = L.target->dim();
  if (V.k + l > V.n || V.k + l < 1)
    throw HypothesisViolated("needs 1 <= m + l <= n, got m = " + std::to_string(V.k) +
                             ", l = " + std::to_string(l));
  MeasureEstimate e;
  e.seed = N.budget.seed;
  const double j = restricted_jacobian(L, P);
  if (j == 0.0) return e;
  Normalizer exact = N;
  exact.quant = 0;
  auto cm = euclidean_hausdorff_constant(coordinate_vertical(P.group, V.k).P, exact);
  auto cml = euclidean_hausdorff_constant(coordinate_vertical(P.group, V.k + l).P, exact);
  auto bl = NL(whole_group(L.target));
  e.value = bl.beta * cm.value / cml.value * j;
  e.std_error = e.value * detail::combine_rel({relative_error(cm), relative_error(cml), bl.beta_rel_error()});
  e.samples = cm.samples + cml.samples;
  return e;
}

}  // namespace carnot
