#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/graphs.hpp"
#include "carnot/haar.hpp"

namespace carnot {

// Spherical normalizations for one distance, memoized.
struct Normalizer {
  HomDistance dist;
  NormalizationBudget budget;
  std::shared_ptr<NormalizationCache> cache = std::make_shared<NormalizationCache>();
  int quant = 50;
  // Optional map to an isometric representative (same normalization).
  std::function<HomSubgroup(const HomSubgroup&)> representative;

  HaarMeasure operator()(const HomSubgroup& P) const {
    if (representative) {
      HomSubgroup r = representative(P);
      HaarMeasure h = cache->get(r, dist, budget, 0);
      h.subgroup = P;
      return h;
    }
    return cache->get(P, dist, budget, quant);
  }
};

inline Normalizer make_normalizer(HomDistance dist, NormalizationBudget budget = {}) {
  Normalizer n;
  n.dist = std::move(dist);
  n.budget = budget;
  return n;
}

struct QuadratureOptions {
  int log2n = 12;
  int replicates = 8;
  std::uint64_t seed = 0xa4eaULL;
};

struct ConstantRecord {
  std::string kind;
  std::string inputs;
  MeasureEstimate estimate;
  std::optional<Interval> interval;
  std::vector<std::string> flags;
};

namespace detail {

inline double combine_rel(std::initializer_list<double> rels) {
  double s = 0;
  for (double r : rels) s += r * r;
  return std::sqrt(s);
}

inline Vec box_point(const Box& b, const RqmcPoints& q, std::size_t i) {
  Vec c(b.lo.size());
  for (int j = 0; j < c.size(); ++j) c[j] = b.lo[j] + q(i, j) * (b.hi[j] - b.lo[j]);
  return c;
}

// Corners of a box plus a quasi-random fill, for bounding-box probes.
inline std::vector<Vec> box_probe(const Box& b, int log2n = 10) {
  std::vector<Vec> out;
  const int d = static_cast<int>(b.lo.size());
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec c(d);
    for (int j = 0; j < d; ++j) c[j] = (mask >> j) & 1 ? b.hi[j] : b.lo[j];
    out.push_back(c);
  }
  if (d > 0) {
    RqmcPoints q(d, log2n, 7, 0xb0b, 0);
    for (std::size_t i = 0; i < q.size(); ++i) out.push_back(box_point(b, q, i));
  }
  return out;
}

}  // namespace detail

// Jacobian of π_W restricted to P, with respect to Lebesgue measures on P and W.
inline double pushforward_jacobian(const HomSubgroup& P, const Splitting& s) {
  if (P.dim() != s.W.dim()) throw NotAGraph("dim P differs from dim W");
  if (P.dim() == 0) return 1.0;
  const int n = s.group().dim();
  Mat m = s.W.basis().transpose() * (Mat::Identity(n, n) - s.piV) * P.basis();
  return std::abs(m.determinant());
}

// P ∩ ker L, layer by layer.
inline HomSubgroup kernel_in(const HomSubgroup& P, const HomMorphism& L) {
  std::vector<Mat> per;
  for (const auto& b : P.layer_bases) {
    if (b.cols() == 0) {
      per.push_back(b);
      continue;
    }
    Mat nb = null_space(L.matrix * b);
    per.push_back(b * nb);
  }
  return detail::assemble(P.group, per);
}

inline double restricted_jacobian(const HomMorphism& L, const HomSubgroup& P) {
  Mat lp = L.matrix * P.basis();
  if (lp.rows() == 0) return 1.0;
  double d = (lp * lp.transpose()).determinant();
  return d > 0 ? std::sqrt(d) : 0.0;
}

struct AreaFactor {
  MeasureEstimate value;      // β_P / (β_W J)
  MeasureEstimate secondary;  // 1 / sup ψ_W(π_W(E ∩ P)) over unit-diameter balls E ∋ 0
  double jacobian = 1.0;
  double z = 0.0;
};

// Leb_W of π_W(B̄(c, 1/2) ∩ P), sampling W and testing Φ_P(w) against the ball.
inline std::vector<double> projected_ball_measure(const HomSubgroup& P, const Splitting& s,
                                                  const HomDistance& dist, const Vec& c,
                                                  const QuadratureOptions& q) {
  const auto& g = s.group();
  Mat bw = s.W.basis();
  SubgroupBallSample near(P, dist, 15, 1, q.seed, 0xa1, 1.5);
  Vec lo = Vec::Constant(bw.cols(), INFINITY), hi = Vec::Constant(bw.cols(), -INFINITY);
  Vec nc = -c;
  for (std::size_t i = 0; i < near.count(0); ++i) {
    Vec p = Eigen::Map<const Vec>(near.point(0, i), g.dim());
    if (dist.norm(g.mul(nc, p)) > 0.5) continue;
    Vec w = bw.transpose() * g.mul(p, Vec(-s.pi_V(p)));
    lo = lo.cwiseMin(w), hi = hi.cwiseMax(w);
  }
  Vec pad = 0.25 * (hi - lo) + Vec::Constant(lo.size(), 1e-3);
  Box box{lo - pad, hi + pad};
  auto graph = subgroup_graph(P, s, box);
  std::vector<double> reps;
  for (int r = 0; r < q.replicates; ++r) {
    RqmcPoints pts(bw.cols(), q.log2n, q.seed, 0xa2, r);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vec w = bw * detail::box_point(box, pts, i);
      Vec p = g.mul(w, graph.phi_fn(w));
      if (dist.norm(g.mul(nc, p)) <= 0.5) ++hits;
    }
    reps.push_back(box.volume() * static_cast<double>(hits) / static_cast<double>(pts.size()));
  }
  return reps;
}

inline AreaFactor area_factor(const HomSubgroup& P, const Splitting& s, const Normalizer& N,
                              const QuadratureOptions& q = {14, 8, 0xa4eaULL}, double z_tol = 4.0) {
  AreaFactor a;
  a.jacobian = pushforward_jacobian(P, s);
  if (a.jacobian < 1e-12) throw NotAGraph("π_W is not injective on P");
  Normalizer exact = N;
  exact.quant = 0;
  HaarMeasure hp = exact(P), hw = exact(s.W);
  a.value.value = hp.beta / (hw.beta * a.jacobian);
  a.value.std_error = a.value.value * detail::combine_rel({hp.beta_rel_error(), hw.beta_rel_error()});
  a.value.samples = hp.theta.samples + hw.theta.samples;
  a.value.seed = N.budget.seed;
  if (P.dim() == 0) {
    a.secondary = a.value;
    return a;
  }
  auto reps = projected_ball_measure(P, s, N.dist, hp.center, q);
  auto img = from_replicates(reps, static_cast<long long>(reps.size()) << q.log2n, q.seed);
  a.secondary.value = 1.0 / (hw.beta * img.value);
  a.secondary.std_error =
      a.secondary.value * detail::combine_rel({relative_error(img), hw.beta_rel_error()});
  a.secondary.samples = img.samples;
  a.secondary.seed = q.seed;
  const double se = std::hypot(a.value.std_error, a.secondary.std_error);
  a.z = se > 0 ? (a.value.value - a.secondary.value) / se : 0.0;
  if (std::abs(a.z) > z_tol)
    throw RoutesDisagree("area factor routes differ: " + std::to_string(a.value.value) + " vs " +
                         std::to_string(a.secondary.value));
  return a;
}

using PointWeight = std::function<double(const Vec& p, const HomSubgroup& tangent)>;

// ∫_A h(Φ(w)) 𝒜(T_{Φ(w)}Σ) dψ^d⌞W(w) by shifted quasi-random quadrature.
inline MeasureEstimate area_integrate(const IntrinsicGraph& graph, const PointWeight& h,
                                      const Normalizer& N, const QuadratureOptions& q = {}) {
  const auto& s = graph.splitting;
  const int dw = graph.w_dim();
  const double vol = dw == 0 ? 1.0 : graph.domain.volume();
  std::vector<double> reps;
  for (int r = 0; r < q.replicates; ++r) {
    double sum = 0;
    if (dw == 0) {
      Vec w = Vec::Zero(s.group().dim());
      HomSubgroup T = graph.tangent(w);
      sum = h(graph.point(w), T) * N(T).beta / pushforward_jacobian(T, s);
      reps.push_back(sum);
      continue;
    }
    RqmcPoints pts(dw, q.log2n, q.seed, 0xa1ea, r);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vec w = graph.w_of(detail::box_point(graph.domain, pts, i));
      Vec p = graph.point(w);
      HomSubgroup T = graph.tangent(w);
      double hv = h(p, T);
      if (hv == 0) continue;
      sum += hv * N(T).beta / pushforward_jacobian(T, s);
    }
    reps.push_back(sum * vol / static_cast<double>(pts.size()));
  }
  return from_replicates(reps, static_cast<long long>(q.replicates) << q.log2n, q.seed);
}

inline MeasureEstimate area_integrate(const IntrinsicGraph& graph,
                                      const std::function<double(const Vec&)>& h,
                                      const Normalizer& N, const QuadratureOptions& q = {}) {
  return area_integrate(graph, PointWeight([&h](const Vec& p, const HomSubgroup&) { return h(p); }),
                        N, q);
}

// ψ^d of the window {p ∈ P : π_W(p) ∈ A}, measured directly in P coordinates.
inline MeasureEstimate subgroup_window_measure(const HomSubgroup& P, const Splitting& s,
                                               const Box& A, const Normalizer& N,
                                               const QuadratureOptions& q = {}) {
  const auto& g = s.group();
  Mat bp = P.basis(), bw = s.W.basis();
  auto graph = subgroup_graph(P, s, A);
  Vec lo = Vec::Constant(bp.cols(), INFINITY), hi = Vec::Constant(bp.cols(), -INFINITY);
  for (const auto& c : detail::box_probe(A)) {
    Vec x = bp.transpose() * graph.point(graph.w_of(c));
    lo = lo.cwiseMin(x), hi = hi.cwiseMax(x);
  }
  Vec pad = 0.05 * (hi - lo) + Vec::Constant(lo.size(), 1e-6);
  Box box{lo - pad, hi + pad};
  HaarMeasure hp = N(P);
  std::vector<double> reps;
  for (int r = 0; r < q.replicates; ++r) {
    RqmcPoints pts(bp.cols(), q.log2n, q.seed, 0x5ca1, r);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Vec p = bp * detail::box_point(box, pts, i);
      Vec w = bw.transpose() * g.mul(p, Vec(-s.pi_V(p)));
      if (A.contains(w)) ++hits;
    }
    reps.push_back(hp.beta * box.volume() * static_cast<double>(hits) / static_cast<double>(pts.size()));
  }
  return from_replicates(reps, static_cast<long long>(q.replicates) << q.log2n, q.seed);
}

// 𝒞(P, L) = β_𝕃 β_K √det(L_P L_Pᵀ) / β_P with K = P ∩ ker L; 0 unless L(P) = 𝕃.
inline MeasureEstimate coarea_factor_closed(const HomSubgroup& P, const HomMorphism& L,
                                            const Normalizer& N, const Normalizer& NL) {
  MeasureEstimate e;
  e.seed = N.budget.seed;
  if (!maps_onto(L, P)) return e;
  HomSubgroup K = kernel_in(P, L);
  HaarMeasure hk = N(K), hp = N(P), hl = NL(whole_group(L.target));
  e.value = hl.beta * hk.beta * restricted_jacobian(L, P) / hp.beta;
  e.std_error = e.value * detail::combine_rel({hk.beta_rel_error(), hp.beta_rel_error(), hl.beta_rel_error()});
  e.samples = hk.theta.samples + hp.theta.samples + hl.theta.samples;
  return e;
}

// Midpoint lattice on a box of the abelian target.
struct SliceGrid {
  Vec lo, hi;
  int cells = 16;  // per axis

  int dim() const { return static_cast<int>(lo.size()); }
  long long count() const {
    long long c = 1;
    for (int i = 0; i < dim(); ++i) c *= cells;
    return c;
  }
  double cell_volume() const { return ((hi - lo) / cells).prod(); }
  Vec midpoint(long long idx) const {
    Vec s(dim());
    for (int i = 0; i < dim(); ++i) {
      const int k = static_cast<int>(idx % cells);
      idx /= cells;
      s[i] = lo[i] + (k + 0.5) * (hi[i] - lo[i]) / cells;
    }
    return s;
  }
  SliceGrid refined() const { return {lo, hi, 2 * cells}; }
};

struct CoareaOptions {
  int cells = 16;
  bool richardson = true;
  QuadratureOptions quad{11, 8, 0xc0a4ULL};
};

namespace detail {

// Per-replicate ∫ ψ(U ∩ P ∩ L⁻¹(s)) dψ(s) over the grid, U = B̄(0,1).
inline std::vector<double> slice_ball_integral(const HomSubgroup& P, const HomMorphism& L,
                                               const HomSubgroup& K, const SliceGrid& grid,
                                               double beta_k, double beta_l, const HomDistance& dist,
                                               const QuadratureOptions& q) {
  const auto& g = *P.group;
  Mat lp = L.matrix * P.basis();
  Mat pinv = P.basis() * lp.completeOrthogonalDecomposition().pseudoInverse();
  SubgroupBallSample ks(K, dist, q.log2n, q.replicates, q.seed, 0x51ce, 1.0);
  std::vector<double> reps(q.replicates, 0.0);
  std::array<double, kMaxDim> kd, z;
  for (long long c = 0; c < grid.count(); ++c) {
    Vec ps = pinv * grid.midpoint(c);
    const double R = dist.norm(ps) + 1.0;
    const double w = beta_l * grid.cell_volume() * beta_k * ks.cell() * std::pow(R, K.hom_dim());
    for (int r = 0; r < q.replicates; ++r) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < ks.count(r); ++i) {
        g.dilate(R, ks.point(r, i), kd.data());
        g.mul(ps.data(), kd.data(), z.data());
        if (dist.norm(z.data()) <= 1.0) ++hits;
      }
      reps[r] += w * static_cast<double>(hits);
    }
  }
  return reps;
}

}  // namespace detail

// 𝒞(P, L) by slicing U ∩ P, U = B̄(0,1), into cosets of P ∩ ker L.
inline MeasureEstimate coarea_factor(const HomSubgroup& P, const HomMorphism& L, const Normalizer& N,
                                     const Normalizer& NL, const CoareaOptions& opt = {}) {
  const auto& q = opt.quad;
  MeasureEstimate e;
  e.seed = q.seed;
  if (!maps_onto(L, P)) return e;
  if (!L.target->is_abelian()) throw BadParameter("slicing needs an abelian target");
  HomSubgroup K = kernel_in(P, L);
  HaarMeasure hk = N(K), hp = N(P), hl = NL(whole_group(L.target));
  SubgroupBallSample ps(P, N.dist, q.log2n + 2, q.replicates, q.seed, 0x9a11, 1.0);
  // L(U ∩ P) lies in the box of radius sup |L p| over the sample.
  Mat lm = L.matrix;
  Vec ext = Vec::Zero(lm.rows());
  for (int r = 0; r < ps.replicates(); ++r)
    for (std::size_t i = 0; i < ps.count(r); ++i)
      ext = ext.cwiseMax((lm * Eigen::Map<const Vec>(ps.point(r, i), P.group->dim())).cwiseAbs());
  ext *= 1.02;
  SliceGrid grid{-ext, ext, opt.cells};
  auto coarse = detail::slice_ball_integral(P, L, K, grid, hk.beta, hl.beta, N.dist, q);
  std::vector<double> num = coarse;
  long long samples = grid.count() * (static_cast<long long>(q.replicates) << q.log2n);
  if (opt.richardson) {
    auto fine = detail::slice_ball_integral(P, L, K, grid.refined(), hk.beta, hl.beta, N.dist, q);
    for (std::size_t r = 0; r < num.size(); ++r) num[r] = (4 * fine[r] - coarse[r]) / 3;
    samples *= 1 + (1LL << grid.dim());
  }
  std::vector<double> reps;
  for (int r = 0; r < q.replicates; ++r) {
    const double vol = hp.beta * ps.cell() * static_cast<double>(ps.count(r));
    reps.push_back(num[r] / vol);
  }
  e = from_replicates(reps, samples, q.seed);
  return e;
}

// ----- slicing of intrinsic graphs -----

// Σ as a graph, optionally the level set {f = f_value} that defines it.
struct Surface {
  IntrinsicGraph graph;
  std::optional<C1HFunction> f;
  Vec f_value;
};

inline Surface surface_from_subgroup(const HomSubgroup& P, const Splitting& s, const Box& A,
                                     std::optional<HomMorphism> defining = std::nullopt) {
  Surface out{subgroup_graph(P, s, A), std::nullopt, Vec()};
  if (defining) {
    out.f = from_morphism(*defining);
    out.f_value = Vec::Zero(defining->target->dim());
  }
  return out;
}

inline Surface surface_from_level_set(const C1HFunction& f, const Vec& b, const Splitting& s,
                                      const Box& A, const SolverOptions& opt = {}) {
  return {level_set_as_graph(f, b, s, A, opt), f, b};
}

// The whole group over a box of coordinates (m = 0).
inline Surface surface_whole(GroupPtr g, const Box& A) {
  auto s = make_splitting(whole_group(g), trivial_subgroup(g));
  return {subgroup_graph(whole_group(g), s, A), std::nullopt, Vec()};
}

struct SliceRecord {
  Vec s;
  MeasureEstimate value;
  long long failed = 0;
  long long attempted = 0;
};

struct SliceMeasure {
  SliceGrid grid;
  std::vector<SliceRecord> per_slice;
  MeasureEstimate total;
  double uncertainty = 0.0;  // ψ^ℓ-weighted upper bound from cells with solver failures
  long long bad_cells = 0;
  std::vector<std::string> flags;
};

struct SliceOptions {
  int cells = 16;
  bool richardson = true;
  QuadratureOptions quad{10, 8, 0x511ceULL};
  SolverOptions solver;
};

namespace detail {

// Combined map (u, f) and its value (s, b) at a slice.
struct SliceMap {
  C1HFunction F;
  Vec fb;
  int l;
  Vec value(const Vec& s) const {
    Vec v(F.target->dim());
    v << s, fb;
    return v;
  }
};

inline SliceMap slice_map(const Surface& sigma, const C1HFunction& u) {
  if (!sigma.f) return {u, Vec(), u.target->dim()};
  return {combine(u, *sigma.f), sigma.f_value, u.target->dim()};
}

inline Box bounding_box(const std::vector<Vec>& pts, double rel_pad, double abs_pad) {
  Vec lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  Vec pad = rel_pad * (hi - lo) + Vec::Constant(lo.size(), abs_pad);
  return {lo - pad, hi + pad};
}

}  // namespace detail

// Per-slice ψ^{Q−m−ℓ}(window ∩ Σ ∩ u⁻¹(s)) weighted by h, integrated over the u-range.
inline SliceMeasure slice_measure(const Surface& sigma, const C1HFunction& u,
                                  const std::function<double(const Vec&)>& h,
                                  const Splitting& slice_splitting, const Normalizer& N,
                                  const Normalizer& NL, const SliceOptions& opt = {}) {
  const auto& g = *u.source;
  const auto& graph = sigma.graph;
  const auto sm = detail::slice_map(sigma, u);
  const Splitting& s2 = slice_splitting;
  Mat bw2 = s2.W.basis(), bw = graph.splitting.W.basis();
  const auto& A = graph.domain;

  // Ranges of u and of the slice-graph coordinates over the window.
  std::vector<Vec> uvals, wvals;
  for (const auto& c : detail::box_probe(A)) {
    Vec p = graph.point(graph.w_of(c));
    uvals.push_back(u.eval(p));
    wvals.push_back(bw2.transpose() * g.mul(p, Vec(-s2.pi_V(p))));
  }
  Box urange = detail::bounding_box(uvals, 0.0, 1e-9);
  Box A2 = detail::bounding_box(wvals, 0.1, 1e-3);
  const double beta_l = NL(whole_group(u.target)).beta;

  auto run = [&](const SliceGrid& grid, std::vector<SliceRecord>* records, double* unc,
                 long long* bad) {
    std::vector<double> reps(opt.quad.replicates, 0.0);
    double max_weight = 0.0;
    for (long long cell = 0; cell < grid.count(); ++cell) {
      Vec sv = grid.midpoint(cell);
      Vec target = sm.value(sv);
      SliceRecord rec{sv, {}, 0, 0};
      std::vector<double> cell_reps;
      for (int r = 0; r < opt.quad.replicates; ++r) {
        RqmcPoints pts(static_cast<int>(bw2.cols()), opt.quad.log2n, opt.quad.seed,
                       stream_seed(0x51, static_cast<std::uint64_t>(cell), grid.cells), r);
        double sum = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          Vec w2 = bw2 * detail::box_point(A2, pts, i);
          ++rec.attempted;
          Vec phi;
          try {
            phi = implicit_solve(sm.F, w2, target, s2, opt.solver);
          } catch (const Error&) {
            ++rec.failed;
            continue;
          }
          Vec p = g.mul(w2, phi);
          Vec cw = bw.transpose() * graph.splitting.group().mul(p, Vec(-graph.splitting.pi_V(p)));
          if (!A.contains(cw)) continue;
          double hv = h(p);
          if (hv == 0) continue;
          HomSubgroup T = kernel(differential(sm.F, p, opt.solver.ladder));
          const double wgt = N(T).beta / pushforward_jacobian(T, s2);
          max_weight = std::max(max_weight, hv * wgt);
          sum += hv * wgt;
        }
        const double v = sum * A2.volume() / static_cast<double>(pts.size());
        cell_reps.push_back(v);
        reps[r] += beta_l * grid.cell_volume() * v;
      }
      rec.value = from_replicates(cell_reps, static_cast<long long>(opt.quad.replicates) << opt.quad.log2n,
                                  opt.quad.seed);
      if (rec.failed > 0) {
        ++*bad;
        *unc += beta_l * grid.cell_volume() * A2.volume() * std::max(max_weight, 1.0) *
                static_cast<double>(rec.failed) / static_cast<double>(rec.attempted);
      }
      if (records) records->push_back(rec);
    }
    return reps;
  };

  SliceMeasure out;
  out.grid = {urange.lo, urange.hi, opt.cells};
  long long samples = out.grid.count() * (static_cast<long long>(opt.quad.replicates) << opt.quad.log2n);
  auto coarse = run(out.grid, &out.per_slice, &out.uncertainty, &out.bad_cells);
  std::vector<double> reps = coarse;
  if (opt.richardson) {
    double unc2 = 0;
    long long bad2 = 0;
    auto fine = run(out.grid.refined(), nullptr, &unc2, &bad2);
    for (std::size_t r = 0; r < reps.size(); ++r) reps[r] = (4 * fine[r] - coarse[r]) / 3;
    samples *= 1 + (1LL << out.grid.dim());
    out.uncertainty = std::max(out.uncertainty, unc2);
    out.bad_cells += bad2;
  }
  out.total = from_replicates(reps, samples, opt.quad.seed);
  if (out.bad_cells > 0) out.flags.push_back("solver_failures");
  return out;
}

// ----- coarea verification -----

enum class PointClass { NotSurjective, SplitRegular, UnsplittableProven, Unresolved };

inline PointClass classify_point(const Surface& sigma, const C1HFunction& u, const Vec& p,
                                 const HomSubgroup& T, std::uint64_t seed, const Ladder& ladder = {}) {
  auto Du = differential(u, p, ladder);
  if (!maps_onto(Du, T)) return PointClass::NotSurjective;
  auto sm = detail::slice_map(sigma, u);
  auto DF = differential(sm.F, p, ladder);
  auto search = find_horizontal_complement(kernel(DF), sm.F.target->dim(), seed);
  if (search.found()) return PointClass::SplitRegular;
  return search.nonexistence_proven ? PointClass::UnsplittableProven : PointClass::Unresolved;
}

struct CoareaReport {
  MeasureEstimate lhs, rhs;
  double z = 0.0;
  double ratio = 1.0;
  long long good = 0, not_surjective = 0, unsplittable = 0;
  double uncertainty = 0.0;  // mass kept out of both totals
  double linearized_mass = 0.0;
  bool unsplittable_branch = false;
  std::vector<std::string> flags;
  SliceMeasure slices;

  bool passes(double z_tol, double ratio_tol) const {
    if (unsplittable_branch) return lhs.value == 0.0 && rhs.value == 0.0;
    return std::abs(z) <= z_tol && std::abs(ratio - 1.0) <= ratio_tol;
  }
};

struct CoareaCheckOptions {
  QuadratureOptions lhs{11, 8, 0x1e5ULL};
  SliceOptions slices;
  int hypothesis_samples = 64;
  std::uint64_t seed = 0xc0a4ea;
};

// Both sides of ∫_Σ h 𝒞(T_pΣ, D_H u_p) dψ^{Q−m} = ∫_𝕃 ∫_{Σ∩u⁻¹(s)} h dψ^{Q−m−ℓ} dψ^ℓ(s).
inline CoareaReport coarea_check(const Surface& sigma, const C1HFunction& u,
                                 const std::function<double(const Vec&)>& h, const Normalizer& N,
                                 const Normalizer& NL, const CoareaCheckOptions& opt = {}) {
  CoareaReport rep;
  const auto& graph = sigma.graph;
  const auto& ladder = opt.slices.solver.ladder;

  // Hypothesis sampling.
  std::optional<Vec> witness;
  std::optional<Vec> good_point;
  const int dw = graph.w_dim();
  RqmcPoints hp(std::max(dw, 1), 6, opt.seed, 0x4e, 0);
  for (int i = 0; i < opt.hypothesis_samples; ++i) {
    Vec c = dw ? detail::box_point(graph.domain, hp, static_cast<std::size_t>(i) % hp.size()) : Vec();
    Vec w = graph.w_of(c);
    Vec p = graph.point(w);
    switch (classify_point(sigma, u, p, graph.tangent(w), opt.seed + i, ladder)) {
      case PointClass::NotSurjective: ++rep.not_surjective; break;
      case PointClass::SplitRegular:
        ++rep.good;
        if (!good_point) good_point = p;
        break;
      case PointClass::UnsplittableProven: ++rep.unsplittable; break;
      case PointClass::Unresolved:
        if (!witness) witness = p;
        break;
    }
  }
  if (witness) {
    std::ostringstream os;
    os << "no horizontal complement found at p = (" << witness->transpose() << ")";
    throw HypothesisViolated(os.str());
  }
  const double beta_l = NL(whole_group(u.target)).beta;
  auto linearized = [&](const Vec& p, const HomSubgroup& T) {
    auto Du = differential(u, p, ladder);
    if (!maps_onto(Du, T)) return 0.0;
    HomSubgroup K = kernel_in(T, Du);
    return beta_l * N(K).beta * restricted_jacobian(Du, T) / N(T).beta;
  };

  if (rep.good == 0 && rep.unsplittable > 0) {
    // 𝒞 ≡ 0 on the surjective set; both sides vanish and the would-be mass is reported apart.
    rep.unsplittable_branch = true;
    rep.flags.push_back("hypothesis_unsplittable");
    rep.lhs = {0.0, 0.0, 0, opt.lhs.seed};
    rep.rhs = {0.0, 0.0, 0, opt.slices.quad.seed};
    auto lin = area_integrate(graph, PointWeight([&](const Vec& p, const HomSubgroup& T) {
                                return h(p) * linearized(p, T);
                              }),
                              N, opt.lhs);
    rep.linearized_mass = lin.value;
    rep.uncertainty = lin.value + 3 * lin.std_error;
    rep.z = 0.0;
    rep.ratio = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  if (rep.unsplittable > 0 && rep.good > 0) rep.flags.push_back("mixed_hypothesis_classes");

  const bool per_point = rep.unsplittable > 0;
  rep.lhs = area_integrate(graph, PointWeight([&](const Vec& p, const HomSubgroup& T) {
                             const double hv = h(p);
                             if (hv == 0) return 0.0;
                             if (per_point &&
                                 classify_point(sigma, u, p, T, opt.seed, ladder) != PointClass::SplitRegular)
                               return 0.0;
                             return hv * linearized(p, T);
                           }),
                           N, opt.lhs);

  if (!good_point) {
    rep.rhs = {0.0, 0.0, 0, opt.slices.quad.seed};
    rep.flags.push_back("no_surjective_points");
  } else {
    auto sm = detail::slice_map(sigma, u);
    auto DF = differential(sm.F, *good_point, ladder);
    auto K = kernel(DF);
    auto V = find_horizontal_complement(K, sm.F.target->dim(), opt.seed);
    Splitting s2 = make_splitting(K, *V.complement);
    rep.slices = slice_measure(sigma, u, h, s2, N, NL, opt.slices);
    rep.rhs = rep.slices.total;
    rep.uncertainty = rep.slices.uncertainty;
    rep.flags.insert(rep.flags.end(), rep.slices.flags.begin(), rep.slices.flags.end());
  }
  const double se = std::hypot(rep.lhs.std_error, rep.rhs.std_error);
  const double diff = rep.lhs.value - rep.rhs.value;
  rep.z = se > 0 ? diff / se : (diff == 0 ? 0.0 : std::copysign(INFINITY, diff));
  rep.ratio = rep.rhs.value != 0 ? rep.lhs.value / rep.rhs.value : (rep.lhs.value == 0 ? 1.0 : INFINITY);
  return rep;
}

// ----- coarea inequality -----

struct InequalityReport {
  double lhs = 0.0;       // μ_{Σ,u}(K)
  double rhs = 0.0;       // C(𝕃) Lip(u|K)^ℓ ψ^{Q−m}(Σ ∩ K)
  double constant = 0.0;  // C(𝕃)
  double lipschitz = 0.0;
  double surface_measure = 0.0;
  double slack() const { return lhs > 0 ? rhs / lhs : INFINITY; }
  bool holds() const { return lhs <= rhs; }
};

// C(𝕃) as the largest 𝒞(P, L) / ‖L‖^ℓ over sampled subgroup instances, inflated by 3σ.
inline double calibrate_inequality_constant(GroupPtr g, GroupPtr target, const Normalizer& N,
                                            const Normalizer& NL, int instances = 8,
                                            std::uint64_t seed = 0xca1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const auto idx = g->algebra().layer_indices(1);
  HomDistance rt = NL.dist;
  double best = 0.0;
  for (int t = 0; t < instances; ++t) {
    Mat m = Mat::Zero(target->dim(), g->dim());
    for (int r = 0; r < m.rows(); ++r)
      for (int c : idx) m(r, c) = nd(rng);
    HomMorphism L;
    try {
      L = hom_morphism(m, g, target);
    } catch (const Error&) {
      continue;
    }
    auto P = whole_group(g);
    auto c = coarea_factor_closed(P, L, N, NL);
    if (c.value == 0) continue;
    const double lip = morphism_distance(L, zero_morphism(g, target), N.dist, rt);
    const double ratio = (c.value + 3 * c.std_error) / std::pow(lip, target->dim());
    best = std::max(best, ratio);
  }
  return best;
}

inline InequalityReport coarea_inequality_check(const Surface& sigma, const C1HFunction& u,
                                                const Box& K, const Splitting& slice_splitting,
                                                double constant, const Normalizer& N,
                                                const Normalizer& NL, const SliceOptions& opt = {},
                                                int lip_samples = 4000) {
  InequalityReport rep;
  rep.constant = constant;
  auto inK = [&K](const Vec& p) { return K.contains(p) ? 1.0 : 0.0; };
  rep.lhs = slice_measure(sigma, u, inK, slice_splitting, N, NL, opt).total.value;
  rep.surface_measure = area_integrate(sigma.graph, inK, N, opt.quad).value;
  rep.lipschitz = estimate_lipschitz(u, K, lip_samples, opt.quad.seed, N.dist, NL.dist);
  rep.rhs = constant * std::pow(rep.lipschitz, u.target->dim()) * rep.surface_measure;
  return rep;
}

// ----- density and ratio constants -----

// 𝔡(P) = ψ^d(P ∩ B(0,1)).
inline MeasureEstimate density_constant(const HomSubgroup& P, const Normalizer& N,
                                        const QuadratureOptions& q = {16, 8, 0xde5ULL}) {
  HaarMeasure hp = N(P);
  if (P.dim() == 0) return {1.0, 0.0, 1, q.seed};
  SubgroupBallSample s(P, N.dist, q.log2n, q.replicates, q.seed, 0xd1, 1.0);
  std::vector<double> reps;
  for (int r = 0; r < s.replicates(); ++r)
    reps.push_back(hp.beta * s.cell() * static_cast<double>(s.count(r)));
  auto e = from_replicates(reps, s.total_samples(), q.seed);
  e.std_error = e.value * detail::combine_rel({relative_error(e), hp.beta_rel_error()});
  return e;
}

// 𝔞(P) = 𝓢/𝓗 on P as an interval, from the Hausdorff bracket.
inline ConstantRecord sh_ratio(const HomSubgroup& P, const Normalizer& N) {
  HaarMeasure hp = N(P);
  Interval hb = hausdorff_bracket(hp);
  ConstantRecord rec;
  rec.kind = "ratio";
  rec.inputs = P.key(N.quant) + "|" + N.dist.description();
  double lo = hp.beta / hb.hi, hi = hp.beta / hb.lo;
  const double cap = std::ldexp(1.0, hp.d);
  if (lo < 1.0 || hi > cap) rec.flags.push_back("clipped");
  lo = std::clamp(lo, 1.0, cap);
  hi = std::clamp(hi, 1.0, cap);
  rec.interval = Interval{lo, hi};
  rec.estimate = {0.5 * (lo + hi), 0.5 * (hi - lo), hp.theta.samples, hp.theta.seed};
  return rec;
}

}  // namespace carnot
