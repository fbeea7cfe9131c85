#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "carnot/distance.hpp"
#include "carnot/subgroups.hpp"

namespace carnot {

// Axis-aligned box; an empty box (size 0) stands for the whole space.
struct Box {
  Vec lo, hi;
  bool unbounded() const { return lo.size() == 0; }
  bool contains(const Vec& x) const {
    if (unbounded()) return true;
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  double volume() const { return unbounded() ? INFINITY : (hi - lo).prod(); }
  Vec center() const { return 0.5 * (lo + hi); }
  static Box cube(int dim, double half) {
    return {Vec::Constant(dim, -half), Vec::Constant(dim, half)};
  }
};

struct C1HFunction {
  GroupPtr source, target;
  std::function<Vec(const Vec&)> eval;
  std::function<HomMorphism(const Vec&)> analytic_differential;
  Box domain;
};

inline C1HFunction from_morphism(const HomMorphism& L) {
  C1HFunction f;
  f.source = L.source;
  f.target = L.target;
  Mat m = L.matrix;
  f.eval = [m](const Vec& p) { return Vec(m * p); };
  f.analytic_differential = [L](const Vec&) { return L; };
  return f;
}

// Direct product of graded groups: coordinates of a followed by those of b.
inline GroupPtr product_group(const GroupPtr& a, const GroupPtr& b) {
  const auto& A = a->algebra();
  const auto& B = b->algebra();
  std::vector<std::string> names;
  std::vector<int> layers;
  for (int i = 0; i < A.dim(); ++i) names.push_back("a_" + A.basis_names[i]), layers.push_back(A.layer_of[i]);
  for (int i = 0; i < B.dim(); ++i) names.push_back("b_" + B.basis_names[i]), layers.push_back(B.layer_of[i]);
  GradedAlgebra p = detail::make_empty(A.name + "x" + B.name, names, layers);
  p.step = std::max(A.step, B.step);
  const int na = A.dim();
  for (int i = 0; i < A.dim(); ++i)
    for (int j = 0; j < A.dim(); ++j)
      for (int k = 0; k < A.dim(); ++k) p.c(i, j, k) = A.c(i, j, k);
  for (int i = 0; i < B.dim(); ++i)
    for (int j = 0; j < B.dim(); ++j)
      for (int k = 0; k < B.dim(); ++k) p.c(na + i, na + j, na + k) = B.c(i, j, k);
  p.stratified_flag = is_stratified(p);
  return make_group(p);
}

// (u, f) into the product of the two targets.
inline C1HFunction combine(const C1HFunction& u, const C1HFunction& f, GroupPtr product = nullptr) {
  C1HFunction c;
  c.source = u.source;
  c.target = product ? product : product_group(u.target, f.target);
  c.domain = u.domain;
  const int nu = u.target->dim(), nf = f.target->dim();
  c.eval = [u, f, nu, nf](const Vec& p) {
    Vec out(nu + nf);
    out << u.eval(p), f.eval(p);
    return out;
  };
  if (u.analytic_differential && f.analytic_differential) {
    GroupPtr tgt = c.target;
    c.analytic_differential = [u, f, tgt](const Vec& p) {
      auto a = u.analytic_differential(p), b = f.analytic_differential(p);
      Mat m(a.matrix.rows() + b.matrix.rows(), a.matrix.cols());
      m << a.matrix, b.matrix;
      return HomMorphism{m, a.source, tgt};
    };
  }
  return c;
}

struct Ladder {
  int k_min = 3;
  int k_max = 10;
  double tol = 1e-5;
};

namespace detail {

// Representations e_k = Σ α [e_a, e_b], a in V1, b in V_{j-1}, for every basis vector of layer j >= 2.
struct BracketRep {
  int k;
  std::vector<std::tuple<int, int, double>> terms;
};

inline std::vector<BracketRep> bracket_representations(const Group& g) {
  std::vector<BracketRep> reps;
  const auto& a = g.algebra();
  auto l1 = a.layer_indices(1);
  for (int j = 2; j <= g.step(); ++j) {
    auto prev = a.layer_indices(j - 1), cur = a.layer_indices(j);
    std::vector<std::pair<int, int>> pairs;
    Mat B(cur.size(), 0);
    for (int x : l1)
      for (int y : prev) {
        Vec br = g.bracket(g.basis_vector(x), g.basis_vector(y));
        Vec r(cur.size());
        for (std::size_t c = 0; c < cur.size(); ++c) r[c] = br[cur[c]];
        if (r.norm() == 0) continue;
        B.conservativeResize(Eigen::NoChange, B.cols() + 1);
        B.col(B.cols() - 1) = r;
        pairs.emplace_back(x, y);
      }
    auto cod = B.completeOrthogonalDecomposition();
    for (std::size_t c = 0; c < cur.size(); ++c) {
      Vec alpha = cod.solve(Vec::Unit(cur.size(), c));
      BracketRep rep{cur[c], {}};
      for (int t = 0; t < alpha.size(); ++t)
        if (std::abs(alpha[t]) > 1e-15) rep.terms.emplace_back(pairs[t].first, pairs[t].second, alpha[t]);
      reps.push_back(rep);
    }
  }
  return reps;
}

}  // namespace detail

// Homogeneous morphism determined by its values on the first layer of a stratified source.
inline Mat extend_from_first_layer(const Group& src, const Group& tgt, const Mat& m) {
  Mat out = m;
  for (const auto& rep : detail::bracket_representations(src)) {
    Vec col = Vec::Zero(tgt.dim());
    for (const auto& [a, b, alpha] : rep.terms)
      col += alpha * tgt.bracket(Vec(out.col(a)), Vec(out.col(b)));
    out.col(rep.k) = col;
  }
  return out;
}

inline HomMorphism pansu_differential(const C1HFunction& f, const Vec& p, const Ladder& ladder = {}) {
  const auto& src = *f.source;
  const auto& tgt = *f.target;
  if (!src.is_stratified()) throw BadParameter("Pansu differential needs a stratified source");
  Vec fp = f.eval(p);
  Vec nfp = -fp;
  Mat m = Mat::Zero(tgt.dim(), src.dim());
  auto t1 = tgt.algebra().layer_indices(1);
  for (int e : src.algebra().layer_indices(1)) {
    std::vector<Vec> d;
    for (int k = ladder.k_min; k <= ladder.k_max; ++k) {
      const double lam = std::ldexp(1.0, -k);
      Vec q = src.mul(p, src.dilate(lam, src.basis_vector(e)));
      Vec inc = tgt.dilate(1.0 / lam, tgt.mul(nfp, f.eval(q)));
      Vec h(t1.size());
      for (std::size_t i = 0; i < t1.size(); ++i) h[i] = inc[t1[i]];
      d.push_back(h);
    }
    std::vector<Vec> rich;
    for (std::size_t k = 0; k + 1 < d.size(); ++k) rich.push_back(2 * d[k + 1] - d[k]);
    const Vec& last = rich.back();
    if (rich.size() >= 2) {
      double gap = (last - rich[rich.size() - 2]).norm();
      if (gap > ladder.tol * std::max(1.0, last.norm()))
        throw ExtrapolationDiverged("difference quotients are not Cauchy along the ladder (gap " +
                                    std::to_string(gap) + ")");
    }
    for (std::size_t i = 0; i < t1.size(); ++i) m(t1[i], e) = last[i];
  }
  m = extend_from_first_layer(src, tgt, m);
  return hom_morphism(m, f.source, f.target, 1e-6);
}

inline HomMorphism differential(const C1HFunction& f, const Vec& p, const Ladder& ladder = {}) {
  if (f.analytic_differential) return f.analytic_differential(p);
  return pansu_differential(f, p, ladder);
}

struct SplitRegularity {
  bool regular = false;
  bool surjective = false;
  bool complement_proven_absent = false;
  std::optional<Splitting> witness;
  std::optional<HomMorphism> derivative;
  std::string reason;
};

// D_H f(p) surjective and its kernel admits a horizontal abelian complement.
inline SplitRegularity is_split_regular(const C1HFunction& f, const Vec& p, std::uint64_t seed = 1,
                                        const Ladder& ladder = {}) {
  SplitRegularity out;
  auto D = differential(f, p, ladder);
  out.derivative = D;
  out.surjective = maps_onto(D, whole_group(f.source));
  if (!out.surjective) {
    out.reason = "differential is not surjective";
    return out;
  }
  if (!f.target->is_abelian()) {
    out.reason = "complement search supports abelian targets only";
    return out;
  }
  auto K = kernel(D);
  auto c = find_horizontal_complement(K, f.target->dim(), seed);
  if (!c.found()) {
    out.complement_proven_absent = c.nonexistence_proven;
    out.reason = c.reason;
    return out;
  }
  out.witness = make_splitting(K, *c.complement);
  out.regular = true;
  return out;
}

// Sampled min of ρ'(f(q), f(qv)) / ‖v‖ over q in B(p, radius), v in V, qv in B(p, radius).
inline double coercivity_constant(const C1HFunction& f, const Vec& p, const HomSubgroup& V,
                                  double radius, int samples, std::uint64_t seed,
                                  const HomDistance& rho, const HomDistance& rho_t,
                                  double threshold = 1e-6) {
  const auto& g = *f.source;
  std::mt19937_64 rng(stream_seed(seed, 0xc0e));
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat bv = V.basis();
  double best = INFINITY;
  int taken = 0;
  for (int t = 0; taken < samples && t < 20 * samples; ++t) {
    Vec y = sample_ball_box(rho, rng);
    if (rho.norm(y) > 1) continue;
    Vec q = g.mul(p, g.dilate(radius, y));
    Vec c(bv.cols());
    for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
    Vec v = bv * c;
    double nv = rho.norm(v);
    if (nv == 0) continue;
    v = g.dilate(radius * std::pow(10.0, -3 * u(rng)) / nv, v);
    Vec qv = g.mul(q, v);
    if (rho.dist(p, qv) > radius) continue;
    ++taken;
    best = std::min(best, rho_t.dist(f.eval(q), f.eval(qv)) / rho.norm(v));
  }
  if (!(best > threshold))
    throw DegenerateCoercivity("coercivity ratio " + std::to_string(best) +
                               " below threshold; shrink the radius or change V");
  return best;
}

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 60;
  double coercivity = 0.0;  // > 0 enables the step clip ‖δ‖ <= 2 r / C
  std::optional<HomDistance> target_distance;
  std::optional<HomDistance> source_distance;
  Ladder ladder;
};

// φ in V with f(a φ) = b, by damped Newton on V coordinates.
inline Vec implicit_solve(const C1HFunction& f, const Vec& a, const Vec& b, const Splitting& s,
                          const SolverOptions& opt = {}, const Vec& guess = Vec()) {
  const auto& g = *f.source;
  const auto& tg = *f.target;
  HomDistance rt = opt.target_distance ? *opt.target_distance : box_norm(f.target);
  HomDistance rs = opt.source_distance ? *opt.source_distance : box_norm(f.source);
  Mat bv = s.V.basis();
  Vec v = guess.size() ? guess : Vec::Zero(g.dim());
  Vec fq = f.eval(g.mul(a, v));
  double r = rt.dist(fq, b);
  for (int it = 0; it < opt.max_iter; ++it) {
    if (r < opt.tol) return v;
    Vec q = g.mul(a, v);
    auto D = differential(f, q, opt.ladder);
    Mat dv = D.matrix * bv;
    if (dv.rows() != dv.cols()) throw SingularRestriction("V and the target differ in dimension");
    Eigen::JacobiSVD<Mat> svd(dv);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-12 * std::max(1.0, sv[0]))
      throw SingularRestriction("D_H f restricted to V is not invertible");
    Vec e = tg.mul(Vec(-fq), b);
    Vec dc = dv.lu().solve(e);
    double alpha = 1.0;
    if (opt.coercivity > 0) {
      double len = rs.norm(Vec(bv * dc));
      double cap = 2 * r / opt.coercivity;
      if (len > cap) alpha = cap / len;
    }
    bool accepted = false;
    for (int back = 0; back < 30; ++back, alpha *= 0.5) {
      Vec cand = g.mul(v, Vec(bv * (alpha * dc)));
      Vec fc = f.eval(g.mul(a, cand));
      double rn = rt.dist(fc, b);
      if (rn <= (1 - alpha / 2) * r || rn < opt.tol) {
        v = cand, fq = fc, r = rn;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NoConvergence(it + 1, r);
  }
  if (r < opt.tol) return v;
  throw NoConvergence(opt.max_iter, r);
}

// Graph {w φ(w)} over a box of W coordinates (w = B_W c).
class IntrinsicGraph {
 public:
  Splitting splitting;
  Box domain;
  std::function<Vec(const Vec& w)> phi_fn;
  std::function<HomSubgroup(const Vec& p)> tangent_provider;

  IntrinsicGraph(Splitting s, Box a, std::function<Vec(const Vec&)> phi,
                 std::function<HomSubgroup(const Vec&)> tangent)
      : splitting(std::move(s)), domain(std::move(a)), phi_fn(std::move(phi)),
        tangent_provider(std::move(tangent)), memo_(std::make_shared<Memo>()),
        bw_(splitting.W.basis()) {}

  int w_dim() const { return static_cast<int>(bw_.cols()); }
  Vec w_of(const Vec& c) const { return bw_ * c; }
  const Mat& w_basis() const { return bw_; }

  Vec phi(const Vec& w) const {
    std::string key(reinterpret_cast<const char*>(w.data()), sizeof(double) * w.size());
    {
      std::lock_guard<std::mutex> lock(memo_->mu);
      auto it = memo_->values.find(key);
      if (it != memo_->values.end()) return it->second;
    }
    Vec v = phi_fn(w);
    std::lock_guard<std::mutex> lock(memo_->mu);
    memo_->values.emplace(key, v);
    return v;
  }
  Vec point(const Vec& w) const { return splitting.group().mul(w, phi(w)); }
  HomSubgroup tangent(const Vec& w) const { return tangent_provider(point(w)); }
  std::size_t memo_size() const {
    std::lock_guard<std::mutex> lock(memo_->mu);
    return memo_->values.size();
  }

 private:
  struct Memo {
    std::mutex mu;
    std::unordered_map<std::string, Vec> values;
  };
  std::shared_ptr<Memo> memo_;
  Mat bw_;
};

// The level set {f = b} as a graph over the W-box `domain`.
inline IntrinsicGraph level_set_as_graph(const C1HFunction& f, const Vec& b, const Splitting& s,
                                         const Box& domain, const SolverOptions& opt = {}) {
  auto phi = [f, b, s, opt](const Vec& w) { return implicit_solve(f, w, b, s, opt); };
  auto tangent = [f, opt](const Vec& p) { return kernel(differential(f, p, opt.ladder)); };
  return IntrinsicGraph(s, domain, phi, tangent);
}

// A homogeneous subgroup P that is an intrinsic graph over W.
inline IntrinsicGraph subgroup_graph(const HomSubgroup& P, const Splitting& s, const Box& domain) {
  const auto& g = s.group();
  if (P.dim() != s.W.dim()) throw NotAGraph("dim P differs from dim W");
  Mat both(g.dim(), P.dim() + s.V.dim());
  both << P.basis(), s.V.basis();
  if (rank(both, 1e-9) < g.dim()) throw NotAGraph("P meets V nontrivially");
  Mat q = complement_in(P.basis(), Mat::Identity(g.dim(), g.dim())).transpose();
  Mat bv = s.V.basis();
  GroupPtr gp = P.group;
  auto phi = [gp, q, bv](const Vec& w) {
    Vec c = Vec::Zero(bv.cols());
    for (int it = 0; it < 20; ++it) {
      Vec r = q * gp->mul(w, Vec(bv * c));
      if (r.norm() < 1e-14 * (1 + w.norm())) break;
      Mat J(r.size(), c.size());
      for (int i = 0; i < c.size(); ++i) {
        Vec ch = c;
        double h = 1e-6 * (1 + std::abs(c[i]));
        ch[i] += h;
        J.col(i) = (q * gp->mul(w, Vec(bv * ch)) - r) / h;
      }
      c -= J.lu().solve(r);
    }
    return Vec(bv * c);
  };
  return IntrinsicGraph(s, domain, phi, [P](const Vec&) { return P; });
}

struct ConeReport {
  long long pairs = 0;
  long long violations = 0;
  double worst = 0.0;  // most negative ρ(v,z) - (C/L)‖v‖, sign flipped
};

// Sampled check of Σ ∩ p𝒞 = {p} with 𝒞 = {0} ∪ ⋃_{v∈V} B(v, (C/L)‖v‖).
inline ConeReport check_intrinsic_cone(const IntrinsicGraph& graph, double C, double L, int samples,
                                       std::uint64_t seed, const HomDistance& rho) {
  const auto& g = graph.splitting.group();
  const double aperture = C / L;
  Mat bv = graph.splitting.V.basis();
  std::mt19937_64 rng(stream_seed(seed, 0xc04e));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ConeReport rep;
  NelderMeadOptions nm;
  nm.max_evals = 200;
  nm.xtol = 1e-10;
  for (int t = 0; t < samples; ++t) {
    Vec cp(graph.w_dim()), cq(graph.w_dim());
    for (int i = 0; i < cp.size(); ++i) {
      cp[i] = graph.domain.lo[i] + u(rng) * (graph.domain.hi[i] - graph.domain.lo[i]);
      double scale = std::pow(10.0, -2 * u(rng)) * (graph.domain.hi[i] - graph.domain.lo[i]);
      cq[i] = std::clamp(cp[i] + (2 * u(rng) - 1) * scale, graph.domain.lo[i], graph.domain.hi[i]);
    }
    Vec p = graph.point(graph.w_of(cp)), q = graph.point(graph.w_of(cq));
    Vec z = g.between(p, q);
    const double nz = rho.norm(z);
    if (nz < 1e-9) continue;
    ++rep.pairs;
    auto excess = [&](const Vec& c) {
      Vec vv = bv * c;
      return rho.dist(vv, z) - aperture * rho.norm(vv);
    };
    Vec c0 = bv.transpose() * graph.splitting.pi_V(z);
    double best = INFINITY;
    for (double s : {0.25, 1.0, 4.0, 16.0, 64.0}) {
      Vec start = s * c0;
      if (start.norm() == 0) start = Vec::Constant(bv.cols(), nz);
      auto r = nelder_mead(excess, start, nm, Vec::Constant(bv.cols(), 0.1 * nz * s));
      best = std::min(best, r.f);
    }
    if (best < -1e-10 * nz) {
      ++rep.violations;
      rep.worst = std::max(rep.worst, -best / nz);
    }
  }
  return rep;
}

// Sampled sup of ρ'(u(x), u(y)) / ρ(x, y) over pairs in the box K.
inline double estimate_lipschitz(const C1HFunction& u, const Box& K, int samples, std::uint64_t seed,
                                 const HomDistance& rho, const HomDistance& rho_t) {
  const auto& g = *u.source;
  std::mt19937_64 rng(stream_seed(seed, 0x11b));
  std::uniform_real_distribution<double> un(0.0, 1.0);
  const double diam = (K.hi - K.lo).norm();
  double best = 0.0;
  int taken = 0;
  for (int t = 0; taken < samples && t < 20 * samples; ++t) {
    Vec x(g.dim());
    for (int i = 0; i < g.dim(); ++i) x[i] = K.lo[i] + un(rng) * (K.hi[i] - K.lo[i]);
    Vec dir = rho.to_sphere(sample_ball_box(rho, rng));
    Vec y = g.mul(x, g.dilate(diam * std::pow(10.0, -3 * un(rng)), dir));
    if (!K.contains(y)) continue;
    double d = rho.dist(x, y);
    if (d == 0) continue;
    ++taken;
    best = std::max(best, rho_t.dist(u.eval(x), u.eval(y)) / d);
  }
  return best;
}

}  // namespace carnot
