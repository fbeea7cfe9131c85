#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/group.hpp"
#include "carnot/linalg.hpp"
#include "carnot/qmc.hpp"

namespace carnot {

// Homogeneous subgroup; layer_bases[l-1] holds orthonormal columns supported in layer l.
class HomSubgroup {
 public:
  GroupPtr group;
  std::vector<Mat> layer_bases;

  int dim() const {
    int d = 0;
    for (const auto& b : layer_bases) d += static_cast<int>(b.cols());
    return d;
  }
  int hom_dim() const {
    int d = 0;
    for (std::size_t l = 0; l < layer_bases.size(); ++l)
      d += static_cast<int>(l + 1) * static_cast<int>(layer_bases[l].cols());
    return d;
  }
  std::vector<int> layer_dims() const {
    std::vector<int> d;
    for (const auto& b : layer_bases) d.push_back(static_cast<int>(b.cols()));
    return d;
  }
  Mat basis() const {
    Mat b(group->dim(), dim());
    int c = 0;
    for (const auto& lb : layer_bases) {
      b.middleCols(c, lb.cols()) = lb;
      c += static_cast<int>(lb.cols());
    }
    return b;
  }
  std::vector<int> basis_layers() const {
    std::vector<int> out;
    for (std::size_t l = 0; l < layer_bases.size(); ++l)
      for (int k = 0; k < layer_bases[l].cols(); ++k) out.push_back(static_cast<int>(l + 1));
    return out;
  }
  Mat projector() const {
    Mat b = basis();
    return b * b.transpose();
  }
  bool contains(const Vec& p, double tol = 1e-9) const {
    Mat b = basis();
    return (p - b * (b.transpose() * p)).norm() <= tol * (1.0 + p.norm());
  }
  // Per-layer projector entries rounded to 1/q.
  std::string key(int q = 0) const {
    std::ostringstream os;
    os << group->algebra().name << "|";
    Mat pr = projector();
    for (int i = 0; i < pr.rows(); ++i)
      for (int j = 0; j < pr.cols(); ++j) {
        double v = q > 0 ? std::round(pr(i, j) * q) : pr(i, j);
        os << v << ",";
      }
    return os.str();
  }
};

namespace detail {

inline double bracket_residual(const HomSubgroup& P, const Vec& r) {
  Mat b = P.basis();
  return (r - b * (b.transpose() * r)).norm();
}

inline HomSubgroup assemble(GroupPtr g, const std::vector<Mat>& per_layer) {
  HomSubgroup P;
  P.group = g;
  const int n = g->dim();
  for (int l = 1; l <= g->step(); ++l) {
    Mat cols = l - 1 < static_cast<int>(per_layer.size()) ? per_layer[l - 1] : Mat(n, 0);
    if (cols.rows() != n) throw BadParameter("layer basis has wrong row count");
    for (int c = 0; c < cols.cols(); ++c)
      for (int i = 0; i < n; ++i)
        if (g->layer(i) != l && std::abs(cols(i, c)) > 1e-12)
          throw LayerViolation("basis vector for layer " + std::to_string(l) +
                               " has a component outside that layer");
    Mat o = orth(cols);
    if (o.cols() != cols.cols())
      throw LinearDependence("layer " + std::to_string(l) + " basis is linearly dependent");
    P.layer_bases.push_back(o);
  }
  return P;
}

}  // namespace detail

inline HomSubgroup make_subgroup(GroupPtr g, const std::vector<Mat>& layer_bases) {
  HomSubgroup P = detail::assemble(g, layer_bases);
  Mat b = P.basis();
  for (int i = 0; i < b.cols(); ++i)
    for (int j = i + 1; j < b.cols(); ++j) {
      Vec r = g->bracket(Vec(b.col(i)), Vec(b.col(j)));
      if (detail::bracket_residual(P, r) > 1e-9 * (1.0 + r.norm()))
        throw NotBracketClosed("bracket of basis vectors " + std::to_string(i) + " and " +
                               std::to_string(j) + " leaves the span");
    }
  return P;
}

// Subgroup spanned by homogeneous columns (each supported in a single layer).
inline HomSubgroup span_subgroup(GroupPtr g, const Mat& vectors) {
  std::vector<Mat> per(g->step(), Mat(g->dim(), 0));
  for (int c = 0; c < vectors.cols(); ++c) {
    int layer = 0;
    for (int i = 0; i < g->dim(); ++i)
      if (std::abs(vectors(i, c)) > 1e-12) {
        if (layer && layer != g->layer(i))
          throw LayerViolation("vector " + std::to_string(c) + " is not homogeneous");
        layer = g->layer(i);
      }
    if (!layer) throw LinearDependence("zero vector in subgroup basis");
    Mat& m = per[layer - 1];
    m.conservativeResize(Eigen::NoChange, m.cols() + 1);
    m.col(m.cols() - 1) = vectors.col(c);
  }
  return make_subgroup(g, per);
}

inline HomSubgroup coordinate_subgroup(GroupPtr g, const std::vector<std::string>& names) {
  Mat v = Mat::Zero(g->dim(), static_cast<int>(names.size()));
  for (std::size_t c = 0; c < names.size(); ++c) {
    int i = g->algebra().index_of(names[c]);
    if (i < 0) throw UnknownSymbol(names[c]);
    v(i, static_cast<int>(c)) = 1;
  }
  return span_subgroup(g, v);
}

inline HomSubgroup whole_group(GroupPtr g) {
  return span_subgroup(g, Mat::Identity(g->dim(), g->dim()));
}

inline HomSubgroup trivial_subgroup(GroupPtr g) {
  return detail::assemble(g, {});
}

inline bool is_normal(const HomSubgroup& P) {
  const auto& g = *P.group;
  Mat b = P.basis();
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      Vec r = g.bracket(g.basis_vector(i), Vec(b.col(j)));
      if (detail::bracket_residual(P, r) > 1e-9 * (1.0 + r.norm())) return false;
    }
  return true;
}

inline bool same_subgroup(const HomSubgroup& a, const HomSubgroup& b, double tol = 1e-9) {
  return a.dim() == b.dim() && (a.projector() - b.projector()).norm() < tol;
}

// Linear group morphism between graded groups, block diagonal across layers.
struct HomMorphism {
  Mat matrix;
  GroupPtr source, target;
  Vec apply(const Vec& p) const { return matrix * p; }
};

inline HomMorphism hom_morphism(const Mat& m, GroupPtr source, GroupPtr target,
                                double tol = 1e-9) {
  if (m.rows() != target->dim() || m.cols() != source->dim())
    throw BadParameter("morphism matrix has wrong shape");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c)
      if (target->layer(r) != source->layer(c) && std::abs(m(r, c)) > tol * scale)
        throw LayerViolation("entry (" + std::to_string(r) + "," + std::to_string(c) +
                             ") maps layer " + std::to_string(source->layer(c)) + " to layer " +
                             std::to_string(target->layer(r)));
  for (int i = 0; i < source->dim(); ++i)
    for (int j = i + 1; j < source->dim(); ++j) {
      Vec lhs = m * source->bracket(source->basis_vector(i), source->basis_vector(j));
      Vec rhs = target->bracket(Vec(m.col(i)), Vec(m.col(j)));
      if ((lhs - rhs).norm() > tol * scale * scale * (1.0 + lhs.norm()))
        throw BracketViolation("L[e_i,e_j] != [Le_i,Le_j] for (" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
    }
  return {m, std::move(source), std::move(target)};
}

inline HomMorphism zero_morphism(GroupPtr source, GroupPtr target) {
  return {Mat::Zero(target->dim(), source->dim()), std::move(source), std::move(target)};
}

inline HomSubgroup kernel(const HomMorphism& L) {
  const auto& s = *L.source;
  std::vector<Mat> per;
  for (int l = 1; l <= s.step(); ++l) {
    auto cols = s.algebra().layer_indices(l);
    std::vector<int> rows;
    for (int r = 0; r < L.target->dim(); ++r)
      if (L.target->layer(r) == l) rows.push_back(r);
    Mat block(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c) block(r, c) = L.matrix(rows[r], cols[c]);
    Mat ns = null_space(block);
    Mat emb = Mat::Zero(s.dim(), ns.cols());
    for (std::size_t c = 0; c < cols.size(); ++c) emb.row(cols[c]) = ns.row(c);
    per.push_back(emb);
  }
  return detail::assemble(L.source, per);
}

// L(P) = target, checked layer by layer.
inline bool maps_onto(const HomMorphism& L, const HomSubgroup& P, double tol = 1e-10) {
  const auto& t = *L.target;
  for (int l = 1; l <= t.step(); ++l) {
    auto rows = t.algebra().layer_indices(l);
    if (rows.empty()) continue;
    Mat img = l - 1 < static_cast<int>(P.layer_bases.size())
                  ? Mat(L.matrix * P.layer_bases[l - 1])
                  : Mat(t.dim(), 0);
    Mat block(rows.size(), img.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) block.row(r) = img.row(rows[r]);
    if (rank(block, tol) < static_cast<int>(rows.size())) return false;
  }
  return true;
}

// G = W V with W normal; pi_V is the linear projection onto Lie(V) along Lie(W).
class Splitting {
 public:
  HomSubgroup W, V;
  Mat piV;

  const Group& group() const { return *W.group; }
  Vec pi_V(const Vec& p) const { return piV * p; }
  Vec pi_W(const Vec& p) const {
    Vec v = -pi_V(p);
    return W.group->mul(p, v);
  }
};

inline Splitting make_splitting(const HomSubgroup& W, const HomSubgroup& V,
                                std::uint64_t seed = 0x5011u) {
  const auto& g = *W.group;
  if (!is_normal(W)) throw NotNormal("W is not a normal subgroup");
  if (W.dim() + V.dim() != g.dim())
    throw NotComplementary("dimensions of W and V do not add up to the ambient dimension");
  Mat bw = W.basis(), bv = V.basis();
  Mat m(g.dim(), g.dim());
  m << bw, bv;
  if (rank(m, 1e-9) < g.dim()) throw NotComplementary("W and V intersect nontrivially");
  Mat inv = m.inverse();
  Splitting s{W, V, bv * inv.bottomRows(V.dim())};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 256; ++t) {
    Vec p(g.dim());
    for (int i = 0; i < g.dim(); ++i) p[i] = u(rng);
    Vec back = g.mul(s.pi_W(p), s.pi_V(p));
    if ((back - p).cwiseAbs().maxCoeff() > 1e-9 * (1 + p.cwiseAbs().maxCoeff()) ||
        !W.contains(s.pi_W(p), 1e-8))
      throw NotComplementary("multiply-back identity fails; W is not a complement");
  }
  return s;
}

struct ComplementSearch {
  std::optional<HomSubgroup> complement;
  bool nonexistence_proven = false;
  std::string reason;
  bool found() const { return complement.has_value(); }
};

namespace detail {

// omega(a,b) for heis(n): T-coefficient of [a,b].
inline double symplectic(int n, const Vec& a, const Vec& b) {
  double s = 0;
  for (int j = 0; j < n; ++j) s += a[j] * b[n + j] - a[n + j] * b[j];
  return s;
}

// Isotropic complement of a subspace P1 of V1 in heis(n) (columns in G coordinates).
inline std::optional<Mat> heis_isotropic_complement(const Group& g, const Mat& p1, int k,
                                                    std::uint64_t seed) {
  const int n = g.heis_n();
  if (k > n || k < 0 || p1.cols() + k != 2 * n) return std::nullopt;
  const int dim = g.dim();
  auto try_lagrangian = [&](const Mat& lam) -> std::optional<Mat> {
    Mat both(dim, lam.cols() + p1.cols());
    both << lam, p1;
    if (rank(both, 1e-9) < 2 * n) return std::nullopt;
    // Lambda ∩ P1, then complement of it inside Lambda.
    Mat sys(dim, lam.cols() + p1.cols());
    sys << lam, -p1;
    Mat ns = null_space(sys, 1e-9);
    Mat inter = orth(lam * ns.topRows(lam.cols()), 1e-9);
    Mat v = complement_in(inter, orth(lam));
    if (v.cols() != k) return std::nullopt;
    return v;
  };
  for (int mask = 0; mask < (1 << n); ++mask) {
    Mat lam = Mat::Zero(dim, n);
    for (int i = 0; i < n; ++i) lam(((mask >> i) & 1) ? i : n + i, i) = 1;
    if (auto v = try_lagrangian(lam)) return v;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::MatrixXcd z(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) z(i, j) = {nd(rng), nd(rng)};
    Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(z).householderQ();
    Mat lam = Mat::Zero(dim, n);
    lam.topRows(n) = q.real();
    lam.middleRows(n, n) = q.imag();
    if (auto v = try_lagrangian(lam)) return v;
  }
  return std::nullopt;
}

}  // namespace detail

// m-dimensional abelian V inside V1 with V ∩ K = {0} and K V = G.
inline ComplementSearch find_horizontal_complement(const HomSubgroup& K, int m,
                                                   std::uint64_t seed = 1, int attempts = 64) {
  const auto& g = *K.group;
  ComplementSearch out;
  auto dims = g.algebra().layer_dims();
  auto kd = K.layer_dims();
  for (int l = 2; l <= g.step(); ++l)
    if (kd[l - 1] != dims[l - 1]) {
      out.nonexistence_proven = true;
      out.reason = "K does not contain layer " + std::to_string(l);
      return out;
    }
  if (dims[0] - kd[0] != m) {
    out.nonexistence_proven = true;
    out.reason = "dimension mismatch in the first layer";
    return out;
  }
  auto v1idx = g.algebra().layer_indices(1);
  Mat v1 = Mat::Zero(g.dim(), v1idx.size());
  for (std::size_t c = 0; c < v1idx.size(); ++c) v1(v1idx[c], c) = 1;
  const Mat& k1 = K.layer_bases[0];
  Mat c = complement_in(k1, v1);
  auto accept = [&](const Mat& cols) -> bool {
    std::vector<Mat> per(g.step(), Mat(g.dim(), 0));
    per[0] = cols;
    try {
      out.complement = make_subgroup(K.group, per);
    } catch (const Error&) {
      return false;
    }
    for (int a = 0; a < cols.cols(); ++a)
      for (int b = a + 1; b < cols.cols(); ++b)
        if (g.bracket(Vec(cols.col(a)), Vec(cols.col(b))).norm() > 1e-12) {
          out.complement.reset();
          return false;
        }
    return true;
  };
  if (m <= 1 || g.is_abelian()) {
    if (accept(c)) return out;
  }
  if (g.heis_n() > 0) {
    if (m > g.heis_n()) {
      out.nonexistence_proven = true;
      out.reason = "isotropic subspaces of heis(n) have dimension at most n";
      return out;
    }
    if (auto v = detail::heis_isotropic_complement(g, k1, m, seed); v && accept(*v)) return out;
  }
  // V = {c + k1 A c}: solve the quadratic isotropy equations in A by Levenberg-Marquardt.
  const int r = static_cast<int>(k1.cols());
  const int unknowns = r * m;
  auto residual = [&](const Vec& a) {
    Mat A = Eigen::Map<const Mat>(a.data(), r, m);
    Mat cols = c + k1 * A;
    std::vector<double> res;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        Vec b = g.bracket(Vec(cols.col(i)), Vec(cols.col(j)));
        for (int t = 0; t < b.size(); ++t) res.push_back(b[t]);
      }
    return Vec(Eigen::Map<Vec>(res.data(), res.size()));
  };
  if (unknowns == 0) {
    if (residual(Vec()).norm() < 1e-13 && accept(c)) return out;
    out.nonexistence_proven = true;
    out.reason = "no free parameters and the only candidate is not abelian";
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    Vec a = Vec::Zero(unknowns);
    if (attempt > 0)
      for (int i = 0; i < unknowns; ++i) a[i] = nd(rng);
    double mu = 1e-3;
    Vec f = residual(a);
    for (int it = 0; it < 200 && f.norm() > 1e-14; ++it) {
      Mat J(f.size(), unknowns);
      for (int i = 0; i < unknowns; ++i) {
        Vec ah = a;
        ah[i] += 1e-7;
        J.col(i) = (residual(ah) - f) / 1e-7;
      }
      Mat H = J.transpose() * J;
      H.diagonal().array() += mu;
      Vec step = H.ldlt().solve(-J.transpose() * f);
      Vec fn = residual(a + step);
      if (fn.norm() < f.norm()) {
        a += step;
        f = fn;
        mu = std::max(mu / 3, 1e-15);
      } else {
        mu *= 4;
      }
    }
    if (f.norm() < 1e-12) {
      Mat A = Eigen::Map<const Mat>(a.data(), r, m);
      Mat cols = orth(c + k1 * A);
      if (cols.cols() == m && accept(cols)) return out;
    }
  }
  out.reason = "search budget exhausted";
  return out;
}

}  // namespace carnot
