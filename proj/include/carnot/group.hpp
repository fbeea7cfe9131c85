#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <vector>

#include "carnot/algebra.hpp"

namespace carnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr int kMaxDim = 32;

// Float64 group law in exponential coordinates.
class Group {
 public:
  explicit Group(GradedAlgebra a) : alg_(std::move(a)) {
    const int n = alg_.dim();
    if (n < 1) throw BadParameter("empty algebra");
    if (n > kMaxDim) throw BadParameter("dimension exceeds " + std::to_string(kMaxDim));
    if (alg_.step > 4) throw UnsupportedStep("BCH product implemented through step 4");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Rational& c = alg_.c(i, j, k);
          if (!is_zero(c))
            terms_.push_back({i, j, k, boost::rational_cast<double>(c)});
        }
    q_ = hom_dimension(alg_);
    heis_n_ = detect_heisenberg();
  }

  static std::shared_ptr<const Group> make(GradedAlgebra a) {
    return std::make_shared<const Group>(std::move(a));
  }

  const GradedAlgebra& algebra() const { return alg_; }
  int dim() const { return alg_.dim(); }
  int step() const { return alg_.step; }
  int layer(int i) const { return alg_.layer_of[i]; }
  int hom_dim() const { return q_; }
  bool is_abelian() const { return terms_.empty(); }
  // n for heis(n) up to relabelling-free structural equality, else 0.
  int heis_n() const { return heis_n_; }
  bool is_stratified() const { return alg_.stratified_flag; }

  void bracket(const double* a, const double* b, double* out) const {
    for (int k = 0; k < dim(); ++k) out[k] = 0.0;
    for (const auto& t : terms_) out[t.k] += t.c * a[t.i] * b[t.j];
  }

  void mul(const double* p, const double* q, double* out) const {
    const int n = dim();
    std::array<double, kMaxDim> pq, ppq, t1, t2;
    for (int k = 0; k < n; ++k) out[k] = p[k] + q[k];
    if (alg_.step < 2 || terms_.empty()) return;
    bracket(p, q, pq.data());
    for (int k = 0; k < n; ++k) out[k] += 0.5 * pq[k];
    if (alg_.step < 3) return;
    bracket(p, pq.data(), ppq.data());
    bracket(q, pq.data(), t1.data());  // [q,[p,q]] = -[q,[q,p]]
    for (int k = 0; k < n; ++k) out[k] += (ppq[k] - t1[k]) / 12.0;
    if (alg_.step < 4) return;
    bracket(q, ppq.data(), t2.data());
    for (int k = 0; k < n; ++k) out[k] -= t2[k] / 24.0;
  }

  Vec mul(const Vec& p, const Vec& q) const {
    Vec out(dim());
    mul(p.data(), q.data(), out.data());
    return out;
  }
  Vec bracket(const Vec& a, const Vec& b) const {
    Vec out(dim());
    bracket(a.data(), b.data(), out.data());
    return out;
  }
  // p^{-1} q
  Vec between(const Vec& p, const Vec& q) const {
    Vec np = -p;
    return mul(np, q);
  }
  Vec dilate(double lambda, const Vec& p) const {
    Vec out(dim());
    for (int i = 0; i < dim(); ++i) out[i] = std::pow(lambda, layer(i)) * p[i];
    return out;
  }
  void dilate(double lambda, const double* p, double* out) const {
    double pw[5] = {1.0, lambda, lambda * lambda, lambda * lambda * lambda,
                    lambda * lambda * lambda * lambda};
    for (int i = 0; i < dim(); ++i) out[i] = pw[layer(i)] * p[i];
  }
  // Matrix of ad_a: x -> [a,x].
  Mat ad(const Vec& a) const {
    Mat m = Mat::Zero(dim(), dim());
    for (const auto& t : terms_) m(t.k, t.j) += t.c * a[t.i];
    return m;
  }
  Vec basis_vector(int i) const { return Vec::Unit(dim(), i); }

  struct Term {
    int i, j, k;
    double c;
  };
  const std::vector<Term>& terms() const { return terms_; }

 private:
  int detect_heisenberg() const {
    const int n = dim();
    if (n < 3 || n % 2 == 0) return 0;
    GradedAlgebra h = builtin("heis", {(n - 1) / 2});
    return (h.layer_of == alg_.layer_of && h.constants == alg_.constants) ? (n - 1) / 2 : 0;
  }

  GradedAlgebra alg_;
  std::vector<Term> terms_;
  int q_ = 0;
  int heis_n_ = 0;
};

using GroupPtr = std::shared_ptr<const Group>;

inline GroupPtr make_group(const GradedAlgebra& a) { return Group::make(a); }
inline GroupPtr make_group(const std::string& tag) { return Group::make(builtin_from_tag(tag)); }

struct Point {
  Vec coords;
  GroupPtr group;
};

struct Dilation {
  explicit Dilation(double l) : lambda(l) {
    if (!(l > 0)) throw BadParameter("dilation factor must be positive");
  }
  double lambda;
};

inline Point make_point(GroupPtr g, const Vec& v) {
  if (v.size() != g->dim()) throw BadParameter("point dimension mismatch");
  return {v, std::move(g)};
}

namespace detail {
inline void same_group(const Point& p, const Point& q) {
  if (p.group != q.group && !(p.group->algebra() == q.group->algebra()))
    throw AlgebraMismatch("points belong to different algebras");
}
}  // namespace detail

inline Point multiply(const Point& p, const Point& q) {
  detail::same_group(p, q);
  return {p.group->mul(p.coords, q.coords), p.group};
}
inline Point inverse(const Point& p) { return {-p.coords, p.group}; }
inline Point dilate(const Dilation& d, const Point& p) {
  return {p.group->dilate(d.lambda, p.coords), p.group};
}
// q^{-1} p q
inline Point conjugate(const Point& q, const Point& p) {
  return multiply(multiply(inverse(q), p), q);
}

// Exact product for rational inputs.
inline std::vector<Rational> multiply_exact(const GradedAlgebra& a, const std::vector<Rational>& p,
                                            const std::vector<Rational>& q) {
  if (a.step > 4) throw UnsupportedStep("BCH product implemented through step 4");
  const int n = a.dim();
  auto br = [&](const std::vector<Rational>& x, const std::vector<Rational>& y) {
    std::vector<Rational> out(n, Rational(0));
    for (int i = 0; i < n; ++i) {
      if (is_zero(x[i])) continue;
      for (int j = 0; j < n; ++j) {
        if (is_zero(y[j])) continue;
        for (int k = 0; k < n; ++k)
          if (!is_zero(a.c(i, j, k))) out[k] += a.c(i, j, k) * x[i] * y[j];
      }
    }
    return out;
  };
  std::vector<Rational> z(n);
  for (int k = 0; k < n; ++k) z[k] = p[k] + q[k];
  auto pq = br(p, q);
  auto ppq = br(p, pq);
  auto qpq = br(q, pq);
  auto qppq = br(q, ppq);
  for (int k = 0; k < n; ++k)
    z[k] += pq[k] / 2 + (ppq[k] - qpq[k]) / 12 - qppq[k] / 24;
  return z;
}

}  // namespace carnot
