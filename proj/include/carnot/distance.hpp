#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/optimize.hpp"
#include "carnot/qmc.hpp"
#include "carnot/subgroups.hpp"

namespace carnot {

// Homogeneous norm ‖·‖ with ρ(p,q) = ‖p^{-1}q‖.
class HomDistance {
 public:
  enum class Kind { Box, Koranyi, Custom };
  using Evaluator = std::function<double(const double*)>;

  GroupPtr group;
  Kind kind = Kind::Box;
  std::vector<double> eps;     // box weights per layer
  Evaluator custom;            // custom evaluator
  std::vector<double> bounds;  // ‖p‖ <= 1 implies |p^(i)| <= bounds[i-1]
  std::string tag;

  double norm(const double* p) const {
    const auto& g = *group;
    switch (kind) {
      case Kind::Box: {
        std::array<double, 4> sq{};
        for (int i = 0; i < g.dim(); ++i) sq[g.layer(i) - 1] += p[i] * p[i];
        double m = eps[0] * std::sqrt(sq[0]);
        if (g.step() >= 2) m = std::max(m, eps[1] * std::pow(sq[1], 0.25));
        if (g.step() >= 3) m = std::max(m, eps[2] * std::pow(sq[2], 1.0 / 6.0));
        if (g.step() >= 4) m = std::max(m, eps[3] * std::pow(sq[3], 0.125));
        return m;
      }
      case Kind::Koranyi: {
        const int n = g.dim() - 1;
        double z2 = 0;
        for (int i = 0; i < n; ++i) z2 += p[i] * p[i];
        const double t = p[n];
        return std::sqrt(std::sqrt(z2 * z2 + 16.0 * t * t));
      }
      case Kind::Custom:
        return custom(p);
    }
    return 0.0;
  }
  double norm(const Vec& p) const { return norm(p.data()); }

  double dist(const double* p, const double* q) const {
    std::array<double, kMaxDim> np, z;
    for (int i = 0; i < group->dim(); ++i) np[i] = -p[i];
    group->mul(np.data(), q, z.data());
    return norm(z.data());
  }
  double dist(const Vec& p, const Vec& q) const { return dist(p.data(), q.data()); }

  // Radial projection δ_{r/‖p‖} p onto the sphere of radius r (0 stays 0).
  Vec to_sphere(const Vec& p, double r = 1.0) const {
    double m = norm(p);
    return m > 0 ? group->dilate(r / m, p) : p;
  }
  Vec clamp_to_ball(const Vec& p, double r) const {
    double m = norm(p);
    return m > r ? group->dilate(r / m, p) : p;
  }

  std::string description() const {
    std::ostringstream os;
    os.precision(17);
    if (kind == Kind::Box) {
      os << "box(";
      for (std::size_t i = 0; i < eps.size(); ++i) os << (i ? "," : "") << eps[i];
      os << ")";
    } else if (kind == Kind::Koranyi) {
      os << "koranyi";
    } else {
      os << "custom:" << tag;
    }
    return os.str();
  }
};

inline HomDistance box_norm(GroupPtr g, std::vector<double> eps = {}) {
  if (eps.empty()) eps.assign(g->step(), 1.0);
  if (static_cast<int>(eps.size()) != g->step())
    throw BadParameter("box norm needs one weight per layer");
  HomDistance d;
  d.group = std::move(g);
  d.kind = HomDistance::Kind::Box;
  for (double e : eps)
    if (!(e > 0)) throw BadParameter("box norm weights must be positive");
  for (std::size_t i = 0; i < eps.size(); ++i)
    d.bounds.push_back(std::pow(eps[i], -static_cast<double>(i + 1)));
  d.eps = std::move(eps);
  return d;
}

inline HomDistance euclidean(GroupPtr g) {
  if (!g->is_abelian() || g->step() != 1) throw BadParameter("euclidean distance needs abelian(n)");
  return box_norm(std::move(g));
}

inline HomDistance koranyi_norm(GroupPtr g) {
  if (g->heis_n() == 0) throw NotHeisenberg("Koranyi norm requires heis(n)");
  HomDistance d;
  d.group = std::move(g);
  d.kind = HomDistance::Kind::Koranyi;
  d.bounds = {1.0, 0.25};
  return d;
}

inline HomDistance custom_norm(GroupPtr g, HomDistance::Evaluator f, std::vector<double> bounds,
                               std::string tag) {
  if (static_cast<int>(bounds.size()) != g->step())
    throw BadParameter("custom norm needs one layer bound per layer");
  HomDistance d;
  d.group = std::move(g);
  d.kind = HomDistance::Kind::Custom;
  d.custom = std::move(f);
  d.bounds = std::move(bounds);
  d.tag = std::move(tag);
  return d;
}

// "koranyi", "box", "box:1,0.5", "euclidean"
inline HomDistance distance_from_tag(GroupPtr g, const std::string& tag) {
  if (tag == "koranyi") return koranyi_norm(g);
  if (tag == "euclidean") return euclidean(g);
  if (tag.rfind("box", 0) == 0) {
    std::vector<double> eps;
    auto pos = tag.find(':');
    if (pos != std::string::npos) {
      std::stringstream ss(tag.substr(pos + 1));
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          eps.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw BadParameter("bad box weight '" + item + "'");
        }
      }
    }
    return box_norm(g, eps);
  }
  throw BadParameter("unknown distance '" + tag + "'");
}

// Uniform sample in the coordinate box containing B(0, r).
inline Vec sample_ball_box(const HomDistance& d, std::mt19937_64& rng, double r = 1.0) {
  const auto& g = *d.group;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec p(g.dim());
  for (int i = 0; i < g.dim(); ++i)
    p[i] = u(rng) * d.bounds[g.layer(i) - 1] * std::pow(r, g.layer(i));
  return p;
}

struct DistanceReport {
  long long triples = 0;
  long long triangle_violations = 0;
  double worst_triangle = 0.0;  // max of ρ(p,r) - ρ(p,q) - ρ(q,r)
  double homogeneity_defect = 0.0;
  double diameter = 0.0;
  bool diameter_ok = false;
  bool ok() const { return triangle_violations == 0 && diameter_ok && homogeneity_defect < 1e-12; }
};

// Samples triples for the triangle inequality and the unit ball for its diameter.
inline DistanceReport check_homogeneous_distance(const HomDistance& d, long long samples,
                                                 std::uint64_t seed = 1) {
  DistanceReport rep;
  std::mt19937_64 rng(stream_seed(seed, 0x7a1));
  std::uniform_real_distribution<double> scale(-3.0, 1.0);
  for (long long t = 0; t < samples; ++t) {
    Vec p = d.group->dilate(std::exp(scale(rng)), sample_ball_box(d, rng));
    Vec q = d.group->mul(p, d.group->dilate(std::exp(scale(rng)), sample_ball_box(d, rng)));
    Vec r = d.group->mul(q, d.group->dilate(std::exp(scale(rng)), sample_ball_box(d, rng)));
    double pq = d.dist(p, q), qr = d.dist(q, r), pr = d.dist(p, r);
    double excess = pr - pq - qr;
    double tol = 1e-12 * std::max(1.0, pq + qr);
    ++rep.triples;
    if (excess > tol) ++rep.triangle_violations;
    rep.worst_triangle = std::max(rep.worst_triangle, excess);
    double lam = std::exp(scale(rng));
    double np = d.norm(p);
    if (np > 0)
      rep.homogeneity_defect = std::max(
          rep.homogeneity_defect, std::abs(d.norm(d.group->dilate(lam, p)) / (lam * np) - 1.0));
  }
  // Diameter of B(0,1): best pair among sphere samples, then local refinement.
  const int m = 1500;
  std::vector<Vec> pts;
  for (int i = 0; i < m; ++i) {
    Vec x = sample_ball_box(d, rng);
    if (i % 2 == 1) x = -pts.back();  // antipodal partner
    pts.push_back(d.to_sphere(x));
  }
  double best = 0;
  int bi = 0, bj = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      double v = d.dist(pts[i], pts[j]);
      if (v > best) best = v, bi = i, bj = j;
    }
  const int n = d.group->dim();
  Vec x0(2 * n);
  x0 << pts[bi], pts[bj];
  auto f = [&](const Vec& x) {
    return -d.dist(d.clamp_to_ball(x.head(n), 1.0), d.clamp_to_ball(x.tail(n), 1.0));
  };
  NelderMeadOptions opt;
  opt.max_evals = 2000;
  opt.initial_step = 0.02;
  auto r = nelder_mead(f, x0, opt);
  rep.diameter = std::max(best, -r.f);
  rep.diameter_ok = rep.diameter >= 1.98 && rep.diameter <= 2.0 + 1e-9;
  return rep;
}

// max over sampled unit-sphere points of ρ'(L p, M p).
inline double morphism_distance(const HomMorphism& L, const HomMorphism& M, const HomDistance& rho,
                                const HomDistance& rho_t, int log2_samples = 12,
                                std::uint64_t seed = 1) {
  if (L.matrix.rows() != M.matrix.rows() || L.matrix.cols() != M.matrix.cols())
    throw BadParameter("morphisms have different shapes");
  const auto& g = *rho.group;
  RqmcPoints pts(g.dim(), log2_samples, seed, 0x3d1, 0);
  double best = 0;
  Vec p(g.dim());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int j = 0; j < g.dim(); ++j) p[j] = (2 * pts(i, j) - 1) * rho.bounds[g.layer(j) - 1];
    if (rho.norm(p) == 0) continue;
    Vec s = rho.to_sphere(p);
    best = std::max(best, rho_t.dist(L.apply(s), M.apply(s)));
  }
  return best;
}

}  // namespace carnot
