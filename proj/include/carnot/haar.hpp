#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/distance.hpp"
#include "carnot/optimize.hpp"
#include "carnot/qmc.hpp"
#include "carnot/subgroups.hpp"

namespace carnot {

enum class PsiKind { Spherical, HausdorffBracket };

struct NormalizationBudget {
  int log2_points = 16;         // per replicate, final estimate
  int replicates = 8;
  int search_log2_points = 12;  // single replicate used while searching
  int starts = 32;
  int evals_per_start = 150;
  std::uint64_t seed = 0x5eedULL;

  std::string key() const {
    std::ostringstream os;
    os << log2_points << "/" << replicates << "/" << search_log2_points << "/" << starts << "/"
       << evals_per_start << "/" << seed;
    return os.str();
  }
};

// Quasi-random points of P ∩ B̄(0, radius) drawn in the P-coordinate box.
class SubgroupBallSample {
 public:
  SubgroupBallSample(const HomSubgroup& P, const HomDistance& d, int log2n, int replicates,
                     std::uint64_t seed, std::uint64_t stream, double radius = 1.0)
      : n_(P.group->dim()), dim_(P.dim()), per_rep_(std::size_t{1} << log2n) {
    Mat b = P.basis();
    auto layers = P.basis_layers();
    std::vector<double> half(dim_);
    double vol = 1.0;
    for (int j = 0; j < dim_; ++j) {
      half[j] = d.bounds[layers[j] - 1] * std::pow(radius, layers[j]);
      vol *= 2 * half[j];
    }
    cell_ = dim_ == 0 ? 1.0 : vol / static_cast<double>(per_rep_);
    if (dim_ == 0) per_rep_ = 1;
    pts_.resize(replicates);
    Vec c(dim_), x(n_);
    for (int r = 0; r < replicates; ++r) {
      if (dim_ == 0) {
        pts_[r].assign(n_, 0.0);
        continue;
      }
      RqmcPoints q(dim_, log2n, seed, stream, r);
      for (std::size_t i = 0; i < q.size(); ++i) {
        for (int j = 0; j < dim_; ++j) c[j] = (2 * q(i, j) - 1) * half[j];
        x.noalias() = b * c;
        if (d.norm(x) <= radius) pts_[r].insert(pts_[r].end(), x.data(), x.data() + n_);
      }
    }
  }

  int replicates() const { return static_cast<int>(pts_.size()); }
  std::size_t count(int r) const { return pts_[r].size() / std::max(n_, 1); }
  const double* point(int r, std::size_t i) const { return pts_[r].data() + i * n_; }
  // Lebesgue measure of P per sample point (counting measure if dim P = 0).
  double cell() const { return cell_; }
  long long total_samples() const {
    return static_cast<long long>(per_rep_) * static_cast<long long>(pts_.size());
  }
  int ambient_dim() const { return n_; }
  int dim() const { return dim_; }

 private:
  int n_, dim_;
  std::size_t per_rep_;
  double cell_;
  std::vector<std::vector<double>> pts_;
};

namespace detail {

// Number of sample points of replicate r (or all replicates if r < 0) in B̄(c, rad).
inline std::size_t count_in_ball(const SubgroupBallSample& s, const HomDistance& d,
                                 const double* c, double rad, int r) {
  const auto& g = *d.group;
  std::array<double, kMaxDim> nc, z;
  for (int i = 0; i < g.dim(); ++i) nc[i] = -c[i];
  std::size_t hits = 0;
  const int lo = r < 0 ? 0 : r, hi = r < 0 ? s.replicates() : r + 1;
  for (int k = lo; k < hi; ++k)
    for (std::size_t i = 0; i < s.count(k); ++i) {
      g.mul(nc.data(), s.point(k, i), z.data());
      if (d.norm(z.data()) <= rad) ++hits;
    }
  return hits;
}

inline std::vector<Vec> ball_starts(const HomDistance& d, int count, double radius,
                                    std::uint64_t seed) {
  const auto& g = *d.group;
  std::vector<Vec> starts{Vec::Zero(g.dim())};
  if (count <= 1) return starts;
  int log2 = 1;
  while ((1 << log2) < count) ++log2;
  RqmcPoints q(g.dim(), log2, seed, 0x57a7, 0);
  for (std::size_t i = 0; static_cast<int>(starts.size()) < count && i < q.size(); ++i) {
    Vec y(g.dim());
    for (int j = 0; j < g.dim(); ++j)
      y[j] = (2 * q(i, j) - 1) * d.bounds[g.layer(j) - 1] * std::pow(radius, g.layer(j));
    starts.push_back(d.clamp_to_ball(y, radius));
  }
  return starts;
}

inline Vec ball_steps(const HomDistance& d, double radius) {
  const auto& g = *d.group;
  Vec s(g.dim());
  for (int j = 0; j < g.dim(); ++j)
    s[j] = 0.2 * d.bounds[g.layer(j) - 1] * std::pow(radius, g.layer(j));
  return s;
}

}  // namespace detail

struct HaarMeasure {
  HomSubgroup subgroup;
  PsiKind psi_kind = PsiKind::Spherical;
  double beta = 1.0;
  MeasureEstimate theta;  // sup of Leb_P over unit-diameter balls
  int d = 0;
  Vec center;             // maximizing ball center
  std::vector<std::string> flags;

  double beta_rel_error() const { return relative_error(theta); }
  MeasureEstimate beta_estimate() const {
    return {beta, beta * beta_rel_error(), theta.samples, theta.seed};
  }
};

// ψ^d⌞P = β Leb_P with 1/β = sup{Leb_P(E ∩ P) : E = B̄(x,1/2), ρ(0,x) <= 1/2}.
inline HaarMeasure spherical_normalization(const HomSubgroup& P, const HomDistance& dist,
                                           const NormalizationBudget& budget = {}) {
  HaarMeasure h;
  h.subgroup = P;
  h.d = P.hom_dim();
  h.theta.seed = budget.seed;
  if (P.dim() == 0) {
    h.theta.value = 1.0;
    h.theta.samples = 1;
    h.center = Vec::Zero(P.group->dim());
    return h;
  }
  const auto& g = *P.group;
  SubgroupBallSample search(P, dist, budget.search_log2_points, 1, budget.seed, 0xa1, 1.0);
  auto objective = [&](const Vec& y) {
    Vec c = dist.clamp_to_ball(y, 0.5);
    return -static_cast<double>(detail::count_in_ball(search, dist, c.data(), 0.5, 0));
  };
  NelderMeadOptions opt;
  opt.max_evals = budget.evals_per_start;
  opt.xtol = 1e-4;
  auto starts = detail::ball_starts(dist, budget.starts, 0.5, budget.seed);
  Vec steps = detail::ball_steps(dist, 0.5);
  std::vector<OptimResult> results;
  bool exceeded = true;
  int evals = 0;
  for (const auto& s : starts) {
    auto r = nelder_mead(objective, s, opt, steps);
    evals += r.evals;
    exceeded &= !r.converged;
    results.push_back(r);
  }
  std::sort(results.begin(), results.end(),
            [](const OptimResult& a, const OptimResult& b) { return a.f < b.f; });
  SubgroupBallSample full(P, dist, budget.log2_points, budget.replicates, budget.seed, 0xb2, 1.0);
  double best = -1;
  Vec best_c = Vec::Zero(g.dim());
  for (std::size_t i = 0; i < std::min<std::size_t>(3, results.size()); ++i) {
    Vec c = dist.clamp_to_ball(results[i].x, 0.5);
    double v = static_cast<double>(detail::count_in_ball(full, dist, c.data(), 0.5, -1));
    if (v > best) best = v, best_c = c;
  }
  std::vector<double> reps;
  for (int r = 0; r < full.replicates(); ++r)
    reps.push_back(full.cell() *
                   static_cast<double>(detail::count_in_ball(full, dist, best_c.data(), 0.5, r)));
  h.theta = from_replicates(reps, full.total_samples(), budget.seed);
  h.center = best_c;
  if (!(h.theta.value > 0)) throw Error("spherical normalization found an empty ball");
  h.beta = 1.0 / h.theta.value;
  if (exceeded) h.flags.push_back("optimization_budget_exceeded");
  h.flags.push_back("balls_only");
  (void)evals;
  return h;
}

// Process-local memo of normalizations. quant > 0 rounds the subgroup projector to 1/quant
// and normalizes the canonical subgroup rebuilt from the rounded key.
class NormalizationCache {
 public:
  HaarMeasure get(const HomSubgroup& P, const HomDistance& dist, const NormalizationBudget& budget,
                  int quant = 0) {
    std::string key = P.key(quant) + "|" + dist.description() + "|" + budget.key();
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    HomSubgroup rep = quant > 0 ? canonical(P, quant) : P;
    HaarMeasure h = spherical_normalization(rep, dist, budget);
    h.subgroup = rep;
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.emplace(key, h).first->second;
  }
  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.size();
  }

  static HomSubgroup canonical(const HomSubgroup& P, int quant) {
    const auto& g = *P.group;
    Mat pr = P.projector();
    for (int i = 0; i < pr.rows(); ++i)
      for (int j = 0; j < pr.cols(); ++j) pr(i, j) = std::round(pr(i, j) * quant) / quant;
    std::vector<Mat> per;
    for (int l = 1; l <= g.step(); ++l) {
      auto idx = g.algebra().layer_indices(l);
      const int k = l - 1 < static_cast<int>(P.layer_bases.size())
                        ? static_cast<int>(P.layer_bases[l - 1].cols())
                        : 0;
      Mat block(idx.size(), idx.size());
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) block(a, b) = pr(idx[a], idx[b]);
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (block + block.transpose()));
      Mat top = es.eigenvectors().rightCols(k);
      // Fix the sign of each eigenvector for determinism.
      for (int c = 0; c < top.cols(); ++c) {
        int arg = 0;
        top.col(c).cwiseAbs().maxCoeff(&arg);
        if (top(arg, c) < 0) top.col(c) *= -1;
      }
      Mat emb = Mat::Zero(g.dim(), k);
      for (std::size_t a = 0; a < idx.size(); ++a) emb.row(idx[a]) = top.row(a);
      per.push_back(emb);
    }
    return detail::assemble(P.group, per);
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, HaarMeasure> memo_;
};

struct Interval {
  double lo = 0, hi = 0;
  bool contains(double x, double tol = 0) const { return x >= lo - tol && x <= hi + tol; }
};

// Admissible range of the Hausdorff-normalization density: H <= S <= 2^d H.
inline Interval hausdorff_bracket(const HaarMeasure& h) {
  return {std::ldexp(h.beta, -h.d), h.beta};
}

// A measure that can be evaluated on closed balls, replicate by replicate.
class BallMeasure {
 public:
  virtual ~BallMeasure() = default;
  virtual int replicates() const = 0;
  virtual long long samples() const = 0;
  virtual double ball(const Vec& center, double r, int replicate) const = 0;
  std::vector<double> ball(const Vec& center, double r) const {
    std::vector<double> out;
    for (int k = 0; k < replicates(); ++k) out.push_back(ball(center, r, k));
    return out;
  }
};

// scale · β · Leb_P, evaluated by dilating and translating a unit-ball sample of P.
class HaarBallMeasure : public BallMeasure {
 public:
  HaarBallMeasure(HaarMeasure h, HomDistance dist, double scale = 1.0, int log2n = 13,
                  int replicates = 8, std::uint64_t seed = 0xfedeULL)
      : h_(std::move(h)), dist_(std::move(dist)), scale_(scale),
        sample_(h_.subgroup, dist_, log2n, replicates, seed, 0xc3, 1.0),
        basis_(h_.subgroup.basis()) {}

  int replicates() const override { return sample_.replicates(); }
  long long samples() const override { return sample_.total_samples(); }
  const HaarMeasure& haar() const { return h_; }

  using BallMeasure::ball;
  double ball(const Vec& c, double r, int k) const override {
    const auto& g = *dist_.group;
    Vec a = basis_ * (basis_.transpose() * c);
    const double R = r + dist_.dist(a, c);
    if (h_.subgroup.dim() == 0) return dist_.norm(c) <= r ? scale_ * h_.beta : 0.0;
    const double w = scale_ * h_.beta * sample_.cell() * std::pow(R, h_.d);
    std::array<double, kMaxDim> dq, p, nc, z;
    for (int i = 0; i < g.dim(); ++i) nc[i] = -c[i];
    std::size_t hits = 0;
    for (std::size_t i = 0; i < sample_.count(k); ++i) {
      g.dilate(R, sample_.point(k, i), dq.data());
      g.mul(a.data(), dq.data(), p.data());
      g.mul(nc.data(), p.data(), z.data());
      if (dist_.norm(z.data()) <= r) ++hits;
    }
    return w * static_cast<double>(hits);
  }

 private:
  HaarMeasure h_;
  HomDistance dist_;
  double scale_;
  SubgroupBallSample sample_;
  Mat basis_;
};

struct FedererOptions {
  std::vector<double> scales{0.5, 0.25, 0.125};
  int starts = 6;
  int evals_per_start = 60;
  double tol = 0.03;  // relative Cauchy tolerance between the last two rungs
  std::uint64_t seed = 0xf00dULL;
};

struct FedererResult {
  MeasureEstimate estimate;
  std::vector<MeasureEstimate> ladder;
};

// Spherical Federer density: sup over balls E ∋ x, diam E = ε, of μ(E)/ε^d along the ladder.
inline FedererResult federer_density(const BallMeasure& mu, const Vec& x, const HomDistance& dist,
                                     int d, const FedererOptions& opt = {}) {
  const auto& g = *dist.group;
  FedererResult res;
  auto starts = detail::ball_starts(dist, opt.starts, 1.0, opt.seed);
  Vec steps = detail::ball_steps(dist, 1.0);
  NelderMeadOptions nm;
  nm.max_evals = opt.evals_per_start;
  nm.xtol = 1e-3;
  for (double eps : opt.scales) {
    const double r = eps / 2;
    auto center = [&](const Vec& y) {
      return g.mul(x, g.dilate(r, dist.clamp_to_ball(y, 1.0)));
    };
    // Search on the first half of the replicates, estimate on the second half.
    const int half = std::max(1, mu.replicates() / 2);
    auto mean_ratio = [&](const Vec& y) {
      Vec c = center(y);
      double m = 0;
      for (int k = 0; k < half; ++k) m += mu.ball(c, r, k);
      return -m / half / std::pow(eps, d);
    };
    auto ms = multi_start_nelder_mead(mean_ratio, starts, nm, steps);
    Vec c = center(ms.best.x);
    std::vector<double> v;
    for (int k = half < mu.replicates() ? half : 0; k < mu.replicates(); ++k)
      v.push_back(mu.ball(c, r, k) / std::pow(eps, d));
    res.ladder.push_back(from_replicates(v, mu.samples(), opt.seed));
  }
  const auto& a = res.ladder[res.ladder.size() - 1];
  if (res.ladder.size() >= 2) {
    const auto& b = res.ladder[res.ladder.size() - 2];
    double diff = std::abs(a.value - b.value);
    double allow = std::max(opt.tol * std::max(std::abs(a.value), std::abs(b.value)),
                            3 * std::hypot(a.std_error, b.std_error));
    if (diff > allow && diff > 1e-12)
      throw NonConvergent("Federer density ladder is not Cauchy: " + std::to_string(b.value) +
                          " vs " + std::to_string(a.value));
    res.estimate = {0.5 * (a.value + b.value), 0.5 * std::hypot(a.std_error, b.std_error),
                    a.samples, opt.seed};
  } else {
    res.estimate = a;
  }
  return res;
}

}  // namespace carnot
