#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace carnot {

struct NelderMeadOptions {
  int max_evals = 300;
  double xtol = 1e-7;
  double ftol = 1e-12;
  double initial_step = 0.1;
};

struct OptimResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
  bool converged = false;
};

// Minimizes f starting from x0. `steps` optionally gives a per-coordinate simplex size.
inline OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {},
                               const Eigen::VectorXd& steps = Eigen::VectorXd()) {
  const int n = static_cast<int>(x0.size());
  OptimResult res;
  if (n == 0) {
    res.x = x0;
    res.f = f(x0);
    res.evals = 1;
    res.converged = true;
    return res;
  }
  std::vector<Eigen::VectorXd> s(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i)
    s[i + 1][i] += steps.size() == n ? steps[i] : opt.initial_step;
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };
  for (int i = 0; i <= n; ++i) fv[i] = eval(s[i]);
  std::vector<int> idx(n + 1);
  while (true) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], worst = idx[n], second = idx[n - 1];
    double size = 0;
    for (int i = 1; i <= n; ++i) size = std::max(size, (s[idx[i]] - s[best]).cwiseAbs().maxCoeff());
    if (size < opt.xtol || std::abs(fv[worst] - fv[best]) <= opt.ftol * (1 + std::abs(fv[best])) &&
                               size < 1e3 * opt.xtol) {
      res.converged = true;
      break;
    }
    if (evals >= opt.max_evals) break;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) c += s[idx[i]];
    c /= n;
    Eigen::VectorXd xr = c + (c - s[worst]);
    double fr = eval(xr);
    if (fr < fv[best]) {
      Eigen::VectorXd xe = c + 2.0 * (c - s[worst]);
      double fe = eval(xe);
      if (fe < fr) s[worst] = xe, fv[worst] = fe;
      else s[worst] = xr, fv[worst] = fr;
    } else if (fr < fv[second]) {
      s[worst] = xr, fv[worst] = fr;
    } else {
      bool outside = fr < fv[worst];
      Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c))
                                   : Eigen::VectorXd(c + 0.5 * (s[worst] - c));
      double fc = eval(xc);
      if (fc < std::min(fr, fv[worst])) {
        s[worst] = xc, fv[worst] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          s[idx[i]] = s[best] + 0.5 * (s[idx[i]] - s[best]);
          fv[idx[i]] = eval(s[idx[i]]);
        }
      }
    }
  }
  int b = static_cast<int>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = s[b];
  res.f = fv[b];
  res.evals = evals;
  return res;
}

struct MultiStartResult {
  OptimResult best;
  int total_evals = 0;
  bool budget_exceeded = false;
};

inline MultiStartResult multi_start_nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::vector<Eigen::VectorXd>& starts, const NelderMeadOptions& opt = {},
    const Eigen::VectorXd& steps = Eigen::VectorXd()) {
  MultiStartResult out;
  bool any_converged = false;
  for (const auto& x0 : starts) {
    auto r = nelder_mead(f, x0, opt, steps);
    out.total_evals += r.evals;
    any_converged |= r.converged;
    if (r.f < out.best.f) out.best = r;
  }
  out.budget_exceeded = !starts.empty() && !out.best.converged && !any_converged;
  return out;
}

}  // namespace carnot
