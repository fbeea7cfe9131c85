#pragma once

#include <boost/rational.hpp>

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/errors.hpp"

namespace carnot {

using Rational = boost::rational<std::int64_t>;

// Boost 1.74 rational/integer comparisons recurse under C++20 rewritten operators.
inline bool is_zero(const Rational& r) { return r.numerator() == 0; }
inline bool is_negative(const Rational& r) { return r.numerator() < 0; }

// Graded nilpotent Lie algebra in a homogeneous basis.
// c(i,j,k) is the coefficient of e_k in [e_i,e_j].
struct GradedAlgebra {
  std::string name = "unnamed";
  int step = 0;
  std::vector<std::string> basis_names;
  std::vector<int> layer_of;  // 1-based
  std::vector<Rational> constants;
  bool stratified_flag = false;

  int dim() const { return static_cast<int>(layer_of.size()); }
  Rational& c(int i, int j, int k) { return constants[(i * dim() + j) * dim() + k]; }
  const Rational& c(int i, int j, int k) const {
    return constants[(i * dim() + j) * dim() + k];
  }

  std::vector<int> layer_dims() const {
    std::vector<int> d(step, 0);
    for (int l : layer_of) ++d[l - 1];
    return d;
  }
  std::vector<int> layer_indices(int layer) const {
    std::vector<int> out;
    for (int i = 0; i < dim(); ++i)
      if (layer_of[i] == layer) out.push_back(i);
    return out;
  }
  int index_of(const std::string& s) const {
    auto it = std::find(basis_names.begin(), basis_names.end(), s);
    return it == basis_names.end() ? -1 : static_cast<int>(it - basis_names.begin());
  }

  bool operator==(const GradedAlgebra& o) const {
    return step == o.step && layer_of == o.layer_of && constants == o.constants;
  }
};

inline int hom_dimension(const GradedAlgebra& a) {
  int q = 0;
  for (int l : a.layer_of) q += l;
  return q;
}

struct Violation {
  enum class Kind { Antisymmetry, Grading, Jacobi, Stratification, Layer };
  Kind kind;
  int i = -1, j = -1, k = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string str() const {
    std::ostringstream os;
    for (const auto& v : violations) os << v.message << "\n";
    return os.str();
  }
};

namespace detail {

// Rank of a set of rational row vectors by fraction-exact elimination.
inline int rational_rank(std::vector<std::vector<Rational>> rows) {
  if (rows.empty()) return 0;
  const int cols = static_cast<int>(rows[0].size());
  int rank = 0;
  for (int col = 0; col < cols && rank < static_cast<int>(rows.size()); ++col) {
    int piv = -1;
    for (int r = rank; r < static_cast<int>(rows.size()); ++r)
      if (!is_zero(rows[r][col])) { piv = r; break; }
    if (piv < 0) continue;
    std::swap(rows[rank], rows[piv]);
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
      if (r == rank || is_zero(rows[r][col])) continue;
      Rational f = rows[r][col] / rows[rank][col];
      for (int c = col; c < cols; ++c) rows[r][c] -= f * rows[rank][c];
    }
    ++rank;
  }
  return rank;
}

inline std::string wit(const GradedAlgebra& a, int i) {
  if (i >= 0 && i < static_cast<int>(a.basis_names.size())) return a.basis_names[i];
  return std::to_string(i);
}

}  // namespace detail

// Exact [e_i,[e_j,e_k]] + cyclic, component m.
inline Rational jacobi_defect(const GradedAlgebra& a, int i, int j, int k, int m) {
  Rational s = 0;
  const int n = a.dim();
  for (int r = 0; r < n; ++r) {
    s += a.c(j, k, r) * a.c(i, r, m);
    s += a.c(k, i, r) * a.c(j, r, m);
    s += a.c(i, j, r) * a.c(k, r, m);
  }
  return s;
}

inline bool is_stratified(const GradedAlgebra& a) {
  if (a.step < 1) return false;
  auto dims = a.layer_dims();
  if (dims[0] == 0) return false;
  const auto l1 = a.layer_indices(1);
  for (int j = 1; j < a.step; ++j) {
    const auto lj = a.layer_indices(j);
    const auto next = a.layer_indices(j + 1);
    if (next.empty()) return false;
    std::vector<std::vector<Rational>> rows;
    for (int x : l1)
      for (int y : lj) {
        std::vector<Rational> r;
        for (int k : next) r.push_back(a.c(x, y, k));
        rows.push_back(r);
      }
    if (detail::rational_rank(rows) != static_cast<int>(next.size())) return false;
  }
  return true;
}

inline ValidationReport validate_algebra(const GradedAlgebra& a) {
  ValidationReport rep;
  const int n = a.dim();
  auto add = [&](Violation::Kind kind, int i, int j, int k, std::string msg) {
    rep.violations.push_back({kind, i, j, k, std::move(msg)});
  };
  for (int i = 0; i < n; ++i)
    if (a.layer_of[i] < 1 || a.layer_of[i] > a.step)
      add(Violation::Kind::Layer, i, -1, -1,
          "layer out of range for " + detail::wit(a, i));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (a.c(i, j, k) != -a.c(j, i, k))
          add(Violation::Kind::Antisymmetry, i, j, k,
              "antisymmetry violated at (" + detail::wit(a, i) + "," + detail::wit(a, j) +
                  "," + detail::wit(a, k) + ")");
      }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (!is_zero(a.c(i, j, k)) && a.layer_of[k] != a.layer_of[i] + a.layer_of[j])
          add(Violation::Kind::Grading, i, j, k,
              "grading violated: [" + detail::wit(a, i) + "," + detail::wit(a, j) +
                  "] has a component on " + detail::wit(a, k));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        for (int m = 0; m < n; ++m)
          if (!is_zero(jacobi_defect(a, i, j, k, m))) {
            add(Violation::Kind::Jacobi, i, j, k,
                "Jacobi identity fails on (" + detail::wit(a, i) + "," + detail::wit(a, j) +
                    "," + detail::wit(a, k) + ")");
            break;
          }
  if (a.stratified_flag && !is_stratified(a))
    add(Violation::Kind::Stratification, -1, -1, -1,
        "stratified flag set but layer 1 does not generate");
  return rep;
}

namespace detail {

inline GradedAlgebra make_empty(std::string name, std::vector<std::string> names,
                                std::vector<int> layers) {
  GradedAlgebra a;
  a.name = std::move(name);
  a.basis_names = std::move(names);
  a.layer_of = std::move(layers);
  a.step = a.layer_of.empty() ? 0 : *std::max_element(a.layer_of.begin(), a.layer_of.end());
  const int n = a.dim();
  a.constants.assign(static_cast<std::size_t>(n) * n * n, Rational(0));
  return a;
}

inline void set_bracket(GradedAlgebra& a, int i, int j, int k, Rational v) {
  a.c(i, j, k) = v;
  a.c(j, i, k) = -v;
}

}  // namespace detail

// heis(n): X1..Xn Y1..Yn T with [Xi,Yi] = T.
// abelian(n), engel, filiform(n) for n in 3..5 ([X1,Xk] = X(k+1)).
inline GradedAlgebra builtin(const std::string& name, const std::vector<int>& params) {
  auto need = [&](std::size_t count) {
    if (params.size() != count)
      throw BadParameter(name + " expects " + std::to_string(count) + " parameter(s)");
  };
  GradedAlgebra a;
  if (name == "heis") {
    need(1);
    const int n = params[0];
    if (n < 1) throw BadParameter("heis requires n >= 1");
    std::vector<std::string> names;
    std::vector<int> layers;
    for (int i = 1; i <= n; ++i) names.push_back("X" + std::to_string(i));
    for (int i = 1; i <= n; ++i) names.push_back("Y" + std::to_string(i));
    names.push_back("T");
    layers.assign(2 * n, 1);
    layers.push_back(2);
    a = detail::make_empty("heis" + std::to_string(n), names, layers);
    for (int i = 0; i < n; ++i) detail::set_bracket(a, i, n + i, 2 * n, 1);
  } else if (name == "abelian") {
    need(1);
    const int n = params[0];
    if (n < 1) throw BadParameter("abelian requires n >= 1");
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("E" + std::to_string(i));
    a = detail::make_empty("abelian" + std::to_string(n), names, std::vector<int>(n, 1));
  } else if (name == "engel" || name == "filiform") {
    int n = 4;
    if (name == "filiform") {
      need(1);
      n = params[0];
      if (n < 3 || n > 5) throw BadParameter("filiform supports dimension 3..5");
    } else if (!params.empty()) {
      throw BadParameter("engel takes no parameters");
    }
    std::vector<std::string> names;
    std::vector<int> layers{1, 1};
    for (int i = 1; i <= n; ++i) names.push_back("X" + std::to_string(i));
    for (int i = 3; i <= n; ++i) layers.push_back(i - 1);
    a = detail::make_empty(name == "engel" ? "engel" : "filiform" + std::to_string(n), names,
                           layers);
    for (int k = 1; k + 1 < n; ++k) detail::set_bracket(a, 0, k, k + 1, 1);
  } else {
    throw UnknownBuiltin("unknown builtin group '" + name + "'");
  }
  a.stratified_flag = is_stratified(a);
  return a;
}

// "heis:2", "abelian:3", "engel"
inline GradedAlgebra builtin_from_tag(const std::string& tag) {
  auto pos = tag.find(':');
  std::string name = tag.substr(0, pos);
  std::vector<int> params;
  if (pos != std::string::npos) {
    std::stringstream ss(tag.substr(pos + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        params.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw BadParameter("bad parameter '" + item + "' in " + tag);
      }
    }
  }
  return builtin(name, params);
}

}  // namespace carnot
