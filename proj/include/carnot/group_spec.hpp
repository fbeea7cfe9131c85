#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "carnot/algebra.hpp"

namespace carnot {

struct GroupSpecSource {
  std::string text;
  std::string origin = "<inline>";
};

inline GroupSpecSource read_group_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return {ss.str(), path};
}

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool is_ident(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) return false;
  return true;
}

inline Rational parse_rational(const std::string& s, int line) {
  auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      long long p = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return Rational(p);
    }
    std::string ps = trim(s.substr(0, slash)), qs = trim(s.substr(slash + 1));
    long long p = std::stoll(ps, &used);
    if (used != ps.size()) throw std::invalid_argument(s);
    long long q = std::stoll(qs, &used);
    if (used != qs.size() || q == 0) throw std::invalid_argument(s);
    return Rational(p, q);
  } catch (const std::exception&) {
    throw SyntaxError(line, "bad coefficient '" + s + "'");
  }
}

// Parses "c1*A + c2*B - C" into (coef, name) terms.
inline std::vector<std::pair<Rational, std::string>> parse_combination(const std::string& rhs,
                                                                       int line) {
  std::vector<std::pair<Rational, std::string>> terms;
  std::string s;
  for (char ch : rhs)
    if (ch != ' ' && ch != '\t') s += ch;
  if (s.empty()) throw SyntaxError(line, "empty bracket value");
  if (s == "0") return terms;
  std::size_t pos = 0;
  while (pos < s.size()) {
    int sign = 1;
    if (s[pos] == '+' || s[pos] == '-') {
      sign = s[pos] == '-' ? -1 : 1;
      ++pos;
    } else if (!terms.empty()) {
      throw SyntaxError(line, "expected '+' or '-'");
    }
    std::size_t end = pos;
    while (end < s.size() && s[end] != '+' && s[end] != '-') ++end;
    std::string term = s.substr(pos, end - pos);
    if (term.empty()) throw SyntaxError(line, "empty term");
    Rational coef = 1;
    std::string id = term;
    auto star = term.find('*');
    if (star != std::string::npos) {
      coef = parse_rational(term.substr(0, star), line);
      id = term.substr(star + 1);
    }
    if (!is_ident(id)) throw SyntaxError(line, "bad identifier '" + id + "'");
    terms.emplace_back(coef * sign, id);
    pos = end;
  }
  return terms;
}

}  // namespace detail

inline GradedAlgebra parse_group_spec(const GroupSpecSource& src) {
  GradedAlgebra a;
  int declared_step = -1;
  int step_line = 0;
  std::vector<std::string> names;
  std::vector<int> layers;
  struct Pending {
    int line;
    std::string x, y;
    std::vector<std::pair<Rational, std::string>> terms;
  };
  std::vector<Pending> brackets;

  std::istringstream in(src.text);
  std::string raw;
  int line = 0;
  bool any = false;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    any = true;
    std::istringstream words(s);
    std::string kw;
    words >> kw;
    if (kw == "group") {
      std::string id, extra;
      if (!(words >> id) || (words >> extra) || !detail::is_ident(id))
        throw SyntaxError(line, "expected 'group <id>'");
      a.name = id;
    } else if (kw == "step") {
      std::string v, extra;
      if (!(words >> v) || (words >> extra)) throw SyntaxError(line, "expected 'step <int>'");
      try {
        std::size_t used = 0;
        declared_step = std::stoi(v, &used);
        if (used != v.size() || declared_step < 1) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw SyntaxError(line, "bad step '" + v + "'");
      }
      step_line = line;
    } else if (kw == "layer") {
      auto colon = s.find(':');
      if (colon == std::string::npos) throw SyntaxError(line, "expected 'layer <int>: <ids>'");
      std::string num = detail::trim(s.substr(5, colon - 5));
      int layer = 0;
      try {
        std::size_t used = 0;
        layer = std::stoi(num, &used);
        if (used != num.size() || layer < 1) throw std::invalid_argument(num);
      } catch (const std::exception&) {
        throw SyntaxError(line, "bad layer index '" + num + "'");
      }
      std::istringstream ids(s.substr(colon + 1));
      std::string id;
      int count = 0;
      while (ids >> id) {
        if (!detail::is_ident(id)) throw SyntaxError(line, "bad identifier '" + id + "'");
        for (const auto& n : names)
          if (n == id) throw SyntaxError(line, "basis vector '" + id + "' declared twice");
        names.push_back(id);
        layers.push_back(layer);
        ++count;
      }
      if (count == 0) throw SyntaxError(line, "layer without basis vectors");
    } else if (kw == "bracket") {
      auto lb = s.find('['), comma = s.find(','), rb = s.find(']'), eq = s.find('=');
      if (lb == std::string::npos || comma == std::string::npos || rb == std::string::npos ||
          eq == std::string::npos || !(lb < comma && comma < rb && rb < eq) ||
          !detail::trim(s.substr(7, lb - 7)).empty() ||
          !detail::trim(s.substr(rb + 1, eq - rb - 1)).empty())
        throw SyntaxError(line, "expected 'bracket [<id>,<id>] = <combination>'");
      Pending p{line, detail::trim(s.substr(lb + 1, comma - lb - 1)),
                detail::trim(s.substr(comma + 1, rb - comma - 1)),
                detail::parse_combination(s.substr(eq + 1), line)};
      if (!detail::is_ident(p.x) || !detail::is_ident(p.y))
        throw SyntaxError(line, "bad identifier in bracket");
      brackets.push_back(std::move(p));
    } else {
      throw SyntaxError(line, "unknown declaration '" + kw + "'");
    }
  }
  if (!any) throw SyntaxError(line, "empty group specification");
  if (names.empty()) throw SyntaxError(line, "no layers declared");
  int max_layer = *std::max_element(layers.begin(), layers.end());
  if (declared_step >= 0 && max_layer > declared_step)
    throw SyntaxError(step_line, "layer " + std::to_string(max_layer) + " exceeds step " +
                                     std::to_string(declared_step));
  std::string name = a.name;
  a = detail::make_empty(name, names, layers);
  a.step = declared_step >= 0 ? declared_step : max_layer;

  std::map<std::pair<int, int>, int> seen;
  for (const auto& b : brackets) {
    int i = a.index_of(b.x), j = a.index_of(b.y);
    if (i < 0) throw UnknownSymbol(b.x);
    if (j < 0) throw UnknownSymbol(b.y);
    auto key = std::minmax(i, j);
    if (seen.count(key)) throw DuplicateBracket(b.x + "," + b.y);
    seen[key] = b.line;
    std::vector<Rational> value(a.dim(), Rational(0));
    for (const auto& [coef, id] : b.terms) {
      int k = a.index_of(id);
      if (k < 0) throw UnknownSymbol(id);
      value[k] += coef;
    }
    if (i == j) {
      for (const auto& v : value)
        if (!is_zero(v)) throw SyntaxError(b.line, "self-bracket [" + b.x + "," + b.x + "] must be 0");
      continue;
    }
    for (int k = 0; k < a.dim(); ++k) detail::set_bracket(a, i, j, k, value[k]);
  }
  a.stratified_flag = is_stratified(a);

  for (const auto& v : validate_algebra(a).violations) {
    if (v.kind == Violation::Kind::Grading) throw GradingViolation(v.message, v.i, v.j, v.k);
    if (v.kind == Violation::Kind::Jacobi) throw JacobiViolation(v.message, v.i, v.j, v.k);
  }
  return a;
}

inline std::string serialize_group_spec(const GradedAlgebra& a) {
  std::ostringstream os;
  auto name = [&](int i) {
    return i < static_cast<int>(a.basis_names.size()) ? a.basis_names[i]
                                                      : "e" + std::to_string(i + 1);
  };
  os << "group " << a.name << "\n";
  os << "step " << a.step << "\n";
  for (int l = 1; l <= a.step; ++l) {
    auto idx = a.layer_indices(l);
    if (idx.empty()) continue;
    os << "layer " << l << ":";
    for (int i : idx) os << " " << name(i);
    os << "\n";
  }
  for (int i = 0; i < a.dim(); ++i)
    for (int j = i + 1; j < a.dim(); ++j) {
      std::ostringstream rhs;
      bool first = true;
      for (int k = 0; k < a.dim(); ++k) {
        const Rational& v = a.c(i, j, k);
        if (is_zero(v)) continue;
        const Rational av = is_negative(v) ? -v : v;
        if (!first) rhs << (is_negative(v) ? " - " : " + ");
        else if (is_negative(v)) rhs << "-";
        rhs << av.numerator();
        if (av.denominator() != 1) rhs << "/" << av.denominator();
        rhs << "*" << name(k);
        first = false;
      }
      if (!first) os << "bracket [" << name(i) << "," << name(j) << "] = " << rhs.str() << "\n";
    }
  return os.str();
}

}  // namespace carnot
