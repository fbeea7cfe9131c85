#pragma once

#include <random>

#include "carnot/group.hpp"

namespace gen {

inline carnot::Vec uniform(std::mt19937_64& rng, int n, double r) {
  std::uniform_real_distribution<double> u(-r, r);
  carnot::Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline carnot::Vec point(std::mt19937_64& rng, const carnot::Group& g, double r) {
  return uniform(rng, g.dim(), r);
}

inline double real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline carnot::Rational rational(std::mt19937_64& rng, int range = 9, int den = 4) {
  std::uniform_int_distribution<int> p(-range, range), q(1, den);
  return carnot::Rational(p(rng), q(rng));
}

}  // namespace gen
