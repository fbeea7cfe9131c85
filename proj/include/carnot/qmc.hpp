#pragma once

#include <boost/random/sobol.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <utility>
#include <vector>

namespace carnot {

struct MeasureEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based seed for (seed, stream, replicate).
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t rep = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ rep);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Unshifted Sobol points, row-major (count x dim), cached per (dim, log2n).
inline std::shared_ptr<const std::vector<double>> sobol_points(int dim, int log2n) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dim, log2n);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const std::size_t count = std::size_t{1} << log2n;
  auto pts = std::make_shared<std::vector<double>>(count * std::max(dim, 1));
  if (dim > 0) {
    boost::random::sobol gen(dim);
    for (std::size_t i = 0; i < count * dim; ++i)
      (*pts)[i] = std::ldexp(static_cast<double>(gen()), -64);
  }
  cache[key] = pts;
  return pts;
}

// Cranley-Patterson shifted Sobol point set: replicate `rep` of `stream`.
class RqmcPoints {
 public:
  RqmcPoints(int dim, int log2n, std::uint64_t seed, std::uint64_t stream, int rep)
      : dim_(dim), count_(std::size_t{1} << log2n), base_(sobol_points(dim, log2n)),
        shift_(dim) {
    std::mt19937_64 rng(stream_seed(seed, stream, static_cast<std::uint64_t>(rep)));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& s : shift_) s = u(rng);
  }
  std::size_t size() const { return count_; }
  int dim() const { return dim_; }
  double operator()(std::size_t i, int j) const {
    double v = (*base_)[i * dim_ + j] + shift_[j];
    return v >= 1.0 ? v - 1.0 : v;
  }

 private:
  int dim_;
  std::size_t count_;
  std::shared_ptr<const std::vector<double>> base_;
  std::vector<double> shift_;
};

// Mean and standard error of independent replicate estimates.
inline MeasureEstimate from_replicates(const std::vector<double>& reps, long long samples,
                                       std::uint64_t seed) {
  MeasureEstimate e;
  e.samples = samples;
  e.seed = seed;
  const double r = static_cast<double>(reps.size());
  if (reps.empty()) return e;
  double m = 0;
  for (double v : reps) m += v;
  m /= r;
  double ss = 0;
  for (double v : reps) ss += (v - m) * (v - m);
  e.value = m;
  e.std_error = reps.size() > 1 ? std::sqrt(ss / (r - 1) / r) : 0.0;
  return e;
}

// First-order error propagation for a product/quotient of independent estimates.
inline double relative_error(const MeasureEstimate& e) {
  return e.value != 0.0 ? e.std_error / std::abs(e.value) : 0.0;
}

}  // namespace carnot
