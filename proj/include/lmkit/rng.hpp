#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace lmkit {

// Counter-based generator: draw i of stream s under seed k is a pure function
// of (k, s, i). Streams split by subject are independent of evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  Rng split(std::uint64_t stream) const { return Rng(key_, stream + 1); }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential() { return -std::log(uniform()); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Dirichlet(1, ..., 1) draw of the given length.
  Eigen::VectorXd flat_dirichlet(int size) {
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v[i] = exponential();
    return v / v.sum();
  }

  // Inverse-CDF draw from a probability vector.
  int categorical(const Eigen::VectorXd& p) {
    const double u = uniform();
    double cumulative = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      cumulative += p[i];
      if (u < cumulative) return i;
    }
    for (int i = static_cast<int>(p.size()) - 1; i >= 0; --i) {
      if (p[i] > 0.0) return i;
    }
    return 0;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lmkit
