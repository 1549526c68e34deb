#pragma once
// Deterministic randomness. Every stream is an mt19937_64 whose seed is
// derived from a root seed plus a tag, and all distributions are generated
// from raw bits here rather than through std:: distribution objects, whose
// output is implementation-defined. Identical seeds give identical draws on
// every platform we build on.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace translaw {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent stream seed from a root seed, a short tag, and up to two
// indices (e.g. a grid position).
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                                 std::uint64_t i = 0, std::uint64_t j = 0) {
  std::uint64_t h = mix64(root);
  for (char c : tag) h = mix64(h ^ static_cast<unsigned char>(c));
  h = mix64(h ^ mix64(i));
  return mix64(h ^ mix64(j ^ 0x517cc1b727220a95ull));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0,1) with 53 bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Log-uniform on [a,b]; requires 0 < a <= b.
  double log_uniform(double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  }

  // Marsaglia polar method, spare variate cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Uniform on the unit sphere in R^d.
  Eigen::VectorXd unit_sphere(int d) {
    Eigen::VectorXd x(d);
    double n2 = 0.0;
    do {
      for (int i = 0; i < d; ++i) x[i] = gaussian();
      n2 = x.squaredNorm();
    } while (n2 == 0.0);
    return x / std::sqrt(n2);
  }

  std::uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace translaw
