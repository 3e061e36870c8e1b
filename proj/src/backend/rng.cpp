#include "analogy/backend/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace analogy {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng Rng::derive(std::uint64_t root, Stream purpose, std::uint64_t scale, std::uint64_t extra) {
  std::uint64_t s = splitmix64(root);
  s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
  s = splitmix64(s ^ (scale + 0x100));
  s = splitmix64(s ^ (extra + 0x10000));
  return Rng(s);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t v = 0;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

ad::Tensor Rng::normal_tensor(const ad::Shape& shape, double stddev) {
  std::vector<double> v(ad::numel(shape));
  for (double& x : v) x = stddev * normal();
  return ad::Tensor::from_values(shape, std::move(v));
}

}  // namespace analogy
