#pragma once

#include <cstdint>
#include <random>

#include "analogy/backend/tensor.hpp"

namespace analogy {

/// Independent random streams derived from one root seed.
enum class Stream : std::uint32_t {
  init = 1,
  noise = 2,
  epsilon = 3,
  frame_draw = 4,
  fixed_noise = 5,
  inference = 6,
  extractor = 7,
  palette = 8,
};

/// Seeded generator with a platform-independent normal sampler.
///
/// std::normal_distribution is implementation-defined, so Gaussian samples use
/// Box-Muller on top of mt19937_64 (whose output sequence is fully specified).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Stream for (root, purpose, scale, extra); distinct tuples give unrelated streams.
  static Rng derive(std::uint64_t root, Stream purpose, std::uint64_t scale = 0,
                    std::uint64_t extra = 0);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  ad::Tensor normal_tensor(const ad::Shape& shape, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace analogy
