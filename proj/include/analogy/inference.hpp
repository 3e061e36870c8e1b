#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "analogy/generation.hpp"

namespace analogy {

struct InferenceRequest {
  /// Domain of the input; the output is in the other one.
  Domain from = Domain::A;
  /// Injection scale S. Negative values count back from N (-2 means N-2).
  int inject = -2;
  /// Super-resolve with noise of the trained levels; off gives the
  /// zero-noise path.
  bool noise = true;
  std::uint64_t seed = 0;
};

/// Maps a possibly negative scale to [0, N]; throws std::out_of_range otherwise.
int resolve_scale(int s, int N);

/// Resize the source to scale S, super-resolve it with the source domain's
/// chain up to N, then map it into the other domain at N. Clamped to [-1, 1].
Image translate(const ModelBundle& m, const Image& source, const InferenceRequest& req);

/// translate() for every S in 0..N, in order.
std::vector<Image> injection_sweep(const ModelBundle& m, const Image& source,
                                   const InferenceRequest& req);

/// As translate(), but the domain map happens at S' (S < S' <= N) and the
/// target domain's chain finishes the climb to N. S' = N matches translate().
Image translate_early(const ModelBundle& m, const Image& source, int early_scale,
                      const InferenceRequest& req);

struct AnalogyPair {
  Image sample;  // random unconditional sample of the source domain
  Image mapped;  // its translation
};
AnalogyPair random_analogy(const ModelBundle& m, const InferenceRequest& req);

/// Run `image` up a refinement model from `insert_scale` (default N-1): the
/// image, resized to that scale, replaces the previous-scale input there.
/// At scale 0 the image takes the place of the noise map. Zero noise unless
/// `noise` is set.
Image refine(const ModelBundle& refiner, const Image& image, std::optional<int> insert_scale = {},
             Rng* noise = nullptr);

}  // namespace analogy
