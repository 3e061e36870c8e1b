#pragma once

#include <vector>

#include "analogy/image.hpp"

namespace analogy {

/// Per-scale size table. Scale 0 is the coarsest, scale `N` the finest
/// (the source resolution). Scales below `K` use residual generators.
struct ScaleSchedule {
  double r = 0.75;  ///< per-scale shrink ratio, 0 < r < 1
  int N = 0;        ///< index of the finest scale
  int K = 0;        ///< first non-residual scale, 0 <= K <= N+1
  std::vector<Size> sizes;

  int num_scales() const { return N + 1; }
  Size finest() const { return sizes.back(); }
  Size at(int n) const;
  bool operator==(const ScaleSchedule&) const = default;
};

/// Rounds half up, the rounding used for every scale dimension.
int round_half_up(double v);

/// Size of the finest scale: the source, shrunk so its longer side is at most
/// `max_size` (aspect ratio preserved).
Size finest_size(Size source, int max_size);

/// Builds the schedule for a source of the given size.
///
/// N is the largest number of shrink steps that keeps the shorter side of the
/// coarsest scale at or above `min_size`; sizes[n] = round(sizes[N] * r^(N-n))
/// per dimension. Throws std::invalid_argument for r outside (0,1), for
/// min_size >= max_size, for fewer than two scales, for a coarsest side below
/// 4 px, for a size table that is not strictly increasing, and for K outside
/// [0, N+1].
ScaleSchedule build_schedule(Size source, double r, int min_size, int max_size, int k_offset);

/// Bilinear resampling (half-pixel centres); output clamped to [-1, 1].
Image resize(const Image& img, Size target);

/// One image per scale (0..N); the last element is the input itself.
/// Throws if `img` is not at sched.finest().
std::vector<Image> build_pyramid(const Image& img, const ScaleSchedule& sched);

}  // namespace analogy
