#include "analogy/pyramid.hpp"

#include <cmath>
#include <stdexcept>

#include "analogy/backend/ops.hpp"

namespace analogy {

Size ScaleSchedule::at(int n) const {
  if (n < 0 || n > N) {
    throw std::out_of_range("scale " + std::to_string(n) + " outside [0, " + std::to_string(N) +
                            "]");
  }
  return sizes[static_cast<std::size_t>(n)];
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

Size finest_size(Size source, int max_size) {
  if (source.height <= 0 || source.width <= 0) {
    throw std::invalid_argument("source size must be positive, got " + to_string(source));
  }
  if (source.longer() <= max_size) return source;
  const double f = static_cast<double>(max_size) / source.longer();
  Size s{round_half_up(source.height * f), round_half_up(source.width * f)};
  // The longer side lands exactly on max_size.
  if (source.height >= source.width) {
    s.height = max_size;
  } else {
    s.width = max_size;
  }
  return s;
}

ScaleSchedule build_schedule(Size source, double r, int min_size, int max_size, int k_offset) {
  if (!(r > 0.0 && r < 1.0)) {
    throw std::invalid_argument("scale ratio r must lie in (0, 1), got " + std::to_string(r));
  }
  if (min_size <= 0 || min_size >= max_size) {
    throw std::invalid_argument("need 0 < min_size < max_size, got min_size=" +
                                std::to_string(min_size) + " max_size=" + std::to_string(max_size));
  }
  const Size top = finest_size(source, max_size);

  int n_steps = 0;
  while (round_half_up(top.shorter() * std::pow(r, n_steps + 1)) >= min_size) ++n_steps;
  if (n_steps < 1) {
    throw std::invalid_argument("image of size " + to_string(top) +
                                " yields a single scale; at least two are required");
  }

  ScaleSchedule s;
  s.r = r;
  s.N = n_steps;
  s.K = n_steps - k_offset;
  if (s.K < 0 || s.K > s.N + 1) {
    throw std::invalid_argument("K = N - k_offset = " + std::to_string(s.K) +
                                " outside [0, N+1] for N=" + std::to_string(s.N));
  }
  s.sizes.resize(static_cast<std::size_t>(s.N) + 1);
  for (int n = 0; n <= s.N; ++n) {
    const double f = std::pow(r, s.N - n);
    s.sizes[static_cast<std::size_t>(n)] =
        n == s.N ? top : Size{round_half_up(top.height * f), round_half_up(top.width * f)};
  }
  if (s.sizes.front().shorter() < 4) {
    throw std::invalid_argument("coarsest scale " + to_string(s.sizes.front()) +
                                " has a side below 4 px");
  }
  for (int n = 0; n < s.N; ++n) {
    const Size a = s.sizes[static_cast<std::size_t>(n)];
    const Size b = s.sizes[static_cast<std::size_t>(n) + 1];
    if (!(a.height < b.height && a.width < b.width)) {
      throw std::invalid_argument("size table is not strictly increasing at scale " +
                                  std::to_string(n) + " (" + to_string(a) + " -> " + to_string(b) +
                                  ")");
    }
  }
  return s;
}

Image resize(const Image& img, Size target) {
  if (target.height <= 0 || target.width <= 0) {
    throw std::invalid_argument("resize target must be positive, got " + to_string(target));
  }
  if (img.size() == target) return img.clamped();
  ad::NoGradGuard no_grad;
  return Image::from_tensor(ad::resize_bilinear(img.to_tensor(), target.height, target.width))
      .clamped();
}

std::vector<Image> build_pyramid(const Image& img, const ScaleSchedule& sched) {
  if (img.size() != sched.finest()) {
    throw std::invalid_argument("image size " + to_string(img.size()) +
                                " does not match the finest scale " + to_string(sched.finest()));
  }
  std::vector<Image> levels;
  levels.reserve(sched.sizes.size());
  for (int n = 0; n < sched.N; ++n) levels.push_back(resize(img, sched.at(n)));
  levels.push_back(img);
  return levels;
}

}  // namespace analogy
