#pragma once

#include <compare>
#include <span>
#include <string>
#include <vector>

#include "analogy/backend/tensor.hpp"

namespace analogy {

struct Size {
  int height = 0;
  int width = 0;

  auto operator<=>(const Size&) const = default;
  int shorter() const { return height < width ? height : width; }
  int longer() const { return height < width ? width : height; }
};

std::string to_string(Size s);

/// RGB raster with values nominally in [-1, 1], stored planar (channel-major) so
/// it maps directly onto a [3, H, W] tensor.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(Size size, double fill = 0.0);
  Image(Size size, std::vector<double> planar);

  static Image from_tensor(const ad::Tensor& t);
  ad::Tensor to_tensor() const;

  Size size() const { return size_; }
  int height() const { return size_.height; }
  int width() const { return size_.width; }
  bool empty() const { return data_.empty(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;
  Image clamped(double lo = -1.0, double hi = 1.0) const;

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * size_.height + y) * size_.width + x;
  }

  Size size_{};
  std::vector<double> data_;
};

/// Root-mean-square of the per-entry difference.
double rmse(const Image& a, const Image& b);
/// Largest absolute per-entry difference.
double max_abs_diff(const Image& a, const Image& b);

}  // namespace analogy
