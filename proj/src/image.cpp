#include "analogy/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace analogy {

std::string to_string(Size s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width);
}

Image::Image(Size size, double fill) : size_(size) {
  if (size.height <= 0 || size.width <= 0) {
    throw std::invalid_argument("image size must be positive, got " + to_string(size));
  }
  data_.assign(static_cast<std::size_t>(kChannels) * size.height * size.width, fill);
}

Image::Image(Size size, std::vector<double> planar) : size_(size), data_(std::move(planar)) {
  if (size.height <= 0 || size.width <= 0) {
    throw std::invalid_argument("image size must be positive, got " + to_string(size));
  }
  if (data_.size() != static_cast<std::size_t>(kChannels) * size.height * size.width) {
    throw std::invalid_argument("planar data does not match image size " + to_string(size));
  }
}

Image Image::from_tensor(const ad::Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != kChannels) {
    throw std::invalid_argument("expected a [3,H,W] tensor, got " + ad::to_string(t.shape()));
  }
  return Image({t.dim(1), t.dim(2)}, std::vector<double>(t.values().begin(), t.values().end()));
}

ad::Tensor Image::to_tensor() const {
  return ad::Tensor::from_values({kChannels, size_.height, size_.width}, data_);
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Image Image::clamped(double lo, double hi) const {
  Image out = *this;
  for (double& v : out.data_) v = std::clamp(v, lo, hi);
  return out;
}

double rmse(const Image& a, const Image& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("rmse: size mismatch " + to_string(a.size()) + " vs " +
                                to_string(b.size()));
  }
  double acc = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc / static_cast<double>(x.size()));
}

double max_abs_diff(const Image& a, const Image& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_abs_diff: size mismatch");
  double m = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

}  // namespace analogy
