#include "analogy/backend/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace analogy::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                                " vs " + to_string(b.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) +
                                ", got shape " + to_string(t.shape()));
  }
}

template <typename F>
std::vector<double> map_values(const Tensor& a, F f) {
  auto in = a.values();
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), f);
  return out;
}

template <typename F>
std::vector<double> zip_values(const Tensor& a, const Tensor& b, F f) {
  auto x = a.values();
  auto y = b.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
  return out;
}

struct ConvGeometry {
  int cin, cout, k, h, w;
  int pad() const { return k / 2; }
  int rows() const { return cin * k * k; }
  int positions() const { return h * w; }
};

// cols[(c*k + di)*k + dj, i*w + j] = x[c, i+di-p, j+dj-p], zero outside.
RowMatrix im2col(std::span<const double> x, const ConvGeometry& g) {
  RowMatrix cols = RowMatrix::Zero(g.rows(), g.positions());
  const int p = g.pad();
  for (int c = 0; c < g.cin; ++c) {
    const double* plane = x.data() + static_cast<std::size_t>(c) * g.h * g.w;
    for (int di = 0; di < g.k; ++di) {
      for (int dj = 0; dj < g.k; ++dj) {
        double* row = cols.data() + static_cast<std::size_t>((c * g.k + di) * g.k + dj) * g.positions();
        const int j0 = std::max(0, p - dj);
        const int j1 = std::min(g.w, g.w + p - dj);
        for (int i = 0; i < g.h; ++i) {
          const int si = i + di - p;
          if (si < 0 || si >= g.h) continue;
          const double* src = plane + static_cast<std::size_t>(si) * g.w + (dj - p);
          double* dst = row + static_cast<std::size_t>(i) * g.w;
          for (int j = j0; j < j1; ++j) dst[j] = src[j];
        }
      }
    }
  }
  return cols;
}

std::vector<double> col2im(const RowMatrix& cols, const ConvGeometry& g) {
  std::vector<double> x(static_cast<std::size_t>(g.cin) * g.h * g.w, 0.0);
  const int p = g.pad();
  for (int c = 0; c < g.cin; ++c) {
    double* plane = x.data() + static_cast<std::size_t>(c) * g.h * g.w;
    for (int di = 0; di < g.k; ++di) {
      for (int dj = 0; dj < g.k; ++dj) {
        const double* row =
            cols.data() + static_cast<std::size_t>((c * g.k + di) * g.k + dj) * g.positions();
        const int j0 = std::max(0, p - dj);
        const int j1 = std::min(g.w, g.w + p - dj);
        for (int i = 0; i < g.h; ++i) {
          const int si = i + di - p;
          if (si < 0 || si >= g.h) continue;
          double* dst = plane + static_cast<std::size_t>(si) * g.w + (dj - p);
          const double* src = row + static_cast<std::size_t>(i) * g.w;
          for (int j = j0; j < j1; ++j) dst[j] += src[j];
        }
      }
    }
  }
  return x;
}

ConvGeometry geometry_from(const Tensor& x_like, const Tensor& weight, bool x_is_input) {
  require_rank(x_like, 3, "conv2d");
  require_rank(weight, 4, "conv2d");
  ConvGeometry g{};
  g.cout = weight.dim(0);
  g.cin = weight.dim(1);
  g.k = weight.dim(2);
  if (weight.dim(3) != g.k || g.k % 2 == 0) {
    throw std::invalid_argument("conv2d: kernel must be square with odd size, got " +
                                to_string(weight.shape()));
  }
  const int channels = x_like.dim(0);
  if (channels != (x_is_input ? g.cin : g.cout)) {
    throw std::invalid_argument("conv2d: channel mismatch between " + to_string(x_like.shape()) +
                                " and weight " + to_string(weight.shape()));
  }
  g.h = x_like.dim(1);
  g.w = x_like.dim(2);
  return g;
}

// Per-axis bilinear taps with half-pixel centres.
struct Taps {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

Taps bilinear_taps(int in, int out) {
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = std::min(static_cast<int>(std::floor(src)), in - 1);
    t.lo[o] = lo;
    t.hi[o] = std::min(lo + 1, in - 1);
    t.frac[o] = src - lo;
  }
  return t;
}

std::vector<double> resize_forward(std::span<const double> x, int c, int h, int w, int oh, int ow) {
  const Taps tx = bilinear_taps(w, ow);
  const Taps ty = bilinear_taps(h, oh);
  std::vector<double> tmp(static_cast<std::size_t>(c) * h * ow);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h; ++i) {
      const double* src = x.data() + (static_cast<std::size_t>(ch) * h + i) * w;
      double* dst = tmp.data() + (static_cast<std::size_t>(ch) * h + i) * ow;
      for (int j = 0; j < ow; ++j) {
        const double v0 = src[tx.lo[j]];
        const double v1 = src[tx.hi[j]];
        dst[j] = v0 + tx.frac[j] * (v1 - v0);
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < oh; ++i) {
      const double* r0 = tmp.data() + (static_cast<std::size_t>(ch) * h + ty.lo[i]) * ow;
      const double* r1 = tmp.data() + (static_cast<std::size_t>(ch) * h + ty.hi[i]) * ow;
      double* dst = out.data() + (static_cast<std::size_t>(ch) * oh + i) * ow;
      const double f = ty.frac[i];
      for (int j = 0; j < ow; ++j) dst[j] = r0[j] + f * (r1[j] - r0[j]);
    }
  }
  return out;
}

std::vector<double> resize_transpose(std::span<const double> g, int c, int h, int w, int oh, int ow) {
  const Taps tx = bilinear_taps(w, ow);
  const Taps ty = bilinear_taps(h, oh);
  std::vector<double> tmp(static_cast<std::size_t>(c) * h * ow, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < oh; ++i) {
      const double* src = g.data() + (static_cast<std::size_t>(ch) * oh + i) * ow;
      double* r0 = tmp.data() + (static_cast<std::size_t>(ch) * h + ty.lo[i]) * ow;
      double* r1 = tmp.data() + (static_cast<std::size_t>(ch) * h + ty.hi[i]) * ow;
      const double f = ty.frac[i];
      for (int j = 0; j < ow; ++j) {
        r0[j] += (1.0 - f) * src[j];
        r1[j] += f * src[j];
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(c) * h * w, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h; ++i) {
      const double* src = tmp.data() + (static_cast<std::size_t>(ch) * h + i) * ow;
      double* dst = out.data() + (static_cast<std::size_t>(ch) * h + i) * w;
      for (int j = 0; j < ow; ++j) {
        dst[tx.lo[j]] += (1.0 - tx.frac[j]) * src[j];
        dst[tx.hi[j]] += tx.frac[j] * src[j];
      }
    }
  }
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return Tensor::make_result(a.shape(), zip_values(a, b, std::plus<>{}), "add", {a, b},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{g, g};
                             });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return Tensor::make_result(a.shape(), zip_values(a, b, std::minus<>{}), "sub", {a, b},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{g, neg(g)};
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return Tensor::make_result(a.shape(), zip_values(a, b, std::multiplies<>{}), "mul", {a, b},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>& in) {
                               return std::vector<Tensor>{mul(g, in[1]), mul(g, in[0])};
                             });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  return Tensor::make_result(a.shape(), zip_values(a, b, std::divides<>{}), "div", {a, b},
                             [](const Tensor& g, const Tensor& out, const std::vector<Tensor>& in) {
                               const Tensor ga = div(g, in[1]);
                               return std::vector<Tensor>{ga, neg(mul(ga, out))};
                             });
}

Tensor neg(const Tensor& a) {
  return Tensor::make_result(a.shape(), map_values(a, [](double v) { return -v; }), "neg", {a},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{neg(g)};
                             });
}

Tensor scale(const Tensor& a, double factor) {
  return Tensor::make_result(a.shape(), map_values(a, [factor](double v) { return v * factor; }),
                             "scale", {a},
                             [factor](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{scale(g, factor)};
                             });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return Tensor::make_result(a.shape(), map_values(a, [offset](double v) { return v + offset; }),
                             "add_scalar", {a},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{g};
                             });
}

Tensor sqrt(const Tensor& a) {
  return Tensor::make_result(
      a.shape(),
      map_values(a,
                 [](double v) {
                   if (v < 0) throw std::domain_error("sqrt of a negative value");
                   return std::sqrt(v);
                 }),
      "sqrt", {a}, [](const Tensor& g, const Tensor& out, const std::vector<Tensor>&) {
        return std::vector<Tensor>{mul(g, scale(reciprocal_safe(out), 0.5))};
      });
}

Tensor rsqrt(const Tensor& a) {
  return Tensor::make_result(
      a.shape(),
      map_values(a,
                 [](double v) {
                   if (v <= 0) throw std::domain_error("rsqrt of a non-positive value");
                   return 1.0 / std::sqrt(v);
                 }),
      "rsqrt", {a}, [](const Tensor& g, const Tensor& out, const std::vector<Tensor>&) {
        return std::vector<Tensor>{mul(g, scale(mul(out, mul(out, out)), -0.5))};
      });
}

Tensor reciprocal_safe(const Tensor& a) {
  return Tensor::make_result(
      a.shape(), map_values(a, [](double v) { return v == 0.0 ? 0.0 : 1.0 / v; }),
      "reciprocal_safe", {a}, [](const Tensor& g, const Tensor& out, const std::vector<Tensor>&) {
        return std::vector<Tensor>{neg(mul(g, mul(out, out)))};
      });
}

Tensor tanh(const Tensor& a) {
  return Tensor::make_result(
      a.shape(), map_values(a, [](double v) { return std::tanh(v); }), "tanh", {a},
      [](const Tensor& g, const Tensor& out, const std::vector<Tensor>&) {
        return std::vector<Tensor>{mul(g, add_scalar(neg(mul(out, out)), 1.0))};
      });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  auto in = a.values();
  std::vector<double> out(in.size());
  std::vector<double> mask(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    mask[i] = in[i] > 0.0 ? 1.0 : slope;
    out[i] = in[i] * mask[i];
  }
  // The mask is piecewise constant, so it enters the backward graph as a constant.
  Tensor mask_t = Tensor::from_values(a.shape(), std::move(mask));
  return Tensor::make_result(a.shape(), std::move(out), "leaky_relu", {a},
                             [mask_t](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{mul(g, mask_t)};
                             });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return Tensor::make_result({1}, {total}, "sum", {a},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>& in) {
                               return std::vector<Tensor>{expand(g, in[0].shape())};
                             });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor expand(const Tensor& s, const Shape& shape) {
  if (s.numel() != 1) throw std::invalid_argument("expand needs a one-element tensor");
  return Tensor::make_result(shape, std::vector<double>(numel(shape), s.values()[0]), "expand",
                             {s}, [](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{sum(g)};
                             });
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) { return mul(a, expand(s, a.shape())); }

Tensor channel_sum(const Tensor& x) {
  require_rank(x, 3, "channel_sum");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  auto v = x.values();
  std::vector<double> out(c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += v[ch * plane + i];
    out[ch] = acc;
  }
  return Tensor::make_result({c}, std::move(out), "channel_sum", {x},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>& in) {
                               return std::vector<Tensor>{
                                   channel_broadcast(g, in[0].dim(1), in[0].dim(2))};
                             });
}

Tensor channel_broadcast(const Tensor& v, int height, int width) {
  require_rank(v, 1, "channel_broadcast");
  const int c = v.dim(0);
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  auto src = v.values();
  std::vector<double> out(c * plane);
  for (int ch = 0; ch < c; ++ch) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(ch * plane), plane, src[ch]);
  }
  return Tensor::make_result({c, height, width}, std::move(out), "channel_broadcast", {v},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>&) {
                               return std::vector<Tensor>{channel_sum(g)};
                             });
}

Tensor channel_affine(const Tensor& x, const Tensor& a, const Tensor& b) {
  require_rank(x, 3, "channel_affine");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  if ((a.defined() && a.shape() != Shape{c}) || (b.defined() && b.shape() != Shape{c})) {
    throw std::invalid_argument("channel_affine: coefficients must have shape [" +
                                std::to_string(c) + "]");
  }
  auto v = x.values();
  std::vector<double> out(v.size());
  for (int ch = 0; ch < c; ++ch) {
    const double m = a.defined() ? a.values()[ch] : 1.0;
    const double s = b.defined() ? b.values()[ch] : 0.0;
    const std::size_t o = ch * plane;
    for (std::size_t i = 0; i < plane; ++i) out[o + i] = v[o + i] * m + s;
  }
  const bool has_a = a.defined();
  return Tensor::make_result(
      x.shape(), std::move(out), "channel_affine", {x, a, b},
      [has_a](const Tensor& g, const Tensor&, const std::vector<Tensor>& in) {
        std::vector<Tensor> r(3);
        if (detail::input_needed(0)) r[0] = has_a ? channel_affine(g, in[1]) : g;
        if (detail::input_needed(1)) r[1] = channel_dot(g, in[0]);
        if (detail::input_needed(2)) r[2] = channel_sum(g);
        return r;
      });
}

Tensor channel_dot(const Tensor& x, const Tensor& y) {
  require_rank(x, 3, "channel_dot");
  require_same_shape(x, y, "channel_dot");
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  auto u = x.values();
  auto v = y.values();
  std::vector<double> out(c, 0.0);
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    const std::size_t o = ch * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += u[o + i] * v[o + i];
    out[ch] = acc;
  }
  return Tensor::make_result({c}, std::move(out), "channel_dot", {x, y},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>& in) {
                               std::vector<Tensor> r(2);
                               if (detail::input_needed(0)) r[0] = channel_affine(in[1], g);
                               if (detail::input_needed(1)) r[1] = channel_affine(in[0], g);
                               return r;
                             });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const ConvGeometry g = geometry_from(x, weight, true);
  const RowMatrix cols = im2col(x.values(), g);
  std::vector<double> out(static_cast<std::size_t>(g.cout) * g.positions());
  MatMap y(out.data(), g.cout, g.positions());
  y.noalias() = ConstMatMap(weight.values().data(), g.cout, g.rows()) * cols;
  if (bias.defined()) {
    if (bias.shape() != Shape{g.cout}) {
      throw std::invalid_argument("conv2d: bias shape " + to_string(bias.shape()));
    }
    auto b = bias.values();
    for (int o = 0; o < g.cout; ++o) y.row(o).array() += b[o];
  }
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  const int k = g.k;
  return Tensor::make_result(
      {g.cout, g.h, g.w}, std::move(out), "conv2d", std::move(inputs),
      [k](const Tensor& grad, const Tensor&, const std::vector<Tensor>& in) {
        std::vector<Tensor> r(in.size());
        if (detail::input_needed(0)) r[0] = conv2d_input_grad(grad, in[1]);
        if (detail::input_needed(1)) r[1] = conv2d_weight_grad(in[0], grad, k);
        if (in.size() > 2 && detail::input_needed(2)) r[2] = channel_sum(grad);
        return r;
      });
}

Tensor conv2d_input_grad(const Tensor& gy, const Tensor& weight) {
  const ConvGeometry g = geometry_from(gy, weight, false);
  RowMatrix cols(g.rows(), g.positions());
  cols.noalias() = ConstMatMap(weight.values().data(), g.cout, g.rows()).transpose() *
                   ConstMatMap(gy.values().data(), g.cout, g.positions());
  return Tensor::make_result(
      {g.cin, g.h, g.w}, col2im(cols, g), "conv2d_input_grad", {gy, weight},
      [](const Tensor& h, const Tensor&, const std::vector<Tensor>& in) {
        // <h, Gx(g, w)> = <g, conv(h, w)>
        std::vector<Tensor> r(2);
        if (detail::input_needed(0)) r[0] = conv2d(h, in[1]);
        if (detail::input_needed(1)) r[1] = conv2d_weight_grad(h, in[0], in[1].dim(2));
        return r;
      });
}

Tensor conv2d_weight_grad(const Tensor& x, const Tensor& gy, int kernel) {
  require_rank(x, 3, "conv2d_weight_grad");
  require_rank(gy, 3, "conv2d_weight_grad");
  if (x.dim(1) != gy.dim(1) || x.dim(2) != gy.dim(2)) {
    throw std::invalid_argument("conv2d_weight_grad: spatial mismatch " + to_string(x.shape()) +
                                " vs " + to_string(gy.shape()));
  }
  const ConvGeometry g{x.dim(0), gy.dim(0), kernel, x.dim(1), x.dim(2)};
  const RowMatrix cols = im2col(x.values(), g);
  std::vector<double> out(static_cast<std::size_t>(g.cout) * g.rows());
  MatMap(out.data(), g.cout, g.rows()).noalias() =
      ConstMatMap(gy.values().data(), g.cout, g.positions()) * cols.transpose();
  return Tensor::make_result(
      {g.cout, g.cin, kernel, kernel}, std::move(out), "conv2d_weight_grad", {x, gy},
      [](const Tensor& h, const Tensor&, const std::vector<Tensor>& in) {
        // <h, Gw(x, g)> = <g, conv(x, h)>
        std::vector<Tensor> r(2);
        if (detail::input_needed(0)) r[0] = conv2d_input_grad(in[1], h);
        if (detail::input_needed(1)) r[1] = conv2d(in[0], h);
        return r;
      });
}

Tensor resize_bilinear(const Tensor& x, int height, int width) {
  require_rank(x, 3, "resize_bilinear");
  if (height <= 0 || width <= 0) throw std::invalid_argument("resize_bilinear: non-positive size");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<double> out;
  if (h == height && w == width) {
    out.assign(x.values().begin(), x.values().end());
  } else {
    out = resize_forward(x.values(), c, h, w, height, width);
  }
  return Tensor::make_result({c, height, width}, std::move(out), "resize_bilinear", {x},
                             [](const Tensor& g, const Tensor&, const std::vector<Tensor>& in) {
                               return std::vector<Tensor>{
                                   resize_bilinear_adjoint(g, in[0].dim(1), in[0].dim(2))};
                             });
}

Tensor resize_bilinear_adjoint(const Tensor& g, int in_height, int in_width) {
  require_rank(g, 3, "resize_bilinear_adjoint");
  const int c = g.dim(0), oh = g.dim(1), ow = g.dim(2);
  std::vector<double> out;
  if (oh == in_height && ow == in_width) {
    out.assign(g.values().begin(), g.values().end());
  } else {
    out = resize_transpose(g.values(), c, in_height, in_width, oh, ow);
  }
  return Tensor::make_result({c, in_height, in_width}, std::move(out), "resize_bilinear_adjoint",
                             {g}, [](const Tensor& h, const Tensor&, const std::vector<Tensor>& in) {
                               return std::vector<Tensor>{
                                   resize_bilinear(h, in[0].dim(1), in[0].dim(2))};
                             });
}

Tensor l2_norm(const Tensor& a) { return sqrt(sum(mul(a, a))); }

Tensor rms(const Tensor& a) { return sqrt(mean(mul(a, a))); }

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                  const NormStats* fixed, NormStats* captured) {
  require_rank(x, 3, "batch_norm");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    throw std::invalid_argument("batch_norm: affine parameters must have shape [C]");
  }
  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  Tensor mu, var;
  if (fixed) {
    if (fixed->mean.shape() != Shape{c} || fixed->variance.shape() != Shape{c}) {
      throw std::invalid_argument("batch_norm: fixed statistics have the wrong shape");
    }
    mu = fixed->mean.detach();
    var = fixed->variance.detach();
  } else {
    mu = scale(channel_sum(x), inv_n);
  }
  const Tensor centered = channel_affine(x, {}, neg(mu));
  if (!fixed) var = scale(channel_dot(centered, centered), inv_n);
  if (captured) *captured = NormStats{mu.detach(), var.detach()};
  const Tensor gain = mul(rsqrt(add_scalar(var, eps)), gamma);
  return channel_affine(centered, gain, beta);
}

}  // namespace analogy::ad
