#pragma once

#include <optional>

#include "analogy/backend/tensor.hpp"

// Differentiable op set. Every backward rule is written in terms of these same
// ops, so gradients built with create_graph=true are differentiable again.
//
// Image-like tensors use the planar layout [channels, height, width].
namespace analogy::ad {

// Elementwise, operands of identical shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

Tensor sqrt(const Tensor& a);
/// 1/sqrt(a).
Tensor rsqrt(const Tensor& a);
/// 1/a with the convention 1/0 := 0 (gives sqrt and norms a zero subgradient at 0).
Tensor reciprocal_safe(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);

/// Sum of all entries, shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Broadcast a one-element tensor to `shape`.
Tensor expand(const Tensor& scalar, const Shape& shape);
/// Multiply every entry of `a` by the one-element tensor `s`.
Tensor mul_scalar(const Tensor& a, const Tensor& s);

/// [C,H,W] -> [C], summing over spatial positions.
Tensor channel_sum(const Tensor& x);
/// [C] -> [C,H,W].
Tensor channel_broadcast(const Tensor& v, int height, int width);
/// x[c,i,j] * a[c] + b[c] for x [C,H,W]; an undefined `a` means 1, an undefined `b` means 0.
Tensor channel_affine(const Tensor& x, const Tensor& a, const Tensor& b = {});
/// [C,H,W] x [C,H,W] -> [C], per-channel inner product.
Tensor channel_dot(const Tensor& x, const Tensor& y);

/// Stride-1 correlation with zero padding k/2 (odd k), which keeps H and W.
/// x: [Cin,H,W], weight: [Cout,Cin,k,k], bias: [Cout] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias = {});
/// Adjoint of conv2d with respect to its input: g [Cout,H,W] -> [Cin,H,W].
Tensor conv2d_input_grad(const Tensor& g, const Tensor& weight);
/// Adjoint of conv2d with respect to its weight: -> [Cout,Cin,k,k].
Tensor conv2d_weight_grad(const Tensor& x, const Tensor& g, int kernel);

/// Bilinear resampling with half-pixel centres and edge clamping.
Tensor resize_bilinear(const Tensor& x, int height, int width);
/// Adjoint of resize_bilinear: maps a [C,height,width] gradient back to [C,in_h,in_w].
Tensor resize_bilinear_adjoint(const Tensor& g, int in_height, int in_width);

// Composites.
Tensor l2_norm(const Tensor& a);
/// sqrt(mean(a^2)).
Tensor rms(const Tensor& a);

struct NormStats {
  Tensor mean;      // [C]
  Tensor variance;  // [C], biased
};

/// Per-channel normalization over spatial positions (batch of one).
///
/// By default the statistics come from `x` itself and are differentiated
/// through. When `fixed` is given those statistics are used as constants, which
/// makes every output depend only on its convolutional receptive field.
/// `captured`, when non-null, receives the statistics that were used.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                  const NormStats* fixed = nullptr, NormStats* captured = nullptr);

}  // namespace analogy::ad
