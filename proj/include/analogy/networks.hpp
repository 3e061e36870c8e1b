#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "analogy/backend/ops.hpp"
#include "analogy/backend/parameters.hpp"
#include "analogy/backend/rng.hpp"
#include "analogy/image.hpp"

namespace analogy {

enum class Domain { A, B };

inline Domain other(Domain d) { return d == Domain::A ? Domain::B : Domain::A; }
inline const char* domain_name(Domain d) { return d == Domain::A ? "A" : "B"; }

/// Fully convolutional stack of `blocks` conv blocks. Blocks 1..blocks-1 are
/// conv -> batch norm -> LeakyReLU; the last block is a bare conv followed by
/// tanh (generators) or nothing (critics).
struct NetSpec {
  int blocks = 5;
  int kernel = 3;
  int base_channels = 32;
  int in_channels = 3;
  int out_channels = 3;
  bool final_tanh = true;
  double slope = 0.2;
  double norm_eps = 1e-5;

  static NetSpec generator(int base_channels = 32);
  static NetSpec discriminator(int base_channels = 32);
  NetSpec as_discriminator() const;

  int receptive_field() const { return blocks * (kernel - 1) + 1; }
  bool operator==(const NetSpec&) const = default;
};

/// Normalization statistics of every normalized block, in block order.
using NormTrace = std::vector<ad::NormStats>;

class Network {
 public:
  Network() = default;
  Network(NetSpec spec, ad::ParameterSet params);

  /// Conv weights ~ N(0, 0.02), conv biases 0, norm gain 1 and shift 0. With
  /// `zero_final` the last conv (weights and bias) starts at zero.
  static Network create(const NetSpec& spec, Rng& rng, bool zero_final);

  /// x: [in_channels, H, W] -> [out_channels, H, W].
  ///
  /// Normalization uses the statistics of the current input unless `fixed`
  /// supplies them; `captured` receives the statistics that were used.
  ad::Tensor forward(const ad::Tensor& x, const NormTrace* fixed = nullptr,
                     NormTrace* captured = nullptr) const;

  const NetSpec& spec() const { return spec_; }
  const ad::ParameterSet& params() const { return params_; }
  ad::ParameterSet& params() { return params_; }
  bool defined() const { return !params_.empty(); }

  Network deep_copy() const { return Network(spec_, params_.deep_copy()); }
  std::uint64_t fingerprint() const { return params_.fingerprint(); }

 private:
  NetSpec spec_;
  ad::ParameterSet params_;
};

/// Optional network families beyond the default two generators and two critics.
struct NetLayout {
  /// Separate conditional generators instead of sharing the unconditional ones.
  bool separate_conditional = false;
  /// Only the A side (refinement models).
  bool single_domain = false;
  bool operator==(const NetLayout&) const = default;
};

/// The four networks (plus optional conditional copies) of one scale.
struct ScaleNets {
  int scale = 0;
  NetLayout layout;
  Network g_a, g_b, d_a, d_b;
  Network gc_a, gc_b;  // only with layout.separate_conditional

  const Network& generator(Domain d) const { return d == Domain::A ? g_a : g_b; }
  const Network& critic(Domain d) const { return d == Domain::A ? d_a : d_b; }
  /// Generator used for conditional maps into domain `d`.
  const Network& conditional_generator(Domain d) const;

  std::vector<ad::Tensor> generator_parameters() const;
  std::vector<ad::Tensor> critic_parameters() const;

  /// Networks in a fixed order with their checkpoint names ("G_A", "D_B", ...).
  std::vector<std::pair<std::string, const Network*>> named() const;
  std::vector<std::pair<std::string, Network*>> named();

  std::uint64_t fingerprint() const;
};

/// Fresh networks for one scale, deterministic in `seed`. Generator final convs
/// are zero-initialized.
ScaleNets make_scale_nets(const NetSpec& generator_spec, int scale, std::uint64_t seed,
                          NetLayout layout = {});

/// Deep copy of `prev` relabelled as `scale`. Throws if `generator_spec` (the
/// architecture planned for the new scale) differs from the one of `prev`.
ScaleNets init_from_previous(const ScaleNets& prev, int scale, const NetSpec& generator_spec);

/// Image-level convenience wrappers (no gradient tracking).
Image generator_forward(const Network& g, const Image& x);
/// Score map of shape [1, H, W].
ad::Tensor discriminator_forward(const Network& d, const Image& x);

}  // namespace analogy
