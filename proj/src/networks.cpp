#include "analogy/networks.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace analogy {

namespace {

std::string block_name(int i, const char* part) {
  return "block" + std::to_string(i) + "." + part;
}

int block_in(const NetSpec& s, int i) { return i == 0 ? s.in_channels : s.base_channels; }
int block_out(const NetSpec& s, int i) { return i == s.blocks - 1 ? s.out_channels : s.base_channels; }

}  // namespace

NetSpec NetSpec::generator(int base_channels) {
  NetSpec s;
  s.base_channels = base_channels;
  return s;
}

NetSpec NetSpec::discriminator(int base_channels) { return generator(base_channels).as_discriminator(); }

NetSpec NetSpec::as_discriminator() const {
  NetSpec s = *this;
  s.out_channels = 1;
  s.final_tanh = false;
  return s;
}

Network::Network(NetSpec spec, ad::ParameterSet params)
    : spec_(spec), params_(std::move(params)) {
  if (spec_.blocks < 1 || spec_.kernel % 2 == 0 || spec_.base_channels < 1) {
    throw std::invalid_argument("invalid network spec");
  }
  for (int i = 0; i < spec_.blocks; ++i) {
    const ad::Shape w{block_out(spec_, i), block_in(spec_, i), spec_.kernel, spec_.kernel};
    if (params_.at(block_name(i, "conv.weight")).shape() != w) {
      throw std::invalid_argument("parameter shape mismatch at " + block_name(i, "conv.weight"));
    }
  }
}

Network Network::create(const NetSpec& spec, Rng& rng, bool zero_final) {
  ad::ParameterSet p;
  for (int i = 0; i < spec.blocks; ++i) {
    const int cin = block_in(spec, i);
    const int cout = block_out(spec, i);
    const bool zero = zero_final && i == spec.blocks - 1;
    p.add(block_name(i, "conv.weight"),
          zero ? ad::Tensor::zeros({cout, cin, spec.kernel, spec.kernel})
               : rng.normal_tensor({cout, cin, spec.kernel, spec.kernel}, 0.02));
    p.add(block_name(i, "conv.bias"), ad::Tensor::zeros({cout}));
    if (i < spec.blocks - 1) {
      p.add(block_name(i, "norm.gamma"), ad::Tensor::full({cout}, 1.0));
      p.add(block_name(i, "norm.beta"), ad::Tensor::zeros({cout}));
    }
  }
  return Network(spec, std::move(p));
}

ad::Tensor Network::forward(const ad::Tensor& x, const NormTrace* fixed, NormTrace* captured) const {
  if (x.rank() != 3 || x.dim(0) != spec_.in_channels) {
    throw std::invalid_argument("network input must be [" + std::to_string(spec_.in_channels) +
                                ",H,W], got " + ad::to_string(x.shape()));
  }
  if (fixed && static_cast<int>(fixed->size()) != spec_.blocks - 1) {
    throw std::invalid_argument("fixed normalization trace has the wrong length");
  }
  if (captured) captured->clear();
  ad::Tensor y = x;
  for (int i = 0; i < spec_.blocks; ++i) {
    y = ad::conv2d(y, params_.at(block_name(i, "conv.weight")),
                   params_.at(block_name(i, "conv.bias")));
    if (i < spec_.blocks - 1) {
      ad::NormStats used;
      y = ad::batch_norm(y, params_.at(block_name(i, "norm.gamma")),
                         params_.at(block_name(i, "norm.beta")), spec_.norm_eps,
                         fixed ? &(*fixed)[static_cast<std::size_t>(i)] : nullptr,
                         captured ? &used : nullptr);
      if (captured) captured->push_back(std::move(used));
      y = ad::leaky_relu(y, spec_.slope);
    } else if (spec_.final_tanh) {
      y = ad::tanh(y);
    }
  }
  return y;
}

const Network& ScaleNets::conditional_generator(Domain d) const {
  if (layout.separate_conditional) return d == Domain::A ? gc_a : gc_b;
  return generator(d);
}

std::vector<std::pair<std::string, const Network*>> ScaleNets::named() const {
  std::vector<std::pair<std::string, const Network*>> out{{"G_A", &g_a}, {"D_A", &d_a}};
  if (!layout.single_domain) {
    out.emplace_back("G_B", &g_b);
    out.emplace_back("D_B", &d_b);
  }
  if (layout.separate_conditional) {
    out.emplace_back("GC_A", &gc_a);
    if (!layout.single_domain) out.emplace_back("GC_B", &gc_b);
  }
  return out;
}

std::vector<std::pair<std::string, Network*>> ScaleNets::named() {
  std::vector<std::pair<std::string, Network*>> out;
  for (auto& [name, net] : std::as_const(*this).named()) {
    out.emplace_back(name, const_cast<Network*>(net));
  }
  return out;
}

std::vector<ad::Tensor> ScaleNets::generator_parameters() const {
  std::vector<ad::Tensor> out;
  for (const auto& [name, net] : named()) {
    if (name[0] != 'G') continue;
    for (const auto& t : net->params().tensors()) out.push_back(t);
  }
  return out;
}

std::vector<ad::Tensor> ScaleNets::critic_parameters() const {
  std::vector<ad::Tensor> out;
  for (const auto& [name, net] : named()) {
    if (name[0] != 'D') continue;
    for (const auto& t : net->params().tensors()) out.push_back(t);
  }
  return out;
}

std::uint64_t ScaleNets::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, net] : named()) {
    h ^= net->fingerprint() + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

ScaleNets make_scale_nets(const NetSpec& generator_spec, int scale, std::uint64_t seed,
                          NetLayout layout) {
  Rng rng = Rng::derive(seed, Stream::init, static_cast<std::uint64_t>(scale));
  const NetSpec disc = generator_spec.as_discriminator();
  ScaleNets nets;
  nets.scale = scale;
  nets.layout = layout;
  nets.g_a = Network::create(generator_spec, rng, true);
  nets.d_a = Network::create(disc, rng, false);
  if (!layout.single_domain) {
    nets.g_b = Network::create(generator_spec, rng, true);
    nets.d_b = Network::create(disc, rng, false);
  }
  if (layout.separate_conditional) {
    nets.gc_a = Network::create(generator_spec, rng, true);
    if (!layout.single_domain) nets.gc_b = Network::create(generator_spec, rng, true);
  }
  return nets;
}

ScaleNets init_from_previous(const ScaleNets& prev, int scale, const NetSpec& generator_spec) {
  if (!(prev.g_a.spec() == generator_spec)) {
    throw std::invalid_argument(
        "cannot initialize scale " + std::to_string(scale) +
        " from the previous scale: network width or architecture differs");
  }
  ScaleNets next;
  next.scale = scale;
  next.layout = prev.layout;
  for (auto& [name, net] : next.named()) {
    for (const auto& [prev_name, prev_net] : prev.named()) {
      if (prev_name == name) *net = prev_net->deep_copy();
    }
  }
  return next;
}

Image generator_forward(const Network& g, const Image& x) {
  ad::NoGradGuard no_grad;
  return Image::from_tensor(g.forward(x.to_tensor()));
}

ad::Tensor discriminator_forward(const Network& d, const Image& x) {
  ad::NoGradGuard no_grad;
  return d.forward(x.to_tensor());
}

}  // namespace analogy
