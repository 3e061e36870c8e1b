#include "analogy/generation.hpp"

#include <stdexcept>
#include <string>

namespace analogy {

namespace {

thread_local BranchCounters t_counters;

void require_shape(const ad::Tensor& t, const ad::Tensor& like, const char* what) {
  if (t.shape() != like.shape()) {
    throw std::invalid_argument(std::string(what) + ": shape " + ad::to_string(t.shape()) +
                                " does not match " + ad::to_string(like.shape()));
  }
}

ad::Tensor upsample(const Image& img, Size target) { return resize(img, target).to_tensor(); }

}  // namespace

double NoisePlan::sigma(Domain d, int n) const {
  const auto& s = d == Domain::A ? sigma_a : sigma_b;
  if (n < 0 || n >= static_cast<int>(s.size())) {
    throw std::logic_error("noise level of scale " + std::to_string(n) + " for domain " +
                           domain_name(d) + " is not available yet");
  }
  return s[static_cast<std::size_t>(n)];
}

bool NoisePlan::has_sigma(int n) const {
  return n >= 0 && n < static_cast<int>(sigma_a.size());
}

void NoisePlan::set_sigma(Domain d, int n, double value) {
  auto& s = d == Domain::A ? sigma_a : sigma_b;
  if (n > static_cast<int>(s.size())) {
    throw std::logic_error("noise levels must be set scale by scale");
  }
  if (n == static_cast<int>(s.size())) {
    s.push_back(value);
  } else {
    s[static_cast<std::size_t>(n)] = value;
  }
}

NoisePlan make_noise_plan(const ScaleSchedule& sched, std::uint64_t seed) {
  NoisePlan p;
  p.seed = seed;
  Rng rng = Rng::derive(seed, Stream::fixed_noise);
  p.z_star_a = noise_image(sched.at(0), 1.0, rng);
  p.z_star_b = noise_image(sched.at(0), 1.0, rng);
  return p;
}

int effective_K(const ScaleSchedule& sched, ResidualPolicy policy) {
  switch (policy) {
    case ResidualPolicy::standard: return sched.K;
    case ResidualPolicy::all: return sched.N + 1;
    case ResidualPolicy::none: return 0;
  }
  return sched.K;
}

int ModelBundle::K() const { return effective_K(sched, config.ablations.residual_policy); }

NetLayout ModelBundle::layout() const {
  return NetLayout{.separate_conditional = !refinement && !config.ablations.shared_cond_uncond,
                   .single_domain = refinement};
}

const ScaleNets& ModelBundle::at(int n) const {
  if (n < 0 || n >= static_cast<int>(nets.size())) {
    throw std::out_of_range("scale " + std::to_string(n) + " has no networks (model covers 0.." +
                            std::to_string(static_cast<int>(nets.size()) - 1) + ")");
  }
  return nets[static_cast<std::size_t>(n)];
}

std::uint64_t ModelBundle::fingerprint() const {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (const auto& s : nets) h = (h ^ s.fingerprint()) * 0x100000001b3ULL;
  return h;
}

BranchCounters& branch_counters() { return t_counters; }

ad::Tensor uncond_step(const Network& g, const ad::Tensor& prev_up, const ad::Tensor& z, int n,
                       int K, const NormTrace* fixed, NormTrace* captured) {
  if (n == 0) {
    if (prev_up.defined()) throw std::invalid_argument("uncond_step: scale 0 takes no previous image");
    ++t_counters.uncond_initial;
    return g.forward(z, fixed, captured);
  }
  if (!prev_up.defined()) {
    throw std::invalid_argument("uncond_step: scale " + std::to_string(n) +
                                " needs the previous-scale image");
  }
  require_shape(prev_up, z, "uncond_step");
  const ad::Tensor out = g.forward(ad::add(z, prev_up), fixed, captured);
  if (n < K) {
    ++t_counters.uncond_residual;
    return ad::add(out, prev_up);
  }
  ++t_counters.uncond_plain;
  return out;
}

ad::Tensor cond_map(const Network& g, const ad::Tensor& x, int n, int K, const NormTrace* fixed,
                    NormTrace* captured) {
  const ad::Tensor out = g.forward(x, fixed, captured);
  if (n < K) {
    ++t_counters.cond_residual;
    return ad::add(out, x);
  }
  ++t_counters.cond_plain;
  return out;
}

ad::Tensor cond_map_with_prev(const Network& g, const ad::Tensor& x,
                              const ad::Tensor& prev_translation_up, int n, int K) {
  require_shape(prev_translation_up, x, "cond_map_with_prev");
  const ad::Tensor out = g.forward(ad::add(x, prev_translation_up));
  if (n < K) {
    ++t_counters.cond_residual;
    return ad::add(out, x);
  }
  ++t_counters.cond_plain;
  return out;
}

Image uncond_step(const Network& g, const std::optional<Image>& prev, const Image& z, int n,
                  int K) {
  if (n > 0 && !prev) {
    throw std::invalid_argument("uncond_step: scale " + std::to_string(n) +
                                " needs the previous-scale image");
  }
  ad::NoGradGuard no_grad;
  const ad::Tensor prev_up = prev ? upsample(*prev, z.size()) : ad::Tensor();
  return Image::from_tensor(uncond_step(g, prev_up, z.to_tensor(), n, K));
}

Image cond_map(const Network& g, const Image& x, int n, int K) {
  ad::NoGradGuard no_grad;
  return Image::from_tensor(cond_map(g, x.to_tensor(), n, K));
}

CyclePair cycle_chain(const Network& g_back, const Network& g_to, const Image& x, int n, int K) {
  if (n >= K) {
    throw std::invalid_argument("cycle_chain: scale " + std::to_string(n) +
                                " is not below K = " + std::to_string(K));
  }
  CyclePair p;
  p.ab = cond_map(g_to, x, n, K);
  p.aba = cond_map(g_back, p.ab, n, K);
  return p;
}

double compute_sigma(const Image& recon_prev_up, const Image& target) {
  return rmse(recon_prev_up, target);
}

Image noise_image(Size size, double sigma, Rng& rng) {
  return Image::from_tensor(rng.normal_tensor({Image::kChannels, size.height, size.width}, sigma));
}

std::vector<Image> uncond_chain(const ModelBundle& m, Domain d, int stop_scale, ChainMode mode,
                                Rng* rng) {
  if (stop_scale < 0 || stop_scale > m.N()) {
    throw std::out_of_range("stop scale " + std::to_string(stop_scale) + " outside [0, " +
                            std::to_string(m.N()) + "]");
  }
  if (mode == ChainMode::random && rng == nullptr) {
    throw std::invalid_argument("uncond_chain: random mode needs a random stream");
  }
  std::vector<Image> out;
  out.reserve(static_cast<std::size_t>(stop_scale) + 1);
  const int K = m.K();
  for (int n = 0; n <= stop_scale; ++n) {
    const Network& g = m.at(n).generator(d);
    const Size size = m.sched.at(n);
    Image z;
    if (mode == ChainMode::reconstruction) {
      z = n == 0 ? m.plan.z_star(d) : Image(size, 0.0);
    } else {
      z = noise_image(size, m.plan.sigma(d, n), *rng);
    }
    out.push_back(n == 0 ? uncond_step(g, std::nullopt, z, 0, K)
                         : uncond_step(g, out.back(), z, n, K));
  }
  return out;
}

Image uncond_continue(const ModelBundle& m, Domain d, const Image& start, int start_scale,
                      int stop_scale, Rng* rng) {
  if (start_scale < 0 || start_scale > stop_scale || stop_scale > m.N()) {
    throw std::out_of_range("invalid scale range " + std::to_string(start_scale) + ".." +
                            std::to_string(stop_scale));
  }
  Image x = start;
  for (int n = start_scale + 1; n <= stop_scale; ++n) {
    const Size size = m.sched.at(n);
    const Image z = rng ? noise_image(size, m.plan.sigma(d, n), *rng) : Image(size, 0.0);
    x = uncond_step(m.at(n).generator(d), x, z, n, m.K());
  }
  return x;
}

Image translate_at(const ModelBundle& m, Domain from, const Image& x, int n,
                   const std::optional<Image>& prev_translation) {
  if (x.size() != m.sched.at(n)) {
    throw std::invalid_argument("image of size " + to_string(x.size()) + " does not match scale " +
                                std::to_string(n) + " (" + to_string(m.sched.at(n)) + ")");
  }
  const Network& g = m.at(n).conditional_generator(other(from));
  if (m.config.ablations.condition_on_prev_translation && from == Domain::A && prev_translation) {
    ad::NoGradGuard no_grad;
    return Image::from_tensor(cond_map_with_prev(g, x.to_tensor(),
                                                 upsample(*prev_translation, x.size()), n, m.K()));
  }
  return cond_map(g, x, n, m.K());
}

}  // namespace analogy
