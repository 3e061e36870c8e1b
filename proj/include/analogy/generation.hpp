#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "analogy/config.hpp"
#include "analogy/networks.hpp"
#include "analogy/pyramid.hpp"

namespace analogy {

/// Noise levels and fixed reconstruction inputs of a trained model.
struct NoisePlan {
  std::vector<double> sigma_a, sigma_b;  // one entry per scale whose sigma is known
  Image z_star_a, z_star_b;              // scale-0 sized
  std::uint64_t seed = 0;

  /// Throws std::logic_error if sigma for scale n has not been computed yet.
  double sigma(Domain d, int n) const;
  bool has_sigma(int n) const;
  void set_sigma(Domain d, int n, double value);
  const Image& z_star(Domain d) const { return d == Domain::A ? z_star_a : z_star_b; }

  bool operator==(const NoisePlan&) const = default;
};

/// Draws z*_a then z*_b, N(0, 1), from the fixed-noise stream of `seed`.
NoisePlan make_noise_plan(const ScaleSchedule& sched, std::uint64_t seed);

/// Everything needed to run the generation chains.
struct ModelBundle {
  ScaleSchedule sched;
  TrainConfig config;
  NoisePlan plan;
  std::vector<ScaleNets> nets;  // scales 0..trained_up_to (plus one in training)
  int trained_up_to = -1;
  /// Refinement models have only the A side and no conditional path.
  bool refinement = false;

  int N() const { return sched.N; }
  /// Residual/non-residual switch after applying the residual policy.
  int K() const;
  NetLayout layout() const;
  const ScaleNets& at(int n) const;
  std::uint64_t fingerprint() const;
};

int effective_K(const ScaleSchedule& sched, ResidualPolicy policy);

/// Per-thread tally of which generation form ran.
struct BranchCounters {
  std::uint64_t uncond_initial = 0;   // n = 0
  std::uint64_t uncond_residual = 0;  // 0 < n < K
  std::uint64_t uncond_plain = 0;     // n >= K
  std::uint64_t cond_residual = 0;    // n < K
  std::uint64_t cond_plain = 0;       // n >= K
  bool operator==(const BranchCounters&) const = default;
};
BranchCounters& branch_counters();

// Tensor forms. They record history when grad mode is on; `prev_up` is the
// previous-scale image already resized to the shape of z (undefined at n = 0).

ad::Tensor uncond_step(const Network& g, const ad::Tensor& prev_up, const ad::Tensor& z, int n,
                       int K, const NormTrace* fixed = nullptr, NormTrace* captured = nullptr);
ad::Tensor cond_map(const Network& g, const ad::Tensor& x, int n, int K,
                    const NormTrace* fixed = nullptr, NormTrace* captured = nullptr);
/// Conditional map that also sees the upsampled translation of the previous
/// scale: G(x + prev_translation_up) (+ x below K).
ad::Tensor cond_map_with_prev(const Network& g, const ad::Tensor& x,
                              const ad::Tensor& prev_translation_up, int n, int K);

// Image forms (no gradient tracking).

/// n = 0 requires `prev` empty; n > 0 requires it. `prev` is resized to z.
Image uncond_step(const Network& g, const std::optional<Image>& prev, const Image& z, int n,
                  int K);
Image cond_map(const Network& g, const Image& x, int n, int K);

struct CyclePair {
  Image ab, aba;
};
/// x -> G_to(x) -> G_back(.). Throws for n >= K.
CyclePair cycle_chain(const Network& g_back, const Network& g_to, const Image& x, int n, int K);

/// RMSE between the two images.
double compute_sigma(const Image& recon_prev_up, const Image& target);

enum class ChainMode { random, reconstruction };

/// Unconditional chain of domain `d` from scale 0 to `stop_scale`.
/// Random mode draws z_n ~ N(0, sigma_n^2) from `rng`; reconstruction mode uses
/// z* at scale 0 and zero noise above. Returns one image per scale 0..stop_scale.
std::vector<Image> uncond_chain(const ModelBundle& m, Domain d, int stop_scale, ChainMode mode,
                                Rng* rng);

/// Continue the unconditional chain of `d` from `start` (an image at scale
/// `start_scale`) up to `stop_scale`. With `rng` null the noise is zero.
Image uncond_continue(const ModelBundle& m, Domain d, const Image& start, int start_scale,
                      int stop_scale, Rng* rng);

/// Noise map of the given size with standard deviation sigma.
Image noise_image(Size size, double sigma, Rng& rng);

/// Translation of `x` (an image of domain `from` at scale n) into the other domain.
Image translate_at(const ModelBundle& m, Domain from, const Image& x, int n,
                   const std::optional<Image>& prev_translation = std::nullopt);

}  // namespace analogy
