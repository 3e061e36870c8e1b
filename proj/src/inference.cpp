#include "analogy/inference.hpp"

#include <stdexcept>
#include <string>

namespace analogy {

namespace {

void require_trained(const ModelBundle& m) {
  if (m.trained_up_to != m.N()) {
    throw std::invalid_argument("model is trained up to scale " + std::to_string(m.trained_up_to) +
                                " of " + std::to_string(m.N()));
  }
}

/// Translation chain state: when the forward map is conditioned on the
/// previous scale's translation, every scale on the way is translated too.
struct Climber {
  const ModelBundle& m;
  Domain from;
  Rng* rng;
  bool track;
  std::optional<Image> translation;

  Climber(const ModelBundle& m, Domain from, Rng* rng)
      : m(m),
        from(from),
        rng(rng),
        track(m.config.ablations.condition_on_prev_translation && from == Domain::A) {}

  void visit(const Image& x, int n) {
    if (track) translation = translate_at(m, from, x, n, translation);
  }

  Image climb(Image x, int start, int stop) {
    visit(x, start);
    for (int n = start + 1; n <= stop; ++n) {
      x = uncond_continue(m, from, x, n - 1, n, rng);
      visit(x, n);
    }
    return x;
  }

  Image map_at(const Image& x, int n) {
    if (track) return *translation;
    return translate_at(m, from, x, n);
  }
};

}  // namespace

int resolve_scale(int s, int N) {
  const int r = s < 0 ? N + s : s;
  if (r < 0 || r > N) {
    throw std::out_of_range("scale " + std::to_string(s) + " outside [0, " + std::to_string(N) +
                            "]");
  }
  return r;
}

Image translate(const ModelBundle& m, const Image& source, const InferenceRequest& req) {
  require_trained(m);
  const int S = resolve_scale(req.inject, m.N());
  Rng rng = Rng::derive(req.seed, Stream::inference);
  Climber c(m, req.from, req.noise ? &rng : nullptr);
  const Image top = c.climb(resize(source, m.sched.at(S)), S, m.N());
  return c.map_at(top, m.N()).clamped();
}

std::vector<Image> injection_sweep(const ModelBundle& m, const Image& source,
                                   const InferenceRequest& req) {
  std::vector<Image> out;
  for (int S = 0; S <= m.N(); ++S) {
    InferenceRequest r = req;
    r.inject = S;
    out.push_back(translate(m, source, r));
  }
  return out;
}

Image translate_early(const ModelBundle& m, const Image& source, int early_scale,
                      const InferenceRequest& req) {
  require_trained(m);
  const int S = resolve_scale(req.inject, m.N());
  const int Sp = resolve_scale(early_scale, m.N());
  if (Sp <= S) {
    throw std::invalid_argument("early mapping scale " + std::to_string(Sp) +
                                " must exceed the injection scale " + std::to_string(S));
  }
  Rng rng = Rng::derive(req.seed, Stream::inference);
  Rng* noise = req.noise ? &rng : nullptr;
  Climber c(m, req.from, noise);
  const Image mid = c.climb(resize(source, m.sched.at(S)), S, Sp);
  const Image mapped = c.map_at(mid, Sp);
  return uncond_continue(m, other(req.from), mapped, Sp, m.N(), noise).clamped();
}

AnalogyPair random_analogy(const ModelBundle& m, const InferenceRequest& req) {
  require_trained(m);
  Rng rng = Rng::derive(req.seed, Stream::inference);
  const std::vector<Image> chain = uncond_chain(m, req.from, m.N(), ChainMode::random, &rng);
  Climber c(m, req.from, nullptr);
  for (int n = 0; n < m.N(); ++n) c.visit(chain[static_cast<std::size_t>(n)], n);
  c.visit(chain.back(), m.N());
  AnalogyPair p;
  p.sample = chain.back().clamped();
  p.mapped = c.map_at(chain.back(), m.N()).clamped();
  return p;
}

Image refine(const ModelBundle& refiner, const Image& image, std::optional<int> insert_scale,
             Rng* noise) {
  require_trained(refiner);
  const int s = resolve_scale(insert_scale.value_or(refiner.N() - 1), refiner.N());
  const Size size = refiner.sched.at(s);
  const Image x = resize(image, size);
  const Image z = noise ? noise_image(size, refiner.plan.sigma(Domain::A, s), *noise) : Image(size, 0.0);
  const Network& g = refiner.at(s).generator(Domain::A);
  // At scale 0 there is no previous image; the inserted image is the input map.
  const Image first = s == 0 ? uncond_step(g, std::nullopt, x, 0, refiner.K())
                             : uncond_step(g, x, z, s, refiner.K());
  return uncond_continue(refiner, Domain::A, first, s, refiner.N(), noise).clamped();
}

}  // namespace analogy
