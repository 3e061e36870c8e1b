#include "analogy/video.hpp"

#include <array>
#include <limits>
#include <map>
#include <stdexcept>

#include "analogy/backend/ops.hpp"

namespace analogy {

namespace {

using Color = std::array<double, 3>;

double dist2(const Color& a, const Color& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return s;
}

std::vector<Color> pixels_of(const Image& img) {
  const std::size_t n = static_cast<std::size_t>(img.height()) * img.width();
  std::vector<Color> px(n);
  auto d = img.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) px[i][c] = d[c * n + i];
  }
  return px;
}

std::size_t nearest(const Color& p, const std::vector<Color>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const double d = dist2(p, centroids[k]);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

/// Runs one frame through the two fine scales and the final map, optionally
/// with fixed normalization statistics or capturing them.
Image run_frame(const ModelBundle& m, const Image& f, const VideoJob& job,
                const std::array<NormTrace, 3>* fixed, std::array<NormTrace, 3>* captured) {
  const int N = m.N();
  const int K = m.K();
  ad::NoGradGuard no_grad;
  const ad::Tensor f_low = resize(f, m.sched.at(N - 1)).to_tensor();
  const ad::Tensor z_low = job.z_Nm1.to_tensor();
  // Scale 0 has no previous image; there the frame joins the noise as the input map.
  const ad::Tensor x_low =
      N - 1 == 0
          ? uncond_step(m.at(0).generator(Domain::A), {}, ad::add(z_low, f_low), 0, K,
                        fixed ? &(*fixed)[0] : nullptr, captured ? &(*captured)[0] : nullptr)
          : uncond_step(m.at(N - 1).generator(Domain::A), f_low, z_low, N - 1, K,
                        fixed ? &(*fixed)[0] : nullptr, captured ? &(*captured)[0] : nullptr);
  const ad::Tensor up = resize(Image::from_tensor(x_low), m.sched.at(N)).to_tensor();
  const ad::Tensor x = uncond_step(m.at(N).generator(Domain::A), up, job.z_N.to_tensor(), N, K,
                                   fixed ? &(*fixed)[1] : nullptr, captured ? &(*captured)[1] : nullptr);
  const ad::Tensor v = cond_map(m.at(N).conditional_generator(Domain::B), x, N, K,
                                fixed ? &(*fixed)[2] : nullptr, captured ? &(*captured)[2] : nullptr);
  return Image::from_tensor(v).clamped();
}

Image prepare_frame(const Image& frame, const VideoJob& job) {
  return job.quantize_colors ? quantize(frame, *job.quantize_colors, job.seed) : frame;
}

}  // namespace

TrainResult train_video(const std::vector<Image>& frames, const Image& target,
                        const TrainConfig& config, const TrainOptions& options) {
  if (frames.empty()) throw std::invalid_argument("video has no frames");
  for (const auto& f : frames) {
    if (f.size() != frames.front().size()) {
      throw std::invalid_argument("all video frames must have the same size");
    }
  }
  TrainResult run;
  run.bundle = make_bundle(frames.front().size(), config);
  run.data = prepare_training_data(frames, target, run.bundle.sched);
  continue_training(run, options);
  return run;
}

VideoJob make_video_job(const ModelBundle& m, const Image& reference, std::uint64_t seed,
                        std::optional<int> quantize_colors, bool freeze_norm_stats) {
  if (m.trained_up_to != m.N()) throw std::invalid_argument("model is not fully trained");
  if (m.N() < 1) throw std::invalid_argument("video translation needs at least two scales");
  if (m.refinement) throw std::invalid_argument("video translation needs a two-domain model");
  if (m.config.ablations.condition_on_prev_translation) {
    throw std::invalid_argument(
        "video translation does not support models conditioned on the previous translation");
  }
  VideoJob job;
  job.seed = seed;
  job.quantize_colors = quantize_colors;
  Rng rng = Rng::derive(seed, Stream::fixed_noise, static_cast<std::uint64_t>(m.N()), 1);
  job.z_N = noise_image(m.sched.at(m.N()), m.plan.sigma(Domain::A, m.N()), rng);
  job.z_Nm1 = noise_image(m.sched.at(m.N() - 1), m.plan.sigma(Domain::A, m.N() - 1), rng);
  if (freeze_norm_stats) {
    std::array<NormTrace, 3> traces;
    run_frame(m, prepare_frame(reference, job), job, nullptr, &traces);
    job.norms = std::move(traces);
  }
  return job;
}

Image translate_frame(const ModelBundle& m, const Image& frame, const VideoJob& job) {
  if (job.z_N.size() != m.sched.at(m.N()) || job.z_Nm1.size() != m.sched.at(m.N() - 1)) {
    throw std::invalid_argument("video job noise does not match the model's schedule");
  }
  const Image f = prepare_frame(frame, job);
  return run_frame(m, f, job, job.norms ? &*job.norms : nullptr, nullptr);
}

Image quantize(const Image& img, int palette_size, std::uint64_t seed) {
  if (palette_size < 1) throw std::invalid_argument("palette size must be at least 1");
  const std::vector<Color> px = pixels_of(img);

  std::map<Color, int> distinct;
  for (const auto& p : px) {
    distinct.emplace(p, 0);
    if (static_cast<int>(distinct.size()) > palette_size) break;
  }
  if (static_cast<int>(distinct.size()) <= palette_size) return img;

  // k-means++ seeding.
  Rng rng = Rng::derive(seed, Stream::palette);
  std::vector<Color> centroids{px[static_cast<std::size_t>(rng.below(px.size()))]};
  std::vector<double> d2(px.size());
  while (static_cast<int>(centroids.size()) < palette_size) {
    double total = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) {
      d2[i] = dist2(px[i], centroids[nearest(px[i], centroids)]);
      total += d2[i];
    }
    if (total == 0.0) break;
    double pick = rng.uniform() * total;
    std::size_t chosen = px.size() - 1;
    for (std::size_t i = 0; i < px.size(); ++i) {
      pick -= d2[i];
      if (pick < 0.0) {
        chosen = i;
        break;
      }
    }
    centroids.push_back(px[chosen]);
  }

  std::vector<std::size_t> assign(px.size(), 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < px.size(); ++i) {
      const std::size_t k = nearest(px[i], centroids);
      if (k != assign[i]) changed = true;
      assign[i] = k;
    }
    if (!changed) break;
    std::vector<Color> sum(centroids.size(), Color{0, 0, 0});
    std::vector<std::size_t> count(centroids.size(), 0);
    for (std::size_t i = 0; i < px.size(); ++i) {
      for (int c = 0; c < 3; ++c) sum[assign[i]][c] += px[i][c];
      ++count[assign[i]];
    }
    for (std::size_t k = 0; k < centroids.size(); ++k) {
      if (count[k] == 0) continue;  // empty cluster keeps its centroid
      for (int c = 0; c < 3; ++c) centroids[k][c] = sum[k][c] / static_cast<double>(count[k]);
    }
  }

  Image out(img.size());
  auto d = out.data();
  const std::size_t n = px.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Color& c = centroids[nearest(px[i], centroids)];
    for (int ch = 0; ch < 3; ++ch) d[ch * n + i] = c[ch];
  }
  return out;
}

}  // namespace analogy
