#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "analogy/trainer.hpp"

namespace analogy {

/// Train with A drawn uniformly (with replacement) from `frames` at every
/// iteration and B fixed to `target`.
TrainResult train_video(const std::vector<Image>& frames, const Image& target,
                        const TrainConfig& config, const TrainOptions& options = {});

/// Per-job state shared by every translated frame.
struct VideoJob {
  Image z_N, z_Nm1;  // fixed noise at scales N and N-1
  std::optional<int> quantize_colors;
  std::uint64_t seed = 0;
  /// Normalization statistics of the reference frame for the three network
  /// applications (G_A at N-1, G_A at N, the map into B at N). When set every
  /// frame is normalized with them, which keeps each output pixel a function
  /// of its receptive field only.
  std::optional<std::array<NormTrace, 3>> norms;
};

/// Draws the fixed noise with the trained sigma of A at N and N-1 and, if
/// `freeze_norm_stats`, records normalization statistics from `reference`.
VideoJob make_video_job(const ModelBundle& m, const Image& reference, std::uint64_t seed,
                        std::optional<int> quantize_colors = {}, bool freeze_norm_stats = true);

/// f -> (optional quantize) -> scale N-1 -> G_A^{N-1}, G_A^N with the job's
/// noise -> map into B at N.
Image translate_frame(const ModelBundle& m, const Image& frame, const VideoJob& job);

/// k-means palette of at most `palette_size` colors fitted on `img`; every
/// pixel snaps to its nearest centroid. Deterministic in `seed`.
Image quantize(const Image& img, int palette_size, std::uint64_t seed = 0);

}  // namespace analogy
