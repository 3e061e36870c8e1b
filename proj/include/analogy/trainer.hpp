#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "analogy/generation.hpp"
#include "analogy/losses.hpp"

namespace analogy {

/// Invariants observed while training one scale.
struct ScaleAudit {
  int scale = 0;
  bool weights_copied = false;
  /// Fingerprint of scale n's networks before the first update.
  std::uint64_t start_fingerprint = 0;
  /// Fingerprint of scale n-1's networks when its training ended (0 at n = 0).
  std::uint64_t prev_end_fingerprint = 0;
  std::uint64_t end_fingerprint = 0;
  /// Fingerprints of scales 0..n-1 before and after training scale n.
  std::vector<std::uint64_t> frozen_before, frozen_after;
  /// Noise level of scale n was known when the first scale-n noise map was drawn.
  bool sigma_ready_before_noise = false;
  double sigma_a = 0.0, sigma_b = 0.0;
  double seconds = 0.0;
};

class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void on_scale_start(const ModelBundle&, int /*n*/) {}
  virtual void on_iteration(const LossReport&) {}
  virtual void on_scale_end(const ModelBundle&, const ScaleAudit&) {}
};

struct TrainOptions {
  /// Checkpoint after every scale when non-empty.
  std::filesystem::path checkpoint_dir;
  /// Stop after this scale (-1: train through N).
  int stop_after_scale = -1;
  TrainObserver* observer = nullptr;
  /// One progress line per scale when set.
  std::ostream* log = nullptr;
};

/// Finest-scale training images. `frames_a` holds a single image for pair
/// training and the video frames otherwise.
struct TrainingData {
  std::vector<Image> frames_a;
  Image b;
};

struct TrainResult {
  ModelBundle bundle;
  TrainingData data;
  std::vector<LossReport> losses;
  std::vector<ScaleAudit> audits;
};

/// Schedule from A's size; B (and every frame) is resized to the finest size.
TrainingData prepare_training_data(const std::vector<Image>& frames_a, const Image& b,
                                   const ScaleSchedule& sched);

/// Empty bundle (no trained scales) for the given source size.
ModelBundle make_bundle(Size source, const TrainConfig& config, bool refinement = false);

/// Train scale `m.trained_up_to + 1`. Scales below stay untouched.
ScaleAudit train_scale(ModelBundle& m, const TrainingData& data, std::vector<LossReport>* losses,
                       TrainObserver* observer = nullptr);

TrainResult train_pair(const Image& a, const Image& b, const TrainConfig& config,
                       const TrainOptions& options = {});

/// Continue a run from its checkpoint directory until `options.stop_after_scale` or N.
TrainResult resume_training(const std::filesystem::path& checkpoint_dir,
                            const TrainOptions& options = {});

/// Unconditional-only model of a single image (adversarial + reconstruction).
TrainResult train_refinement(const Image& target, const TrainConfig& config,
                             const TrainOptions& options = {});

/// Shared driver: trains scales trained_up_to+1 .. stop, checkpointing each.
void continue_training(TrainResult& run, const TrainOptions& options);

}  // namespace analogy
