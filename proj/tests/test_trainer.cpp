#include <doctest.h>

#include <filesystem>

#include "analogy/checkpoint.hpp"
#include "analogy/inference.hpp"
#include "analogy/trainer.hpp"
#include "analogy/video.hpp"
#include "support/synthetic_bundle.hpp"

using namespace analogy;
using analogy::testing::pattern_image;

namespace {

TrainConfig tiny(int iters = 3) {
  TrainConfig c = analogy::testing::small_config(20, 10, 4);
  c.iters_per_scale = iters;
  c.d_steps = 2;
  c.g_steps = 2;
  c.seed = 5;
  return c;
}

const Image& image_a() {
  static const Image img = pattern_image({20, 20}, 0.0);
  return img;
}
const Image& image_b() {
  static const Image img = pattern_image({22, 18}, 1.3);
  return img;
}

std::filesystem::path fresh_dir(const char* name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  return d;
}

std::vector<std::uint64_t> fingerprints(const ModelBundle& m) {
  std::vector<std::uint64_t> out;
  for (const auto& s : m.nets) out.push_back(s.fingerprint());
  return out;
}

}  // namespace

TEST_CASE("training a pair respects the per-scale invariants") {
  const TrainResult run = train_pair(image_a(), image_b(), tiny());
  const ModelBundle& m = run.bundle;
  REQUIRE(m.N() == 2);
  CHECK(m.trained_up_to == m.N());
  CHECK(run.audits.size() == 3);
  CHECK(run.losses.size() == 3u * 3u);
  for (const auto& r : run.losses) CHECK(r.all_finite());
  for (const auto& a : run.audits) {
    CAPTURE(a.scale);
    CHECK(a.frozen_before == a.frozen_after);
    CHECK(a.frozen_before.size() == static_cast<std::size_t>(a.scale));
    CHECK(a.sigma_ready_before_noise);
    CHECK(a.start_fingerprint != a.end_fingerprint);
    if (a.scale > 0) {
      CHECK(a.weights_copied);
      CHECK(a.start_fingerprint == a.prev_end_fingerprint);
      CHECK(a.prev_end_fingerprint == run.audits[a.scale - 1].end_fingerprint);
    }
  }
  CHECK(run.data.b.size() == m.sched.finest());
  for (int n = 0; n <= m.N(); ++n) {
    CHECK(m.plan.sigma(Domain::A, n) >= 0.0);
    CHECK(m.plan.sigma(Domain::B, n) >= 0.0);
  }
}

TEST_CASE("training is deterministic in the seed") {
  const TrainResult a = train_pair(image_a(), image_b(), tiny(2));
  const TrainResult b = train_pair(image_a(), image_b(), tiny(2));
  CHECK(fingerprints(a.bundle) == fingerprints(b.bundle));
  CHECK(a.losses == b.losses);
  TrainConfig other = tiny(2);
  other.seed = 6;
  CHECK(fingerprints(train_pair(image_a(), image_b(), other).bundle) != fingerprints(a.bundle));
}

TEST_CASE("without weight copying the cycle loss starts at zero on every residual scale") {
  TrainConfig c = tiny(1);
  c.ablations.scale_weight_copy = false;
  const TrainResult run = train_pair(image_a(), image_b(), c);
  for (const auto& a : run.audits) CHECK_FALSE(a.weights_copied);
  int checked = 0;
  for (const auto& r : run.losses) {
    if (r.iteration == 0 && r.scale < run.bundle.K()) {
      CHECK(std::abs(r.cycle) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked == run.bundle.K());
}

TEST_CASE("resuming after an interruption reproduces the unbroken run") {
  const auto full_dir = fresh_dir("analogy_trainer_full");
  const auto cut_dir = fresh_dir("analogy_trainer_cut");
  TrainOptions full_opts;
  full_opts.checkpoint_dir = full_dir;
  const TrainResult full = train_pair(image_a(), image_b(), tiny(2), full_opts);

  TrainOptions cut_opts;
  cut_opts.checkpoint_dir = cut_dir;
  cut_opts.stop_after_scale = 1;
  const TrainResult partial = train_pair(image_a(), image_b(), tiny(2), cut_opts);
  CHECK(partial.bundle.trained_up_to == 1);

  TrainOptions resume_opts;
  resume_opts.checkpoint_dir = cut_dir;
  const TrainResult resumed = resume_training(cut_dir, resume_opts);
  CHECK(fingerprints(resumed.bundle) == fingerprints(full.bundle));
  CHECK(resumed.bundle.plan == full.bundle.plan);
  CHECK(resumed.losses == full.losses);

  const ModelBundle loaded = load_bundle(full_dir);
  CHECK(fingerprints(loaded) == fingerprints(full.bundle));
  CHECK(loaded.config == full.bundle.config);
  CHECK(loaded.sched == full.bundle.sched);
  std::filesystem::remove_all(full_dir);
  std::filesystem::remove_all(cut_dir);
}

TEST_CASE("checkpoint loading rejects tampered files") {
  const auto dir = fresh_dir("analogy_trainer_tamper");
  TrainOptions opts;
  opts.checkpoint_dir = dir;
  opts.stop_after_scale = 0;
  train_pair(image_a(), image_b(), tiny(1), opts);
  CHECK_NOTHROW(checkpoint_load(dir));

  auto params = read_parameters(dir / "G_A_0.bin");
  ad::Tensor first = params.entries().front().value;
  first.mutable_values()[0] += 1.0;
  write_parameters(dir / "G_A_0.bin", params);
  CHECK_THROWS(checkpoint_load(dir));
  std::filesystem::remove_all(dir);
  CHECK_THROWS(checkpoint_load(dir));
}

TEST_CASE("a single-frame video trains exactly like the pair") {
  const TrainResult pair = train_pair(image_a(), image_b(), tiny(2));
  const TrainResult video = train_video({image_a()}, image_b(), tiny(2));
  CHECK(fingerprints(video.bundle) == fingerprints(pair.bundle));
  CHECK(video.losses == pair.losses);
  CHECK_THROWS_AS(train_video({}, image_b(), tiny(2)), std::invalid_argument);
  CHECK_THROWS_AS(train_video({image_a(), image_b()}, image_b(), tiny(2)), std::invalid_argument);
}

TEST_CASE("multi-frame video training draws frames and stays finite") {
  const TrainResult v = train_video(
      {image_a(), pattern_image({20, 20}, 0.2), pattern_image({20, 20}, 0.4)}, image_b(), tiny(2));
  CHECK(v.data.frames_a.size() == 3);
  for (const auto& r : v.losses) CHECK(r.all_finite());
}

TEST_CASE("finite-difference penalty mode trains") {
  TrainConfig c = tiny(2);
  c.gp_mode = GpMode::finite_difference;
  const TrainResult run = train_pair(image_a(), image_b(), c);
  for (const auto& r : run.losses) CHECK(r.all_finite());
}

TEST_CASE("refinement models train the A side only") {
  const TrainResult r = train_refinement(image_b(), tiny(2));
  CHECK(r.bundle.refinement);
  CHECK(r.bundle.trained_up_to == r.bundle.N());
  CHECK_FALSE(r.bundle.at(0).g_b.defined());
  for (const auto& l : r.losses) {
    CHECK(l.all_finite());
    CHECK(l.recon_B == 0.0);
    CHECK(l.cycle == 0.0);
  }
}

TEST_CASE("every ablation variant trains") {
  std::vector<std::function<void(Ablations&)>> variants{
      [](Ablations& a) { a.cycle_scope = CycleScope::none; },
      [](Ablations& a) { a.cycle_scope = CycleScope::last_only; },
      [](Ablations& a) { a.condition_on_prev_translation = true; },
      [](Ablations& a) { a.scale_weight_copy = false; },
      [](Ablations& a) { a.shared_cond_uncond = false; },
      [](Ablations& a) { a.residual_policy = ResidualPolicy::all; },
      [](Ablations& a) { a.residual_policy = ResidualPolicy::none; },
  };
  for (std::size_t i = 0; i < variants.size(); ++i) {
    CAPTURE(i);
    TrainConfig c = tiny(1);
    variants[i](c.ablations);
    const TrainResult run = train_pair(image_a(), image_b(), c);
    CHECK(run.bundle.trained_up_to == run.bundle.N());
    for (const auto& r : run.losses) CHECK(r.all_finite());
  }
}

TEST_CASE("scale 0 learns to reconstruct a constant image") {
  TrainConfig c = analogy::testing::small_config(24, 18, 8);
  c.iters_per_scale = 60;
  c.seed = 3;
  TrainOptions o;
  o.stop_after_scale = 0;
  const Image a({24, 24}, 0.4), b({24, 24}, -0.3);
  const TrainResult run = train_pair(a, b, c, o);
  REQUIRE(run.bundle.trained_up_to == 0);
  REQUIRE(run.bundle.sched.at(0) == Size{18, 18});
  const auto rec = [&](Domain d) {
    return rmse(uncond_chain(run.bundle, d, 0, ChainMode::reconstruction, nullptr).back(),
                Image({18, 18}, d == Domain::A ? 0.4 : -0.3));
  };
  CHECK(rec(Domain::A) < 0.05);
  CHECK(rec(Domain::B) < 0.05);
}

TEST_CASE("a trained refinement model nearly reproduces its own target") {
  TrainConfig c = analogy::testing::small_config(24, 14, 8);
  c.iters_per_scale = 60;
  c.seed = 4;
  const Image target = pattern_image({24, 24}, 0.7);
  const TrainResult r = train_refinement(target, c);
  const Image out = refine(r.bundle, target);
  CHECK(out.size() == target.size());
  CHECK(rmse(out, target) < 0.1);
}
