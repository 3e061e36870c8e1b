#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "analogy/backend/tensor.hpp"
#include "analogy/checkpoint.hpp"
#include "analogy/eval.hpp"
#include "analogy/inference.hpp"
#include "analogy/io.hpp"
#include "analogy/preview.hpp"
#include "analogy/trainer.hpp"
#include "analogy/video.hpp"

namespace fs = std::filesystem;
using namespace analogy;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

/// Bad arguments or inputs, detected before any compute.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out_dir(const std::string& leaf) {
  const char* env = std::getenv("ANALOGY_OUT_DIR");
  return fs::path(env && *env ? env : "analogy_out") / leaf;
}

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

void require_dir(const fs::path& p, const std::string& what) {
  if (p.empty()) throw UsageError(what + " is required");
  if (!fs::is_directory(p)) throw UsageError(what + " is not a directory: " + p.string());
}

Image load_input(const fs::path& p, const std::string& what) {
  require_file(p, what);
  try {
    return load_image(p);
  } catch (const std::exception& e) {
    throw UsageError(what + ": " + e.what());
  }
}

ModelBundle load_model(const fs::path& dir) {
  require_file(dir / "manifest.json", "checkpoint manifest");
  return load_bundle(dir);
}

Domain parse_direction(const std::string& s) {
  if (s == "a2b") return Domain::A;
  if (s == "b2a") return Domain::B;
  throw UsageError("direction must be a2b or b2a, got '" + s + "'");
}

std::string scale_tag(int s) { return std::to_string(s); }

/// Options shared by train and refine-train. Command-line values override the
/// config file, which overrides the defaults.
struct TrainArgs {
  fs::path config_file;
  fs::path out;
  std::optional<int> iters, max_size, min_size, k_offset, channels, d_steps, g_steps, stop_after;
  std::optional<double> r, lr, lambda_recon, lambda_cycle, lambda_gp;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cycle_scope, residual_policy, gp_mode, objective_norm;
  bool no_weight_copy = false, separate_nets = false, prev_translation = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "Flat JSON run configuration");
    cmd->add_option("--out", out, "Run directory (default $ANALOGY_OUT_DIR/<command>)");
    cmd->add_option("--iters", iters, "Iterations per scale");
    cmd->add_option("--max-size", max_size, "Longer side of the finest scale");
    cmd->add_option("--min-size", min_size, "Shorter side of the coarsest scale");
    cmd->add_option("--r", r, "Scale factor between neighbouring scales");
    cmd->add_option("--k-offset", k_offset, "K = N - k_offset");
    cmd->add_option("--channels", channels, "Channels per convolution block");
    cmd->add_option("--d-steps", d_steps, "Critic updates per iteration");
    cmd->add_option("--g-steps", g_steps, "Generator updates per iteration");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--lambda-recon", lambda_recon);
    cmd->add_option("--lambda-cycle", lambda_cycle);
    cmd->add_option("--lambda-gp", lambda_gp);
    cmd->add_option("--seed", seed, "Root seed");
    cmd->add_option("--cycle-scope", cycle_scope, "all | last_only | none");
    cmd->add_option("--residual-policy", residual_policy, "standard | all | none");
    cmd->add_option("--gp-mode", gp_mode, "exact | finite_difference");
    cmd->add_option("--objective-norm", objective_norm, "l2 | rmse");
    cmd->add_flag("--no-weight-copy", no_weight_copy, "Fresh initialization at every scale");
    cmd->add_flag("--separate-nets", separate_nets, "Separate conditional generators");
    cmd->add_flag("--prev-translation", prev_translation,
                  "Condition A->B maps on the previous scale's translation");
    cmd->add_option("--stop-after-scale", stop_after, "Stop (and checkpoint) after this scale");
  }

  TrainConfig config(const std::set<std::string>& extra_keys, nlohmann::json* extras) const {
    nlohmann::json file = nlohmann::json::object();
    if (!config_file.empty()) {
      require_file(config_file, "config file");
      std::ifstream in(config_file);
      try {
        file = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file: " + std::string(e.what()));
      }
      if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    }
    nlohmann::json train_keys = nlohmann::json::object();
    for (auto it = file.begin(); it != file.end(); ++it) {
      (extra_keys.count(it.key()) ? (*extras)[it.key()] : train_keys[it.key()]) = it.value();
    }
    TrainConfig c;
    try {
      c = train_config_from_json(train_keys);
      if (iters) c.iters_per_scale = *iters;
      if (max_size) c.schedule.max_size = *max_size;
      if (min_size) c.schedule.min_size = *min_size;
      if (r) c.schedule.r = *r;
      if (k_offset) c.schedule.k_offset = *k_offset;
      if (channels) c.base_channels = *channels;
      if (d_steps) c.d_steps = *d_steps;
      if (g_steps) c.g_steps = *g_steps;
      if (lr) c.lr = *lr;
      if (lambda_recon) c.weights.lambda_recon = *lambda_recon;
      if (lambda_cycle) c.weights.lambda_cycle = *lambda_cycle;
      if (lambda_gp) c.weights.lambda_gp = *lambda_gp;
      if (seed) c.seed = *seed;
      if (cycle_scope) c.ablations.cycle_scope = parse_cycle_scope(*cycle_scope);
      if (residual_policy) c.ablations.residual_policy = parse_residual_policy(*residual_policy);
      if (gp_mode) c.gp_mode = parse_gp_mode(*gp_mode);
      if (objective_norm) c.objective_norm = parse_objective_norm(*objective_norm);
      if (no_weight_copy) c.ablations.scale_weight_copy = false;
      if (separate_nets) c.ablations.shared_cond_uncond = false;
      if (prev_translation) c.ablations.condition_on_prev_translation = true;
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

/// Writes a preview grid when each scale finishes.
class PreviewWriter : public TrainObserver {
 public:
  PreviewWriter(fs::path dir, std::uint64_t seed) : dir_(std::move(dir)), seed_(seed) {}
  void on_scale_end(const ModelBundle& m, const ScaleAudit& a) override {
    save_image(dir_ / ("preview_scale_" + scale_tag(a.scale) + ".png"),
               preview_grid(m, a.scale, seed_));
  }

 private:
  fs::path dir_;
  std::uint64_t seed_;
};

void write_run_config(const fs::path& dir, const TrainConfig& c, const nlohmann::json& paths) {
  nlohmann::json j = to_json(c);
  for (auto it = paths.begin(); it != paths.end(); ++it) j[it.key()] = it.value();
  std::ofstream(dir / "config.json") << j.dump(2) << "\n";
}

int cmd_train(const TrainArgs& args, fs::path img_a, fs::path img_b, fs::path a_frames,
              const fs::path& resume) {
  TrainOptions opts;
  opts.log = &std::cerr;
  if (args.stop_after) opts.stop_after_scale = *args.stop_after;

  if (!resume.empty()) {
    require_file(resume / "manifest.json", "checkpoint manifest");
    const TrainConfig saved = load_bundle(resume).config;
    PreviewWriter previews(resume, saved.seed);
    opts.observer = &previews;
    const TrainResult run = resume_training(resume, opts);
    std::cout << "trained through scale " << run.bundle.trained_up_to << " of " << run.bundle.N()
              << " in " << resume.string() << "\n";
    return kOk;
  }

  nlohmann::json extras = nlohmann::json::object();
  const TrainConfig config = args.config({"img_a", "img_b", "a_frames", "out_dir"}, &extras);
  if (img_a.empty() && extras.contains("img_a")) img_a = extras["img_a"].get<std::string>();
  if (img_b.empty() && extras.contains("img_b")) img_b = extras["img_b"].get<std::string>();
  if (a_frames.empty() && extras.contains("a_frames")) a_frames = extras["a_frames"].get<std::string>();
  fs::path out = args.out;
  if (out.empty() && extras.contains("out_dir")) out = extras["out_dir"].get<std::string>();
  if (out.empty()) out = default_out_dir("train");

  if (!img_a.empty() && !a_frames.empty()) throw UsageError("give either --a or --a-frames");
  std::vector<Image> frames;
  if (!a_frames.empty()) {
    require_dir(a_frames, "--a-frames");
    for (const auto& f : list_images(a_frames)) frames.push_back(load_input(f, "frame"));
    if (frames.empty()) throw UsageError("no PNG frames in " + a_frames.string());
  } else {
    frames.push_back(load_input(img_a, "--a"));
  }
  const Image b = load_input(img_b, "--b");

  fs::create_directories(out);
  write_run_config(out, config,
                   {{"img_a", img_a.string()}, {"img_b", img_b.string()},
                    {"a_frames", a_frames.string()}, {"out_dir", out.string()}});
  PreviewWriter previews(out, config.seed);
  opts.observer = &previews;
  opts.checkpoint_dir = out;
  const TrainResult run = frames.size() == 1 && a_frames.empty()
                              ? train_pair(frames.front(), b, config, opts)
                              : train_video(frames, b, config, opts);
  std::cout << "trained " << run.bundle.trained_up_to + 1 << " scales (N=" << run.bundle.N()
            << ", K=" << run.bundle.K() << ") into " << out.string() << "\n";
  return kOk;
}

int cmd_refine_train(const TrainArgs& args, const fs::path& target) {
  nlohmann::json extras = nlohmann::json::object();
  const TrainConfig config = args.config({"target", "out_dir"}, &extras);
  const Image img = load_input(
      target.empty() && extras.contains("target") ? fs::path(extras["target"].get<std::string>())
                                                  : target,
      "--target");
  fs::path out = args.out;
  if (out.empty() && extras.contains("out_dir")) out = extras["out_dir"].get<std::string>();
  if (out.empty()) out = default_out_dir("refine");
  fs::create_directories(out);
  write_run_config(out, config, {{"target", target.string()}, {"out_dir", out.string()}});
  PreviewWriter previews(out, config.seed);
  TrainOptions opts;
  opts.log = &std::cerr;
  opts.observer = &previews;
  opts.checkpoint_dir = out;
  if (args.stop_after) opts.stop_after_scale = *args.stop_after;
  const TrainResult run = train_refinement(img, config, opts);
  std::cout << "refinement model with " << run.bundle.trained_up_to + 1 << " scales in "
            << out.string() << "\n";
  return kOk;
}

struct TranslateArgs {
  fs::path checkpoint, input, output, refiner;
  std::string direction = "a2b";
  int inject = -2;
  std::optional<int> early;
  bool sweep = false, no_noise = false;
  std::uint64_t seed = 0;
};

int cmd_translate(const TranslateArgs& a) {
  const Domain from = parse_direction(a.direction);
  const Image src = load_input(a.input, "--input");
  const ModelBundle m = load_model(a.checkpoint);
  std::optional<ModelBundle> refiner;
  if (!a.refiner.empty()) refiner = load_model(a.refiner);
  if (m.refinement) throw UsageError("checkpoint is a refinement model");

  InferenceRequest req;
  req.from = from;
  req.inject = a.inject;
  req.noise = !a.no_noise;
  req.seed = a.seed;
  try {
    req.inject = resolve_scale(a.inject, m.N());
    if (a.early) resolve_scale(*a.early, m.N());
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  }
  auto finish = [&](Image img) { return refiner ? refine(*refiner, img) : img; };

  if (a.sweep) {
    const fs::path dir = a.output.empty() ? default_out_dir("translate") : a.output;
    fs::create_directories(dir);
    const std::vector<Image> outs = injection_sweep(m, src, req);
    std::vector<Image> row;
    for (std::size_t s = 0; s < outs.size(); ++s) {
      Image img = finish(outs[s]);
      save_image(dir / ("inject_" + scale_tag(static_cast<int>(s)) + ".png"), img);
      row.push_back(with_label(img, "S=" + scale_tag(static_cast<int>(s))));
    }
    save_image(dir / "inject_sweep.png", make_grid({row}));
    std::cout << "wrote " << outs.size() << " injection scales to " << dir.string() << "\n";
    return kOk;
  }
  const Image out = finish(a.early ? translate_early(m, src, resolve_scale(*a.early, m.N()), req)
                                   : translate(m, src, req));
  const fs::path file = a.output.empty() ? default_out_dir("translate") / "translation.png" : a.output;
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  save_image(file, out);
  std::cout << "wrote " << file.string() << "\n";
  return kOk;
}

int cmd_sample(const fs::path& checkpoint, const std::string& direction, int count,
               std::uint64_t seed, const fs::path& output) {
  if (count < 1) throw UsageError("--count must be at least 1");
  InferenceRequest req;
  req.from = parse_direction(direction);
  req.seed = seed;
  const ModelBundle m = load_model(checkpoint);
  if (m.refinement) throw UsageError("checkpoint is a refinement model");
  const fs::path file = output.empty() ? default_out_dir("sample") / "samples.png" : output;
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  save_image(file, sample_grid(m, count, req));
  std::cout << "wrote " << file.string() << "\n";
  return kOk;
}

int cmd_video(const fs::path& checkpoint, const fs::path& frames_dir, const fs::path& out_dir,
              std::optional<int> colors, std::uint64_t seed, bool live_norms) {
  require_dir(frames_dir, "--frames");
  const auto files = list_images(frames_dir);
  if (files.empty()) throw UsageError("no PNG frames in " + frames_dir.string());
  if (colors && *colors < 1) throw UsageError("--quantize must be at least 1");
  const ModelBundle m = load_model(checkpoint);
  const Image first = load_input(files.front(), "frame");
  VideoJob job;
  try {
    job = make_video_job(m, first, seed, colors, !live_norms);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = out_dir.empty() ? default_out_dir("video") : out_dir;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < files.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.png", i);
    save_image(dir / name, translate_frame(m, i == 0 ? first : load_input(files[i], "frame"), job));
  }
  std::cout << "translated " << files.size() << " frames into " << dir.string() << "\n";
  return kOk;
}

int cmd_eval(const fs::path& ref, const fs::path& dir, const std::string& extractor,
             std::uint64_t seed, const fs::path& csv) {
  const Image reference = load_input(ref, "--ref");
  require_dir(dir, "--dir");
  std::unique_ptr<FeatureExtractor> ex;
  try {
    ex = make_extractor(extractor, seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const EvalSummary s = eval_batch(reference, dir, *ex);
  if (!csv.empty()) {
    std::ofstream out(csv);
    write_eval_csv(out, s);
  }
  write_eval_csv(std::cout, s);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  ad::tune_allocator();
  CLI::App app{"Structural analogy between two images, trained from the pair alone"};
  app.require_subcommand(1);

  TrainArgs train_args;
  fs::path img_a, img_b, a_frames, resume;
  CLI::App* train = app.add_subcommand("train", "Train a two-domain model");
  train_args.attach(train);
  train->add_option("--a", img_a, "Image of domain A");
  train->add_option("--b", img_b, "Image of domain B");
  train->add_option("--a-frames", a_frames, "Directory of A frames (video training)");
  train->add_option("--resume", resume, "Continue the run in this checkpoint directory");

  TrainArgs refine_args;
  fs::path target;
  CLI::App* refine_train = app.add_subcommand("refine-train", "Train a refinement model");
  refine_args.attach(refine_train);
  refine_train->add_option("--target", target, "Image to model");

  TranslateArgs tr;
  CLI::App* translate_cmd = app.add_subcommand("translate", "Translate an image");
  translate_cmd->add_option("--checkpoint", tr.checkpoint)->required();
  translate_cmd->add_option("--input", tr.input, "Image of the source domain")->required();
  translate_cmd->add_option("--direction", tr.direction, "a2b | b2a");
  translate_cmd->add_option("--inject", tr.inject, "Injection scale; negative counts back from N");
  translate_cmd->add_flag("--inject-sweep", tr.sweep, "One output per injection scale");
  translate_cmd->add_option("--early", tr.early, "Map into the target domain at this scale");
  translate_cmd->add_flag("--no-noise", tr.no_noise, "Zero-noise super-resolution");
  translate_cmd->add_option("--seed", tr.seed);
  translate_cmd->add_option("--refiner", tr.refiner, "Refinement checkpoint applied to the output");
  translate_cmd->add_option("--output", tr.output, "Output file (directory with --inject-sweep)");

  fs::path sample_ckpt, sample_out;
  std::string sample_dir = "a2b";
  int sample_count = 4;
  std::uint64_t sample_seed = 0;
  CLI::App* sample = app.add_subcommand("sample", "Random samples above their translations");
  sample->add_option("--checkpoint", sample_ckpt)->required();
  sample->add_option("--direction", sample_dir, "a2b | b2a");
  sample->add_option("--count", sample_count);
  sample->add_option("--seed", sample_seed);
  sample->add_option("--output", sample_out);

  fs::path video_ckpt, video_frames, video_out;
  std::optional<int> video_colors;
  std::uint64_t video_seed = 0;
  bool video_live_norms = false;
  CLI::App* video = app.add_subcommand("video", "Translate a directory of frames");
  video->add_option("--checkpoint", video_ckpt)->required();
  video->add_option("--frames", video_frames)->required();
  video->add_option("--out", video_out);
  video->add_option("--quantize", video_colors, "Palette size applied to every frame");
  video->add_option("--seed", video_seed);
  video->add_flag("--live-norms", video_live_norms,
                  "Normalize each frame with its own statistics");

  fs::path eval_ref, eval_dir, eval_csv;
  std::string eval_extractor = "random-conv";
  std::uint64_t eval_seed = 0;
  CLI::App* eval = app.add_subcommand("eval", "SIFID of every image in a directory");
  eval->add_option("--ref", eval_ref)->required();
  eval->add_option("--dir", eval_dir)->required();
  eval->add_option("--extractor", eval_extractor, "random-conv | patch");
  eval->add_option("--seed", eval_seed);
  eval->add_option("--csv", eval_csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_args, img_a, img_b, a_frames, resume);
    if (*refine_train) return cmd_refine_train(refine_args, target);
    if (*translate_cmd) return cmd_translate(tr);
    if (*sample) return cmd_sample(sample_ckpt, sample_dir, sample_count, sample_seed, sample_out);
    if (*video) {
      return cmd_video(video_ckpt, video_frames, video_out, video_colors, video_seed,
                       video_live_norms);
    }
    if (*eval) return cmd_eval(eval_ref, eval_dir, eval_extractor, eval_seed, eval_csv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
