#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace analogy {

struct LossWeights {
  double lambda_recon = 1.0;
  double lambda_cycle = 10.0;
  double lambda_gp = 0.1;
  bool operator==(const LossWeights&) const = default;
};

enum class CycleScope { all, last_only, none };
enum class ResidualPolicy { standard, all, none };
enum class GpMode { exact, finite_difference };
/// How the reconstruction and cycle distances enter the generator objective.
/// l2 is the plain Euclidean norm, rmse divides it by sqrt(3HW). Reported
/// values are RMSE either way.
enum class ObjectiveNorm { l2, rmse };

/// Switches for the ablation variants. Defaults are the full method.
struct Ablations {
  CycleScope cycle_scope = CycleScope::all;
  /// Conditional maps reuse the unconditional generators.
  bool shared_cond_uncond = true;
  ResidualPolicy residual_policy = ResidualPolicy::standard;
  bool scale_weight_copy = true;
  /// Forward translations also see the upsampled translation of the previous scale.
  bool condition_on_prev_translation = false;
  bool operator==(const Ablations&) const = default;
};

struct ScheduleConfig {
  double r = 0.75;
  int min_size = 18;
  int max_size = 220;
  int k_offset = 1;
  bool operator==(const ScheduleConfig&) const = default;
};

struct TrainConfig {
  int iters_per_scale = 10000;
  double lr = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int d_steps = 3;
  int g_steps = 3;
  std::uint64_t seed = 0;
  int base_channels = 32;
  LossWeights weights;
  Ablations ablations;
  ScheduleConfig schedule;
  GpMode gp_mode = GpMode::exact;
  double gp_fd_step = 1e-4;
  ObjectiveNorm objective_norm = ObjectiveNorm::l2;
  /// Loss rows are logged every `log_every` iterations (the first and last always).
  int log_every = 1;

  bool operator==(const TrainConfig&) const = default;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

std::string to_string(CycleScope v);
std::string to_string(ResidualPolicy v);
std::string to_string(GpMode v);
std::string to_string(ObjectiveNorm v);
CycleScope parse_cycle_scope(const std::string& s);
ResidualPolicy parse_residual_policy(const std::string& s);
GpMode parse_gp_mode(const std::string& s);
ObjectiveNorm parse_objective_norm(const std::string& s);

/// Flat key/value form. Parsing rejects unknown keys and wrong types; missing
/// keys keep their defaults.
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Keys accepted by train_config_from_json, in serialization order.
const std::vector<std::string>& train_config_keys();

}  // namespace analogy
