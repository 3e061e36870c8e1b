#include "analogy/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace analogy {

using nlohmann::json;

namespace {

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table,
             const char* what) {
  std::string options;
  for (const auto& [name, value] : table) {
    if (s == name) return value;
    options += options.empty() ? name : std::string("|") + name;
  }
  throw std::invalid_argument(std::string("invalid ") + what + " '" + s + "' (expected " +
                              options + ")");
}

struct Field {
  std::function<json(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const json&)> set;
};

template <typename T>
T typed(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("");
    } else {
      if (!v.is_string()) throw std::invalid_argument("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "' has the wrong type: " + v.dump());
  }
}

#define ANALOGY_FIELD(key, member, T)                                                   \
  {                                                                                     \
    key, Field {                                                                        \
      [](const TrainConfig& c) { return json(c.member); },                              \
          [](TrainConfig& c, const json& v) { c.member = typed<T>(v, key); }            \
    }                                                                                   \
  }

#define ANALOGY_ENUM_FIELD(key, member, parse)                                          \
  {                                                                                     \
    key, Field {                                                                        \
      [](const TrainConfig& c) { return json(to_string(c.member)); },                   \
          [](TrainConfig& c, const json& v) { c.member = parse(typed<std::string>(v, key)); } \
    }                                                                                   \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      ANALOGY_FIELD("iters_per_scale", iters_per_scale, int),
      ANALOGY_FIELD("lr", lr, double),
      ANALOGY_FIELD("beta1", beta1, double),
      ANALOGY_FIELD("beta2", beta2, double),
      ANALOGY_FIELD("d_steps", d_steps, int),
      ANALOGY_FIELD("g_steps", g_steps, int),
      ANALOGY_FIELD("seed", seed, std::uint64_t),
      ANALOGY_FIELD("base_channels", base_channels, int),
      ANALOGY_FIELD("lambda_recon", weights.lambda_recon, double),
      ANALOGY_FIELD("lambda_cycle", weights.lambda_cycle, double),
      ANALOGY_FIELD("lambda_gp", weights.lambda_gp, double),
      ANALOGY_ENUM_FIELD("cycle_scope", ablations.cycle_scope, parse_cycle_scope),
      ANALOGY_FIELD("shared_cond_uncond", ablations.shared_cond_uncond, bool),
      ANALOGY_ENUM_FIELD("residual_policy", ablations.residual_policy, parse_residual_policy),
      ANALOGY_FIELD("scale_weight_copy", ablations.scale_weight_copy, bool),
      ANALOGY_FIELD("condition_on_prev_translation", ablations.condition_on_prev_translation,
                    bool),
      ANALOGY_FIELD("r", schedule.r, double),
      ANALOGY_FIELD("min_size", schedule.min_size, int),
      ANALOGY_FIELD("max_size", schedule.max_size, int),
      ANALOGY_FIELD("k_offset", schedule.k_offset, int),
      ANALOGY_ENUM_FIELD("gp_mode", gp_mode, parse_gp_mode),
      ANALOGY_FIELD("gp_fd_step", gp_fd_step, double),
      ANALOGY_ENUM_FIELD("objective_norm", objective_norm, parse_objective_norm),
      ANALOGY_FIELD("log_every", log_every, int),
  };
  return table;
}

#undef ANALOGY_FIELD
#undef ANALOGY_ENUM_FIELD

}  // namespace

std::string to_string(CycleScope v) {
  switch (v) {
    case CycleScope::all: return "all";
    case CycleScope::last_only: return "last_only";
    case CycleScope::none: return "none";
  }
  return "?";
}

std::string to_string(ResidualPolicy v) {
  switch (v) {
    case ResidualPolicy::standard: return "standard";
    case ResidualPolicy::all: return "all";
    case ResidualPolicy::none: return "none";
  }
  return "?";
}

std::string to_string(GpMode v) {
  return v == GpMode::exact ? "exact" : "finite_difference";
}

std::string to_string(ObjectiveNorm v) { return v == ObjectiveNorm::l2 ? "l2" : "rmse"; }

CycleScope parse_cycle_scope(const std::string& s) {
  return parse_enum<CycleScope>(
      s, {{"all", CycleScope::all}, {"last_only", CycleScope::last_only}, {"none", CycleScope::none}},
      "cycle_scope");
}

ResidualPolicy parse_residual_policy(const std::string& s) {
  return parse_enum<ResidualPolicy>(s,
                                    {{"standard", ResidualPolicy::standard},
                                     {"all", ResidualPolicy::all},
                                     {"none", ResidualPolicy::none}},
                                    "residual_policy");
}

GpMode parse_gp_mode(const std::string& s) {
  return parse_enum<GpMode>(
      s, {{"exact", GpMode::exact}, {"finite_difference", GpMode::finite_difference}}, "gp_mode");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(iters_per_scale > 0, "iters_per_scale must be positive");
  require(lr > 0.0, "lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "beta2 must lie in [0, 1)");
  require(d_steps > 0, "d_steps must be positive");
  require(g_steps > 0, "g_steps must be positive");
  require(base_channels > 0, "base_channels must be positive");
  require(weights.lambda_recon >= 0.0, "lambda_recon must be non-negative");
  require(weights.lambda_cycle >= 0.0, "lambda_cycle must be non-negative");
  require(weights.lambda_gp >= 0.0, "lambda_gp must be non-negative");
  require(schedule.r > 0.0 && schedule.r < 1.0, "r must lie in (0, 1)");
  require(schedule.min_size > 0 && schedule.min_size < schedule.max_size,
          "need 0 < min_size < max_size");
  require(gp_fd_step > 0.0, "gp_fd_step must be positive");
  require(log_every > 0, "log_every must be positive");
}

json to_json(const TrainConfig& c) {
  json j = json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(c);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    const auto& table = fields();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](const auto& f) { return f.first == key; });
    if (it == table.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second.set(c, value);
  }
  c.validate();
  return c;
}

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, field] : fields()) k.push_back(key);
    return k;
  }();
  return keys;
}

ObjectiveNorm parse_objective_norm(const std::string& s) {
  return parse_enum<ObjectiveNorm>(s, {{"l2", ObjectiveNorm::l2}, {"rmse", ObjectiveNorm::rmse}},
                                   "objective_norm");
}

}  // namespace analogy
