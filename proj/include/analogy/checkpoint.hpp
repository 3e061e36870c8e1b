#pragma once

#include <filesystem>

#include "analogy/trainer.hpp"

namespace analogy {

/// Directory layout: manifest.json (schedule, plan, config, network list),
/// `{net}_{scale}.bin` per network, z_star_{a,b}.bin, the finest training
/// images and losses.csv.
void checkpoint_save(const std::filesystem::path& dir, const TrainResult& run);
TrainResult checkpoint_load(const std::filesystem::path& dir);

/// Loads only the model; training images and the loss log are skipped.
ModelBundle load_bundle(const std::filesystem::path& dir);

void write_parameters(const std::filesystem::path& file, const ad::ParameterSet& params);
ad::ParameterSet read_parameters(const std::filesystem::path& file);
void write_image_raw(const std::filesystem::path& file, const Image& img);
Image read_image_raw(const std::filesystem::path& file);

}  // namespace analogy
