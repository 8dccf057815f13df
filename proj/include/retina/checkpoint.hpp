#pragma once

/**
 * @file checkpoint.hpp
 * @brief JSON checkpoint format.
 *
 * {
 *   "format_version": 1,
 *   "padding": "replicate",
 *   "stage_g": {"kernel_size": 3, "kernels": [[9 reals] x 3], "biases": [3 reals]},
 *   "stage_f": {"kernel_size": 5, "kernels": [[25 reals] x 3], "biases": [3 reals]},
 *   "metadata": {...}
 * }
 *
 * Reals are written in shortest round-trip form, so load(save(m)) == m and
 * save(load(save(m))) is byte-identical to save(m).
 */

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "retina/model.hpp"

namespace retina {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    RetinaModel model;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

std::string save_checkpoint(const RetinaModel& model, const nlohmann::ordered_json& metadata = nlohmann::ordered_json::object());
Checkpoint load_checkpoint(std::string_view text);

void write_checkpoint(const std::filesystem::path& path, const RetinaModel& model,
                      const nlohmann::ordered_json& metadata = nlohmann::ordered_json::object());
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Stage parameters as {"kernel_size", "kernels", "biases"}; shared with the kernel dump.
nlohmann::ordered_json stage_to_json(const StageParams<float>& stage);

}  // namespace retina
