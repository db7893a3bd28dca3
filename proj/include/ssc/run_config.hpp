#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssc/clues.hpp"
#include "ssc/enhance.hpp"
#include "ssc/voxel.hpp"

namespace ssc {

// Pipeline configuration, loaded from a versioned JSON file.
struct RunConfig {
    std::filesystem::path dataset_root;
    std::filesystem::path output_dir;
    GridConfig grid;
    FilterConfig filter;
    EnhanceConfig enhance;
    std::uint64_t seed = 1;
    int stride = 1;
    int frame_window = 8;  // temporal window length ending at the target frame
    std::vector<std::string> heldout;
    int train_steps = 500;
    double learning_rate = 0.05;

    void validate() const;  // also checks that referenced paths exist
};

inline constexpr int kRunConfigSchemaVersion = 1;

RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

}  // namespace ssc
