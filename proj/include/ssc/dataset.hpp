#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ssc/clues.hpp"
#include "ssc/formats.hpp"

namespace ssc {

// On-disk dataset layout:
//   <root>/calib.txt          shared calibration
//   <root>/poses.txt          camera-to-world, line i = frame "i"
//   <root>/depth/<id>.dpt1
//   <root>/seg/<id>.seg1
//   <root>/labels/<id>.label  optional ground truth
// Frame ids are decimal strings indexing the pose file.
class Dataset {
public:
    static Dataset open(const std::filesystem::path& root);

    const CalibrationRecord& calibration() const { return calib_; }
    std::size_t frame_count() const { return poses_.size(); }

    // Pose carrying the frame's ego frame to world (camera-to-world composed
    // with the inverse camera-to-ego calibration).
    Pose ego_to_world(const std::string& id) const;

    // Loads rasters and wires the camera model: extrinsics = ego-to-camera,
    // frame_pose = ego-to-world. Throws data_error naming the frame when an
    // input file is missing.
    FrameBundle load_frame(const std::string& id) const;

    bool has_ground_truth(const std::string& id) const;
    LabelGrid load_ground_truth(const std::string& id, const GridConfig& grid) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::size_t frame_index(const std::string& id) const;

    std::filesystem::path root_;
    CalibrationRecord calib_;
    std::vector<Pose> poses_;  // camera-to-world, one per frame
};

// Parses "A..B" (inclusive) or a comma-separated id list into frame ids.
std::vector<std::string> parse_frame_range(const std::string& text);

}  // namespace ssc
