#include "ssc/dataset.hpp"

#include <charconv>

namespace ssc {

Dataset Dataset::open(const std::filesystem::path& root) {
    Dataset ds;
    ds.root_ = root;
    const auto calib_path = root / "calib.txt";
    const auto poses_path = root / "poses.txt";
    if (!std::filesystem::exists(calib_path)) {
        throw data_error("dataset has no calib.txt under " + root.string());
    }
    if (!std::filesystem::exists(poses_path)) {
        throw data_error("dataset has no poses.txt under " + root.string());
    }
    ds.calib_ = parse_calibration(read_text_file(calib_path.string()));
    ds.poses_ = parse_poses(read_text_file(poses_path.string()));
    return ds;
}

std::size_t Dataset::frame_index(const std::string& id) const {
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), index);
    if (ec != std::errc{} || ptr != id.data() + id.size()) {
        throw data_error("frame id '" + id + "' is not a decimal index");
    }
    if (index >= poses_.size()) {
        throw data_error("frame '" + id + "' has no pose (file has " +
                         std::to_string(poses_.size()) + " lines)");
    }
    return index;
}

Pose Dataset::ego_to_world(const std::string& id) const {
    // cam-to-world = ego-to-world * cam-to-ego
    return compose(poses_[frame_index(id)], invert_pose(calib_.cam_to_ego));
}

FrameBundle Dataset::load_frame(const std::string& id) const {
    const auto depth_path = root_ / "depth" / (id + ".dpt1");
    const auto seg_path = root_ / "seg" / (id + ".seg1");
    if (!std::filesystem::exists(depth_path)) {
        throw data_error("missing frame '" + id + "': " + depth_path.string());
    }
    if (!std::filesystem::exists(seg_path)) {
        throw data_error("missing frame '" + id + "': " + seg_path.string());
    }

    FrameBundle frame;
    frame.depth = decode_depth_raster(read_binary_file(depth_path.string()));
    frame.semantics = decode_semantic_raster(read_binary_file(seg_path.string()));
    frame.cam.intrinsics = calib_.intrinsics;
    frame.cam.extrinsics = invert_pose(calib_.cam_to_ego);  // ego -> camera
    frame.frame_pose = ego_to_world(id);
    return frame;
}

bool Dataset::has_ground_truth(const std::string& id) const {
    return std::filesystem::exists(root_ / "labels" / (id + ".label"));
}

LabelGrid Dataset::load_ground_truth(const std::string& id, const GridConfig& grid) const {
    const auto path = root_ / "labels" / (id + ".label");
    if (!std::filesystem::exists(path)) {
        throw data_error("missing ground truth for frame '" + id + "': " + path.string());
    }
    return decode_voxel_labels(read_binary_file(path.string()), grid);
}

std::vector<std::string> parse_frame_range(const std::string& text) {
    std::vector<std::string> ids;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        std::size_t lo = 0, hi = 0;
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        const auto ra = std::from_chars(a.data(), a.data() + a.size(), lo);
        const auto rb = std::from_chars(b.data(), b.data() + b.size(), hi);
        if (ra.ec != std::errc{} || rb.ec != std::errc{} || lo > hi) {
            throw invalid_input("bad frame range '" + text + "', expected A..B");
        }
        for (std::size_t i = lo; i <= hi; ++i) ids.push_back(std::to_string(i));
        return ids;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string::npos ? text.size() : comma;
        const std::string id = text.substr(start, end - start);
        if (!id.empty()) ids.push_back(id);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return ids;
}

}  // namespace ssc
