// Writes a small ray-traced dataset (ground plane + boxes seen from an
// orbit of cameras) in the pipeline's native formats, plus a ready-to-run
// config.json. Useful for trying the CLI without real sensor data.

#include <charconv>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssc/dataset.hpp"
#include "ssc/formats.hpp"
#include "ssc/run_config.hpp"
#include "ssc/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, r.ptr);
}

std::string pose_line(const ssc::Pose& pose) {
    std::string line;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            append_double(line, pose.rotation(r, c));
            line += ' ';
        }
        const double t = r == 0 ? pose.translation.x : r == 1 ? pose.translation.y
                                                              : pose.translation.z;
        append_double(line, t);
        if (r < 2) line += ' ';
    }
    line += '\n';
    return line;
}

// Center-sampled scene labels in the frame's camera/ego coordinates.
ssc::LabelGrid frame_ground_truth(const ssc::SyntheticScene& scene, const ssc::GridConfig& grid,
                                  const ssc::Pose& cam_to_world) {
    ssc::LabelGrid gt = ssc::LabelGrid::empty(grid);
    const double half_slab = grid.voxel_size * 0.5;
    for (std::int32_t x = 0; x < grid.dims.h; ++x) {
        for (std::int32_t y = 0; y < grid.dims.w; ++y) {
            for (std::int32_t z = 0; z < grid.dims.z; ++z) {
                const ssc::Vec3 p = cam_to_world.apply(ssc::voxel_center({x, y, z}, grid));
                std::uint16_t cls = 0;
                for (const ssc::SceneBox& box : scene.boxes) {
                    if (p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y &&
                        p.y <= box.max.y && p.z >= box.min.z && p.z <= box.max.z) {
                        cls = box.cls;
                        break;
                    }
                }
                if (cls == 0 && std::abs(p.z - scene.ground_z) <= half_slab) {
                    cls = scene.ground_class;
                }
                gt.at(x, y, z) = cls;
            }
        }
    }
    return gt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic dataset in native pipeline formats"};
    std::string out_dir;
    int frames = 8;
    bool noise = false;
    std::uint64_t seed = 1;
    app.add_option("--out", out_dir, "Dataset output directory")->required();
    app.add_option("--frames", frames, "Number of orbit frames");
    app.add_flag("--noise", noise, "Inject depth jitter and floater outliers");
    app.add_option("--seed", seed, "Noise seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const ssc::SyntheticScene scene = ssc::SyntheticScene::desk_default();
        const ssc::RenderOptions render_opts;
        const std::vector<ssc::Pose> poses = ssc::orbit_poses(scene, frames);

        const fs::path root(out_dir);
        fs::create_directories(root / "depth");
        fs::create_directories(root / "seg");
        fs::create_directories(root / "labels");

        ssc::write_text_file((root / "calib.txt").string(),
                             "K: 40 40 31.5 23.5\nTr: 1 0 0 0 0 1 0 0 0 0 1 0\n");

        std::string pose_text;
        for (const ssc::Pose& pose : poses) pose_text += pose_line(pose);
        ssc::write_text_file((root / "poses.txt").string(), pose_text);

        // Camera-frame grid: x lateral, y vertical (down-positive), z forward.
        ssc::GridConfig grid;
        grid.dims = {64, 32, 64};
        grid.voxel_size = 0.2;
        grid.origin = {-6.4, -3.4, 0.2};
        grid.num_classes = scene.grid.num_classes;

        for (int i = 0; i < frames; ++i) {
            ssc::FrameBundle frame = ssc::render_frame(scene, poses[i], render_opts);
            if (noise) {
                ssc::DepthNoise dn;
                dn.jitter_sigma = 0.01;
                dn.outlier_fraction = 0.03;
                dn.seed = seed + static_cast<std::uint64_t>(i);
                ssc::add_depth_noise(frame.depth, dn);
            }
            const std::string id = std::to_string(i);
            ssc::write_binary_file((root / "depth" / (id + ".dpt1")).string(),
                                   ssc::encode_depth_raster(frame.depth));
            ssc::write_binary_file((root / "seg" / (id + ".seg1")).string(),
                                   ssc::encode_semantic_raster(frame.semantics));
            ssc::write_binary_file((root / "labels" / (id + ".label")).string(),
                                   ssc::encode_voxel_labels(frame_ground_truth(scene, grid, poses[i])));
        }

        ssc::RunConfig cfg;
        cfg.dataset_root = root;
        cfg.output_dir = root / "out";
        cfg.grid = grid;
        cfg.enhance.dims = {4, 4, 2};
        cfg.enhance.num_classes = grid.num_classes;
        cfg.seed = seed;
        cfg.frame_window = frames;
        ssc::write_text_file((root / "config.json").string(), ssc::run_config_to_json(cfg));

        nlohmann::json summary;
        summary["root"] = root.string();
        summary["frames"] = frames;
        summary["noise"] = noise;
        std::cout << summary.dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
