#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssc/clues.hpp"
#include "ssc/dataset.hpp"
#include "ssc/enhance.hpp"
#include "ssc/formats.hpp"
#include "ssc/run_config.hpp"
#include "ssc/semi.hpp"
#include "ssc/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 check failure, 2 usage error, 3 data error.
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

ssc::Dims3 parse_dims(const std::string& text) {
    ssc::Dims3 dims;
    int fields[3] = {0, 0, 0};
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t sep = text.find('x', start);
        const std::size_t end = (i == 2) ? text.size() : sep;
        if (i < 2 && sep == std::string::npos) {
            throw ssc::invalid_input("dims must look like HxWxZ, got '" + text + "'");
        }
        const auto r = std::from_chars(text.data() + start, text.data() + end, fields[i]);
        if (r.ec != std::errc{} || r.ptr != text.data() + end) {
            throw ssc::invalid_input("dims must look like HxWxZ, got '" + text + "'");
        }
        start = end + 1;
    }
    dims = {fields[0], fields[1], fields[2]};
    return dims;
}

std::vector<std::string> read_id_file(const std::string& path) {
    std::vector<std::string> ids;
    const std::string text = ssc::read_text_file(path);
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        const std::size_t end = nl == std::string::npos ? text.size() : nl;
        std::string id = text.substr(start, end - start);
        if (!id.empty() && id.back() == '\r') id.pop_back();
        if (!id.empty()) ids.push_back(id);
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return ids;
}

// Frames in the temporal window ending at the target frame.
std::vector<std::string> window_ids(const std::string& target, int window) {
    std::size_t idx = 0;
    const auto r = std::from_chars(target.data(), target.data() + target.size(), idx);
    if (r.ec != std::errc{} || r.ptr != target.data() + target.size()) {
        throw ssc::data_error("frame id '" + target + "' is not a decimal index");
    }
    const std::size_t first = idx + 1 >= static_cast<std::size_t>(window)
                                  ? idx + 1 - static_cast<std::size_t>(window)
                                  : 0;
    std::vector<std::string> ids;
    for (std::size_t i = first; i <= idx; ++i) ids.push_back(std::to_string(i));
    return ids;
}

ssc::LabelGrid clue_grid_for(const ssc::Dataset& ds, const ssc::RunConfig& cfg,
                             const std::string& id) {
    std::vector<ssc::FrameBundle> frames;
    for (const std::string& fid : window_ids(id, cfg.frame_window)) {
        frames.push_back(ds.load_frame(fid));
    }
    return ssc::generate_clues(frames, ds.ego_to_world(id), cfg.grid, cfg.filter, cfg.stride);
}

int cmd_split(const std::string& ids_path, double fraction, std::uint64_t seed,
              const std::string& out_path) {
    const std::vector<std::string> ids = read_id_file(ids_path);
    const ssc::SplitManifest manifest = ssc::sample_split(ids, fraction, seed);
    ssc::write_text_file(out_path, manifest.to_json().dump(2) + "\n");
    json summary;
    summary["labeled"] = manifest.labeled.size();
    summary["unlabeled"] = manifest.unlabeled.size();
    summary["out"] = out_path;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

int cmd_gen_clues(const std::string& config_path, const std::string& frames_arg,
                  const std::string& target, bool want_ply, const std::string& out_override) {
    const ssc::RunConfig cfg = ssc::load_run_config(config_path);
    const std::vector<std::string> frame_ids = ssc::parse_frame_range(frames_arg);
    if (frame_ids.empty()) {
        std::cerr << "error: empty frame range\n";
        return kExitUsage;
    }

    const ssc::Dataset ds = ssc::Dataset::open(cfg.dataset_root);
    std::vector<ssc::FrameBundle> frames;
    for (const std::string& id : frame_ids) frames.push_back(ds.load_frame(id));
    const ssc::Pose target_pose = ds.ego_to_world(target);

    const ssc::SemanticPointCloud cloud =
        ssc::generate_clue_cloud(frames, target_pose, cfg.filter, cfg.stride);
    const ssc::LabelGrid clues = ssc::voxelize(cloud, cfg.grid);

    const fs::path out_dir = out_override.empty() ? cfg.output_dir : fs::path(out_override);
    fs::create_directories(out_dir);

    const fs::path label_path = out_dir / (target + ".label");
    ssc::write_binary_file(label_path.string(), ssc::encode_voxel_labels(clues));
    std::cout << json{{"kind", "label"}, {"path", label_path.string()}}.dump() << "\n";

    const fs::path occ_path = out_dir / (target + ".occ");
    ssc::write_binary_file(occ_path.string(), ssc::encode_occupancy_mask(ssc::occupancy_of(clues)));
    std::cout << json{{"kind", "occ"}, {"path", occ_path.string()}}.dump() << "\n";

    if (want_ply) {
        const fs::path ply_path = out_dir / (target + ".ply");
        ssc::write_text_file(ply_path.string(),
                             ssc::export_ply(cloud, ssc::default_palette(cfg.grid.num_classes)));
        std::cout << json{{"kind", "ply"}, {"path", ply_path.string()}}.dump() << "\n";
    }
    return kExitOk;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& ignore_dir,
             const std::string& dims_text, int num_classes) {
    ssc::GridConfig grid;
    grid.dims = parse_dims(dims_text);
    grid.voxel_size = 0.2;
    grid.num_classes = num_classes;
    grid.validate();

    std::vector<fs::path> gt_files;
    for (const auto& entry : fs::directory_iterator(gt_dir)) {
        if (entry.path().extension() == ".label") gt_files.push_back(entry.path());
    }
    std::sort(gt_files.begin(), gt_files.end());
    if (gt_files.empty()) throw ssc::data_error("no .label files under " + gt_dir);

    ssc::ConfusionMatrix cm = ssc::ConfusionMatrix::zero(num_classes);
    for (const fs::path& gt_path : gt_files) {
        const fs::path pred_path = fs::path(pred_dir) / gt_path.filename();
        if (!fs::exists(pred_path)) {
            throw ssc::data_error("missing prediction for " + gt_path.filename().string());
        }
        ssc::LabelGrid gt = ssc::decode_voxel_labels(ssc::read_binary_file(gt_path.string()), grid);
        const ssc::LabelGrid pred =
            ssc::decode_voxel_labels(ssc::read_binary_file(pred_path.string()), grid);
        if (!ignore_dir.empty()) {
            const fs::path mask_path =
                fs::path(ignore_dir) / (gt_path.stem().string() + ".occ");
            if (fs::exists(mask_path)) {
                const ssc::BoolGrid mask =
                    ssc::decode_occupancy_mask(ssc::read_binary_file(mask_path.string()), grid.dims);
                gt.ignore_mask = mask.values;
            }
        }
        ssc::accumulate_confusion(pred, gt, cm);
    }

    std::cout << ssc::compute_metrics(cm).to_json().dump() << "\n";
    return kExitOk;
}

int cmd_enhance_check(std::uint64_t seed, const std::string& dims_text, int feat_dim,
                      int embed_dim, int d_model, int heads, int kernel,
                      const std::vector<int>& dilations, int layers, bool corrupt) {
    ssc::EnhanceConfig config;
    config.dims = parse_dims(dims_text);
    config.feat_dim = feat_dim;
    config.embed_dim = embed_dim;
    config.d_model = d_model;
    config.heads = heads;
    config.kernel = kernel;
    if (!dilations.empty()) config.dilations = dilations;
    config.layers = layers;
    config.validate();

    ssc::GradCheckResult result = ssc::finite_diff_check(config, seed);
    if (corrupt) {
        // Test hook: force the failure path.
        result.max_rel_error = std::max(result.max_rel_error, 1.0);
        result.worst_location = "corrupted-by-flag";
    }

    const double threshold = 1e-4;
    json out;
    out["max_rel_error"] = result.max_rel_error;
    out["worst"] = result.worst_location;
    out["coords_checked"] = result.coords_checked;
    out["threshold"] = threshold;
    out["pass"] = result.max_rel_error < threshold;
    std::cout << out.dump() << "\n";
    return result.max_rel_error < threshold ? kExitOk : kExitCheckFailed;
}

int cmd_selftrain(const std::string& manifest_path, const std::string& config_path,
                  const std::string& trainer_kind, const std::string& out_path) {
    const ssc::RunConfig cfg = ssc::load_run_config(config_path);
    const ssc::SplitManifest manifest =
        ssc::SplitManifest::from_json(json::parse(ssc::read_text_file(manifest_path)));
    const ssc::Dataset ds = ssc::Dataset::open(cfg.dataset_root);

    ssc::SelfTrainOptions options;
    options.grid = cfg.grid;
    options.pseudo_dir = cfg.output_dir / "pseudo";
    for (const std::string& id : cfg.heldout) {
        options.heldout.push_back({id, ds.load_ground_truth(id, cfg.grid)});
    }

    const ssc::InputProvider inputs = [&](const std::string& id,
                                          bool with_clues) -> ssc::PredictorInput {
        ssc::PredictorInput input;
        input.frame_id = id;
        if (with_clues) input.clues = clue_grid_for(ds, cfg, id);
        return input;
    };

    ssc::Trainer trainer;
    ssc::PredictorFactory predictors;
    if (trainer_kind == "stub") {
        trainer = [](const std::vector<ssc::RosterEntry>& roster, int step) {
            return json{{"name", "stub"}, {"step", step}, {"roster", roster.size()}};
        };
        predictors = [&cfg](bool) { return ssc::make_clue_stub_predictor(cfg.grid); };
    } else if (trainer_kind == "desk") {
        auto state = std::make_shared<std::optional<ssc::DeskTrainResult>>();
        trainer = [state, &cfg](const std::vector<ssc::RosterEntry>& roster, int step) {
            ssc::DeskTrainConfig train_cfg;
            train_cfg.enhance = cfg.enhance;
            train_cfg.max_steps = cfg.train_steps;
            train_cfg.learning_rate = cfg.learning_rate;
            train_cfg.seed = cfg.seed + static_cast<std::uint64_t>(step);
            *state = ssc::desk_train(train_cfg);
            return json{{"name", "desk"},
                        {"step", step},
                        {"roster", roster.size()},
                        {"initial_loss", (*state)->initial_loss},
                        {"final_loss", (*state)->final_loss},
                        {"steps", (*state)->steps}};
        };
        predictors = [state, &cfg](bool) -> ssc::Predictor {
            if (!*state) throw ssc::invalid_input("desk predictor requested before training");
            return ssc::make_desk_predictor(cfg.grid, cfg.enhance, (*state)->params, cfg.seed);
        };
    } else {
        std::cerr << "error: --trainer must be 'stub' or 'desk'\n";
        return kExitUsage;
    }

    const json report = ssc::self_train(manifest, options, trainer, predictors, inputs);
    const std::string text = report.dump(2) + "\n";
    if (!out_path.empty()) {
        ssc::write_text_file(out_path, text);
    } else {
        fs::create_directories(cfg.output_dir);
        ssc::write_text_file((cfg.output_dir / "selftrain_report.json").string(), text);
    }
    std::cout << report.dump() << "\n";
    return report.at("status") == "ok" ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic scene completion data pipeline"};
    app.require_subcommand(1);

    // split
    auto* split = app.add_subcommand("split", "Sample a labeled/unlabeled split manifest");
    std::string split_ids, split_out;
    double split_fraction = 0.1;
    std::uint64_t split_seed = 1;
    split->add_option("--ids", split_ids, "File with one frame id per line")->required();
    split->add_option("--fraction", split_fraction, "Labeled fraction in (0, 1]")->required();
    split->add_option("--seed", split_seed, "RNG seed");
    split->add_option("--out", split_out, "Manifest output path")->required();

    // gen-clues
    auto* gen = app.add_subcommand("gen-clues", "Generate a clue grid from dataset frames");
    std::string gen_config, gen_frames, gen_target, gen_out;
    bool gen_ply = false;
    gen->add_option("--config", gen_config, "Run config JSON")->required();
    gen->add_option("--frames", gen_frames, "Frame range A..B or comma list")->required();
    gen->add_option("--target", gen_target, "Target frame id (defines the ego frame)")->required();
    gen->add_flag("--ply", gen_ply, "Also export the filtered cloud as PLY");
    gen->add_option("--out", gen_out, "Override the config output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    std::string eval_pred, eval_gt, eval_ignore, eval_dims = "256x256x32";
    int eval_classes = 19;
    eval->add_option("--pred", eval_pred, "Directory of predicted .label files")->required();
    eval->add_option("--gt", eval_gt, "Directory of ground-truth .label files")->required();
    eval->add_option("--ignore", eval_ignore, "Directory of .occ ignore masks");
    eval->add_option("--dims", eval_dims, "Grid dims HxWxZ");
    eval->add_option("--classes", eval_classes, "Number of semantic classes C");

    // enhance-check
    auto* check = app.add_subcommand("enhance-check", "Finite-difference gradient verification");
    std::uint64_t check_seed = 1;
    std::string check_dims = "4x4x2";
    int check_feat = 8, check_embed = 4, check_d = 8, check_heads = 2, check_kernel = 3,
        check_layers = 2;
    std::vector<int> check_dilations;
    bool check_corrupt = false;
    check->add_option("--seed", check_seed, "RNG seed");
    check->add_option("--dims", check_dims, "Toy grid dims HxWxZ");
    check->add_option("--feat-dim", check_feat, "Input feature width");
    check->add_option("--embed-dim", check_embed, "Clue embedding width");
    check->add_option("--d-model", check_d, "Token width");
    check->add_option("--heads", check_heads, "Attention heads");
    check->add_option("--kernel", check_kernel, "Window size (odd)");
    check->add_option("--dilations", check_dilations, "Per-head dilation rates");
    check->add_option("--layers", check_layers, "Attention layers");
    check->add_flag("--corrupt", check_corrupt, "Test hook: force the failure exit path");

    // selftrain
    auto* st = app.add_subcommand("selftrain", "Run the three-step self-training protocol");
    std::string st_manifest, st_config, st_trainer = "stub", st_out;
    st->add_option("--manifest", st_manifest, "Split manifest JSON")->required();
    st->add_option("--config", st_config, "Run config JSON")->required();
    st->add_option("--trainer", st_trainer, "Trainer: stub or desk");
    st->add_option("--out", st_out, "Report output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (split->parsed()) return cmd_split(split_ids, split_fraction, split_seed, split_out);
        if (gen->parsed()) return cmd_gen_clues(gen_config, gen_frames, gen_target, gen_ply, gen_out);
        if (eval->parsed()) return cmd_eval(eval_pred, eval_gt, eval_ignore, eval_dims, eval_classes);
        if (check->parsed()) {
            return cmd_enhance_check(check_seed, check_dims, check_feat, check_embed, check_d,
                                     check_heads, check_kernel, check_dilations, check_layers,
                                     check_corrupt);
        }
        if (st->parsed()) return cmd_selftrain(st_manifest, st_config, st_trainer, st_out);
    } catch (const ssc::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ssc::codec_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ssc::data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ssc::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
