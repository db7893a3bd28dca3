#include "ssc/run_config.hpp"

#include <json.hpp>

#include "ssc/formats.hpp"

namespace ssc {

namespace {

using nlohmann::json;

Dims3 dims_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw invalid_input("dims must be a 3-element array");
    return {j[0].get<std::int32_t>(), j[1].get<std::int32_t>(), j[2].get<std::int32_t>()};
}

Vec3 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw invalid_input("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void RunConfig::validate() const {
    grid.validate();
    filter.validate();
    enhance.validate();
    if (stride < 1) throw invalid_input("stride must be >= 1");
    if (frame_window < 1) throw invalid_input("frame_window must be >= 1");
    if (train_steps < 1) throw invalid_input("train_steps must be >= 1");
    if (!(learning_rate > 0.0)) throw invalid_input("learning_rate must be positive");
    if (!std::filesystem::exists(dataset_root)) {
        throw data_error("dataset_root does not exist: " + dataset_root.string());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path.string()));
    } catch (const json::parse_error& e) {
        throw data_error("config " + path.string() + " is not valid JSON: " + e.what());
    }

    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kRunConfigSchemaVersion) {
        throw data_error("config " + path.string() + " requires schema_version " +
                         std::to_string(kRunConfigSchemaVersion));
    }

    RunConfig cfg;
    cfg.dataset_root = j.at("dataset_root").get<std::string>();
    cfg.output_dir = j.at("output_dir").get<std::string>();

    const json& grid = j.at("grid");
    cfg.grid.dims = dims_from(grid.at("dims"));
    cfg.grid.voxel_size = grid.at("voxel_size").get<double>();
    cfg.grid.origin = vec_from(grid.at("origin"));
    cfg.grid.num_classes = grid.at("num_classes").get<int>();

    if (j.contains("filter")) {
        const json& f = j["filter"];
        if (f.contains("radius")) cfg.filter.radius = f["radius"].get<double>();
        if (f.contains("min_neighbors")) cfg.filter.min_neighbors = f["min_neighbors"].get<int>();
        if (f.contains("sor_k")) cfg.filter.sor_k = f["sor_k"].get<int>();
        if (f.contains("sor_alpha")) cfg.filter.sor_alpha = f["sor_alpha"].get<double>();
    }

    if (j.contains("enhance")) {
        const json& e = j["enhance"];
        cfg.enhance.dims = e.contains("dims") ? dims_from(e["dims"]) : Dims3{4, 4, 2};
        if (e.contains("feat_dim")) cfg.enhance.feat_dim = e["feat_dim"].get<int>();
        if (e.contains("embed_dim")) cfg.enhance.embed_dim = e["embed_dim"].get<int>();
        if (e.contains("d_model")) cfg.enhance.d_model = e["d_model"].get<int>();
        if (e.contains("heads")) cfg.enhance.heads = e["heads"].get<int>();
        if (e.contains("kernel")) cfg.enhance.kernel = e["kernel"].get<int>();
        if (e.contains("dilations")) cfg.enhance.dilations = e["dilations"].get<std::vector<int>>();
        if (e.contains("layers")) cfg.enhance.layers = e["layers"].get<int>();
    } else {
        cfg.enhance.dims = {4, 4, 2};
    }
    cfg.enhance.num_classes = cfg.grid.num_classes;

    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("stride")) cfg.stride = j["stride"].get<int>();
    if (j.contains("frame_window")) cfg.frame_window = j["frame_window"].get<int>();
    if (j.contains("heldout")) cfg.heldout = j["heldout"].get<std::vector<std::string>>();
    if (j.contains("train_steps")) cfg.train_steps = j["train_steps"].get<int>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();

    cfg.validate();
    return cfg;
}

std::string run_config_to_json(const RunConfig& config) {
    json j;
    j["schema_version"] = kRunConfigSchemaVersion;
    j["dataset_root"] = config.dataset_root.string();
    j["output_dir"] = config.output_dir.string();
    j["grid"] = {{"dims", {config.grid.dims.h, config.grid.dims.w, config.grid.dims.z}},
                 {"voxel_size", config.grid.voxel_size},
                 {"origin", {config.grid.origin.x, config.grid.origin.y, config.grid.origin.z}},
                 {"num_classes", config.grid.num_classes}};
    j["filter"] = {{"radius", config.filter.radius},
                   {"min_neighbors", config.filter.min_neighbors},
                   {"sor_k", config.filter.sor_k},
                   {"sor_alpha", config.filter.sor_alpha}};
    j["enhance"] = {{"dims", {config.enhance.dims.h, config.enhance.dims.w, config.enhance.dims.z}},
                    {"feat_dim", config.enhance.feat_dim},
                    {"embed_dim", config.enhance.embed_dim},
                    {"d_model", config.enhance.d_model},
                    {"heads", config.enhance.heads},
                    {"kernel", config.enhance.kernel},
                    {"dilations", config.enhance.dilations},
                    {"layers", config.enhance.layers}};
    j["seed"] = config.seed;
    j["stride"] = config.stride;
    j["frame_window"] = config.frame_window;
    j["heldout"] = config.heldout;
    j["train_steps"] = config.train_steps;
    j["learning_rate"] = config.learning_rate;
    return j.dump(2) + "\n";
}

}  // namespace ssc
