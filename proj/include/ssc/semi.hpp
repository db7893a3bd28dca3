#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ssc/enhance.hpp"
#include "ssc/voxel.hpp"

namespace ssc {

struct PseudoEntry {
    std::string id;
    std::string path;
};

// Labeled/unlabeled/pseudo-labeled bookkeeping. labeled and unlabeled are
// disjoint; pseudo ids are a subset of unlabeled.
struct SplitManifest {
    std::uint64_t seed = 0;
    double fraction = 0.0;
    std::vector<std::string> labeled;
    std::vector<std::string> unlabeled;
    std::vector<PseudoEntry> pseudo;

    void validate() const;
    nlohmann::json to_json() const;
    static SplitManifest from_json(const nlohmann::json& j);
};

// Uniform sampling without replacement: round(fraction * N) ids become
// labeled, the rest unlabeled. Both lists keep the input order;
// deterministic per (ids, fraction, seed).
SplitManifest sample_split(const std::vector<std::string>& ids, double fraction,
                           std::uint64_t seed);

struct ConfusionMatrix {
    int num_classes = 0;                // C; the matrix is (C+1) x (C+1)
    std::vector<std::uint64_t> counts;  // row = ground truth, col = prediction
    std::uint64_t ignored = 0;

    static ConfusionMatrix zero(int num_classes);
    std::uint64_t at(int gt, int pred) const { return counts[gt * (num_classes + 1) + pred]; }
    std::uint64_t& at(int gt, int pred) { return counts[gt * (num_classes + 1) + pred]; }
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

// Per-voxel counting; voxels flagged in the ground truth's ignore mask only
// bump the ignored counter.
void accumulate_confusion(const LabelGrid& pred, const LabelGrid& gt, ConfusionMatrix& cm);

// Percent-valued metrics; nullopt marks an undefined value (empty
// denominator) which is excluded from means.
struct MetricsReport {
    std::vector<std::optional<double>> per_class_iou;  // index 0 unused, 1..C
    std::optional<double> miou;
    std::optional<double> occupancy_iou;
    std::optional<double> precision;
    std::optional<double> recall;

    nlohmann::json to_json() const;
};

// Class IoU over semantic classes present in the ground truth; occupancy
// IoU/precision/recall over the binary empty-vs-occupied collapse.
MetricsReport compute_metrics(const ConfusionMatrix& cm);

// The clue grid reused directly as a pseudo-label grid; unknown voxels
// (id C+1) become empty.
LabelGrid clues_as_pseudo_labels(const LabelGrid& clues);

// Per-voxel class scores, (C+1) values per voxel in the grid's linear order.
struct ScoreGrid {
    GridConfig config;
    std::vector<double> scores;

    double at(std::size_t voxel, int cls) const {
        return scores[voxel * (config.num_classes + 1) + cls];
    }
    double& at(std::size_t voxel, int cls) {
        return scores[voxel * (config.num_classes + 1) + cls];
    }
};

// Argmax with ties to the smaller class id; voxels whose best score falls
// below min_score become empty.
LabelGrid argmax_labels(const ScoreGrid& scores, std::optional<double> min_score = std::nullopt);

// Prediction contract standing in for the scene-completion model: an input
// bundle (frame id, optional clue grid, optional feature volume) to either
// hard labels or per-class scores. `clues` is absent at test time.
struct PredictorInput {
    std::string frame_id;
    std::optional<LabelGrid> clues;
    std::optional<Tensor> feats;
};
using PredictorOutput = std::variant<LabelGrid, ScoreGrid>;
using Predictor = std::function<PredictorOutput(const PredictorInput&)>;
using InputProvider = std::function<PredictorInput(const std::string& id, bool with_clues)>;

struct PseudoFailure {
    std::string id;
    std::string message;
};

struct PseudoLabelReport {
    std::vector<PseudoEntry> written;     // frame-id order
    std::vector<PseudoFailure> failures;  // frame-id order
};

// Predicts every id, argmaxes score outputs, writes each grid through the
// voxel-label codec to out_dir/<id>.label and appends the entries to the
// manifest. Per-frame failures are recorded and the run continues.
PseudoLabelReport generate_pseudo_labels(const Predictor& predictor,
                                         const std::vector<std::string>& ids,
                                         const InputProvider& inputs, const GridConfig& grid,
                                         const std::filesystem::path& out_dir,
                                         std::optional<double> min_score,
                                         SplitManifest& manifest);

enum class LabelSource { ground_truth, pseudo };

struct RosterEntry {
    std::string id;
    LabelSource source;
    std::string path;  // pseudo entries only
};

// Labeled ids first (manifest order), then pseudo entries in frame-id
// order. Pseudo label files must exist.
std::vector<RosterEntry> merge_datasets(const SplitManifest& manifest);

// Trainer callback: invoked with the training roster for steps 1 and 3;
// returns a JSON fragment recorded in the run report.
using Trainer = std::function<nlohmann::json(const std::vector<RosterEntry>&, int step)>;
// with_clues=false requests the test-time predictor (no clue inputs).
using PredictorFactory = std::function<Predictor(bool with_clues)>;

struct HeldoutFrame {
    std::string id;
    LabelGrid ground_truth;
};

struct SelfTrainOptions {
    GridConfig grid;
    std::filesystem::path pseudo_dir;
    std::vector<HeldoutFrame> heldout;
    std::optional<double> min_score;
};

// Three-step orchestration: train on labeled, pseudo-label the unlabeled
// set (predictor with clues), retrain on the union. Held-out frames are
// scored after step 1 (clue-fed predictor) and step 3 (test-time predictor,
// no clues). Any step error aborts with a step-tagged report.
nlohmann::json self_train(const SplitManifest& manifest, const SelfTrainOptions& options,
                          const Trainer& trainer, const PredictorFactory& predictors,
                          const InputProvider& inputs);

// --- Desk-scale trainer and stub predictors --------------------------------

struct DeskTrainConfig {
    EnhanceConfig enhance;
    int max_steps = 500;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
    double stop_ratio = 1e-4;  // stop once loss / initial_loss falls below
};

struct DeskTrainResult {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int steps = 0;
    EnhanceParams params;
};

// Full-batch gradient descent on a seeded synthetic (feats, clues, target)
// triple where the target is realizable (generated by teacher parameters).
// The step size adapts: halve on an increase, grow gently otherwise.
DeskTrainResult desk_train(const DeskTrainConfig& config);

// Labels = clues_as_pseudo_labels(input.clues); an all-empty grid when no
// clues are supplied.
Predictor make_clue_stub_predictor(const GridConfig& grid);

// Clue labels dilated by `radius`: fills occluded space around surfaces,
// trading precision for recall.
Predictor make_dilated_stub_predictor(const GridConfig& grid, int radius);

// Scores every voxel by the dot product of the enhanced token with each
// class embedding. Features are seeded per frame id; requires the enhance
// dims to match the label grid dims.
Predictor make_desk_predictor(const GridConfig& grid, const EnhanceConfig& config,
                              EnhanceParams params, std::uint64_t feat_seed);

}  // namespace ssc
