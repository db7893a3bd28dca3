#include "ssc/semi.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ssc/formats.hpp"
#include "ssc/parallel.hpp"
#include "ssc/rng.hpp"

namespace ssc {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

void SplitManifest::validate() const {
    std::set<std::string> labeled_set(labeled.begin(), labeled.end());
    std::set<std::string> unlabeled_set(unlabeled.begin(), unlabeled.end());
    for (const std::string& id : labeled) {
        if (unlabeled_set.count(id)) {
            throw invalid_input("manifest: id '" + id + "' is both labeled and unlabeled");
        }
    }
    for (const PseudoEntry& e : pseudo) {
        if (!unlabeled_set.count(e.id)) {
            throw invalid_input("manifest: pseudo id '" + e.id + "' is not in the unlabeled set");
        }
    }
}

nlohmann::json SplitManifest::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["fraction"] = fraction;
    j["labeled"] = labeled;
    j["unlabeled"] = unlabeled;
    nlohmann::json ps = nlohmann::json::array();
    for (const PseudoEntry& e : pseudo) ps.push_back({{"id", e.id}, {"path", e.path}});
    j["pseudo"] = ps;
    return j;
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.fraction = j.at("fraction").get<double>();
    m.labeled = j.at("labeled").get<std::vector<std::string>>();
    m.unlabeled = j.at("unlabeled").get<std::vector<std::string>>();
    if (j.contains("pseudo")) {
        for (const auto& e : j.at("pseudo")) {
            m.pseudo.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>()});
        }
    }
    m.validate();
    return m;
}

SplitManifest sample_split(const std::vector<std::string>& ids, double fraction,
                           std::uint64_t seed) {
    if (ids.empty()) throw invalid_input("sample_split: id list is empty");
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw invalid_input("sample_split: fraction must be in (0, 1]");
    }
    const std::size_t n = ids.size();
    const std::size_t labeled_count =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

    // Partial Fisher-Yates picks the labeled subset; output keeps input order.
    SeededRng rng(seed);
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::uint8_t> selected(n, 0);
    for (std::size_t i = 0; i < labeled_count && i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
        std::swap(pool[i], pool[j]);
        selected[pool[i]] = 1;
    }

    SplitManifest m;
    m.seed = seed;
    m.fraction = fraction;
    for (std::size_t i = 0; i < n; ++i) {
        (selected[i] ? m.labeled : m.unlabeled).push_back(ids[i]);
    }
    return m;
}

ConfusionMatrix ConfusionMatrix::zero(int num_classes) {
    if (num_classes < 1) throw invalid_input("confusion matrix needs num_classes >= 1");
    ConfusionMatrix cm;
    cm.num_classes = num_classes;
    cm.counts.assign(static_cast<std::size_t>(num_classes + 1) * (num_classes + 1), 0);
    return cm;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (num_classes != other.num_classes) {
        throw invalid_input("confusion matrix class counts differ");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    ignored += other.ignored;
    return *this;
}

void accumulate_confusion(const LabelGrid& pred, const LabelGrid& gt, ConfusionMatrix& cm) {
    if (pred.config.dims != gt.config.dims) {
        throw invalid_input("accumulate_confusion: grid dimensions differ");
    }
    const std::size_t n = gt.labels.size();
    const bool has_mask = !gt.ignore_mask.empty();
    const int c = cm.num_classes;
    for (std::size_t i = 0; i < n; ++i) {
        if (has_mask && gt.ignore_mask[i]) {
            ++cm.ignored;
            continue;
        }
        const int g = gt.labels[i];
        const int p = pred.labels[i];
        if (g > c || p > c) {
            throw invalid_input("accumulate_confusion: label exceeds num_classes");
        }
        ++cm.at(g, p);
    }
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    const int c = cm.num_classes;
    MetricsReport report;
    report.per_class_iou.assign(c + 1, std::nullopt);

    double iou_sum = 0.0;
    int iou_count = 0;
    for (int cls = 1; cls <= c; ++cls) {
        std::uint64_t tp = cm.at(cls, cls), fp = 0, fn = 0, gt_total = 0;
        for (int other = 0; other <= c; ++other) {
            gt_total += cm.at(cls, other);
            if (other != cls) {
                fn += cm.at(cls, other);
                fp += cm.at(other, cls);
            }
        }
        if (gt_total == 0) continue;  // class absent from ground truth
        const std::uint64_t denom = tp + fp + fn;
        if (denom == 0) continue;
        const double iou = 100.0 * static_cast<double>(tp) / static_cast<double>(denom);
        report.per_class_iou[cls] = iou;
        iou_sum += iou;
        ++iou_count;
    }
    if (iou_count > 0) report.miou = iou_sum / iou_count;

    // Binary occupied-vs-empty collapse.
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (int g = 0; g <= c; ++g) {
        for (int p = 0; p <= c; ++p) {
            const std::uint64_t v = cm.at(g, p);
            if (g != 0 && p != 0) tp += v;
            if (g == 0 && p != 0) fp += v;
            if (g != 0 && p == 0) fn += v;
        }
    }
    if (tp + fp + fn > 0) {
        report.occupancy_iou = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
    }
    if (tp + fp > 0) report.precision = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) report.recall = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
    return report;
}

nlohmann::json MetricsReport::to_json() const {
    const auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json j;
    j["miou"] = opt(miou);
    j["occupancy_iou"] = opt(occupancy_iou);
    j["precision"] = opt(precision);
    j["recall"] = opt(recall);
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t cls = 1; cls < per_class_iou.size(); ++cls) per.push_back(opt(per_class_iou[cls]));
    j["per_class_iou"] = per;
    return j;
}

LabelGrid clues_as_pseudo_labels(const LabelGrid& clues) {
    LabelGrid out = clues;
    const std::uint16_t c = static_cast<std::uint16_t>(clues.config.num_classes);
    for (std::uint16_t& label : out.labels) {
        if (label > c) label = 0;  // unknown voxels become empty
    }
    return out;
}

LabelGrid argmax_labels(const ScoreGrid& scores, std::optional<double> min_score) {
    scores.config.validate();
    const std::size_t n = scores.config.voxel_count();
    const int classes = scores.config.num_classes + 1;
    if (scores.scores.size() != n * classes) {
        throw invalid_input("argmax_labels: score grid size mismatch");
    }
    LabelGrid grid = LabelGrid::empty(scores.config);
    for (std::size_t v = 0; v < n; ++v) {
        int best = 0;
        double best_score = scores.at(v, 0);
        for (int c = 1; c < classes; ++c) {
            const double s = scores.at(v, c);
            if (s > best_score) {
                best = c;
                best_score = s;
            }
        }
        if (min_score && best_score < *min_score) best = 0;
        grid.labels[v] = static_cast<std::uint16_t>(best);
    }
    return grid;
}

PseudoLabelReport generate_pseudo_labels(const Predictor& predictor,
                                         const std::vector<std::string>& ids,
                                         const InputProvider& inputs, const GridConfig& grid,
                                         const std::filesystem::path& out_dir,
                                         std::optional<double> min_score,
                                         SplitManifest& manifest) {
    grid.validate();
    std::filesystem::create_directories(out_dir);

    struct Slot {
        std::optional<PseudoEntry> entry;
        std::optional<PseudoFailure> failure;
    };
    std::vector<Slot> slots(ids.size());

    parallel_chunks(ids.size(), 1, [&](std::size_t, std::size_t i, std::size_t) {
        const std::string& id = ids[i];
        try {
            const PredictorInput input = inputs(id, /*with_clues=*/true);
            PredictorOutput output = predictor(input);
            LabelGrid labels = std::holds_alternative<LabelGrid>(output)
                                   ? std::get<LabelGrid>(std::move(output))
                                   : argmax_labels(std::get<ScoreGrid>(output), min_score);
            if (labels.config.dims != grid.dims) {
                throw invalid_input("predictor output dims do not match the configured grid");
            }
            const std::filesystem::path path = out_dir / (id + ".label");
            write_binary_file(path.string(), encode_voxel_labels(labels));
            slots[i].entry = PseudoEntry{id, path.string()};
        } catch (const std::exception& e) {
            slots[i].failure = PseudoFailure{id, e.what()};
        }
    });

    PseudoLabelReport report;
    for (Slot& slot : slots) {
        if (slot.entry) report.written.push_back(std::move(*slot.entry));
        if (slot.failure) report.failures.push_back(std::move(*slot.failure));
    }
    const auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::sort(report.written.begin(), report.written.end(), by_id);
    std::sort(report.failures.begin(), report.failures.end(), by_id);

    manifest.pseudo.insert(manifest.pseudo.end(), report.written.begin(), report.written.end());
    manifest.validate();
    return report;
}

std::vector<RosterEntry> merge_datasets(const SplitManifest& manifest) {
    manifest.validate();
    std::vector<RosterEntry> roster;
    roster.reserve(manifest.labeled.size() + manifest.pseudo.size());
    for (const std::string& id : manifest.labeled) {
        roster.push_back({id, LabelSource::ground_truth, ""});
    }
    std::vector<PseudoEntry> pseudo = manifest.pseudo;
    std::sort(pseudo.begin(), pseudo.end(),
              [](const PseudoEntry& a, const PseudoEntry& b) { return a.id < b.id; });
    for (const PseudoEntry& e : pseudo) {
        if (!std::filesystem::exists(e.path)) {
            throw data_error("missing pseudo label file: " + e.path);
        }
        roster.push_back({e.id, LabelSource::pseudo, e.path});
    }
    return roster;
}

namespace {

LabelGrid run_predictor(const Predictor& predictor, const PredictorInput& input,
                        std::optional<double> min_score) {
    PredictorOutput output = predictor(input);
    if (std::holds_alternative<LabelGrid>(output)) return std::get<LabelGrid>(std::move(output));
    return argmax_labels(std::get<ScoreGrid>(output), min_score);
}

nlohmann::json evaluate_heldout(const Predictor& predictor, const SelfTrainOptions& options,
                                const InputProvider& inputs, bool with_clues) {
    ConfusionMatrix cm = ConfusionMatrix::zero(options.grid.num_classes);
    for (const HeldoutFrame& frame : options.heldout) {
        const LabelGrid pred =
            run_predictor(predictor, inputs(frame.id, with_clues), options.min_score);
        accumulate_confusion(pred, frame.ground_truth, cm);
    }
    return compute_metrics(cm).to_json();
}

}  // namespace

nlohmann::json self_train(const SplitManifest& manifest, const SelfTrainOptions& options,
                          const Trainer& trainer, const PredictorFactory& predictors,
                          const InputProvider& inputs) {
    nlohmann::json report;
    report["status"] = "ok";

    SplitManifest working = manifest;
    int current_step = 1;
    try {
        working.validate();
        options.grid.validate();

        // Step 1: train on labeled data only.
        std::vector<RosterEntry> labeled_roster;
        for (const std::string& id : working.labeled) {
            labeled_roster.push_back({id, LabelSource::ground_truth, ""});
        }
        report["step1"] = {{"labeled", working.labeled.size()},
                           {"trainer", trainer(labeled_roster, 1)}};
        const Predictor clue_fed = predictors(/*with_clues=*/true);
        if (!options.heldout.empty()) {
            report["step1"]["eval"] = evaluate_heldout(clue_fed, options, inputs, true);
        }

        // Step 2: pseudo-label the unlabeled set with the clue-fed predictor.
        current_step = 2;
        const PseudoLabelReport pseudo = generate_pseudo_labels(
            clue_fed, working.unlabeled, inputs, options.grid, options.pseudo_dir,
            options.min_score, working);
        nlohmann::json failures = nlohmann::json::array();
        for (const PseudoFailure& f : pseudo.failures) {
            failures.push_back({{"id", f.id}, {"message", f.message}});
        }
        report["step2"] = {{"pseudo_written", pseudo.written.size()}, {"failures", failures}};

        // Step 3: retrain on labeled + pseudo-labeled; the test-time
        // predictor runs without clue inputs.
        current_step = 3;
        const std::vector<RosterEntry> roster = merge_datasets(working);
        report["step3"] = {{"roster", roster.size()}, {"trainer", trainer(roster, 3)}};
        if (!options.heldout.empty()) {
            const Predictor test_time = predictors(/*with_clues=*/false);
            report["step3"]["eval"] = evaluate_heldout(test_time, options, inputs, false);
        }
    } catch (const std::exception& e) {
        report["status"] = "error";
        report["failed_step"] = current_step;
        report["message"] = e.what();
    }

    report["manifest"] = working.to_json();
    return report;
}

// ---------------------------------------------------------------------------
// Desk-scale trainer and stubs
// ---------------------------------------------------------------------------

DeskTrainResult desk_train(const DeskTrainConfig& config) {
    const EnhanceConfig& cfg = config.enhance;
    cfg.validate();
    if (config.max_steps < 1) throw invalid_input("desk_train: max_steps must be >= 1");

    SeededRng rng(config.seed ^ 0xda3e39cb94b95bdbull);
    const std::size_t n = cfg.tokens();
    Tensor feats = Tensor::matrix(n, cfg.feat_dim);
    for (double& v : feats.values) v = rng.uniform(-1.0, 1.0);

    GridConfig grid_cfg;
    grid_cfg.dims = cfg.dims;
    grid_cfg.num_classes = cfg.num_classes + 1;
    LabelGrid clues = LabelGrid::empty(grid_cfg);
    for (auto& label : clues.labels) {
        label = static_cast<std::uint16_t>(rng.bounded(cfg.num_classes + 2));
    }

    // Realizable target: the same architecture under different parameters.
    const EnhanceParams teacher = EnhanceParams::seeded(cfg, config.seed + 1);
    const Tensor target = enhance_forward(feats, clues, teacher, cfg);

    EnhanceParams params = EnhanceParams::seeded(cfg, config.seed);

    const auto evaluate = [&](const EnhanceParams& p) {
        EnhanceResult fwd = enhance_forward_cached(feats, clues, p, cfg);
        double loss = 0.0;
        Tensor grad_y = fwd.output;
        for (std::size_t i = 0; i < grad_y.values.size(); ++i) {
            grad_y.values[i] -= target.values[i];
            loss += 0.5 * grad_y.values[i] * grad_y.values[i];
        }
        return std::make_pair(loss, enhance_backward(*fwd.cache, grad_y, p, cfg));
    };

    auto [loss, grads] = evaluate(params);
    DeskTrainResult result;
    result.initial_loss = loss;

    double lr = config.learning_rate;
    int step = 0;
    while (step < config.max_steps) {
        ++step;
        EnhanceParams candidate = params;
        sgd_step(candidate, grads.params, lr);
        auto [new_loss, new_grads] = evaluate(candidate);
        if (new_loss <= loss) {
            params = std::move(candidate);
            loss = new_loss;
            grads = std::move(new_grads);
            lr *= 1.1;
        } else {
            lr *= 0.5;
        }
        if (result.initial_loss > 0.0 && loss / result.initial_loss < config.stop_ratio) break;
    }

    result.final_loss = loss;
    result.steps = step;
    result.params = std::move(params);
    return result;
}

Predictor make_clue_stub_predictor(const GridConfig& grid) {
    return [grid](const PredictorInput& input) -> PredictorOutput {
        if (!input.clues) return LabelGrid::empty(grid);
        return clues_as_pseudo_labels(*input.clues);
    };
}

Predictor make_dilated_stub_predictor(const GridConfig& grid, int radius) {
    return [grid, radius](const PredictorInput& input) -> PredictorOutput {
        if (!input.clues) return LabelGrid::empty(grid);
        return dilate_labels(clues_as_pseudo_labels(*input.clues), radius);
    };
}

Predictor make_desk_predictor(const GridConfig& grid, const EnhanceConfig& config,
                              EnhanceParams params, std::uint64_t feat_seed) {
    config.validate();
    grid.validate();
    if (grid.dims != config.dims) {
        throw invalid_input("desk predictor requires matching grid and enhance dims");
    }
    return [grid, config, params = std::move(params), feat_seed](
               const PredictorInput& input) -> PredictorOutput {
        SeededRng rng(feat_seed ^ fnv1a(input.frame_id));
        const std::size_t n = config.tokens();
        Tensor feats = input.feats ? *input.feats : Tensor::matrix(n, config.feat_dim);
        if (!input.feats) {
            for (double& v : feats.values) v = rng.uniform(-1.0, 1.0);
        }

        LabelGrid clues;
        if (input.clues) {
            clues = *input.clues;
        } else {
            GridConfig unknown_cfg = grid;
            unknown_cfg.num_classes = config.num_classes + 1;
            clues = LabelGrid::empty(unknown_cfg);
            std::fill(clues.labels.begin(), clues.labels.end(), config.unknown_label());
        }

        const Tensor y = enhance_forward(feats, clues, params, config);

        ScoreGrid scores;
        scores.config = grid;
        scores.scores.assign(n * (grid.num_classes + 1), 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            const double* row = y.row(v);
            for (int c = 0; c <= grid.num_classes && c <= config.num_classes; ++c) {
                double s = 0.0;
                const double* emb = params.embedding.row(c);
                const std::size_t width =
                    std::min<std::size_t>(config.embed_dim, config.d_model);
                for (std::size_t j = 0; j < width; ++j) s += row[j] * emb[j];
                scores.at(v, c) = s;
            }
        }
        return scores;
    };
}

}  // namespace ssc
