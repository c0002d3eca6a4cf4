#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathways/analysis.hpp"
#include "pathways/config.hpp"
#include "pathways/datagen.hpp"
#include "pathways/io.hpp"
#include "pathways/model.hpp"
#include "pathways/pruning.hpp"

namespace pathways {

// One table row of the experiment matrix: per-language test metrics plus
// their arithmetic mean.
struct ResultEntry {
    std::string model;    // dense-full, dense-small, lap, lsp-imp, lsp-lth, pw-*
    std::string variant;  // dense, lap, lsp-imp, lsp-lth, pathways-{random,imp,lth}
    double sparsity = 0.0;
    std::vector<std::string> langs;
    std::vector<double> loss;
    std::vector<double> accuracy;
    double avg_loss = 0.0;
    double avg_accuracy = 0.0;
};

struct MatrixSummary {
    std::vector<ResultEntry> results;
    MaskStats imp_stats;
    MaskStats lth_stats;
    double mean_iou_imp = 0.0;
    double mean_iou_lth = 0.0;
    // Mean over languages of the validation-loss jump at the prune step that
    // reached the target sparsity, by dense-stage regularization.
    double prune_jump_lasso = 0.0;
    double prune_jump_nolasso = 0.0;

    const ResultEntry* find(const std::string& model) const;
};

// Experiment driver bound to one config and its output directory. Every
// artifact it produces is a pure function of (config, master seed).
class Pipeline {
public:
    explicit Pipeline(ExperimentConfig cfg);

    const ExperimentConfig& config() const { return cfg_; }
    std::string out_path(const std::string& rel) const;

    // Writes the corpora + spec JSON; refuses to overwrite without force.
    void gen_data(bool force = false);

    // Multilingual dense training; returns the checkpoint path.
    std::string train_dense(bool with_lasso = true);

    struct PruneOutcome {
        std::string mask_path;
        std::string model_path;  // empty when no model artifact is saved
        PruneRunResult run;
    };
    // language is a language id or "agnostic" (multilingual mixture). For
    // IMP the resulting model is the trained sparse network; for LTH the
    // mask is found first and the sparse model is then trained from theta0.
    PruneOutcome prune(PruneConfig::Mode mode, const std::string& language,
                       bool from_nolasso_theta0 = false, bool save_artifacts = true,
                       int finetune_override = -1);

    // mask_source in {imp, lth, random}; random masks are generated from the
    // master seed. Returns the theta* checkpoint path.
    std::string train_pathways_cmd(const std::string& mask_source);

    // Evaluates one checkpoint on the test splits. mask_paths: unset = use
    // the checkpoint's recorded masks; empty list = force dense evaluation
    // (rejected for checkpoints that require masks).
    ResultEntry evaluate_checkpoint(const std::string& ckpt_path,
                                    const std::optional<std::vector<std::string>>& mask_paths,
                                    bool append_results = true);

    // Pairwise IOU / union-ratio / sparsity report for a set of mask files.
    MaskStats analyze_masks_cmd(const std::vector<std::string>& mask_paths,
                                const std::string& set_name, bool append_csv = true);

    // The full experiment matrix: data, dense (with and without lasso), LAP,
    // per-language IMP and LTH, three pathways variants, small dense
    // baselines, evaluation table and mask statistics.
    MatrixSummary run_matrix(bool force = false);

private:
    struct LoadedSuite;

    const Suite& suite();
    Model load_model(const std::string& ckpt_path) const;
    Model load_model_with_config(const std::string& ckpt_path, const ModelConfig& mc) const;
    void save_model(const std::string& path, const Model& model, const std::string& model_name,
                    const std::string& variant, bool requires_masks,
                    const std::vector<std::string>& mask_paths, const std::string& language,
                    double sparsity) const;

    std::vector<Batch> probe_batches(const std::string& language);
    EvalMetrics eval_on(const Model& model, const std::vector<Batch>& batches, const Mask* mask);

    ModelConfig small_model_config() const;

    ExperimentConfig cfg_;
    std::optional<Suite> suite_;
};

// Analytic parameter count of a model built from cfg.
int64_t model_param_count(const ModelConfig& cfg);

}  // namespace pathways
