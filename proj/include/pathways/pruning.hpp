#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pathways/lasso.hpp"
#include "pathways/mask.hpp"
#include "pathways/model.hpp"
#include "pathways/trainer.hpp"

namespace pathways {

struct PruneConfig {
    double p = 0.20;                      // per-iteration prune fraction
    int interval = 200;                   // T training steps between prunes
    double target_sparsity = 0.706;       // s*
    enum class Mode { kImp, kLth } mode = Mode::kImp;
    int post_prune_finetune_steps = 2000;

    void validate() const {
        if (!(p > 0.0 && p < 1.0)) fail("prune config: p=%f must be in (0, 1)", p);
        if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
            fail("prune config: target_sparsity=%f must be in (0, 1)", target_sparsity);
        if (interval < 1) fail("prune config: interval T=%d must be >= 1", interval);
        if (post_prune_finetune_steps < 0) fail("prune config: negative finetune steps");
    }
};

// Score of block g is ||W_g||_2; callers exclude already-pruned blocks from
// candidate sets.
std::vector<float> block_scores(const Tensor& weights, const BlockPartition& part);

struct PruneStepResult {
    int pruned_blocks = 0;
    bool already_at_target = false;  // no-op warning signal
};

// Prunes round(p * surviving) lowest-scoring surviving blocks of one layer,
// stopping early at the first block count whose weight sparsity reaches s*
// (the final step lands in [s*, s* + one block)). Ties break by block index,
// i.e. (column, row) ascending. Never revives a block. At least one block is
// pruned per call while below target so small layers always make progress.
PruneStepResult prune_step(MaskLayer& layer_mask, const std::vector<float>& scores,
                           const BlockPartition& part, double p, double s_star);

// Smallest n with 1 - (1-p)^n >= s*.
int iterations_to_target(double p, double s_star);

// Uniformly random mask at the same clamped per-layer sparsity the learned
// masks reach; deterministic per seed.
Mask random_mask(const Model& model, double s_star, uint64_t seed);

struct IterationTrace {
    int iteration = 0;
    int64_t surviving_blocks = 0;
    double sparsity = 0.0;          // weight sparsity after the prune
    double probe_loss_before = 0.0;  // after the T training steps, pre-prune
    double probe_loss_after = 0.0;   // same weights with the updated mask
};

struct PruneRunResult {
    Mask mask;
    int iterations = 0;
    double achieved_sparsity = 0.0;
    std::vector<IterationTrace> trace;

    // Convenience: loss pair around the prune that reached s*.
    double final_loss_before_prune() const {
        return trace.empty() ? 0.0 : trace.back().probe_loss_before;
    }
    double final_loss_after_prune() const {
        return trace.empty() ? 0.0 : trace.back().probe_loss_after;
    }
};

struct PruneRunHooks {
    std::function<void(int step, const StepMetrics&, double sparsity, float lambda_mean)> on_step;
    std::function<void(int step, const LayerLambdas&)> on_lambdas;
};

// Iterative magnitude pruning: train T steps, prune, continue from the
// trained weights; group lasso active until s* is reached; then fine-tunes
// with the fixed mask. The model ends as the trained sparse network.
PruneRunResult imp_run(Model& model, const std::function<Batch()>& next_batch,
                       const std::function<EvalMetrics(const Model&, const Mask&)>& probe,
                       const PruneConfig& pcfg, const LassoConfig& lcfg, const AdamConfig& adam,
                       int warmup_steps, const PruneRunHooks& hooks = {});

// Same loop with a rewinding step: after each prune the weights reset to
// theta0 (bitwise) and the optimizer restarts. Returns the final mask and
// leaves the model at the untouched theta0; training the masked network
// from there is the caller's move.
PruneRunResult lth_run(Model& model, const std::function<Batch()>& next_batch,
                       const std::function<EvalMetrics(const Model&, const Mask&)>& probe,
                       const PruneConfig& pcfg, const LassoConfig& lcfg, const AdamConfig& adam,
                       int warmup_steps, const PruneRunHooks& hooks = {});

}  // namespace pathways
