#include "pathways/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pathways/kernels.hpp"
#include "pathways/rng.hpp"

namespace pathways {

std::vector<float> block_scores(const Tensor& weights, const BlockPartition& part) {
    if (weights.rows != part.rows || weights.cols != part.cols)
        fail("block_scores: partition (%d, %d) does not cover weights (%d, %d)", part.rows,
             part.cols, weights.rows, weights.cols);
    const auto flat = flatten_blocks(part);
    std::vector<float> scores(flat.size());
    kernels::block_l2_norms(scores.data(), weights.data.data(), flat.data(),
                            static_cast<int>(flat.size()));
    return scores;
}

PruneStepResult prune_step(MaskLayer& layer_mask, const std::vector<float>& scores,
                           const BlockPartition& part, double p, double s_star) {
    if (layer_mask.bits.size() != part.blocks.size() || scores.size() != part.blocks.size())
        fail("prune_step: layer '%s' has %zu bits / %zu scores for %zu blocks",
             layer_mask.name.c_str(), layer_mask.bits.size(), scores.size(), part.blocks.size());

    const int64_t total_weights = part.weight_count();
    int64_t pruned_weights = 0;
    std::vector<int> survivors;
    survivors.reserve(part.blocks.size());
    for (size_t g = 0; g < part.blocks.size(); ++g) {
        if (layer_mask.bits[g])
            survivors.push_back(static_cast<int>(g));
        else
            pruned_weights += part.blocks[g].len;
    }

    PruneStepResult res;
    auto sparsity = [&]() {
        return static_cast<double>(pruned_weights) / static_cast<double>(total_weights);
    };
    if (sparsity() >= s_star || survivors.empty()) {
        res.already_at_target = true;
        return res;
    }

    // Lowest score first; ties by block index = (column, row) ascending.
    std::stable_sort(survivors.begin(), survivors.end(), [&scores](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    const int64_t k = std::max<int64_t>(1, std::llround(p * static_cast<double>(survivors.size())));
    for (int64_t i = 0; i < k && i < static_cast<int64_t>(survivors.size()); ++i) {
        if (sparsity() >= s_star) break;  // land on the smallest sparsity >= s*
        const int g = survivors[i];
        layer_mask.bits[g] = 0;
        pruned_weights += part.blocks[g].len;
        ++res.pruned_blocks;
    }
    return res;
}

int iterations_to_target(double p, double s_star) {
    if (!(p > 0.0 && p < 1.0) || !(s_star > 0.0 && s_star < 1.0))
        fail("iterations_to_target: p=%f, s*=%f out of (0, 1)", p, s_star);
    double surviving = 1.0;
    for (int n = 1; n < 10000; ++n) {
        surviving *= 1.0 - p;
        if (1.0 - surviving >= s_star - 1e-12) return n;
    }
    fail("iterations_to_target: no n < 10000 reaches s*=%f with p=%f", s_star, p);
}

Mask random_mask(const Model& model, double s_star, uint64_t seed) {
    if (!(s_star > 0.0 && s_star < 1.0)) fail("random_mask: s*=%f out of (0, 1)", s_star);
    Mask mask = Mask::all_ones(model.prunable_layer_blocks());
    mask.source = "random";
    auto rng = substream(seed, "random-mask");
    for (size_t i = 0; i < model.hidden.size(); ++i) {
        const BlockPartition& part = model.hidden[i].partition;
        std::vector<int> order(part.blocks.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        int64_t pruned_weights = 0;
        const int64_t total = part.weight_count();
        for (int g : order) {
            if (static_cast<double>(pruned_weights) / static_cast<double>(total) >= s_star) break;
            mask.layers[i].bits[g] = 0;
            pruned_weights += part.blocks[g].len;
        }
    }
    return mask;
}

namespace {

double min_layer_sparsity(const Mask& mask, const std::vector<BlockPartition>& parts) {
    double lo = 1.0;
    for (size_t i = 0; i < parts.size(); ++i)
        lo = std::min(lo, layer_weight_sparsity(mask.layers[i], parts[i]));
    return lo;
}

int64_t surviving_block_count(const Mask& mask) {
    int64_t n = 0;
    for (const auto& l : mask.layers) n += l.surviving_blocks();
    return n;
}

PruneRunResult prune_run(Model& model, const std::function<Batch()>& next_batch,
                         const std::function<EvalMetrics(const Model&, const Mask&)>& probe,
                         const PruneConfig& pcfg, const LassoConfig& lcfg, const AdamConfig& adam,
                         int warmup_steps, const PruneRunHooks& hooks, bool rewind) {
    pcfg.validate();
    lcfg.validate();
    const auto parts = model.prunable_partitions();

    PruneRunResult res;
    res.mask = Mask::all_ones(model.prunable_layer_blocks());
    res.mask.source = rewind ? "lth" : "imp";

    const Checkpoint theta0 = snapshot(model);
    Trainer trainer(model, adam, warmup_steps);
    ExpandedMask emask(res.mask, model);

    LayerLambdas lambdas;
    bool lambdas_fresh = false;
    int step = 0;

    auto train_phase = [&](int steps, double sparsity_now) {
        const bool lasso_on = lcfg.enabled && lasso_schedule(sparsity_now, pcfg.target_sparsity);
        for (int s = 0; s < steps; ++s) {
            if (lasso_on && (!lambdas_fresh || step % lcfg.recompute_interval == 0)) {
                lambdas = dynamic_lambdas(model, &res.mask, lcfg.base_strength);
                lambdas_fresh = true;
                if (hooks.on_lambdas) hooks.on_lambdas(step, lambdas);
            }
            const StepMetrics m = trainer.step(next_batch(), &emask, lasso_on ? &lambdas : nullptr);
            ++step;
            if (hooks.on_step)
                hooks.on_step(step, m, mask_weight_sparsity(res.mask, parts),
                              lasso_on ? lambdas.mean() : 0.0f);
        }
    };

    while (min_layer_sparsity(res.mask, parts) < pcfg.target_sparsity) {
        train_phase(pcfg.interval, mask_weight_sparsity(res.mask, parts));

        IterationTrace tr;
        tr.iteration = res.iterations + 1;
        tr.probe_loss_before = probe ? probe(model, res.mask).loss : 0.0;

        for (size_t i = 0; i < model.hidden.size(); ++i) {
            if (layer_weight_sparsity(res.mask.layers[i], parts[i]) >= pcfg.target_sparsity)
                continue;
            const auto scores = block_scores(model.hidden[i].weights, parts[i]);
            prune_step(res.mask.layers[i], scores, parts[i], pcfg.p, pcfg.target_sparsity);
        }
        apply_mask(model, res.mask);
        emask = ExpandedMask(res.mask, model);
        lambdas_fresh = false;

        tr.probe_loss_after = probe ? probe(model, res.mask).loss : 0.0;
        tr.surviving_blocks = surviving_block_count(res.mask);
        tr.sparsity = mask_weight_sparsity(res.mask, parts);
        res.trace.push_back(tr);
        ++res.iterations;

        if (rewind) {
            restore(model, theta0);
            apply_mask(model, res.mask);
            trainer.reset_optimizer();
        }
    }

    res.achieved_sparsity = mask_weight_sparsity(res.mask, parts);

    if (!rewind) {
        // Mask is fixed from here on; regularization is off by schedule.
        train_phase(pcfg.post_prune_finetune_steps, res.achieved_sparsity);
    } else {
        restore(model, theta0);  // hand back the untouched starting point
    }
    return res;
}

}  // namespace

PruneRunResult imp_run(Model& model, const std::function<Batch()>& next_batch,
                       const std::function<EvalMetrics(const Model&, const Mask&)>& probe,
                       const PruneConfig& pcfg, const LassoConfig& lcfg, const AdamConfig& adam,
                       int warmup_steps, const PruneRunHooks& hooks) {
    return prune_run(model, next_batch, probe, pcfg, lcfg, adam, warmup_steps, hooks,
                     /*rewind=*/false);
}

PruneRunResult lth_run(Model& model, const std::function<Batch()>& next_batch,
                       const std::function<EvalMetrics(const Model&, const Mask&)>& probe,
                       const PruneConfig& pcfg, const LassoConfig& lcfg, const AdamConfig& adam,
                       int warmup_steps, const PruneRunHooks& hooks) {
    return prune_run(model, next_batch, probe, pcfg, lcfg, adam, warmup_steps, hooks,
                     /*rewind=*/true);
}

}  // namespace pathways
