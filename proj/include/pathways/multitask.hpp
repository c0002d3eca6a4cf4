#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pathways/mask.hpp"
#include "pathways/model.hpp"
#include "pathways/trainer.hpp"

namespace pathways {

// One language in the joint stage: its corpus feed, example count for the
// sampling policy, and its sub-network mask.
struct LanguageTask {
    std::string language;
    int64_t example_count = 0;  // n_l
    const Mask* mask = nullptr;
    std::function<Batch()> next_batch;
};

struct SamplingPolicy {
    double alpha = 0.5;  // temperature exponent over example counts
    uint64_t seed = 0;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) fail("sampling policy: alpha=%f not in (0, 1]", alpha);
    }
};

// p_l = n_l^alpha / sum_k n_k^alpha
std::vector<double> language_probs(const std::vector<LanguageTask>& tasks, double alpha);

// Draws a task index with the policy's probabilities; deterministic under a
// seeded rng.
int sample_language(const SamplingPolicy& policy, const std::vector<LanguageTask>& tasks,
                    std::mt19937_64& rng);

// One masked joint-training step: forward/backward in the language's
// sub-network, update only the parameters inside it.
StepMetrics pathways_step(Trainer& trainer, const ExpandedMask& mask, const Batch& batch);

struct PathwaysHooks {
    std::function<void(int step, const std::string& language, const StepMetrics&)> on_step;
};

// Joint training over language-specific sub-networks with one shared set of
// weights and shared optimizer moments. No regularization in this stage.
// Returns theta*; per-language evaluation must apply that language's mask.
Model train_pathways(const Model& theta0, const std::vector<LanguageTask>& tasks, int steps,
                     const SamplingPolicy& policy, const AdamConfig& adam, int warmup_steps,
                     const PathwaysHooks& hooks = {});

}  // namespace pathways
