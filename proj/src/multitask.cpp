#include "pathways/multitask.hpp"

#include <cmath>

#include "pathways/rng.hpp"

namespace pathways {

std::vector<double> language_probs(const std::vector<LanguageTask>& tasks, double alpha) {
    if (tasks.empty()) fail("language_probs: no tasks");
    std::vector<double> w(tasks.size());
    double total = 0.0;
    for (size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].example_count < 1)
            fail("task '%s': example count must be >= 1", tasks[i].language.c_str());
        w[i] = std::pow(static_cast<double>(tasks[i].example_count), alpha);
        total += w[i];
    }
    for (double& x : w) x /= total;
    return w;
}

int sample_language(const SamplingPolicy& policy, const std::vector<LanguageTask>& tasks,
                    std::mt19937_64& rng) {
    policy.validate();
    const auto probs = language_probs(tasks, policy.alpha);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double cum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

StepMetrics pathways_step(Trainer& trainer, const ExpandedMask& mask, const Batch& batch) {
    return trainer.step(batch, &mask, nullptr);
}

Model train_pathways(const Model& theta0, const std::vector<LanguageTask>& tasks, int steps,
                     const SamplingPolicy& policy, const AdamConfig& adam, int warmup_steps,
                     const PathwaysHooks& hooks) {
    if (tasks.empty()) fail("train_pathways: no language tasks");
    policy.validate();
    for (const auto& t : tasks) {
        if (!t.mask) fail("train_pathways: task '%s' has no mask", t.language.c_str());
        if (!t.next_batch) fail("train_pathways: task '%s' has no data feed", t.language.c_str());
    }

    Model model = theta0;
    std::vector<ExpandedMask> emasks;
    emasks.reserve(tasks.size());
    for (const auto& t : tasks) emasks.emplace_back(*t.mask, model);

    Trainer trainer(model, adam, warmup_steps);
    auto rng = substream(policy.seed, "language-sampling");
    for (int s = 1; s <= steps; ++s) {
        const int li = sample_language(policy, tasks, rng);
        const StepMetrics m = pathways_step(trainer, emasks[li], tasks[li].next_batch());
        if (hooks.on_step) hooks.on_step(s, tasks[li].language, m);
    }
    return model;
}

}  // namespace pathways
