#pragma once

#include <memory>
#include <vector>

#include "pathways/lasso.hpp"
#include "pathways/mask.hpp"
#include "pathways/model.hpp"
#include "pathways/optimizer.hpp"

namespace pathways {

// Element-level keep flags for one mask against one model, precomputed once
// so per-step masked updates do not re-expand block bits.
struct ExpandedMask {
    const Mask* mask = nullptr;
    std::vector<std::vector<uint8_t>> keep;  // per prunable layer, row-major

    ExpandedMask() = default;
    ExpandedMask(const Mask& m, const Model& model);
};

struct StepMetrics {
    double loss = 0.0;      // task cross-entropy, without the penalty
    double penalty = 0.0;   // group-lasso term actually added
    double accuracy = 0.0;
};

// Owns the optimizer state for one model and runs single training steps:
// forward on a fresh tape, backward, gradient masking, (masked) Adam.
// Masked positions are frozen completely: zero gradient, untouched moments,
// weights stay exact zeros.
class Trainer {
public:
    Trainer(Model& model, AdamConfig adam, int warmup_steps);

    StepMetrics step(const Batch& batch, const ExpandedMask* mask = nullptr,
                     const LayerLambdas* lambdas = nullptr);

    // Fresh moments and step count (used by the rewinding loop).
    void reset_optimizer();

    int steps_taken() const { return global_step_; }
    Model& model() { return model_; }

private:
    Model& model_;
    AdamConfig adam_;
    int warmup_steps_;
    int global_step_ = 0;
    std::vector<AdamState> states_;  // parallel to model_.params()
};

}  // namespace pathways
