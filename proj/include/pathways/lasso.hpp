#pragma once

#include <vector>

#include "pathways/mask.hpp"
#include "pathways/model.hpp"

namespace pathways {

struct LassoConfig {
    float base_strength = 1e-3f;  // lambda_0
    bool enabled = true;
    int recompute_interval = 100;  // steps between dynamic-lambda refreshes

    void validate() const {
        if (base_strength < 0.0f) fail("lasso config: base_strength must be >= 0");
        if (recompute_interval < 1) fail("lasso config: recompute_interval must be >= 1");
    }
};

// Per-prunable-layer regularization strength, recomputed from layer-wise
// mean block norms and held constant between refreshes.
struct LayerLambdas {
    std::vector<float> values;

    float mean() const {
        if (values.empty()) return 0.0f;
        double s = 0.0;
        for (float v : values) s += v;
        return static_cast<float>(s / values.size());
    }
};

// lambda_i = lambda0 / max(mean_g ||W_g||_2, 1e-8), mean over surviving
// blocks when a mask is given. Inverse scaling keeps the pressure uniform
// across layers with different weight scales.
LayerLambdas dynamic_lambdas(const Model& model, const Mask* mask, float base_strength);

// Sum over prunable layers of lambda_i * sum_g ||W_g||_2, surviving blocks
// only when a mask is given. Plain evaluation; the differentiable form is
// assembled on a tape by the trainer.
double lasso_penalty_value(const Model& model, const Mask* mask, const LayerLambdas& lambdas);

// Enabled through dense training and the pruning iterations, off once the
// target sparsity is reached, and always off in the pathways stage.
bool lasso_schedule(double current_sparsity, double target_sparsity, bool pathways_stage = false);

}  // namespace pathways
