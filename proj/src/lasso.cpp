#include "pathways/lasso.hpp"

#include <cmath>

#include "pathways/kernels.hpp"

namespace pathways {

namespace {
constexpr double kMeanNormFloor = 1e-8;

// Mean L2 norm over (surviving) blocks of one layer.
double mean_block_norm(const PrunableLayer& layer, const MaskLayer* mask_layer) {
    const auto flat = flatten_blocks(layer.partition);
    std::vector<float> norms(flat.size());
    kernels::block_l2_norms(norms.data(), layer.weights.data.data(), flat.data(),
                            static_cast<int>(flat.size()));
    double sum = 0.0;
    int64_t count = 0;
    for (size_t g = 0; g < norms.size(); ++g) {
        if (mask_layer && !mask_layer->bits[g]) continue;
        sum += norms[g];
        ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}
}  // namespace

LayerLambdas dynamic_lambdas(const Model& model, const Mask* mask, float base_strength) {
    if (model.hidden.empty()) fail("dynamic_lambdas: model has no prunable layers");
    LayerLambdas lambdas;
    for (const auto& layer : model.hidden) {
        const MaskLayer* ml = mask ? mask->find(layer.name) : nullptr;
        const double mean = mean_block_norm(layer, ml);
        const double lam = static_cast<double>(base_strength) / std::max(mean, kMeanNormFloor);
        if (!std::isfinite(lam)) fail("dynamic_lambdas: non-finite lambda for '%s'", layer.name.c_str());
        lambdas.values.push_back(static_cast<float>(lam));
    }
    return lambdas;
}

double lasso_penalty_value(const Model& model, const Mask* mask, const LayerLambdas& lambdas) {
    if (lambdas.values.size() != model.hidden.size())
        fail("lasso_penalty: %zu lambdas for %zu prunable layers", lambdas.values.size(),
             model.hidden.size());
    double total = 0.0;
    for (size_t i = 0; i < model.hidden.size(); ++i) {
        const auto& layer = model.hidden[i];
        const MaskLayer* ml = mask ? mask->find(layer.name) : nullptr;
        const auto flat = flatten_blocks(layer.partition);
        std::vector<float> norms(flat.size());
        kernels::block_l2_norms(norms.data(), layer.weights.data.data(), flat.data(),
                                static_cast<int>(flat.size()));
        double layer_sum = 0.0;
        for (size_t g = 0; g < norms.size(); ++g) {
            if (ml && !ml->bits[g]) continue;
            layer_sum += norms[g];
        }
        total += static_cast<double>(lambdas.values[i]) * layer_sum;
    }
    return total;
}

bool lasso_schedule(double current_sparsity, double target_sparsity, bool pathways_stage) {
    if (pathways_stage) return false;
    return current_sparsity < target_sparsity;
}

}  // namespace pathways
