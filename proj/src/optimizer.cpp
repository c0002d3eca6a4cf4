#include "pathways/optimizer.hpp"

#include "pathways/kernels.hpp"

namespace pathways {

namespace {
void ensure_state(AdamState& state, const Tensor& params) {
    if (state.m.data.empty()) {
        state.m = Tensor::zeros(params.rows, params.cols);
        state.v = Tensor::zeros(params.rows, params.cols);
    }
    require_same_shape(state.m, params, "adam state");
}
}  // namespace

void adam_step(Tensor& params, const Tensor& grads, AdamState& state, const AdamConfig& cfg) {
    require_same_shape(params, grads, "adam_step");
    ensure_state(state, params);
    ++state.t;
    kernels::adam_step(params.data.data(), grads.data.data(), state.m.data.data(),
                       state.v.data.data(), params.size(), state.t, cfg.lr, cfg.beta1, cfg.beta2,
                       cfg.eps);
}

void adam_step_masked(Tensor& params, const Tensor& grads, AdamState& state,
                      const std::vector<uint8_t>& keep, const AdamConfig& cfg) {
    require_same_shape(params, grads, "adam_step_masked");
    if (keep.size() != params.size())
        fail("adam_step_masked: %zu keep flags for %zu params", keep.size(), params.size());
    ensure_state(state, params);
    ++state.t;
    kernels::adam_step_masked(params.data.data(), grads.data.data(), state.m.data.data(),
                              state.v.data.data(), keep.data(), params.size(), state.t, cfg.lr,
                              cfg.beta1, cfg.beta2, cfg.eps);
}

}  // namespace pathways
