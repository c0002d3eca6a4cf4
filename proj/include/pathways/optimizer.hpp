#pragma once

#include <cstdint>
#include <vector>

#include "pathways/tensor.hpp"

namespace pathways {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Per-parameter Adam moments. Moments are allocated lazily (zeros) on the
// first step so a fresh state works for any shape.
struct AdamState {
    Tensor m;
    Tensor v;
    int t = 0;

    void reset() {
        m = Tensor();
        v = Tensor();
        t = 0;
    }
};

void adam_step(Tensor& params, const Tensor& grads, AdamState& state, const AdamConfig& cfg);

// keep[i] == 0 freezes position i completely: parameter and both moments
// stay bitwise untouched.
void adam_step_masked(Tensor& params, const Tensor& grads, AdamState& state,
                      const std::vector<uint8_t>& keep, const AdamConfig& cfg);

}  // namespace pathways
