#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "pathways/error.hpp"

namespace pathways {

// Dense row-major float32 matrix. Vectors are 1xN, scalars 1x1.
// Plain value type: copyable, movable, no hidden sharing.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0f) {
        if (r < 0 || c < 0) fail("tensor shape (%d, %d) is negative", r, c);
    }
    Tensor(int r, int c, std::vector<float> values) : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != static_cast<size_t>(r) * c)
            fail("tensor data length %zu does not match shape (%d, %d)", data.size(), r, c);
    }

    static Tensor zeros(int r, int c) { return Tensor(r, c); }

    static Tensor full(int r, int c, float v) {
        Tensor t(r, c);
        for (auto& x : t.data) x = v;
        return t;
    }

    // Gaussian init, used for parameter tensors.
    template <typename Rng>
    static Tensor randn(int r, int c, Rng& rng, float stddev) {
        Tensor t(r, c);
        std::normal_distribution<float> dist(0.0f, stddev);
        for (auto& x : t.data) x = dist(rng);
        return t;
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    void fill(float v) {
        for (auto& x : data) x = v;
    }

    bool all_finite() const {
        for (float x : data)
            if (!std::isfinite(x)) return false;
        return true;
    }

    // Rejects NaN/Inf; call when values cross an ingestion boundary
    // (file loads, user-supplied buffers).
    void check_finite(const char* what) const {
        if (!all_finite()) fail("%s contains non-finite values", what);
    }

    bool bitwise_equal(const Tensor& o) const {
        if (!same_shape(o)) return false;
        for (size_t i = 0; i < data.size(); ++i) {
            uint32_t a, b;
            static_assert(sizeof(float) == sizeof(uint32_t));
            __builtin_memcpy(&a, &data[i], 4);
            __builtin_memcpy(&b, &o.data[i], 4);
            if (a != b) return false;
        }
        return true;
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        fail("%s: shape (%d, %d) vs (%d, %d)", what, a.rows, a.cols, b.rows, b.cols);
}

}  // namespace pathways
