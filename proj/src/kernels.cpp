#include "pathways/kernels.hpp"

#include <cmath>
#include <vector>

// The parallel kernels must stay bitwise-equal to the serial reference:
// never reassociate accumulations, never let a reduction span threads.
// Each output element is owned by one thread and its accumulation order
// matches ref::. The project builds with -ffp-contract=off to keep both
// lanes on the same IEEE op sequence.

namespace pathways::kernels {

namespace {

constexpr float kGeluCoef = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluCubic = 0.044715f;

inline float gelu_one(float x) {
    const float u = kGeluCoef * (x + kGeluCubic * x * x * x);
    return 0.5f * x * (1.0f + std::tanh(u));
}

inline float gelu_grad_one(float x) {
    const float u = kGeluCoef * (x + kGeluCubic * x * x * x);
    const float t = std::tanh(u);
    const float du = kGeluCoef * (1.0f + 3.0f * kGeluCubic * x * x);
    return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
}

inline double xent_row(float* probs_row, const float* logits_row, int target, int vocab) {
    float mx = logits_row[0];
    for (int v = 1; v < vocab; ++v) mx = std::max(mx, logits_row[v]);
    double sum = 0.0;
    for (int v = 0; v < vocab; ++v) {
        const float e = std::exp(logits_row[v] - mx);
        probs_row[v] = e;
        sum += static_cast<double>(e);
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int v = 0; v < vocab; ++v) probs_row[v] *= inv;
    return -(static_cast<double>(logits_row[target]) - static_cast<double>(mx) - std::log(sum));
}

}  // namespace

void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n) {
    const long work = static_cast<long>(m) * k * n;
#pragma omp parallel for schedule(static) if (m > 1 && work > 16384)
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<size_t>(i) * n;
        const float* arow = a + static_cast<size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const float aik = arow[kk];
            const float* brow = b + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

void matmul_nt(float* c, const float* g, const float* b, int m, int n, int k) {
    const long work = static_cast<long>(m) * k * n;
#pragma omp parallel for schedule(static) if (m > 1 && work > 16384)
    for (int i = 0; i < m; ++i) {
        float* crow = c + static_cast<size_t>(i) * k;
        const float* grow = g + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const float* brow = b + static_cast<size_t>(kk) * n;
            float acc = 0.0f;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            crow[kk] += acc;
        }
    }
}

void matmul_tn(float* c, const float* a, const float* g, int m, int k, int n) {
    const long work = static_cast<long>(m) * k * n;
    // Parallel over rows of C (= columns of A); each C row is owned by one
    // thread, accumulation over m stays in ascending order.
#pragma omp parallel for schedule(static) if (k > 1 && work > 16384)
    for (int kk = 0; kk < k; ++kk) {
        float* crow = c + static_cast<size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            const float aik = a[static_cast<size_t>(i) * k + kk];
            const float* grow = g + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += aik * grow[j];
        }
    }
}

void gelu_forward(float* y, const float* x, size_t n) {
#pragma omp parallel for schedule(static) if (n > 2048)
    for (long i = 0; i < static_cast<long>(n); ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(float* dx, const float* g, const float* x, size_t n) {
#pragma omp parallel for schedule(static) if (n > 2048)
    for (long i = 0; i < static_cast<long>(n); ++i) dx[i] += g[i] * gelu_grad_one(x[i]);
}

void bias_add(float* y, const float* x, const float* bias, int rows, int cols) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > 8192)
    for (int i = 0; i < rows; ++i) {
        const size_t off = static_cast<size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) y[off + j] = x[off + j] + bias[j];
    }
}

void bias_backward(float* dbias, const float* g, int rows, int cols) {
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * cols > 8192)
    for (int j = 0; j < cols; ++j) {
        float acc = 0.0f;
        for (int i = 0; i < rows; ++i) acc += g[static_cast<size_t>(i) * cols + j];
        dbias[j] += acc;
    }
}

double softmax_xent_forward(float* probs, const float* logits, const int* targets,
                            int batch, int vocab) {
    std::vector<double> rowloss(static_cast<size_t>(batch));
#pragma omp parallel for schedule(static) if (batch > 8)
    for (int bi = 0; bi < batch; ++bi) {
        const size_t off = static_cast<size_t>(bi) * vocab;
        rowloss[bi] = xent_row(probs + off, logits + off, targets[bi], vocab);
    }
    double total = 0.0;
    for (int bi = 0; bi < batch; ++bi) total += rowloss[bi];
    return total / batch;
}

void softmax_xent_backward(float* dlogits, const float* probs, const int* targets,
                           int batch, int vocab, float gscale) {
    const float s = gscale / static_cast<float>(batch);
#pragma omp parallel for schedule(static) if (static_cast<long>(batch) * vocab > 8192)
    for (int bi = 0; bi < batch; ++bi) {
        const size_t off = static_cast<size_t>(bi) * vocab;
        for (int v = 0; v < vocab; ++v) dlogits[off + v] += s * probs[off + v];
        dlogits[off + targets[bi]] -= s;
    }
}

void block_l2_norms(float* norms, const float* w, const FlatBlock* blocks, int nblocks) {
#pragma omp parallel for schedule(static) if (nblocks > 512)
    for (int g = 0; g < nblocks; ++g) {
        const FlatBlock& blk = blocks[g];
        float acc = 0.0f;
        for (int t = 0; t < blk.len; ++t) {
            const float x = w[blk.offset + static_cast<int64_t>(t) * blk.stride];
            acc += x * x;
        }
        norms[g] = std::sqrt(acc);
    }
}

void block_l2_backward(float* dw, const float* gnorm, const float* w, const float* norms,
                       const FlatBlock* blocks, int nblocks) {
    // Blocks are disjoint by construction, so per-block parallel writes are safe.
#pragma omp parallel for schedule(static) if (nblocks > 512)
    for (int g = 0; g < nblocks; ++g) {
        const FlatBlock& blk = blocks[g];
        if (norms[g] == 0.0f) continue;  // subgradient 0 at the zero block
        const float s = gnorm[g] / norms[g];
        for (int t = 0; t < blk.len; ++t) {
            const int64_t idx = blk.offset + static_cast<int64_t>(t) * blk.stride;
            dw[idx] += s * w[idx];
        }
    }
}

void adam_step(float* params, const float* grads, float* m, float* v, size_t n,
               int t, float lr, float beta1, float beta2, float eps) {
    const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta1), t)));
    const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta2), t)));
#pragma omp parallel for schedule(static) if (n > 4096)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const float g = grads[i];
        m[i] = beta1 * m[i] + (1.0f - beta1) * g;
        v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
        const float mhat = m[i] * c1;
        const float vhat = v[i] * c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void adam_step_masked(float* params, const float* grads, float* m, float* v,
                      const uint8_t* keep, size_t n, int t, float lr, float beta1,
                      float beta2, float eps) {
    const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta1), t)));
    const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta2), t)));
#pragma omp parallel for schedule(static) if (n > 4096)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        if (!keep[i]) continue;
        const float g = grads[i];
        m[i] = beta1 * m[i] + (1.0f - beta1) * g;
        v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
        const float mhat = m[i] * c1;
        const float vhat = v[i] * c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

// ---------------------------------------------------------------------------
// Serial reference. Naive loop shapes, no pragmas.
// ---------------------------------------------------------------------------

namespace ref {

void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n) {
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            const float aik = a[static_cast<size_t>(i) * k + kk];
            for (int j = 0; j < n; ++j)
                c[static_cast<size_t>(i) * n + j] += aik * b[static_cast<size_t>(kk) * n + j];
        }
}

void matmul_nt(float* c, const float* g, const float* b, int m, int n, int k) {
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            float acc = 0.0f;
            for (int j = 0; j < n; ++j)
                acc += g[static_cast<size_t>(i) * n + j] * b[static_cast<size_t>(kk) * n + j];
            c[static_cast<size_t>(i) * k + kk] += acc;
        }
}

void matmul_tn(float* c, const float* a, const float* g, int m, int k, int n) {
    for (int kk = 0; kk < k; ++kk)
        for (int i = 0; i < m; ++i) {
            const float aik = a[static_cast<size_t>(i) * k + kk];
            for (int j = 0; j < n; ++j)
                c[static_cast<size_t>(kk) * n + j] += aik * g[static_cast<size_t>(i) * n + j];
        }
}

void gelu_forward(float* y, const float* x, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(float* dx, const float* g, const float* x, size_t n) {
    for (size_t i = 0; i < n; ++i) dx[i] += g[i] * gelu_grad_one(x[i]);
}

void bias_add(float* y, const float* x, const float* bias, int rows, int cols) {
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            y[static_cast<size_t>(i) * cols + j] = x[static_cast<size_t>(i) * cols + j] + bias[j];
}

void bias_backward(float* dbias, const float* g, int rows, int cols) {
    for (int j = 0; j < cols; ++j) {
        float acc = 0.0f;
        for (int i = 0; i < rows; ++i) acc += g[static_cast<size_t>(i) * cols + j];
        dbias[j] += acc;
    }
}

double softmax_xent_forward(float* probs, const float* logits, const int* targets,
                            int batch, int vocab) {
    double total = 0.0;
    for (int bi = 0; bi < batch; ++bi) {
        const size_t off = static_cast<size_t>(bi) * vocab;
        total += xent_row(probs + off, logits + off, targets[bi], vocab);
    }
    return total / batch;
}

void softmax_xent_backward(float* dlogits, const float* probs, const int* targets,
                           int batch, int vocab, float gscale) {
    const float s = gscale / static_cast<float>(batch);
    for (int bi = 0; bi < batch; ++bi) {
        const size_t off = static_cast<size_t>(bi) * vocab;
        for (int v = 0; v < vocab; ++v) dlogits[off + v] += s * probs[off + v];
        dlogits[off + targets[bi]] -= s;
    }
}

void block_l2_norms(float* norms, const float* w, const FlatBlock* blocks, int nblocks) {
    for (int g = 0; g < nblocks; ++g) {
        const FlatBlock& blk = blocks[g];
        float acc = 0.0f;
        for (int t = 0; t < blk.len; ++t) {
            const float x = w[blk.offset + static_cast<int64_t>(t) * blk.stride];
            acc += x * x;
        }
        norms[g] = std::sqrt(acc);
    }
}

void block_l2_backward(float* dw, const float* gnorm, const float* w, const float* norms,
                       const FlatBlock* blocks, int nblocks) {
    for (int g = 0; g < nblocks; ++g) {
        const FlatBlock& blk = blocks[g];
        if (norms[g] == 0.0f) continue;
        const float s = gnorm[g] / norms[g];
        for (int t = 0; t < blk.len; ++t) {
            const int64_t idx = blk.offset + static_cast<int64_t>(t) * blk.stride;
            dw[idx] += s * w[idx];
        }
    }
}

void adam_step(float* params, const float* grads, float* m, float* v, size_t n,
               int t, float lr, float beta1, float beta2, float eps) {
    const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta1), t)));
    const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta2), t)));
    for (size_t i = 0; i < n; ++i) {
        const float g = grads[i];
        m[i] = beta1 * m[i] + (1.0f - beta1) * g;
        v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
        params[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

void adam_step_masked(float* params, const float* grads, float* m, float* v,
                      const uint8_t* keep, size_t n, int t, float lr, float beta1,
                      float beta2, float eps) {
    const float c1 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta1), t)));
    const float c2 = static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(beta2), t)));
    for (size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        const float g = grads[i];
        m[i] = beta1 * m[i] + (1.0f - beta1) * g;
        v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
        params[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

}  // namespace ref

}  // namespace pathways::kernels
