#pragma once

#include <cstddef>
#include <cstdint>

// Hot numeric loops, split from the tensor/tape layer so the OpenMP build
// and the serial reference stay interchangeable. Every parallel kernel
// assigns each output element to exactly one thread and accumulates in the
// same order as the serial reference, so the two produce bitwise-identical
// results; tests and the benchmark rely on that.
//
// Conventions: row-major float32, C-accumulating (callers zero C first when
// they want a plain product), raw pointers + dims.

namespace pathways::kernels {

// C[m x n] += A[m x k] * B[k x n]
void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n);
// C[m x k] += G[m x n] * B^T   (B is k x n); gradient w.r.t. the left operand
void matmul_nt(float* c, const float* g, const float* b, int m, int n, int k);
// C[k x n] += A^T * G          (A is m x k, G is m x n); gradient w.r.t. the right operand
void matmul_tn(float* c, const float* a, const float* g, int m, int k, int n);

// y = gelu(x), tanh approximation
void gelu_forward(float* y, const float* x, size_t n);
// dx += g * gelu'(x)
void gelu_backward(float* dx, const float* g, const float* x, size_t n);

// y[i,j] = x[i,j] + bias[j]
void bias_add(float* y, const float* x, const float* bias, int rows, int cols);
// dbias[j] += sum_i g[i,j]
void bias_backward(float* dbias, const float* g, int rows, int cols);

// Row-wise stabilized softmax; probs[b,v] filled, returns mean over rows of
// -log probs[b, target[b]] (accumulated in double, serial row order).
double softmax_xent_forward(float* probs, const float* logits, const int* targets,
                            int batch, int vocab);
// dlogits[b,v] += gscale * (probs[b,v] - onehot) / batch
void softmax_xent_backward(float* dlogits, const float* probs, const int* targets,
                           int batch, int vocab, float gscale);

// Block descriptors are flattened to (offset into the weight buffer of the
// first element, stride between elements, length) by the caller.
struct FlatBlock {
    int64_t offset;
    int32_t stride;
    int32_t len;
};

// norms[g] = l2 norm of block g of w
void block_l2_norms(float* norms, const float* w, const FlatBlock* blocks, int nblocks);
// dw[block g] += g[g] * w / norm; zero-norm blocks get zero gradient
void block_l2_backward(float* dw, const float* gnorm, const float* w, const float* norms,
                       const FlatBlock* blocks, int nblocks);

// Adam with bias correction, t is the 1-based step count.
void adam_step(float* params, const float* grads, float* m, float* v, size_t n,
               int t, float lr, float beta1, float beta2, float eps);
// Same update, but positions with keep[i] == 0 are skipped entirely:
// parameter, first and second moments stay untouched.
void adam_step_masked(float* params, const float* grads, float* m, float* v,
                      const uint8_t* keep, size_t n, int t, float lr, float beta1,
                      float beta2, float eps);

// Serial reference implementations, kept for correctness tests and as the
// benchmark baseline. Same contracts as above.
namespace ref {
void matmul_nn(float* c, const float* a, const float* b, int m, int k, int n);
void matmul_nt(float* c, const float* g, const float* b, int m, int n, int k);
void matmul_tn(float* c, const float* a, const float* g, int m, int k, int n);
void gelu_forward(float* y, const float* x, size_t n);
void gelu_backward(float* dx, const float* g, const float* x, size_t n);
void bias_add(float* y, const float* x, const float* bias, int rows, int cols);
void bias_backward(float* dbias, const float* g, int rows, int cols);
double softmax_xent_forward(float* probs, const float* logits, const int* targets,
                            int batch, int vocab);
void softmax_xent_backward(float* dlogits, const float* probs, const int* targets,
                           int batch, int vocab, float gscale);
void block_l2_norms(float* norms, const float* w, const FlatBlock* blocks, int nblocks);
void block_l2_backward(float* dw, const float* gnorm, const float* w, const float* norms,
                       const FlatBlock* blocks, int nblocks);
void adam_step(float* params, const float* grads, float* m, float* v, size_t n,
               int t, float lr, float beta1, float beta2, float eps);
void adam_step_masked(float* params, const float* grads, float* m, float* v,
                      const uint8_t* keep, size_t n, int t, float lr, float beta1,
                      float beta2, float eps);
}  // namespace ref

}  // namespace pathways::kernels
