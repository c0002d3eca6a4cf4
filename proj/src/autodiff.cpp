#include "pathways/autodiff.hpp"

#include <cstring>

#include "pathways/kernels.hpp"

namespace pathways {

Tape::NodeId Tape::push(Node n) {
    if (n.requires_grad && n.grad.data.empty()) n.grad = Tensor::zeros(n.value.rows, n.value.cols);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::kLeaf;
    n.requires_grad = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& av = nodes_[a].value;
    const Tensor& bv = nodes_[b].value;
    if (av.cols != bv.rows)
        fail("matmul: inner dimensions disagree, (%d, %d) x (%d, %d)", av.rows, av.cols, bv.rows,
             bv.cols);
    Node n;
    n.op = Op::kMatmul;
    n.in0 = a;
    n.in1 = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = Tensor::zeros(av.rows, bv.cols);
    kernels::matmul_nn(n.value.data.data(), av.data.data(), bv.data.data(), av.rows, av.cols,
                       bv.cols);
    return push(std::move(n));
}

Tape::NodeId Tape::add_bias(NodeId x, NodeId bias) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& bv = nodes_[bias].value;
    if (bv.rows != 1 || bv.cols != xv.cols)
        fail("add_bias: bias (%d, %d) does not broadcast over (%d, %d)", bv.rows, bv.cols, xv.rows,
             xv.cols);
    Node n;
    n.op = Op::kAddBias;
    n.in0 = x;
    n.in1 = bias;
    n.requires_grad = nodes_[x].requires_grad || nodes_[bias].requires_grad;
    n.value = Tensor(xv.rows, xv.cols);
    kernels::bias_add(n.value.data.data(), xv.data.data(), bv.data.data(), xv.rows, xv.cols);
    return push(std::move(n));
}

Tape::NodeId Tape::gelu(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Node n;
    n.op = Op::kGelu;
    n.in0 = x;
    n.requires_grad = nodes_[x].requires_grad;
    n.value = Tensor(xv.rows, xv.cols);
    kernels::gelu_forward(n.value.data.data(), xv.data.data(), xv.size());
    return push(std::move(n));
}

Tape::NodeId Tape::embed_concat(NodeId table, const std::vector<int>& ids, int ctx_len) {
    const Tensor& tv = nodes_[table].value;
    if (ctx_len < 1) fail("embed_concat: context length %d must be positive", ctx_len);
    if (ids.empty() || ids.size() % static_cast<size_t>(ctx_len) != 0)
        fail("embed_concat: %zu ids are not a multiple of context length %d", ids.size(), ctx_len);
    for (int id : ids)
        if (id < 0 || id >= tv.rows)
            fail("embed_concat: symbol id %d out of range [0, %d)", id, tv.rows);
    const int batch = static_cast<int>(ids.size()) / ctx_len;
    const int e = tv.cols;
    Node n;
    n.op = Op::kEmbedConcat;
    n.in0 = table;
    n.requires_grad = nodes_[table].requires_grad;
    n.ids = ids;
    n.aux_i = ctx_len;
    n.value = Tensor(batch, ctx_len * e);
    for (int b = 0; b < batch; ++b)
        for (int t = 0; t < ctx_len; ++t) {
            const float* src = tv.data.data() + static_cast<size_t>(ids[b * ctx_len + t]) * e;
            float* dst = n.value.data.data() + static_cast<size_t>(b) * ctx_len * e +
                         static_cast<size_t>(t) * e;
            std::memcpy(dst, src, sizeof(float) * e);
        }
    return push(std::move(n));
}

Tape::NodeId Tape::group_l2_norms(NodeId w, const BlockPartition& part,
                                  const std::vector<uint8_t>* active) {
    const Tensor& wv = nodes_[w].value;
    if (wv.rows != part.rows || wv.cols != part.cols)
        fail("group_l2_norms: partition (%d, %d) does not cover weights (%d, %d)", part.rows,
             part.cols, wv.rows, wv.cols);
    if (active && active->size() != part.blocks.size())
        fail("group_l2_norms: %zu active flags vs %zu blocks", active->size(), part.blocks.size());
    Node n;
    n.op = Op::kGroupL2;
    n.in0 = w;
    n.requires_grad = nodes_[w].requires_grad;
    n.flat_blocks = flatten_blocks(part);
    if (active) {
        std::vector<kernels::FlatBlock> kept;
        kept.reserve(n.flat_blocks.size());
        std::vector<int> kept_index;
        for (size_t g = 0; g < n.flat_blocks.size(); ++g)
            if ((*active)[g]) {
                kept_index.push_back(static_cast<int>(g));
                kept.push_back(n.flat_blocks[g]);
            }
        std::vector<float> compact(kept.size(), 0.0f);
        kernels::block_l2_norms(compact.data(), wv.data.data(), kept.data(),
                                static_cast<int>(kept.size()));
        n.value = Tensor::zeros(1, part.block_count());
        for (size_t i = 0; i < kept.size(); ++i) n.value.data[kept_index[i]] = compact[i];
        n.flat_blocks = std::move(kept);
        n.ids = std::move(kept_index);
    } else {
        n.value = Tensor::zeros(1, part.block_count());
        kernels::block_l2_norms(n.value.data.data(), wv.data.data(), n.flat_blocks.data(),
                                static_cast<int>(n.flat_blocks.size()));
    }
    return push(std::move(n));
}

Tape::NodeId Tape::sum(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Node n;
    n.op = Op::kSum;
    n.in0 = x;
    n.requires_grad = nodes_[x].requires_grad;
    double acc = 0.0;
    for (float v : xv.data) acc += v;
    n.value = Tensor(1, 1, {static_cast<float>(acc)});
    return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId x, float c) {
    const Tensor& xv = nodes_[x].value;
    Node n;
    n.op = Op::kScale;
    n.in0 = x;
    n.aux_f = c;
    n.requires_grad = nodes_[x].requires_grad;
    n.value = Tensor(xv.rows, xv.cols);
    for (size_t i = 0; i < xv.size(); ++i) n.value.data[i] = c * xv.data[i];
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& av = nodes_[a].value;
    const Tensor& bv = nodes_[b].value;
    require_same_shape(av, bv, "add");
    Node n;
    n.op = Op::kAdd;
    n.in0 = a;
    n.in1 = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.value = Tensor(av.rows, av.cols);
    for (size_t i = 0; i < av.size(); ++i) n.value.data[i] = av.data[i] + bv.data[i];
    return push(std::move(n));
}

Tape::NodeId Tape::softmax_cross_entropy(NodeId logits, const std::vector<int>& targets) {
    const Tensor& lv = nodes_[logits].value;
    if (lv.rows < 1) fail("softmax_cross_entropy: empty batch");
    if (targets.size() != static_cast<size_t>(lv.rows))
        fail("softmax_cross_entropy: %zu targets for %d rows", targets.size(), lv.rows);
    for (int t : targets)
        if (t < 0 || t >= lv.cols)
            fail("softmax_cross_entropy: target index %d out of range [0, %d)", t, lv.cols);
    Node n;
    n.op = Op::kSoftmaxXent;
    n.in0 = logits;
    n.requires_grad = nodes_[logits].requires_grad;
    n.ids = targets;
    n.aux_t = Tensor(lv.rows, lv.cols);
    const double loss = kernels::softmax_xent_forward(n.aux_t.data.data(), lv.data.data(),
                                                      targets.data(), lv.rows, lv.cols);
    n.value = Tensor(1, 1, {static_cast<float>(loss)});
    return push(std::move(n));
}

void Tape::backward(NodeId root) {
    Node& r = nodes_[root];
    if (r.value.size() != 1) fail("backward: root must be scalar, got (%d, %d)", r.value.rows, r.value.cols);
    if (!r.requires_grad) fail("backward: root does not require gradients");
    r.grad.data[0] = 1.0f;
    for (NodeId id = root; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.op == Op::kLeaf) continue;
        backward_node(n);
    }
}

void Tape::backward_node(Node& n) {
    const float* g = n.grad.data.data();
    switch (n.op) {
        case Op::kMatmul: {
            Node& a = nodes_[n.in0];
            Node& b = nodes_[n.in1];
            if (a.requires_grad)
                kernels::matmul_nt(a.grad.data.data(), g, b.value.data.data(), a.value.rows,
                                   b.value.cols, a.value.cols);
            if (b.requires_grad)
                kernels::matmul_tn(b.grad.data.data(), a.value.data.data(), g, a.value.rows,
                                   a.value.cols, b.value.cols);
            break;
        }
        case Op::kAddBias: {
            Node& x = nodes_[n.in0];
            Node& bias = nodes_[n.in1];
            if (x.requires_grad)
                for (size_t i = 0; i < x.grad.size(); ++i) x.grad.data[i] += g[i];
            if (bias.requires_grad)
                kernels::bias_backward(bias.grad.data.data(), g, n.value.rows, n.value.cols);
            break;
        }
        case Op::kGelu: {
            Node& x = nodes_[n.in0];
            if (x.requires_grad)
                kernels::gelu_backward(x.grad.data.data(), g, x.value.data.data(), x.value.size());
            break;
        }
        case Op::kEmbedConcat: {
            Node& table = nodes_[n.in0];
            if (!table.requires_grad) break;
            const int e = table.value.cols;
            const int ctx_len = n.aux_i;
            const int batch = n.value.rows;
            // Contexts repeat symbols, so the scatter-add stays serial to keep
            // accumulation order fixed.
            for (int b = 0; b < batch; ++b)
                for (int t = 0; t < ctx_len; ++t) {
                    float* dst =
                        table.grad.data.data() + static_cast<size_t>(n.ids[b * ctx_len + t]) * e;
                    const float* src = g + static_cast<size_t>(b) * ctx_len * e +
                                       static_cast<size_t>(t) * e;
                    for (int i = 0; i < e; ++i) dst[i] += src[i];
                }
            break;
        }
        case Op::kGroupL2: {
            Node& w = nodes_[n.in0];
            if (!w.requires_grad) break;
            if (n.ids.empty()) {
                kernels::block_l2_backward(w.grad.data.data(), g, w.value.data.data(),
                                           n.value.data.data(), n.flat_blocks.data(),
                                           static_cast<int>(n.flat_blocks.size()));
            } else {
                // Active-subset path: flat_blocks is compacted, ids maps back
                // to the full block index space used by value/grad.
                std::vector<float> gnorm(n.flat_blocks.size());
                std::vector<float> norms(n.flat_blocks.size());
                for (size_t i = 0; i < n.flat_blocks.size(); ++i) {
                    gnorm[i] = g[n.ids[i]];
                    norms[i] = n.value.data[n.ids[i]];
                }
                kernels::block_l2_backward(w.grad.data.data(), gnorm.data(), w.value.data.data(),
                                           norms.data(), n.flat_blocks.data(),
                                           static_cast<int>(n.flat_blocks.size()));
            }
            break;
        }
        case Op::kSum: {
            Node& x = nodes_[n.in0];
            if (!x.requires_grad) break;
            const float gv = g[0];
            for (size_t i = 0; i < x.grad.size(); ++i) x.grad.data[i] += gv;
            break;
        }
        case Op::kScale: {
            Node& x = nodes_[n.in0];
            if (!x.requires_grad) break;
            for (size_t i = 0; i < x.grad.size(); ++i) x.grad.data[i] += n.aux_f * g[i];
            break;
        }
        case Op::kAdd: {
            Node& a = nodes_[n.in0];
            Node& b = nodes_[n.in1];
            if (a.requires_grad)
                for (size_t i = 0; i < a.grad.size(); ++i) a.grad.data[i] += g[i];
            if (b.requires_grad)
                for (size_t i = 0; i < b.grad.size(); ++i) b.grad.data[i] += g[i];
            break;
        }
        case Op::kSoftmaxXent: {
            Node& logits = nodes_[n.in0];
            if (!logits.requires_grad) break;
            kernels::softmax_xent_backward(logits.grad.data.data(), n.aux_t.data.data(),
                                           n.ids.data(), n.aux_t.rows, n.aux_t.cols, g[0]);
            break;
        }
        case Op::kLeaf:
            break;
    }
}

double argmax_accuracy(const Tensor& logits, const std::vector<int>& targets) {
    if (targets.size() != static_cast<size_t>(logits.rows))
        fail("argmax_accuracy: %zu targets for %d rows", targets.size(), logits.rows);
    int hits = 0;
    for (int r = 0; r < logits.rows; ++r) {
        const float* row = logits.data.data() + static_cast<size_t>(r) * logits.cols;
        int best = 0;
        for (int c = 1; c < logits.cols; ++c)
            if (row[c] > row[best]) best = c;
        if (best == targets[r]) ++hits;
    }
    return logits.rows == 0 ? 0.0 : static_cast<double>(hits) / logits.rows;
}

}  // namespace pathways
