#pragma once

#include <cstdint>
#include <vector>

#include "pathways/blocks.hpp"
#include "pathways/tensor.hpp"

namespace pathways {

// Reverse-mode tape. Ops append nodes in execution order; node creation
// order is topological, so backward() is one reverse sweep that visits each
// op exactly once. A tape is confined to a single thread for the duration
// of one forward/backward pair; kernels may still fan out via OpenMP.
//
// Backward only writes gradient buffers, never forward values.
class Tape {
public:
    using NodeId = int32_t;

    // Leaves copy their value in; gradients are read back via grad().
    NodeId leaf(Tensor value, bool requires_grad = true);

    NodeId matmul(NodeId a, NodeId b);
    // x [m x n] + bias [1 x n], broadcast over rows
    NodeId add_bias(NodeId x, NodeId bias);
    NodeId gelu(NodeId x);
    // Concatenated embedding rows: table [V x E], ids laid out batch-major,
    // ctx_len ids per batch row; result [batch x ctx_len*E].
    NodeId embed_concat(NodeId table, const std::vector<int>& ids, int ctx_len);
    // Per-block L2 norms as a [1 x G] row; `active`, when given, limits the
    // computation to blocks with a non-zero flag (others get norm 0 and no
    // gradient). Subgradient at a zero block is 0.
    NodeId group_l2_norms(NodeId w, const BlockPartition& part,
                          const std::vector<uint8_t>* active = nullptr);
    NodeId sum(NodeId x);
    NodeId scale(NodeId x, float c);
    NodeId add(NodeId a, NodeId b);
    // Mean over the batch of -log softmax(logits)[target]; scalar node.
    NodeId softmax_cross_entropy(NodeId logits, const std::vector<int>& targets);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
    size_t node_count() const { return nodes_.size(); }

    // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse.
    void backward(NodeId root);

private:
    enum class Op : uint8_t {
        kLeaf,
        kMatmul,
        kAddBias,
        kGelu,
        kEmbedConcat,
        kGroupL2,
        kSum,
        kScale,
        kAdd,
        kSoftmaxXent,
    };

    struct Node {
        Op op;
        bool requires_grad = false;
        NodeId in0 = -1;
        NodeId in1 = -1;
        Tensor value;
        Tensor grad;
        std::vector<int> ids;    // embed contexts / xent targets
        int aux_i = 0;           // embed ctx_len
        float aux_f = 0.0f;      // scale coefficient
        Tensor aux_t;            // softmax probs / block norms cache
        std::vector<kernels::FlatBlock> flat_blocks;
    };

    NodeId push(Node n);
    void backward_node(Node& node);

    std::vector<Node> nodes_;
};

// Fraction of rows whose argmax(logits) equals the target; first index wins ties.
double argmax_accuracy(const Tensor& logits, const std::vector<int>& targets);

}  // namespace pathways
