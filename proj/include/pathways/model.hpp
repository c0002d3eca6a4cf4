#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pathways/autodiff.hpp"
#include "pathways/blocks.hpp"
#include "pathways/mask.hpp"
#include "pathways/tensor.hpp"

namespace pathways {

// Feed-forward next-token predictor over a fixed context window of symbol
// ids. Hidden weight matrices are the only prunable parameters; embedding,
// biases and the output projection stay dense.
struct ModelConfig {
    int context_window = 8;
    int embed_dim = 16;
    int hidden_dim = 256;
    int num_hidden_layers = 2;
    int vocab_size = 64;

    bool operator==(const ModelConfig&) const = default;
    void validate() const;
};

// Named weight matrix with its block partition.
struct PrunableLayer {
    std::string name;
    Tensor weights;
    BlockPartition partition;
};

struct Model {
    ModelConfig config;
    Tensor embedding;  // V x E
    std::vector<PrunableLayer> hidden;
    std::vector<Tensor> hidden_bias;  // 1 x dim each
    Tensor out_w;  // hidden x V
    Tensor out_b;  // 1 x V

    static Model init(const ModelConfig& cfg, uint64_t seed);

    struct ParamRef {
        std::string name;
        Tensor* tensor;
        int prunable_index;  // -1 for non-prunable params
    };
    std::vector<ParamRef> params();

    std::vector<BlockPartition> prunable_partitions() const;
    std::vector<std::pair<std::string, int>> prunable_layer_blocks() const;

    struct ParamCounts {
        int64_t total = 0;
        int64_t prunable = 0;
        std::vector<std::pair<std::string, int64_t>> per_layer;
    };
    ParamCounts param_counts() const;

    bool bitwise_equal(const Model& o) const;
};

// Zeroes every weight under a 0-block; exact 0.0f, idempotent. Throws if the
// mask's layer names or block counts do not match, naming the offenders.
void apply_mask(Model& model, const Mask& mask);

// In-memory weight snapshot; optimizer state is deliberately not part of it.
struct Checkpoint {
    ModelConfig config;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

Checkpoint snapshot(const Model& model);
void restore(Model& model, const Checkpoint& ckpt);

// One training/eval batch: contexts are batch-major flattened symbol ids,
// ctx_len per row; targets holds one next-symbol id per row.
struct Batch {
    std::vector<int> contexts;
    std::vector<int> targets;
    int ctx_len = 0;

    int size() const { return ctx_len == 0 ? 0 : static_cast<int>(contexts.size()) / ctx_len; }
};

// Forward graph wiring on an external tape; exposes the leaf ids so training
// code can read gradients back per parameter. When `mask` is given the
// prunable leaves hold m (x) theta, realizing the masked sub-network.
struct ModelGraph {
    Tape::NodeId embed = -1;
    std::vector<Tape::NodeId> hidden_w;
    std::vector<Tape::NodeId> hidden_b;
    Tape::NodeId out_w = -1;
    Tape::NodeId out_b = -1;
    Tape::NodeId logits = -1;
};

ModelGraph build_forward(Tape& tape, const Model& model, const Batch& batch,
                         const Mask* mask = nullptr, bool requires_grad = true);

struct EvalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Loss + token accuracy over one batch, no gradients.
EvalMetrics forward_eval(const Model& model, const Batch& batch, const Mask* mask = nullptr);

}  // namespace pathways
