#include "pathways/model.hpp"

#include <cmath>

#include "pathways/rng.hpp"

namespace pathways {

void ModelConfig::validate() const {
    if (context_window < 1 || embed_dim < 1 || hidden_dim < 1 || num_hidden_layers < 1)
        fail("model config: all dims must be >= 1");
    if (vocab_size < 2) fail("model config: vocab_size %d must be >= 2", vocab_size);
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    Model m;
    m.config = cfg;
    auto rng = substream(seed, "model-init");
    m.embedding = Tensor::randn(cfg.vocab_size, cfg.embed_dim, rng, 1.0f);
    int in_dim = cfg.context_window * cfg.embed_dim;
    for (int i = 0; i < cfg.num_hidden_layers; ++i) {
        PrunableLayer layer;
        layer.name = "hidden" + std::to_string(i) + ".w";
        layer.weights =
            Tensor::randn(in_dim, cfg.hidden_dim, rng, 1.0f / std::sqrt(static_cast<float>(in_dim)));
        layer.partition = partition_blocks(in_dim, cfg.hidden_dim);
        m.hidden.push_back(std::move(layer));
        m.hidden_bias.push_back(Tensor::zeros(1, cfg.hidden_dim));
        in_dim = cfg.hidden_dim;
    }
    m.out_w = Tensor::randn(cfg.hidden_dim, cfg.vocab_size, rng,
                            1.0f / std::sqrt(static_cast<float>(cfg.hidden_dim)));
    m.out_b = Tensor::zeros(1, cfg.vocab_size);
    return m;
}

std::vector<Model::ParamRef> Model::params() {
    std::vector<ParamRef> out;
    out.push_back({"embed", &embedding, -1});
    for (size_t i = 0; i < hidden.size(); ++i) {
        out.push_back({hidden[i].name, &hidden[i].weights, static_cast<int>(i)});
        out.push_back({"hidden" + std::to_string(i) + ".b", &hidden_bias[i], -1});
    }
    out.push_back({"out.w", &out_w, -1});
    out.push_back({"out.b", &out_b, -1});
    return out;
}

std::vector<BlockPartition> Model::prunable_partitions() const {
    std::vector<BlockPartition> parts;
    for (const auto& l : hidden) parts.push_back(l.partition);
    return parts;
}

std::vector<std::pair<std::string, int>> Model::prunable_layer_blocks() const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& l : hidden) out.emplace_back(l.name, l.partition.block_count());
    return out;
}

Model::ParamCounts Model::param_counts() const {
    ParamCounts c;
    auto count = [&c](const std::string& name, const Tensor& t, bool prunable) {
        const int64_t n = static_cast<int64_t>(t.size());
        c.total += n;
        if (prunable) c.prunable += n;
        c.per_layer.emplace_back(name, n);
    };
    count("embed", embedding, false);
    for (size_t i = 0; i < hidden.size(); ++i) {
        count(hidden[i].name, hidden[i].weights, true);
        count("hidden" + std::to_string(i) + ".b", hidden_bias[i], false);
    }
    count("out.w", out_w, false);
    count("out.b", out_b, false);
    return c;
}

bool Model::bitwise_equal(const Model& o) const {
    if (!(config == o.config)) return false;
    if (!embedding.bitwise_equal(o.embedding)) return false;
    for (size_t i = 0; i < hidden.size(); ++i) {
        if (!hidden[i].weights.bitwise_equal(o.hidden[i].weights)) return false;
        if (!hidden_bias[i].bitwise_equal(o.hidden_bias[i])) return false;
    }
    return out_w.bitwise_equal(o.out_w) && out_b.bitwise_equal(o.out_b);
}

void apply_mask(Model& model, const Mask& mask) {
    std::string missing;
    for (auto& layer : model.hidden) {
        const MaskLayer* ml = mask.find(layer.name);
        if (!ml || ml->bits.size() != layer.partition.blocks.size()) {
            missing += missing.empty() ? layer.name : ", " + layer.name;
            continue;
        }
    }
    if (!missing.empty()) fail("apply_mask: mask does not match layers: %s", missing.c_str());
    for (auto& layer : model.hidden) {
        const MaskLayer* ml = mask.find(layer.name);
        for (size_t g = 0; g < ml->bits.size(); ++g) {
            if (ml->bits[g]) continue;
            const Block& b = layer.partition.blocks[g];
            for (int t = 0; t < b.len; ++t)
                layer.weights.at(b.row0 + t, b.col) = 0.0f;
        }
    }
}

Checkpoint snapshot(const Model& model) {
    Checkpoint ckpt;
    ckpt.config = model.config;
    ckpt.tensors.emplace_back("embed", model.embedding);
    for (size_t i = 0; i < model.hidden.size(); ++i) {
        ckpt.tensors.emplace_back(model.hidden[i].name, model.hidden[i].weights);
        ckpt.tensors.emplace_back("hidden" + std::to_string(i) + ".b", model.hidden_bias[i]);
    }
    ckpt.tensors.emplace_back("out.w", model.out_w);
    ckpt.tensors.emplace_back("out.b", model.out_b);
    return ckpt;
}

void restore(Model& model, const Checkpoint& ckpt) {
    if (!(ckpt.config == model.config))
        fail("restore: checkpoint config does not match model config");
    auto params = model.params();
    if (params.size() != ckpt.tensors.size())
        fail("restore: checkpoint has %zu tensors, model has %zu", ckpt.tensors.size(),
             params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, tensor] = ckpt.tensors[i];
        if (name != params[i].name)
            fail("restore: tensor '%s' where '%s' expected", name.c_str(), params[i].name.c_str());
        require_same_shape(*params[i].tensor, tensor, "restore");
        *params[i].tensor = tensor;
    }
}

ModelGraph build_forward(Tape& tape, const Model& model, const Batch& batch, const Mask* mask,
                         bool requires_grad) {
    if (batch.ctx_len != model.config.context_window)
        fail("forward: batch context length %d, model expects %d", batch.ctx_len,
             model.config.context_window);
    ModelGraph g;
    g.embed = tape.leaf(model.embedding, requires_grad);
    Tape::NodeId h = tape.embed_concat(g.embed, batch.contexts, batch.ctx_len);
    for (size_t i = 0; i < model.hidden.size(); ++i) {
        const PrunableLayer& layer = model.hidden[i];
        Tensor w = layer.weights;
        if (mask) {
            const MaskLayer* ml = mask.find(layer.name);
            if (!ml) fail("forward: mask is missing layer '%s'", layer.name.c_str());
            const auto keep = expand_mask_layer(*ml, layer.partition);
            for (size_t j = 0; j < w.data.size(); ++j)
                if (!keep[j]) w.data[j] = 0.0f;
        }
        g.hidden_w.push_back(tape.leaf(std::move(w), requires_grad));
        g.hidden_b.push_back(tape.leaf(model.hidden_bias[i], requires_grad));
        h = tape.gelu(tape.add_bias(tape.matmul(h, g.hidden_w[i]), g.hidden_b[i]));
    }
    g.out_w = tape.leaf(model.out_w, requires_grad);
    g.out_b = tape.leaf(model.out_b, requires_grad);
    g.logits = tape.add_bias(tape.matmul(h, g.out_w), g.out_b);
    return g;
}

EvalMetrics forward_eval(const Model& model, const Batch& batch, const Mask* mask) {
    Tape tape;
    ModelGraph g = build_forward(tape, model, batch, mask, /*requires_grad=*/false);
    Tape::NodeId loss = tape.softmax_cross_entropy(g.logits, batch.targets);
    EvalMetrics m;
    m.loss = tape.value(loss).data[0];
    m.accuracy = argmax_accuracy(tape.value(g.logits), batch.targets);
    return m;
}

}  // namespace pathways
