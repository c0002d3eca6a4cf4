#include "pathways/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace pathways {

ExpandedMask::ExpandedMask(const Mask& m, const Model& model) : mask(&m) {
    for (const auto& layer : model.hidden) {
        const MaskLayer* ml = m.find(layer.name);
        if (!ml) fail("mask is missing layer '%s'", layer.name.c_str());
        keep.push_back(expand_mask_layer(*ml, layer.partition));
    }
}

Trainer::Trainer(Model& model, AdamConfig adam, int warmup_steps)
    : model_(model), adam_(adam), warmup_steps_(warmup_steps) {
    states_.resize(model_.params().size());
}

void Trainer::reset_optimizer() {
    for (auto& s : states_) s.reset();
    global_step_ = 0;
}

StepMetrics Trainer::step(const Batch& batch, const ExpandedMask* mask,
                          const LayerLambdas* lambdas) {
    Tape tape;
    ModelGraph g = build_forward(tape, model_, batch, mask ? mask->mask : nullptr);
    Tape::NodeId ce = tape.softmax_cross_entropy(g.logits, batch.targets);

    Tape::NodeId total = ce;
    if (lambdas) {
        if (lambdas->values.size() != model_.hidden.size())
            fail("trainer: %zu lambdas for %zu prunable layers", lambdas->values.size(),
                 model_.hidden.size());
        for (size_t i = 0; i < model_.hidden.size(); ++i) {
            if (lambdas->values[i] == 0.0f) continue;
            const MaskLayer* ml = mask ? mask->mask->find(model_.hidden[i].name) : nullptr;
            Tape::NodeId norms = tape.group_l2_norms(g.hidden_w[i], model_.hidden[i].partition,
                                                     ml ? &ml->bits : nullptr);
            total = tape.add(total, tape.scale(tape.sum(norms), lambdas->values[i]));
        }
    }

    StepMetrics metrics;
    metrics.loss = tape.value(ce).data[0];
    metrics.penalty = tape.value(total).data[0] - metrics.loss;
    metrics.accuracy = argmax_accuracy(tape.value(g.logits), batch.targets);
    if (!std::isfinite(metrics.loss))
        fail("training diverged: non-finite loss %f at step %d", metrics.loss, global_step_ + 1);

    tape.backward(total);

    ++global_step_;
    AdamConfig cfg = adam_;
    if (warmup_steps_ > 0 && global_step_ < warmup_steps_)
        cfg.lr = adam_.lr * static_cast<float>(global_step_) / static_cast<float>(warmup_steps_);

    auto params = model_.params();
    // Leaf order in the graph: embed, (w, b) per hidden layer, out.w, out.b —
    // matches params() order.
    std::vector<Tape::NodeId> leaves;
    leaves.push_back(g.embed);
    for (size_t i = 0; i < g.hidden_w.size(); ++i) {
        leaves.push_back(g.hidden_w[i]);
        leaves.push_back(g.hidden_b[i]);
    }
    leaves.push_back(g.out_w);
    leaves.push_back(g.out_b);

    for (size_t p = 0; p < params.size(); ++p) {
        const Tensor& grad = tape.grad(leaves[p]);
        if (params[p].prunable_index >= 0 && mask) {
            const auto& keep = mask->keep[params[p].prunable_index];
            // The leaf held m (x) theta, so this grad is d/d(masked view);
            // masked positions are forced to exact zero by skipping them.
            adam_step_masked(*params[p].tensor, grad, states_[p], keep, cfg);
        } else {
            adam_step(*params[p].tensor, grad, states_[p], cfg);
        }
    }
    return metrics;
}

}  // namespace pathways
