#include "pathways/mask.hpp"

#include "pathways/error.hpp"

namespace pathways {

std::vector<uint8_t> expand_mask_layer(const MaskLayer& layer, const BlockPartition& part) {
    if (layer.bits.size() != part.blocks.size())
        fail("mask layer '%s': %zu bits vs %zu partition blocks", layer.name.c_str(),
             layer.bits.size(), part.blocks.size());
    std::vector<uint8_t> keep(static_cast<size_t>(part.rows) * part.cols, 0);
    for (size_t g = 0; g < part.blocks.size(); ++g) {
        if (!layer.bits[g]) continue;
        const Block& b = part.blocks[g];
        for (int t = 0; t < b.len; ++t)
            keep[static_cast<size_t>(b.row0 + t) * part.cols + b.col] = 1;
    }
    return keep;
}

double layer_weight_sparsity(const MaskLayer& layer, const BlockPartition& part) {
    if (layer.bits.size() != part.blocks.size())
        fail("mask layer '%s': %zu bits vs %zu partition blocks", layer.name.c_str(),
             layer.bits.size(), part.blocks.size());
    int64_t pruned = 0;
    for (size_t g = 0; g < part.blocks.size(); ++g)
        if (!layer.bits[g]) pruned += part.blocks[g].len;
    return static_cast<double>(pruned) / static_cast<double>(part.weight_count());
}

double mask_weight_sparsity(const Mask& mask, const std::vector<BlockPartition>& parts) {
    if (mask.layers.size() != parts.size())
        fail("mask has %zu layers, expected %zu", mask.layers.size(), parts.size());
    int64_t pruned = 0, total = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
        for (size_t g = 0; g < parts[i].blocks.size(); ++g)
            if (!mask.layers[i].bits[g]) pruned += parts[i].blocks[g].len;
        total += parts[i].weight_count();
    }
    return static_cast<double>(pruned) / static_cast<double>(total);
}

}  // namespace pathways
