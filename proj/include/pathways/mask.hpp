#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pathways/blocks.hpp"

namespace pathways {

// Per-layer binary indicator over blocks; 1 = block survives. Layer order
// matches the model's prunable-layer order.
struct MaskLayer {
    std::string name;
    std::vector<uint8_t> bits;

    int64_t surviving_blocks() const {
        int64_t n = 0;
        for (uint8_t b : bits) n += b;
        return n;
    }
};

struct Mask {
    std::vector<MaskLayer> layers;
    std::string language = "agnostic";  // language id or "agnostic"
    std::string source = "imp";         // imp | lth | random

    const MaskLayer* find(const std::string& name) const {
        for (const auto& l : layers)
            if (l.name == name) return &l;
        return nullptr;
    }
    MaskLayer* find(const std::string& name) {
        for (auto& l : layers)
            if (l.name == name) return &l;
        return nullptr;
    }

    static Mask all_ones(const std::vector<std::pair<std::string, int>>& layer_blocks) {
        Mask m;
        for (const auto& [name, nblocks] : layer_blocks)
            m.layers.push_back({name, std::vector<uint8_t>(static_cast<size_t>(nblocks), 1)});
        return m;
    }
};

// Expands block bits to one byte per weight element (row-major).
std::vector<uint8_t> expand_mask_layer(const MaskLayer& layer, const BlockPartition& part);

// Pruned-weight fraction of one layer, weighting blocks by actual length.
double layer_weight_sparsity(const MaskLayer& layer, const BlockPartition& part);

// Pruned-weight fraction across all layers of the mask.
double mask_weight_sparsity(const Mask& mask, const std::vector<BlockPartition>& parts);

}  // namespace pathways
