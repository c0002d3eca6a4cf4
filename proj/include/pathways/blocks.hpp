#pragma once

#include <cstdint>
#include <vector>

#include "pathways/kernels.hpp"

namespace pathways {

// One pruning group: a contiguous run of `len` rows in a single column.
// len is 8 except possibly a shorter final block per column when the row
// count is not a multiple of 8.
struct Block {
    int col = 0;
    int row0 = 0;
    int len = 0;
};

// Tiles one weight matrix exactly and disjointly, ordered column-major then
// by starting row. Block index order is the pruning tie-break order.
struct BlockPartition {
    int rows = 0;
    int cols = 0;
    std::vector<Block> blocks;

    int64_t weight_count() const { return static_cast<int64_t>(rows) * cols; }
    int block_count() const { return static_cast<int>(blocks.size()); }
};

BlockPartition partition_blocks(int rows, int cols, int block_len = 8);

// Row-major element offsets/strides for the kernels.
std::vector<kernels::FlatBlock> flatten_blocks(const BlockPartition& part);

}  // namespace pathways
