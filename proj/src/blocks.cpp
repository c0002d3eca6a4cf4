#include "pathways/blocks.hpp"

#include <algorithm>

#include "pathways/error.hpp"

namespace pathways {

BlockPartition partition_blocks(int rows, int cols, int block_len) {
    if (rows < 1 || cols < 1) fail("partition_blocks: shape (%d, %d) must be positive", rows, cols);
    if (block_len < 1) fail("partition_blocks: block length %d must be positive", block_len);
    BlockPartition part;
    part.rows = rows;
    part.cols = cols;
    const int per_col = (rows + block_len - 1) / block_len;
    part.blocks.reserve(static_cast<size_t>(per_col) * cols);
    for (int c = 0; c < cols; ++c)
        for (int r0 = 0; r0 < rows; r0 += block_len)
            part.blocks.push_back({c, r0, std::min(block_len, rows - r0)});
    return part;
}

std::vector<kernels::FlatBlock> flatten_blocks(const BlockPartition& part) {
    std::vector<kernels::FlatBlock> flat;
    flat.reserve(part.blocks.size());
    for (const Block& b : part.blocks)
        flat.push_back({static_cast<int64_t>(b.row0) * part.cols + b.col, part.cols, b.len});
    return flat;
}

}  // namespace pathways
