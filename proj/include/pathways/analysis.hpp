#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pathways/blocks.hpp"
#include "pathways/mask.hpp"

namespace pathways {

// Overlap measures over the elementwise expansion of the masks: block bits
// are weighted by actual block length, so remainder blocks do not skew the
// ratios.

// |a=1 and b=1| / |a=1 or b=1|. Two empty masks have no defined overlap and
// raise an error.
double mask_iou(const Mask& a, const Mask& b, const std::vector<BlockPartition>& parts);

// |union of surviving positions| / |total prunable positions|.
double mask_union_ratio(const std::vector<const Mask*>& masks,
                        const std::vector<BlockPartition>& parts);

struct MaskStats {
    std::vector<std::string> names;                    // language ids
    std::vector<std::vector<double>> iou;              // symmetric, unit diagonal
    double union_ratio = 0.0;
    std::vector<double> sparsity;                      // global, per mask
    std::vector<std::string> layer_names;
    std::vector<std::vector<double>> layer_sparsity;   // [mask][layer]
};

// Full pairwise IOU matrix, union ratio and sparsity tables for >= 2 masks.
MaskStats stats_report(const std::vector<const Mask*>& masks,
                       const std::vector<BlockPartition>& parts);

// Human-readable table; ratios carry 4 decimals.
std::string render_stats(const MaskStats& stats, const std::string& set_name);

// CSV rows: set,kind,a,b,value with kind in {iou, union_ratio, num_masks,
// sparsity, layer_sparsity}.
void write_stats_csv(std::ostream& out, const MaskStats& stats, const std::string& set_name,
                     bool header);

}  // namespace pathways
