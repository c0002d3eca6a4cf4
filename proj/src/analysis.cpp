#include "pathways/analysis.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

#include "pathways/error.hpp"

namespace pathways {

namespace {
void require_aligned(const Mask& m, const std::vector<BlockPartition>& parts) {
    if (m.layers.size() != parts.size())
        fail("mask '%s' has %zu layers, expected %zu", m.language.c_str(), m.layers.size(),
             parts.size());
    for (size_t i = 0; i < parts.size(); ++i)
        if (m.layers[i].bits.size() != parts[i].blocks.size())
            fail("mask '%s' layer '%s': %zu bits vs %zu blocks", m.language.c_str(),
                 m.layers[i].name.c_str(), m.layers[i].bits.size(), parts[i].blocks.size());
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}
}  // namespace

double mask_iou(const Mask& a, const Mask& b, const std::vector<BlockPartition>& parts) {
    require_aligned(a, parts);
    require_aligned(b, parts);
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
        for (size_t g = 0; g < parts[i].blocks.size(); ++g) {
            const int len = parts[i].blocks[g].len;
            const bool ba = a.layers[i].bits[g] != 0;
            const bool bb = b.layers[i].bits[g] != 0;
            if (ba && bb) inter += len;
            if (ba || bb) uni += len;
        }
    }
    if (uni == 0)
        fail("iou of masks '%s' and '%s' is undefined: both are empty", a.language.c_str(),
             b.language.c_str());
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_union_ratio(const std::vector<const Mask*>& masks,
                        const std::vector<BlockPartition>& parts) {
    if (masks.empty()) fail("union_ratio: need at least one mask");
    for (const Mask* m : masks) require_aligned(*m, parts);
    int64_t covered = 0, total = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
        total += parts[i].weight_count();
        for (size_t g = 0; g < parts[i].blocks.size(); ++g) {
            for (const Mask* m : masks) {
                if (m->layers[i].bits[g]) {
                    covered += parts[i].blocks[g].len;
                    break;
                }
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(total);
}

MaskStats stats_report(const std::vector<const Mask*>& masks,
                       const std::vector<BlockPartition>& parts) {
    if (masks.size() < 2) fail("stats_report: need at least 2 masks, got %zu", masks.size());
    MaskStats s;
    for (const Mask* m : masks) {
        require_aligned(*m, parts);
        s.names.push_back(m->language);
    }
    const size_t n = masks.size();
    s.iou.assign(n, std::vector<double>(n, 1.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            s.iou[i][j] = s.iou[j][i] = mask_iou(*masks[i], *masks[j], parts);
    s.union_ratio = mask_union_ratio(masks, parts);
    for (size_t i = 0; i < parts.size(); ++i) s.layer_names.push_back(masks[0]->layers[i].name);
    for (const Mask* m : masks) {
        s.sparsity.push_back(mask_weight_sparsity(*m, parts));
        std::vector<double> per_layer;
        for (size_t i = 0; i < parts.size(); ++i)
            per_layer.push_back(layer_weight_sparsity(m->layers[i], parts[i]));
        s.layer_sparsity.push_back(std::move(per_layer));
    }
    return s;
}

std::string render_stats(const MaskStats& stats, const std::string& set_name) {
    std::ostringstream out;
    out << "mask set: " << set_name << "  (" << stats.names.size() << " masks)\n";
    out << "pairwise IOU:\n";
    out << "         ";
    for (const auto& n : stats.names) out << n << "      ";
    out << "\n";
    for (size_t i = 0; i < stats.names.size(); ++i) {
        out << stats.names[i] << "   ";
        for (size_t j = 0; j < stats.names.size(); ++j) out << fmt4(stats.iou[i][j]) << "  ";
        out << "\n";
    }
    out << "union ratio: " << fmt4(stats.union_ratio) << "\n";
    out << "sparsity per mask:\n";
    for (size_t i = 0; i < stats.names.size(); ++i) {
        out << "  " << stats.names[i] << ": global " << fmt4(stats.sparsity[i]);
        for (size_t l = 0; l < stats.layer_names.size(); ++l)
            out << "  " << stats.layer_names[l] << " " << fmt4(stats.layer_sparsity[i][l]);
        out << "\n";
    }
    return out.str();
}

void write_stats_csv(std::ostream& out, const MaskStats& stats, const std::string& set_name,
                     bool header) {
    if (header) out << "set,kind,a,b,value\n";
    for (size_t i = 0; i < stats.names.size(); ++i)
        for (size_t j = i + 1; j < stats.names.size(); ++j)
            out << set_name << ",iou," << stats.names[i] << "," << stats.names[j] << ","
                << fmt4(stats.iou[i][j]) << "\n";
    out << set_name << ",union_ratio,,," << fmt4(stats.union_ratio) << "\n";
    out << set_name << ",num_masks,,," << stats.names.size() << "\n";
    for (size_t i = 0; i < stats.names.size(); ++i)
        out << set_name << ",sparsity," << stats.names[i] << ",," << fmt4(stats.sparsity[i])
            << "\n";
    for (size_t i = 0; i < stats.names.size(); ++i)
        for (size_t l = 0; l < stats.layer_names.size(); ++l)
            out << set_name << ",layer_sparsity," << stats.names[i] << "," << stats.layer_names[l]
                << "," << fmt4(stats.layer_sparsity[i][l]) << "\n";
}

}  // namespace pathways
