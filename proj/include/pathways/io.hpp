#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "pathways/datagen.hpp"
#include "pathways/mask.hpp"
#include "pathways/model.hpp"

namespace pathways {

// Binary container shared by checkpoints and masks: magic "PATHW001", then
// per-tensor records of (u32 name length, UTF-8 name, u32 rows, u32 cols,
// payload). Checkpoint payloads are row-major little-endian float32; mask
// payloads are one byte per block (0/1). Readers report the byte offset of
// any corruption.

void write_checkpoint_file(const std::string& path,
                           const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> read_checkpoint_file(const std::string& path);

void write_mask_file(const std::string& path, const Mask& mask);
// Layer bit counts are validated by the caller against its partitions;
// language/source metadata lives in the JSON sidecar.
Mask read_mask_file(const std::string& path);

// Corpus file: u32 name length + name, u32 universe, u32 train count,
// u32 valid count, u32 test count, then the three splits as u16 symbols.
void write_corpus_file(const std::string& path, const Corpus& corpus, int universe);
Corpus read_corpus_file(const std::string& path, int* universe_out = nullptr);

bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Append-oriented CSV writer with fixed float formatting so equal runs
// produce byte-equal files.
class CsvWriter {
public:
    CsvWriter() = default;
    // Truncates by default; with append=true an existing non-empty file is
    // extended and the header skipped.
    CsvWriter(const std::string& path, const std::string& header, bool append = false);
    void row(const std::string& line);
    void flush();
    bool is_open() const { return out_.is_open(); }

private:
    std::ofstream out_;
};

std::string csv_num(double v, int decimals = 6);

}  // namespace pathways
