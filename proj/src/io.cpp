#include "pathways/io.hpp"

#include <cstring>
#include <filesystem>
#include <sstream>

namespace pathways {

namespace {

constexpr char kMagic[8] = {'P', 'A', 'T', 'H', 'W', '0', '0', '1'};

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) fail("cannot open '%s' for writing", path.c_str());
    }
    void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
    void u32(uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        bytes(b, 4);
    }
    void u16(uint16_t v) {
        uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
        bytes(b, 2);
    }
    void f32(float v) {
        uint32_t u;
        std::memcpy(&u, &v, 4);
        u32(u);
    }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void close() {
        out_.close();
        if (!out_) fail("failed writing '%s'", path_.c_str());
    }

private:
    std::string path_;
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) fail("cannot open '%s'", path.c_str());
    }
    void bytes(void* p, size_t n) {
        in_.read(static_cast<char*>(p), n);
        if (static_cast<size_t>(in_.gcount()) != n)
            fail("'%s': truncated at offset %lld", path_.c_str(),
                 static_cast<long long>(offset_ + in_.gcount()));
        offset_ += n;
    }
    uint32_t u32() {
        uint8_t b[4];
        bytes(b, 4);
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }
    uint16_t u16() {
        uint8_t b[2];
        bytes(b, 2);
        return static_cast<uint16_t>(b[0] | (b[1] << 8));
    }
    float f32() {
        const uint32_t u = u32();
        float v;
        std::memcpy(&v, &u, 4);
        return v;
    }
    std::string str(uint32_t max_len = 4096) {
        const uint32_t n = u32();
        if (n > max_len)
            fail("'%s': name length %u at offset %lld is implausible", path_.c_str(), n,
                 static_cast<long long>(offset_ - 4));
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }
    int64_t offset() const { return offset_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
    int64_t offset_ = 0;
};

void check_magic(Reader& r) {
    char m[8];
    r.bytes(m, 8);
    if (std::memcmp(m, kMagic, 8) != 0)
        fail("'%s': bad magic at offset 0, not a PATHW001 file", r.path().c_str());
}

}  // namespace

void write_checkpoint_file(const std::string& path,
                           const std::vector<std::pair<std::string, Tensor>>& tensors) {
    Writer w(path);
    w.bytes(kMagic, 8);
    for (const auto& [name, t] : tensors) {
        w.str(name);
        w.u32(static_cast<uint32_t>(t.rows));
        w.u32(static_cast<uint32_t>(t.cols));
        for (float v : t.data) w.f32(v);
    }
    w.close();
}

std::vector<std::pair<std::string, Tensor>> read_checkpoint_file(const std::string& path) {
    Reader r(path);
    check_magic(r);
    std::vector<std::pair<std::string, Tensor>> out;
    while (!r.at_eof()) {
        const std::string name = r.str();
        const int64_t shape_off = r.offset();
        const uint32_t rows = r.u32();
        const uint32_t cols = r.u32();
        if (rows == 0 || cols == 0 || static_cast<uint64_t>(rows) * cols > (1u << 28))
            fail("'%s': implausible shape (%u, %u) at offset %lld", path.c_str(), rows, cols,
                 static_cast<long long>(shape_off));
        Tensor t(static_cast<int>(rows), static_cast<int>(cols));
        for (auto& v : t.data) v = r.f32();
        t.check_finite(("checkpoint tensor '" + name + "'").c_str());
        out.emplace_back(name, std::move(t));
    }
    return out;
}

void write_mask_file(const std::string& path, const Mask& mask) {
    Writer w(path);
    w.bytes(kMagic, 8);
    for (const auto& layer : mask.layers) {
        w.str(layer.name);
        w.u32(static_cast<uint32_t>(layer.bits.size()));
        w.u32(1);
        w.bytes(layer.bits.data(), layer.bits.size());
    }
    w.close();
}

Mask read_mask_file(const std::string& path) {
    Reader r(path);
    check_magic(r);
    Mask mask;
    while (!r.at_eof()) {
        MaskLayer layer;
        layer.name = r.str();
        const int64_t shape_off = r.offset();
        const uint32_t rows = r.u32();
        const uint32_t cols = r.u32();
        if (cols != 1 || rows == 0 || rows > (1u << 26))
            fail("'%s': implausible mask shape (%u, %u) at offset %lld", path.c_str(), rows, cols,
                 static_cast<long long>(shape_off));
        layer.bits.resize(rows);
        r.bytes(layer.bits.data(), rows);
        for (size_t i = 0; i < layer.bits.size(); ++i)
            if (layer.bits[i] > 1)
                fail("'%s': mask byte %u at offset %lld is not 0/1", path.c_str(), layer.bits[i],
                     static_cast<long long>(r.offset() - static_cast<int64_t>(rows - i)));
        mask.layers.push_back(std::move(layer));
    }
    return mask;
}

void write_corpus_file(const std::string& path, const Corpus& corpus, int universe) {
    Writer w(path);
    w.str(corpus.language);
    w.u32(static_cast<uint32_t>(universe));
    w.u32(static_cast<uint32_t>(corpus.train.size()));
    w.u32(static_cast<uint32_t>(corpus.valid.size()));
    w.u32(static_cast<uint32_t>(corpus.test.size()));
    for (uint16_t s : corpus.train) w.u16(s);
    for (uint16_t s : corpus.valid) w.u16(s);
    for (uint16_t s : corpus.test) w.u16(s);
    w.close();
}

Corpus read_corpus_file(const std::string& path, int* universe_out) {
    Reader r(path);
    Corpus corpus;
    corpus.language = r.str();
    const uint32_t universe = r.u32();
    const uint32_t n_train = r.u32();
    const uint32_t n_valid = r.u32();
    const uint32_t n_test = r.u32();
    if (universe == 0 || universe > 65536)
        fail("'%s': implausible universe %u", path.c_str(), universe);
    auto read_split = [&](std::vector<uint16_t>& split, uint32_t n) {
        split.resize(n);
        for (auto& s : split) {
            s = r.u16();
            if (s >= universe)
                fail("'%s': symbol %u >= universe %u at offset %lld", path.c_str(), s, universe,
                     static_cast<long long>(r.offset() - 2));
        }
    };
    read_split(corpus.train, n_train);
    read_split(corpus.valid, n_valid);
    read_split(corpus.test, n_test);
    if (universe_out) *universe_out = static_cast<int>(universe);
    return corpus;
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) fail("cannot create directory '%s': %s", path.c_str(), ec.message().c_str());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open '%s'", path.c_str());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open '%s' for writing", path.c_str());
    out << text;
    if (!out) fail("failed writing '%s'", path.c_str());
}

CsvWriter::CsvWriter(const std::string& path, const std::string& header, bool append) {
    const bool extend = append && std::filesystem::exists(path) &&
                        std::filesystem::file_size(path) > 0;
    out_.open(path, extend ? (std::ios::binary | std::ios::app) : std::ios::binary);
    if (!out_) fail("cannot open '%s' for writing", path.c_str());
    if (!extend) out_ << header << "\n";
}

void CsvWriter::row(const std::string& line) {
    out_ << line << "\n";
}

void CsvWriter::flush() { out_.flush(); }

std::string csv_num(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace pathways
