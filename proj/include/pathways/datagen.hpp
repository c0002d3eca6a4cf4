#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pathways/model.hpp"
#include "pathways/tensor.hpp"

namespace pathways {

// Synthetic "language": an alphabet drawn from a shared symbol universe and
// an order-2 Markov transition table over it. Overlapping alphabets share
// their transition structure on shared bigrams by construction, so related
// languages carry transferable statistics.
struct LanguageSpec {
    std::string language;
    int universe = 64;
    std::vector<int> alphabet;  // sorted global symbol ids
    // Row (a_local * A + b_local) is the distribution of the next symbol
    // (local index) after bigram (a, b).
    Tensor transitions;
    int64_t train_tokens = 0;
    int64_t valid_tokens = 0;
    int64_t test_tokens = 0;

    int alphabet_size() const { return static_cast<int>(alphabet.size()); }
    void validate(int min_tokens) const;
};

struct Corpus {
    std::string language;
    uint64_t seed = 0;
    std::vector<uint16_t> train;
    std::vector<uint16_t> valid;
    std::vector<uint16_t> test;
};

struct Suite {
    int universe = 64;
    std::vector<LanguageSpec> specs;
    std::vector<Corpus> corpora;
};

// Language spec whose transition rows are the restriction of a shared
// universe-level bigram table to `alphabet`, renormalized. Rows for the same
// bigram agree across languages up to that normalization.
LanguageSpec make_language_spec(const std::string& language, std::vector<int> alphabet,
                                int universe, int64_t train_tokens, int64_t valid_tokens,
                                int64_t test_tokens, uint64_t seed);

// Four languages over a 64-symbol universe, 32-symbol alphabets with
// pairwise overlaps of 8 or 16 symbols, train counts 400k/40k/8k/56k
// (resource skew of the same shape as the corpora this stands in for),
// valid/test 10k each. Deterministic per seed.
Suite make_default_suite(uint64_t seed);

// Scaled-down variant for quick runs: train counts multiplied by `scale`
// (floored at 2k tokens), valid/test at 10k * scale (floored at 2k).
Suite make_suite(uint64_t seed, double scale);

// Order-2 Markov sampling; the first two symbols are uniform over the
// alphabet. Returns global symbol ids.
std::vector<uint16_t> sample_sequence(const LanguageSpec& spec, int64_t length,
                                      std::mt19937_64& rng);

Corpus generate_corpus(const LanguageSpec& spec, uint64_t seed);

// Shuffled sliding-window batches over one token split. Epoch e reshuffles
// with a sub-seed of (seed, e), so streams with equal seeds replay the same
// order epoch by epoch.
class BatchStream {
public:
    BatchStream(const std::vector<uint16_t>* tokens, int ctx_len, int batch_size, uint64_t seed);

    Batch next();
    int64_t examples_per_epoch() const { return static_cast<int64_t>(order_.size()); }

private:
    void reshuffle();

    const std::vector<uint16_t>* tokens_;
    int ctx_len_;
    int batch_size_;
    uint64_t seed_;
    int64_t epoch_ = 0;
    size_t cursor_ = 0;
    std::vector<int64_t> order_;
};

// All (context, target) pairs of a split in corpus order, chunked; for
// deterministic evaluation. max_examples <= 0 means the whole split.
std::vector<Batch> eval_batches(const std::vector<uint16_t>& tokens, int ctx_len, int batch_size,
                                int64_t max_examples = -1);

}  // namespace pathways
