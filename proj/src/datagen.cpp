#include "pathways/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pathways/rng.hpp"

namespace pathways {

void LanguageSpec::validate(int min_tokens) const {
    if (alphabet.empty()) fail("language '%s': empty alphabet", language.c_str());
    for (int s : alphabet)
        if (s < 0 || s >= universe)
            fail("language '%s': symbol %d outside universe [0, %d)", language.c_str(), s,
                 universe);
    const int a = alphabet_size();
    if (transitions.rows != a * a || transitions.cols != a)
        fail("language '%s': transition table (%d, %d), expected (%d, %d)", language.c_str(),
             transitions.rows, transitions.cols, a * a, a);
    for (int r = 0; r < transitions.rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < a; ++c) {
            const float p = transitions.at(r, c);
            if (p < 0.0f) fail("language '%s': negative probability in row %d", language.c_str(), r);
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            fail("language '%s': transition row %d sums to %f, not 1", language.c_str(), r, sum);
    }
    if (train_tokens < min_tokens || valid_tokens < min_tokens || test_tokens < min_tokens)
        fail("language '%s': splits must hold at least %d tokens", language.c_str(), min_tokens);
}

namespace {
constexpr double kDirichletAlpha = 0.2;

// The universe-level next-symbol weights for one bigram. Regenerated from
// the same sub-stream wherever the bigram appears, so languages sharing a
// bigram share its raw weights.
std::vector<double> bigram_weights(uint64_t seed, int universe, int a, int b) {
    auto rng = substream(seed, format_str("bigram:%d,%d", a, b));
    std::gamma_distribution<double> gamma(kDirichletAlpha, 1.0);
    std::vector<double> w(static_cast<size_t>(universe));
    for (auto& x : w) x = gamma(rng);
    return w;
}
}  // namespace

LanguageSpec make_language_spec(const std::string& language, std::vector<int> alphabet,
                                int universe, int64_t train_tokens, int64_t valid_tokens,
                                int64_t test_tokens, uint64_t seed) {
    std::sort(alphabet.begin(), alphabet.end());
    LanguageSpec spec;
    spec.language = language;
    spec.universe = universe;
    spec.alphabet = std::move(alphabet);
    spec.train_tokens = train_tokens;
    spec.valid_tokens = valid_tokens;
    spec.test_tokens = test_tokens;
    const int a = spec.alphabet_size();
    spec.transitions = Tensor(a * a, a);
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < a; ++j) {
            const auto w = bigram_weights(seed, universe, spec.alphabet[i], spec.alphabet[j]);
            double total = 0.0;
            for (int c = 0; c < a; ++c) total += w[spec.alphabet[c]];
            float* row = spec.transitions.data.data() + static_cast<size_t>(i * a + j) * a;
            for (int c = 0; c < a; ++c)
                row[c] = static_cast<float>(w[spec.alphabet[c]] / total);
        }
    return spec;
}

Suite make_suite(uint64_t seed, double scale) {
    if (scale <= 0.0) fail("make_suite: scale %f must be positive", scale);
    // Eight 8-symbol octets; each language takes four. Two language pairs
    // share two octets (16 symbols), the other four pairs share one (8).
    const int universe = 64;
    auto octet = [](int o) {
        std::vector<int> s(8);
        std::iota(s.begin(), s.end(), o * 8);
        return s;
    };
    auto alphabet = [&](std::initializer_list<int> octets) {
        std::vector<int> a;
        for (int o : octets) {
            auto s = octet(o);
            a.insert(a.end(), s.begin(), s.end());
        }
        return a;
    };
    const std::vector<std::pair<std::string, std::vector<int>>> alphabets = {
        {"l0", alphabet({0, 1, 4, 5})},
        {"l1", alphabet({0, 1, 6, 7})},
        {"l2", alphabet({2, 3, 4, 6})},
        {"l3", alphabet({2, 3, 5, 7})},
    };
    const int64_t train_counts[4] = {400000, 40000, 8000, 56000};

    auto scaled = [scale](int64_t n) {
        return std::max<int64_t>(2000, static_cast<int64_t>(std::llround(n * scale)));
    };

    Suite suite;
    suite.universe = universe;
    const uint64_t spec_seed = substream_seed(seed, "language-specs");
    for (int i = 0; i < 4; ++i) {
        LanguageSpec spec =
            make_language_spec(alphabets[i].first, alphabets[i].second, universe,
                               scaled(train_counts[i]), scaled(10000), scaled(10000), spec_seed);
        spec.validate(3);
        suite.specs.push_back(std::move(spec));
    }
    for (const auto& spec : suite.specs)
        suite.corpora.push_back(
            generate_corpus(spec, substream_seed(seed, "corpus:" + spec.language)));
    return suite;
}

Suite make_default_suite(uint64_t seed) { return make_suite(seed, 1.0); }

std::vector<uint16_t> sample_sequence(const LanguageSpec& spec, int64_t length,
                                      std::mt19937_64& rng) {
    if (length < 3) fail("sample_sequence: length %lld must be >= 3", static_cast<long long>(length));
    spec.validate(3);
    const int a = spec.alphabet_size();
    std::uniform_int_distribution<int> uniform(0, a - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<uint16_t> out(static_cast<size_t>(length));
    int prev2 = uniform(rng);
    int prev1 = uniform(rng);
    out[0] = static_cast<uint16_t>(spec.alphabet[prev2]);
    out[1] = static_cast<uint16_t>(spec.alphabet[prev1]);
    for (int64_t i = 2; i < length; ++i) {
        const float* row = spec.transitions.data.data() + static_cast<size_t>(prev2 * a + prev1) * a;
        const double u = unit(rng);
        double cum = 0.0;
        int next = a - 1;
        for (int c = 0; c < a; ++c) {
            cum += row[c];
            if (u < cum) {
                next = c;
                break;
            }
        }
        out[i] = static_cast<uint16_t>(spec.alphabet[next]);
        prev2 = prev1;
        prev1 = next;
    }
    return out;
}

Corpus generate_corpus(const LanguageSpec& spec, uint64_t seed) {
    Corpus corpus;
    corpus.language = spec.language;
    corpus.seed = seed;
    auto rng = std::mt19937_64(seed);
    const int64_t total = spec.train_tokens + spec.valid_tokens + spec.test_tokens;
    // One continuous stream split by position keeps the splits disjoint.
    const auto stream = sample_sequence(spec, total, rng);
    corpus.train.assign(stream.begin(), stream.begin() + spec.train_tokens);
    corpus.valid.assign(stream.begin() + spec.train_tokens,
                        stream.begin() + spec.train_tokens + spec.valid_tokens);
    corpus.test.assign(stream.begin() + spec.train_tokens + spec.valid_tokens, stream.end());
    return corpus;
}

BatchStream::BatchStream(const std::vector<uint16_t>* tokens, int ctx_len, int batch_size,
                         uint64_t seed)
    : tokens_(tokens), ctx_len_(ctx_len), batch_size_(batch_size), seed_(seed) {
    if (!tokens_ || static_cast<int64_t>(tokens_->size()) <= ctx_len_)
        fail("batch stream: corpus of %zu tokens cannot fill a context of %d",
             tokens_ ? tokens_->size() : 0, ctx_len_);
    if (batch_size_ < 1) fail("batch stream: batch size must be >= 1");
    order_.resize(tokens_->size() - ctx_len_);
    reshuffle();
}

void BatchStream::reshuffle() {
    std::iota(order_.begin(), order_.end(), 0);
    auto rng = std::mt19937_64(splitmix64(seed_ ^ splitmix64(static_cast<uint64_t>(epoch_))));
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
}

Batch BatchStream::next() {
    Batch batch;
    batch.ctx_len = ctx_len_;
    batch.contexts.reserve(static_cast<size_t>(batch_size_) * ctx_len_);
    batch.targets.reserve(batch_size_);
    for (int i = 0; i < batch_size_; ++i) {
        if (cursor_ >= order_.size()) {
            ++epoch_;
            reshuffle();
        }
        const int64_t pos = order_[cursor_++];  // target index = pos + ctx_len
        for (int t = 0; t < ctx_len_; ++t)
            batch.contexts.push_back((*tokens_)[pos + t]);
        batch.targets.push_back((*tokens_)[pos + ctx_len_]);
    }
    return batch;
}

std::vector<Batch> eval_batches(const std::vector<uint16_t>& tokens, int ctx_len, int batch_size,
                                int64_t max_examples) {
    if (static_cast<int64_t>(tokens.size()) <= ctx_len)
        fail("eval_batches: split of %zu tokens cannot fill a context of %d", tokens.size(),
             ctx_len);
    int64_t count = static_cast<int64_t>(tokens.size()) - ctx_len;
    if (max_examples > 0) count = std::min(count, max_examples);
    std::vector<Batch> out;
    for (int64_t start = 0; start < count; start += batch_size) {
        Batch batch;
        batch.ctx_len = ctx_len;
        const int64_t end = std::min(count, start + batch_size);
        for (int64_t pos = start; pos < end; ++pos) {
            for (int t = 0; t < ctx_len; ++t) batch.contexts.push_back(tokens[pos + t]);
            batch.targets.push_back(tokens[pos + ctx_len]);
        }
        out.push_back(std::move(batch));
    }
    return out;
}

}  // namespace pathways
