#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "pathways/lasso.hpp"
#include "pathways/model.hpp"
#include "pathways/multitask.hpp"
#include "pathways/optimizer.hpp"
#include "pathways/pruning.hpp"

namespace pathways {

struct TrainBudgets {
    int batch_size = 32;
    int dense_steps = 5000;
    int pathways_steps = 5000;
    float learning_rate = 1e-3f;
    int warmup_steps = 100;
    double small_dense_fraction = 0.3;  // parameter ratio of the small dense baseline
    int64_t eval_max_examples = 10000;
    int64_t probe_examples = 2048;  // validation probe used around prune steps
    int eval_batch_size = 256;
};

struct DataParams {
    double scale = 1.0;  // multiplies the default corpus sizes
};

struct ExperimentConfig {
    int schema_version = 1;
    uint64_t master_seed = 1;
    std::string out_dir = "out";
    ModelConfig model;
    DataParams data;
    PruneConfig prune;
    std::map<std::string, int> per_language_interval;  // optional T override per language
    LassoConfig lasso;
    SamplingPolicy sampling;
    TrainBudgets train;

    AdamConfig adam() const {
        AdamConfig a;
        a.lr = train.learning_rate;
        return a;
    }
    int interval_for(const std::string& language) const {
        auto it = per_language_interval.find(language);
        return it == per_language_interval.end() ? prune.interval : it->second;
    }
    void validate() const;
};

ExperimentConfig default_config();
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
void save_config_file(const std::string& path, const ExperimentConfig& cfg);
std::string config_to_json_text(const ExperimentConfig& cfg);

}  // namespace pathways
