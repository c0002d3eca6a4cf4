#include "pathways/config.hpp"

#include <json.hpp>

#include "pathways/io.hpp"

namespace pathways {

using nlohmann::json;

void ExperimentConfig::validate() const {
    if (schema_version != 1) fail("config: unsupported schema_version %d", schema_version);
    model.validate();
    prune.validate();
    if (prune.interval < 1) fail("config: prune interval T must be >= 1");
    lasso.validate();
    sampling.validate();
    if (train.batch_size < 1 || train.dense_steps < 1 || train.pathways_steps < 1 ||
        train.eval_batch_size < 1)
        fail("config: all step budgets and batch sizes must be >= 1");
    if (train.warmup_steps < 0) fail("config: warmup_steps must be >= 0");
    if (!(train.small_dense_fraction > 0.0 && train.small_dense_fraction < 1.0))
        fail("config: small_dense_fraction must be in (0, 1)");
    if (train.learning_rate <= 0.0f) fail("config: learning_rate must be positive");
    if (data.scale <= 0.0) fail("config: data scale must be positive");
    for (const auto& [lang, t] : per_language_interval)
        if (t < 1) fail("config: per-language interval for '%s' must be >= 1", lang.c_str());
    if (out_dir.empty()) fail("config: out_dir must not be empty");
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

namespace {

template <typename T>
void opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg;
    opt(j, "schema_version", cfg.schema_version);
    opt(j, "master_seed", cfg.master_seed);
    opt(j, "out_dir", cfg.out_dir);
    if (j.contains("model")) {
        const json& m = j.at("model");
        opt(m, "context_window", cfg.model.context_window);
        opt(m, "embed_dim", cfg.model.embed_dim);
        opt(m, "hidden_dim", cfg.model.hidden_dim);
        opt(m, "num_hidden_layers", cfg.model.num_hidden_layers);
    }
    if (j.contains("data")) opt(j.at("data"), "scale", cfg.data.scale);
    if (j.contains("prune")) {
        const json& p = j.at("prune");
        opt(p, "p", cfg.prune.p);
        opt(p, "interval", cfg.prune.interval);
        opt(p, "target_sparsity", cfg.prune.target_sparsity);
        opt(p, "finetune_steps", cfg.prune.post_prune_finetune_steps);
        if (p.contains("per_language_interval"))
            cfg.per_language_interval =
                p.at("per_language_interval").get<std::map<std::string, int>>();
    }
    if (j.contains("lasso")) {
        const json& l = j.at("lasso");
        opt(l, "base_strength", cfg.lasso.base_strength);
        opt(l, "enabled", cfg.lasso.enabled);
        opt(l, "recompute_interval", cfg.lasso.recompute_interval);
    }
    if (j.contains("sampling")) opt(j.at("sampling"), "alpha", cfg.sampling.alpha);
    if (j.contains("train")) {
        const json& t = j.at("train");
        opt(t, "batch_size", cfg.train.batch_size);
        opt(t, "dense_steps", cfg.train.dense_steps);
        opt(t, "pathways_steps", cfg.train.pathways_steps);
        opt(t, "learning_rate", cfg.train.learning_rate);
        opt(t, "warmup_steps", cfg.train.warmup_steps);
        opt(t, "small_dense_fraction", cfg.train.small_dense_fraction);
        opt(t, "eval_max_examples", cfg.train.eval_max_examples);
        opt(t, "probe_examples", cfg.train.probe_examples);
        opt(t, "eval_batch_size", cfg.train.eval_batch_size);
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json_text(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["master_seed"] = cfg.master_seed;
    j["out_dir"] = cfg.out_dir;
    j["model"] = {{"context_window", cfg.model.context_window},
                  {"embed_dim", cfg.model.embed_dim},
                  {"hidden_dim", cfg.model.hidden_dim},
                  {"num_hidden_layers", cfg.model.num_hidden_layers}};
    j["data"] = {{"scale", cfg.data.scale}};
    j["prune"] = {{"p", cfg.prune.p},
                  {"interval", cfg.prune.interval},
                  {"target_sparsity", cfg.prune.target_sparsity},
                  {"finetune_steps", cfg.prune.post_prune_finetune_steps},
                  {"per_language_interval", cfg.per_language_interval}};
    j["lasso"] = {{"base_strength", cfg.lasso.base_strength},
                  {"enabled", cfg.lasso.enabled},
                  {"recompute_interval", cfg.lasso.recompute_interval}};
    j["sampling"] = {{"alpha", cfg.sampling.alpha}};
    j["train"] = {{"batch_size", cfg.train.batch_size},
                  {"dense_steps", cfg.train.dense_steps},
                  {"pathways_steps", cfg.train.pathways_steps},
                  {"learning_rate", cfg.train.learning_rate},
                  {"warmup_steps", cfg.train.warmup_steps},
                  {"small_dense_fraction", cfg.train.small_dense_fraction},
                  {"eval_max_examples", cfg.train.eval_max_examples},
                  {"probe_examples", cfg.train.probe_examples},
                  {"eval_batch_size", cfg.train.eval_batch_size}};
    return j.dump(2) + "\n";
}

ExperimentConfig load_config_file(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        fail("config '%s': %s", path.c_str(), e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        fail("config '%s': %s", path.c_str(), e.what());
    }
}

ExperimentConfig config_from_json_text(const std::string& text) {
    try {
        return config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        fail("config: %s", e.what());
    }
}

void save_config_file(const std::string& path, const ExperimentConfig& cfg) {
    write_text_file(path, config_to_json_text(cfg));
}

}  // namespace pathways
