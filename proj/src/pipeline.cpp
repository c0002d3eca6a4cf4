#include "pathways/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <sstream>

#include "pathways/multitask.hpp"
#include "pathways/rng.hpp"
#include "pathways/trainer.hpp"

namespace pathways {

using nlohmann::json;

namespace {

const char* kLangs[4] = {"l0", "l1", "l2", "l3"};

std::string mode_name(PruneConfig::Mode mode) {
    return mode == PruneConfig::Mode::kImp ? "imp" : "lth";
}

json model_config_json(const ModelConfig& mc) {
    return json{{"context_window", mc.context_window},
                {"embed_dim", mc.embed_dim},
                {"hidden_dim", mc.hidden_dim},
                {"num_hidden_layers", mc.num_hidden_layers},
                {"vocab_size", mc.vocab_size}};
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig mc;
    mc.context_window = j.at("context_window").get<int>();
    mc.embed_dim = j.at("embed_dim").get<int>();
    mc.hidden_dim = j.at("hidden_dim").get<int>();
    mc.num_hidden_layers = j.at("num_hidden_layers").get<int>();
    mc.vocab_size = j.at("vocab_size").get<int>();
    return mc;
}

}  // namespace

int64_t model_param_count(const ModelConfig& cfg) {
    int64_t total = static_cast<int64_t>(cfg.vocab_size) * cfg.embed_dim;
    int64_t in = static_cast<int64_t>(cfg.context_window) * cfg.embed_dim;
    for (int i = 0; i < cfg.num_hidden_layers; ++i) {
        total += in * cfg.hidden_dim + cfg.hidden_dim;
        in = cfg.hidden_dim;
    }
    total += static_cast<int64_t>(cfg.hidden_dim) * cfg.vocab_size + cfg.vocab_size;
    return total;
}

const ResultEntry* MatrixSummary::find(const std::string& model) const {
    for (const auto& r : results)
        if (r.model == model) return &r;
    return nullptr;
}

Pipeline::Pipeline(ExperimentConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::string Pipeline::out_path(const std::string& rel) const {
    return (std::filesystem::path(cfg_.out_dir) / rel).string();
}

const Suite& Pipeline::suite() {
    if (suite_) return *suite_;
    Suite s;
    s.universe = 0;
    for (const char* lang : kLangs) {
        const std::string path = out_path(std::string("data/") + lang + ".corpus");
        if (!file_exists(path))
            fail("missing corpus '%s'; run gen-data first", path.c_str());
        int universe = 0;
        s.corpora.push_back(read_corpus_file(path, &universe));
        if (s.universe == 0)
            s.universe = universe;
        else if (s.universe != universe)
            fail("corpus '%s' universe %d disagrees with %d", path.c_str(), universe, s.universe);
    }
    if (s.universe != cfg_.model.vocab_size)
        fail("corpora universe %d does not match model vocab %d", s.universe,
             cfg_.model.vocab_size);
    suite_ = std::move(s);
    return *suite_;
}

void Pipeline::gen_data(bool force) {
    const std::string dir = out_path("data");
    const std::string marker = out_path("data/specs.json");
    if (file_exists(marker) && !force)
        fail("'%s' already exists; pass --force to overwrite", marker.c_str());
    ensure_dir(dir);
    Suite s = make_suite(substream_seed(cfg_.master_seed, "data"), cfg_.data.scale);
    json specs = json::array();
    for (size_t i = 0; i < s.specs.size(); ++i) {
        const LanguageSpec& spec = s.specs[i];
        write_corpus_file(out_path("data/" + spec.language + ".corpus"), s.corpora[i],
                          s.universe);
        specs.push_back({{"language", spec.language},
                         {"alphabet", spec.alphabet},
                         {"train_tokens", spec.train_tokens},
                         {"valid_tokens", spec.valid_tokens},
                         {"test_tokens", spec.test_tokens}});
    }
    json root = {{"universe", s.universe},
                 {"seed", substream_seed(cfg_.master_seed, "data")},
                 {"scale", cfg_.data.scale},
                 {"languages", specs}};
    write_text_file(marker, root.dump(2) + "\n");
    suite_ = std::move(s);
}

Model Pipeline::load_model_with_config(const std::string& ckpt_path, const ModelConfig& mc) const {
    Model model = Model::init(mc, 0);
    Checkpoint ckpt;
    ckpt.config = mc;
    ckpt.tensors = read_checkpoint_file(ckpt_path);
    restore(model, ckpt);
    return model;
}

Model Pipeline::load_model(const std::string& ckpt_path) const {
    const std::string meta_path = ckpt_path + ".json";
    if (file_exists(meta_path)) {
        const json meta = json::parse(read_text_file(meta_path));
        return load_model_with_config(ckpt_path, model_config_from_json(meta.at("model_config")));
    }
    return load_model_with_config(ckpt_path, cfg_.model);
}

void Pipeline::save_model(const std::string& path, const Model& model,
                          const std::string& model_name, const std::string& variant,
                          bool requires_masks, const std::vector<std::string>& mask_paths,
                          const std::string& language, double sparsity) const {
    write_checkpoint_file(path, snapshot(model).tensors);
    json meta = {{"model", model_name},
                 {"variant", variant},
                 {"requires_masks", requires_masks},
                 {"masks", mask_paths},
                 {"language", language},
                 {"sparsity", sparsity},
                 {"model_config", model_config_json(model.config)}};
    write_text_file(path + ".json", meta.dump(2) + "\n");
}

std::vector<Batch> Pipeline::probe_batches(const std::string& language) {
    const Suite& s = suite();
    std::vector<Batch> out;
    if (language == "agnostic") {
        const int64_t per_lang =
            std::max<int64_t>(cfg_.train.eval_batch_size,
                              cfg_.train.probe_examples / static_cast<int64_t>(s.corpora.size()));
        for (const Corpus& c : s.corpora) {
            auto b = eval_batches(c.valid, cfg_.model.context_window, cfg_.train.eval_batch_size,
                                  per_lang);
            out.insert(out.end(), b.begin(), b.end());
        }
        return out;
    }
    for (const Corpus& c : s.corpora)
        if (c.language == language)
            return eval_batches(c.valid, cfg_.model.context_window, cfg_.train.eval_batch_size,
                                cfg_.train.probe_examples);
    fail("unknown language '%s'", language.c_str());
}

EvalMetrics Pipeline::eval_on(const Model& model, const std::vector<Batch>& batches,
                              const Mask* mask) {
    double loss_sum = 0.0, acc_sum = 0.0;
    int64_t n = 0;
    for (const Batch& b : batches) {
        const EvalMetrics m = forward_eval(model, b, mask);
        loss_sum += m.loss * b.size();
        acc_sum += m.accuracy * b.size();
        n += b.size();
    }
    if (n == 0) fail("evaluation over an empty batch list");
    return {loss_sum / static_cast<double>(n), acc_sum / static_cast<double>(n)};
}

ModelConfig Pipeline::small_model_config() const {
    ModelConfig small = cfg_.model;
    const int64_t target = static_cast<int64_t>(
        std::llround(cfg_.train.small_dense_fraction * model_param_count(cfg_.model)));
    int best_h = 1;
    int64_t best_diff = std::numeric_limits<int64_t>::max();
    for (int h = 1; h <= cfg_.model.hidden_dim; ++h) {
        small.hidden_dim = h;
        const int64_t diff = std::llabs(model_param_count(small) - target);
        if (diff < best_diff) {
            best_diff = diff;
            best_h = h;
        }
    }
    small.hidden_dim = best_h;
    return small;
}

// ---------------------------------------------------------------------------
// Training loops shared by the commands.
// ---------------------------------------------------------------------------

namespace {

struct CsvSinks {
    CsvWriter* metrics = nullptr;
    CsvWriter* lambdas = nullptr;
};

void metrics_row(CsvWriter* csv, int step, const std::string& stage, const std::string& language,
                 double loss, double accuracy, double sparsity, double lambda_mean) {
    if (!csv) return;
    std::ostringstream ss;
    ss << step << "," << stage << "," << language << "," << csv_num(loss) << ","
       << csv_num(accuracy) << "," << csv_num(sparsity) << "," << csv_num(lambda_mean, 8);
    csv->row(ss.str());
}

void lambda_rows(CsvWriter* csv, int step, const std::string& stage, const Model& model,
                 const LayerLambdas& lambdas) {
    if (!csv) return;
    for (size_t i = 0; i < lambdas.values.size(); ++i) {
        std::ostringstream ss;
        ss << step << "," << stage << "," << model.hidden[i].name << ","
           << csv_num(lambdas.values[i], 8);
        csv->row(ss.str());
    }
}

// Dense (unmasked) training over a mixture of languages, temperature-sampled
// per step. Single language lists degenerate to plain monolingual training.
void train_dense_loop(Model& model, const std::vector<const Corpus*>& corpora, int steps,
                      bool with_lasso, const ExperimentConfig& cfg, const std::string& stage,
                      const std::string& seed_prefix, const CsvSinks& sinks) {
    std::vector<BatchStream> streams;
    std::vector<LanguageTask> tasks;
    for (const Corpus* c : corpora) {
        streams.emplace_back(&c->train, cfg.model.context_window, cfg.train.batch_size,
                             substream_seed(cfg.master_seed, seed_prefix + ":batches:" + c->language));
        tasks.push_back(LanguageTask{c->language,
                                     streams.back().examples_per_epoch(), nullptr, nullptr});
    }
    SamplingPolicy policy = cfg.sampling;
    auto rng = substream(cfg.master_seed, seed_prefix + ":sampling");
    Trainer trainer(model, cfg.adam(), cfg.train.warmup_steps);
    LayerLambdas lambdas;
    const bool lasso_on = with_lasso && cfg.lasso.enabled &&
                          lasso_schedule(0.0, cfg.prune.target_sparsity);
    for (int step = 1; step <= steps; ++step) {
        const int li = tasks.size() == 1 ? 0 : sample_language(policy, tasks, rng);
        if (lasso_on && (step - 1) % cfg.lasso.recompute_interval == 0) {
            lambdas = dynamic_lambdas(model, nullptr, cfg.lasso.base_strength);
            lambda_rows(sinks.lambdas, step, stage, model, lambdas);
        }
        const StepMetrics m = trainer.step(streams[li].next(), nullptr, lasso_on ? &lambdas : nullptr);
        metrics_row(sinks.metrics, step, stage, tasks[li].language, m.loss, m.accuracy, 0.0,
                    lasso_on ? lambdas.mean() : 0.0);
    }
}

// Fixed-mask training (the LSP-LTH stage): masked updates, no lasso.
void train_masked_loop(Model& model, const Mask& mask, const Corpus& corpus, int steps,
                       const ExperimentConfig& cfg, const std::string& stage,
                       const std::string& seed_prefix, const CsvSinks& sinks) {
    BatchStream stream(&corpus.train, cfg.model.context_window, cfg.train.batch_size,
                       substream_seed(cfg.master_seed, seed_prefix + ":batches:" + corpus.language));
    apply_mask(model, mask);
    ExpandedMask emask(mask, model);
    Trainer trainer(model, cfg.adam(), cfg.train.warmup_steps);
    const auto parts = model.prunable_partitions();
    const double sparsity = mask_weight_sparsity(mask, parts);
    for (int step = 1; step <= steps; ++step) {
        const StepMetrics m = trainer.step(stream.next(), &emask, nullptr);
        metrics_row(sinks.metrics, step, stage, corpus.language, m.loss, m.accuracy, sparsity, 0.0);
    }
}

}  // namespace

std::string Pipeline::train_dense(bool with_lasso) {
    const Suite& s = suite();
    ensure_dir(out_path("models"));
    Model model = Model::init(cfg_.model, substream_seed(cfg_.master_seed, "init"));

    CsvWriter metrics(out_path("metrics.csv"),
                      "step,stage,language,loss,accuracy,sparsity,lambda_mean", /*append=*/true);
    CsvWriter lambdas(out_path("lambdas.csv"), "step,stage,layer,lambda", /*append=*/true);
    CsvSinks sinks{&metrics, &lambdas};

    std::vector<const Corpus*> corpora;
    for (const Corpus& c : s.corpora) corpora.push_back(&c);
    const std::string stage = with_lasso ? "dense" : "dense-nolasso";
    train_dense_loop(model, corpora, cfg_.train.dense_steps, with_lasso, cfg_, stage, "dense",
                     sinks);

    const std::string path = out_path(with_lasso ? "models/dense.ckpt" : "models/dense_nolasso.ckpt");
    save_model(path, model, "dense-full", "dense", /*requires_masks=*/false, {}, "", 0.0);
    return path;
}

Pipeline::PruneOutcome Pipeline::prune(PruneConfig::Mode mode, const std::string& language,
                                       bool from_nolasso_theta0, bool save_artifacts,
                                       int finetune_override) {
    const Suite& s = suite();
    const bool agnostic = language == "agnostic";
    const Corpus* mono = nullptr;
    if (!agnostic) {
        for (const Corpus& c : s.corpora)
            if (c.language == language) mono = &c;
        if (!mono) fail("unknown language '%s'", language.c_str());
    }

    const std::string theta0_path =
        out_path(from_nolasso_theta0 ? "models/dense_nolasso.ckpt" : "models/dense.ckpt");
    if (!file_exists(theta0_path)) fail("missing '%s'; run train-dense first", theta0_path.c_str());
    Model model = load_model_with_config(theta0_path, cfg_.model);

    PruneConfig pcfg = cfg_.prune;
    pcfg.mode = mode;
    pcfg.interval = cfg_.interval_for(language);
    if (finetune_override >= 0) pcfg.post_prune_finetune_steps = finetune_override;

    const std::string tag = mode_name(mode) + (from_nolasso_theta0 ? "-nolasso" : "");
    const std::string stage = "prune-" + tag;
    // Batch seeds deliberately ignore the theta0 flavour so the regularized
    // and unregularized ablation runs see identical data.
    const std::string seed_prefix = "prune:" + mode_name(mode) + ":" + language;

    CsvWriter metrics(out_path("metrics.csv"),
                      "step,stage,language,loss,accuracy,sparsity,lambda_mean", /*append=*/true);
    CsvWriter lambdas_csv(out_path("lambdas.csv"), "step,stage,layer,lambda", /*append=*/true);

    // Batch feed: monolingual stream, or the temperature-sampled mixture for
    // the language-agnostic run.
    std::vector<BatchStream> streams;
    std::vector<LanguageTask> tasks;
    if (agnostic) {
        for (const Corpus& c : s.corpora) {
            streams.emplace_back(&c.train, cfg_.model.context_window, cfg_.train.batch_size,
                                 substream_seed(cfg_.master_seed, seed_prefix + ":batches:" + c.language));
            tasks.push_back(LanguageTask{c.language, streams.back().examples_per_epoch(), nullptr,
                                         nullptr});
        }
    } else {
        streams.emplace_back(&mono->train, cfg_.model.context_window, cfg_.train.batch_size,
                             substream_seed(cfg_.master_seed, seed_prefix + ":batches"));
    }
    auto sampling_rng = substream(cfg_.master_seed, seed_prefix + ":sampling");
    auto next_batch = [&]() -> Batch {
        if (!agnostic) return streams[0].next();
        const int li = sample_language(cfg_.sampling, tasks, sampling_rng);
        return streams[li].next();
    };

    const auto probes = probe_batches(language);
    auto probe = [&](const Model& m, const Mask& mask) -> EvalMetrics {
        return eval_on(m, probes, &mask);
    };

    PruneRunHooks hooks;
    hooks.on_step = [&](int step, const StepMetrics& m, double sparsity, float lambda_mean) {
        metrics_row(&metrics, step, stage, language, m.loss, m.accuracy, sparsity, lambda_mean);
    };
    hooks.on_lambdas = [&](int step, const LayerLambdas& l) {
        lambda_rows(&lambdas_csv, step, stage, model, l);
    };

    PruneOutcome outcome;
    outcome.run = (mode == PruneConfig::Mode::kImp)
                      ? imp_run(model, next_batch, probe, pcfg, cfg_.lasso, cfg_.adam(),
                                cfg_.train.warmup_steps, hooks)
                      : lth_run(model, next_batch, probe, pcfg, cfg_.lasso, cfg_.adam(),
                                cfg_.train.warmup_steps, hooks);
    outcome.run.mask.language = language;

    if (!save_artifacts) return outcome;

    ensure_dir(out_path("masks"));
    ensure_dir(out_path("models"));
    const std::string mask_rel = "masks/" + tag + "_" + language + ".mask";
    outcome.mask_path = out_path(mask_rel);
    write_mask_file(outcome.mask_path, outcome.run.mask);
    json meta = {{"language", language},
                 {"mode", mode_name(mode)},
                 {"p", pcfg.p},
                 {"T", pcfg.interval},
                 {"target_sparsity", pcfg.target_sparsity},
                 {"seed", cfg_.master_seed},
                 {"iterations", outcome.run.iterations},
                 {"achieved_sparsity", outcome.run.achieved_sparsity},
                 {"theta0", from_nolasso_theta0 ? "nolasso" : "lasso"}};
    write_text_file(outcome.mask_path + ".json", meta.dump(2) + "\n");

    const std::string model_name =
        agnostic ? std::string("lap") : "lsp-" + mode_name(mode);
    const std::string variant = agnostic ? std::string("lap") : "lsp-" + mode_name(mode);
    const std::string ckpt_rel = "models/" + tag + "_" + language + ".ckpt";

    if (mode == PruneConfig::Mode::kLth) {
        // Sparse training of the rewound network from theta0 under the found
        // mask, budget-matched to the IMP run it is compared against.
        const int steps = outcome.run.iterations * pcfg.interval + pcfg.post_prune_finetune_steps;
        CsvSinks sinks{&metrics, &lambdas_csv};
        if (agnostic) {
            // Mixture training under the fixed mask.
            apply_mask(model, outcome.run.mask);
            ExpandedMask emask(outcome.run.mask, model);
            Trainer trainer(model, cfg_.adam(), cfg_.train.warmup_steps);
            auto rng2 = substream(cfg_.master_seed, seed_prefix + ":train-sampling");
            const double sp = outcome.run.achieved_sparsity;
            for (int step = 1; step <= steps; ++step) {
                const int li = sample_language(cfg_.sampling, tasks, rng2);
                const StepMetrics m = trainer.step(streams[li].next(), &emask, nullptr);
                metrics_row(&metrics, step, "lth-train", tasks[li].language, m.loss, m.accuracy,
                            sp, 0.0);
            }
        } else {
            train_masked_loop(model, outcome.run.mask, *mono, steps, cfg_, "lth-train",
                              seed_prefix + ":train", sinks);
        }
    }

    outcome.model_path = out_path(ckpt_rel);
    save_model(outcome.model_path, model, model_name, variant, /*requires_masks=*/true,
               {mask_rel}, agnostic ? "" : language, outcome.run.achieved_sparsity);
    return outcome;
}

std::string Pipeline::train_pathways_cmd(const std::string& mask_source) {
    if (mask_source != "imp" && mask_source != "lth" && mask_source != "random")
        fail("mask source '%s' is not one of imp, lth, random", mask_source.c_str());
    const Suite& s = suite();
    const std::string theta0_path = out_path("models/dense.ckpt");
    if (!file_exists(theta0_path)) fail("missing '%s'; run train-dense first", theta0_path.c_str());
    Model theta0 = load_model_with_config(theta0_path, cfg_.model);
    ensure_dir(out_path("masks"));
    ensure_dir(out_path("models"));

    std::vector<Mask> masks;
    std::vector<std::string> mask_rels;
    for (const Corpus& c : s.corpora) {
        const std::string rel = "masks/" + mask_source + "_" + c.language + ".mask";
        if (mask_source == "random") {
            Mask m = random_mask(theta0, cfg_.prune.target_sparsity,
                                 substream_seed(cfg_.master_seed, "random-mask:" + c.language));
            m.language = c.language;
            write_mask_file(out_path(rel), m);
            json meta = {{"language", c.language},
                         {"mode", "random"},
                         {"p", cfg_.prune.p},
                         {"T", 0},
                         {"target_sparsity", cfg_.prune.target_sparsity},
                         {"seed", cfg_.master_seed},
                         {"iterations", 0},
                         {"achieved_sparsity",
                          mask_weight_sparsity(m, theta0.prunable_partitions())}};
            write_text_file(out_path(rel) + ".json", meta.dump(2) + "\n");
            masks.push_back(std::move(m));
        } else {
            const std::string path = out_path(rel);
            if (!file_exists(path))
                fail("mask for language '%s' not found at '%s'", c.language.c_str(), path.c_str());
            Mask m = read_mask_file(path);
            m.language = c.language;
            m.source = mask_source;
            masks.push_back(std::move(m));
        }
        mask_rels.push_back(rel);
    }

    std::vector<BatchStream> streams;
    std::vector<LanguageTask> tasks;
    for (size_t i = 0; i < s.corpora.size(); ++i) {
        const Corpus& c = s.corpora[i];
        streams.emplace_back(&c.train, cfg_.model.context_window, cfg_.train.batch_size,
                             substream_seed(cfg_.master_seed,
                                            "pw:" + mask_source + ":batches:" + c.language));
        tasks.push_back(LanguageTask{c.language, streams.back().examples_per_epoch(), &masks[i],
                                     [&streams, i]() { return streams[i].next(); }});
    }

    CsvWriter metrics(out_path("metrics.csv"),
                      "step,stage,language,loss,accuracy,sparsity,lambda_mean", /*append=*/true);
    const auto parts = theta0.prunable_partitions();
    std::map<std::string, double> task_sparsity;
    for (const auto& t : tasks) task_sparsity[t.language] = mask_weight_sparsity(*t.mask, parts);
    const std::string stage = "pathways-" + mask_source;
    PathwaysHooks hooks;
    hooks.on_step = [&](int step, const std::string& lang, const StepMetrics& m) {
        metrics_row(&metrics, step, stage, lang, m.loss, m.accuracy, task_sparsity[lang], 0.0);
    };

    SamplingPolicy policy = cfg_.sampling;
    policy.seed = substream_seed(cfg_.master_seed, "pw:" + mask_source + ":sampling");
    Model star = train_pathways(theta0, tasks, cfg_.train.pathways_steps, policy, cfg_.adam(),
                                cfg_.train.warmup_steps, hooks);

    const std::string path = out_path("models/pw_" + mask_source + ".ckpt");
    save_model(path, star, "pw-" + mask_source, "pathways-" + mask_source,
               /*requires_masks=*/true, mask_rels, "", cfg_.prune.target_sparsity);
    return path;
}

ResultEntry Pipeline::evaluate_checkpoint(
    const std::string& ckpt_path, const std::optional<std::vector<std::string>>& mask_paths,
    bool append_results) {
    const Suite& s = suite();
    const std::string meta_path = ckpt_path + ".json";
    if (!file_exists(ckpt_path)) fail("missing checkpoint '%s'", ckpt_path.c_str());
    if (!file_exists(meta_path)) fail("missing checkpoint metadata '%s'", meta_path.c_str());
    const json meta = json::parse(read_text_file(meta_path));
    const bool requires_masks = meta.value("requires_masks", false);

    std::vector<std::string> resolved;
    if (mask_paths) {
        resolved = *mask_paths;
    } else {
        for (const auto& rel : meta.value("masks", std::vector<std::string>{}))
            resolved.push_back(rel);
    }
    for (auto& p : resolved)
        if (!file_exists(p)) p = out_path(p);

    if (requires_masks && resolved.empty())
        fail("checkpoint '%s' is a masked sub-network model; evaluating it dense is not valid",
             ckpt_path.c_str());

    Model model = load_model(ckpt_path);
    const auto parts = model.prunable_partitions();

    // language -> mask; a single mask with no per-language peers applies to
    // every language (the language-agnostic case).
    std::vector<Mask> masks;
    for (const auto& p : resolved) {
        if (!file_exists(p)) fail("mask file '%s' not found", p.c_str());
        Mask m = read_mask_file(p);
        const std::string mask_meta = p + ".json";
        if (file_exists(mask_meta)) {
            const json mj = json::parse(read_text_file(mask_meta));
            m.language = mj.value("language", "agnostic");
            m.source = mj.value("mode", "imp");
        }
        masks.push_back(std::move(m));
    }

    ResultEntry entry;
    entry.model = meta.value("model", std::string("model"));
    entry.variant = meta.value("variant", std::string(""));

    const std::string only_language = meta.value("language", std::string(""));

    for (const Corpus& c : s.corpora) {
        if (!only_language.empty() && c.language != only_language) continue;
        const Mask* mask = nullptr;
        if (!masks.empty()) {
            if (masks.size() == 1) {
                mask = &masks[0];
            } else {
                for (const Mask& m : masks)
                    if (m.language == c.language) mask = &m;
                if (!mask)
                    fail("no mask for language '%s' among the %zu provided", c.language.c_str(),
                         masks.size());
            }
        }
        const auto batches = eval_batches(c.test, model.config.context_window,
                                          cfg_.train.eval_batch_size, cfg_.train.eval_max_examples);
        const EvalMetrics m = eval_on(model, batches, mask);
        entry.langs.push_back(c.language);
        entry.loss.push_back(m.loss);
        entry.accuracy.push_back(m.accuracy);
        if (mask) entry.sparsity = mask_weight_sparsity(*mask, parts);
    }
    if (entry.langs.empty()) fail("checkpoint '%s' matched no evaluation language", ckpt_path.c_str());

    double lsum = 0.0, asum = 0.0;
    for (size_t i = 0; i < entry.loss.size(); ++i) {
        lsum += entry.loss[i];
        asum += entry.accuracy[i];
    }
    entry.avg_loss = lsum / static_cast<double>(entry.loss.size());
    entry.avg_accuracy = asum / static_cast<double>(entry.accuracy.size());

    if (append_results) {
        CsvWriter results(out_path("results.csv"), "model,variant,sparsity,lang,loss,accuracy",
                          /*append=*/true);
        for (size_t i = 0; i < entry.langs.size(); ++i) {
            std::ostringstream ss;
            ss << entry.model << "," << entry.variant << "," << csv_num(entry.sparsity) << ","
               << entry.langs[i] << "," << csv_num(entry.loss[i]) << ","
               << csv_num(entry.accuracy[i]);
            results.row(ss.str());
        }
        std::ostringstream ss;
        ss << entry.model << "," << entry.variant << "," << csv_num(entry.sparsity) << ",avg,"
           << csv_num(entry.avg_loss) << "," << csv_num(entry.avg_accuracy);
        results.row(ss.str());
    }
    return entry;
}

MaskStats Pipeline::analyze_masks_cmd(const std::vector<std::string>& mask_paths,
                                      const std::string& set_name, bool append_csv) {
    if (mask_paths.size() < 2) fail("analyze-masks: need at least 2 masks");
    std::vector<Mask> masks;
    for (auto p : mask_paths) {
        if (!file_exists(p)) p = out_path(p);
        if (!file_exists(p)) fail("mask file '%s' not found", p.c_str());
        Mask m = read_mask_file(p);
        const std::string meta_path = p + ".json";
        if (file_exists(meta_path)) {
            const json mj = json::parse(read_text_file(meta_path));
            m.language = mj.value("language", p);
        } else {
            m.language = p;
        }
        masks.push_back(std::move(m));
    }
    Model probe = Model::init(cfg_.model, 0);
    const auto parts = probe.prunable_partitions();
    std::vector<const Mask*> ptrs;
    for (const Mask& m : masks) ptrs.push_back(&m);
    const MaskStats stats = stats_report(ptrs, parts);
    if (append_csv) {
        std::ostringstream csv;
        write_stats_csv(csv, stats, set_name, /*header=*/false);
        CsvWriter w(out_path("stats.csv"), "set,kind,a,b,value", /*append=*/true);
        std::istringstream lines(csv.str());
        std::string line;
        while (std::getline(lines, line)) w.row(line);
    }
    return stats;
}

MatrixSummary Pipeline::run_matrix(bool force) {
    if (file_exists(out_path("results.csv")) && !force)
        fail("'%s' already exists; pass --force to rerun the matrix",
             out_path("results.csv").c_str());
    MatrixSummary summary;
    ensure_dir(cfg_.out_dir);
    ensure_dir(out_path("models"));
    ensure_dir(out_path("masks"));

    auto stage = [](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            fail("stage %s failed: %s", name, e.what());
        }
        std::printf("[matrix] %s done\n", name);
        std::fflush(stdout);
    };

    // Fresh CSVs so reruns are byte-identical.
    CsvWriter(out_path("metrics.csv"), "step,stage,language,loss,accuracy,sparsity,lambda_mean");
    CsvWriter(out_path("lambdas.csv"), "step,stage,layer,lambda");
    CsvWriter(out_path("stats.csv"), "set,kind,a,b,value");

    stage("gen-data", [&] { gen_data(/*force=*/true); });

    stage("train-dense", [&] { train_dense(/*with_lasso=*/true); });
    stage("train-dense-nolasso", [&] { train_dense(/*with_lasso=*/false); });

    stage("lap", [&] { prune(PruneConfig::Mode::kImp, "agnostic"); });

    std::vector<PruneOutcome> imp_runs, imp_nolasso_runs, lth_runs;
    stage("lsp-imp", [&] {
        for (const char* lang : kLangs) imp_runs.push_back(prune(PruneConfig::Mode::kImp, lang));
    });
    stage("lsp-imp-nolasso", [&] {
        // Ablation-only runs from the unregularized theta0: no fine-tuning,
        // no saved artifacts, just the loss jump around the final prune.
        for (const char* lang : kLangs)
            imp_nolasso_runs.push_back(prune(PruneConfig::Mode::kImp, lang,
                                             /*from_nolasso_theta0=*/true,
                                             /*save_artifacts=*/false, /*finetune_override=*/0));
    });
    stage("lsp-lth", [&] {
        for (const char* lang : kLangs) lth_runs.push_back(prune(PruneConfig::Mode::kLth, lang));
    });

    stage("ablation-csv", [&] {
        CsvWriter ab(out_path("ablation.csv"),
                     "theta0,mode,language,loss_before_prune,loss_after_prune,increase");
        double jump_lasso = 0.0, jump_nolasso = 0.0;
        for (size_t i = 0; i < imp_runs.size(); ++i) {
            const auto& r = imp_runs[i].run;
            const auto& rn = imp_nolasso_runs[i].run;
            const double d = r.final_loss_after_prune() - r.final_loss_before_prune();
            const double dn = rn.final_loss_after_prune() - rn.final_loss_before_prune();
            jump_lasso += d / 4.0;
            jump_nolasso += dn / 4.0;
            ab.row(format_str("lasso,imp,%s,%s,%s,%s", kLangs[i],
                              csv_num(r.final_loss_before_prune()).c_str(),
                              csv_num(r.final_loss_after_prune()).c_str(), csv_num(d).c_str()));
            ab.row(format_str("nolasso,imp,%s,%s,%s,%s", kLangs[i],
                              csv_num(rn.final_loss_before_prune()).c_str(),
                              csv_num(rn.final_loss_after_prune()).c_str(), csv_num(dn).c_str()));
        }
        summary.prune_jump_lasso = jump_lasso;
        summary.prune_jump_nolasso = jump_nolasso;
    });

    stage("pathways", [&] {
        train_pathways_cmd("random");
        train_pathways_cmd("imp");
        train_pathways_cmd("lth");
    });

    const ModelConfig small_cfg = small_model_config();
    stage("dense-small", [&] {
        const Suite& s = suite();
        CsvWriter metrics(out_path("metrics.csv"),
                          "step,stage,language,loss,accuracy,sparsity,lambda_mean", true);
        CsvSinks sinks{&metrics, nullptr};
        for (const Corpus& c : s.corpora) {
            Model m = Model::init(small_cfg, substream_seed(cfg_.master_seed, "small-init:" + c.language));
            detail::train_dense_loop(m, {&c}, cfg_.train.dense_steps, /*with_lasso=*/false, cfg_,
                                     "dense-small", "small:" + c.language, sinks);
            save_model(out_path("models/small_" + c.language + ".ckpt"), m, "dense-small", "dense",
                       false, {}, c.language, 0.0);
        }
    });

    stage("evaluate", [&] {
        CsvWriter results(out_path("results.csv"), "model,variant,sparsity,lang,loss,accuracy");
        auto emit = [&](const ResultEntry& e) {
            for (size_t i = 0; i < e.langs.size(); ++i)
                results.row(format_str("%s,%s,%s,%s,%s,%s", e.model.c_str(), e.variant.c_str(),
                                       csv_num(e.sparsity).c_str(), e.langs[i].c_str(),
                                       csv_num(e.loss[i]).c_str(), csv_num(e.accuracy[i]).c_str()));
            results.row(format_str("%s,%s,%s,avg,%s,%s", e.model.c_str(), e.variant.c_str(),
                                   csv_num(e.sparsity).c_str(), csv_num(e.avg_loss).c_str(),
                                   csv_num(e.avg_accuracy).c_str()));
            summary.results.push_back(e);
        };
        auto combine = [&](const std::string& model_name, const std::string& variant,
                           const std::vector<ResultEntry>& parts_list) {
            ResultEntry e;
            e.model = model_name;
            e.variant = variant;
            double lsum = 0.0, asum = 0.0, ssum = 0.0;
            for (const auto& p : parts_list) {
                e.langs.push_back(p.langs[0]);
                e.loss.push_back(p.loss[0]);
                e.accuracy.push_back(p.accuracy[0]);
                lsum += p.loss[0];
                asum += p.accuracy[0];
                ssum += p.sparsity;
            }
            e.avg_loss = lsum / parts_list.size();
            e.avg_accuracy = asum / parts_list.size();
            e.sparsity = ssum / parts_list.size();
            return e;
        };

        emit(evaluate_checkpoint(out_path("models/dense.ckpt"), std::nullopt, false));

        std::vector<ResultEntry> small_rows, imp_rows, lth_rows;
        for (const char* lang : kLangs)
            small_rows.push_back(evaluate_checkpoint(
                out_path("models/small_" + std::string(lang) + ".ckpt"), std::nullopt, false));
        emit(combine("dense-small", "dense", small_rows));

        emit(evaluate_checkpoint(out_path("models/imp_agnostic.ckpt"), std::nullopt, false));

        for (const char* lang : kLangs)
            imp_rows.push_back(evaluate_checkpoint(
                out_path("models/imp_" + std::string(lang) + ".ckpt"), std::nullopt, false));
        emit(combine("lsp-imp", "lsp-imp", imp_rows));

        for (const char* lang : kLangs)
            lth_rows.push_back(evaluate_checkpoint(
                out_path("models/lth_" + std::string(lang) + ".ckpt"), std::nullopt, false));
        emit(combine("lsp-lth", "lsp-lth", lth_rows));

        emit(evaluate_checkpoint(out_path("models/pw_random.ckpt"), std::nullopt, false));
        emit(evaluate_checkpoint(out_path("models/pw_imp.ckpt"), std::nullopt, false));
        emit(evaluate_checkpoint(out_path("models/pw_lth.ckpt"), std::nullopt, false));
    });

    stage("mask-stats", [&] {
        std::vector<std::string> imp_paths, lth_paths;
        for (const char* lang : kLangs) {
            imp_paths.push_back(out_path("masks/imp_" + std::string(lang) + ".mask"));
            lth_paths.push_back(out_path("masks/lth_" + std::string(lang) + ".mask"));
        }
        summary.imp_stats = analyze_masks_cmd(imp_paths, "imp");
        summary.lth_stats = analyze_masks_cmd(lth_paths, "lth");
        auto mean_offdiag = [](const MaskStats& st) {
            double sum = 0.0;
            int n = 0;
            for (size_t i = 0; i < st.names.size(); ++i)
                for (size_t j = i + 1; j < st.names.size(); ++j) {
                    sum += st.iou[i][j];
                    ++n;
                }
            return n == 0 ? 0.0 : sum / n;
        };
        summary.mean_iou_imp = mean_offdiag(summary.imp_stats);
        summary.mean_iou_lth = mean_offdiag(summary.lth_stats);
        write_text_file(out_path("stats.txt"), render_stats(summary.imp_stats, "imp") + "\n" +
                                                   render_stats(summary.lth_stats, "lth"));
    });

    (void)force;
    return summary;
}

}  // namespace pathways
