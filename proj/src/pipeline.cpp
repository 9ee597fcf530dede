#include "moodreader/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "moodreader/checkpoint.hpp"

namespace mr {

Dataset load_configured_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_type == "manifest") {
        if (cfg.manifest_path.empty())
            throw ConfigError("dataset: manifest type needs a manifest path");
        return load_dataset(cfg.manifest_path);
    }
    if (cfg.dataset_type == "synthetic") return synth_generate(cfg.synth, cfg.seed);
    throw ConfigError("dataset: unknown type '" + cfg.dataset_type + "'");
}

ModelConfig derive_model_config(const ExperimentConfig& cfg, const Dataset& ds) {
    ModelConfig mc = cfg.model;
    if (ds.samples.empty()) throw DataError("dataset: no samples");
    const DETensor& de = ds.samples.front().de;
    mc.windows = de.windows();
    mc.bands = de.bands();
    mc.channels = de.channels();
    mc.classes = ds.classes;
    if (!cfg.preset.empty()) apply_preset(mc, cfg.preset);
    if (mc.use_eye) {
        if (ds.eye_seq_len == 0)
            throw ConfigError("model: eye stream requested but the dataset has no eye data");
        mc.eye_seq_len = ds.eye_seq_len;
        mc.eye_dim = ds.eye_dim;
    }
    if (mc.use_encoder && mc.encoder_dim == 0) mc.encoder_dim = cfg.mbsm.d_model;
    return mc;
}

std::vector<ModelInput> to_inputs(const Dataset& ds) {
    std::vector<ModelInput> out;
    out.reserve(ds.size());
    for (const auto& s : ds.samples) out.push_back({s.de, s.eye, s.eeg_latent});
    return out;
}

std::vector<std::size_t> dataset_labels(const Dataset& ds) {
    std::vector<std::size_t> out;
    out.reserve(ds.size());
    for (const auto& s : ds.samples) out.push_back(s.label);
    return out;
}

void attach_latents(Dataset& ds, MbsmModel& encoder) {
    for (auto& s : ds.samples) s.eeg_latent = encoder.latent_extract(s.raw_span);
}

std::vector<std::size_t> predict(MoodReaderModel& model, const Dataset& ds,
                                 std::size_t batch) {
    if (batch < 2) batch = 2;  // classifier batch norm needs at least 2 rows
    RandomStream rng(0);
    auto inputs = to_inputs(ds);
    std::vector<std::size_t> preds;
    preds.reserve(inputs.size());
    std::size_t i = 0;
    while (i < inputs.size()) {
        std::size_t take = std::min(batch, inputs.size() - i);
        std::size_t from = i;
        // avoid a trailing single-sample chunk
        if (take == 1 && from > 0) {
            --from;
            take = 2;
        }
        std::vector<ModelInput> chunk(inputs.begin() + from, inputs.begin() + from + take);
        Var probs = model.forward(chunk, rng, false);
        for (std::size_t r = i - from; r < take; ++r) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < probs->value.cols(); ++c)
                if (probs->value.at(r, c) > probs->value.at(r, best)) best = c;
            preds.push_back(best);
        }
        i = from + take;
    }
    return preds;
}

Metrics evaluate_model(MoodReaderModel& model, const Dataset& ds, std::size_t batch) {
    return count_metrics(dataset_labels(ds), predict(model, ds, batch), ds.classes);
}

std::map<std::string, Tensor> model_state(const MoodReaderModel& model) {
    auto snap = snapshot_params(model.params());
    for (auto& [k, v] : model.extra_state()) snap.emplace("extra." + k, v);
    return snap;
}

void load_model_state(MoodReaderModel& model, const std::map<std::string, Tensor>& state) {
    std::map<std::string, Tensor> params, extra;
    for (const auto& [k, v] : state) {
        if (k.rfind("extra.", 0) == 0)
            extra.emplace(k.substr(6), v);
        else
            params.emplace(k, v);
    }
    restore_params(model.params(), params);
    model.set_extra_state(extra);
}

TrainOutput train_model(MoodReaderModel& model, const Dataset& train, const Dataset& test,
                        const TrainOptions& opts) {
    if (train.size() < 2) throw DataError("train: need at least 2 training samples");
    TrainOutput out;
    auto inputs = to_inputs(train);
    auto labels = dataset_labels(train);
    const std::size_t classes = train.classes;
    const std::size_t batch = std::max<std::size_t>(2, std::min(opts.batch, inputs.size()));
    const std::size_t eval_every =
        opts.eval_every ? opts.eval_every : std::max<std::size_t>(1, opts.steps / 5);

    RandomStream rng(opts.seed);
    RandomStream data_rng = rng.derive(1);
    AdamOptimizer opt(opts.lr);
    opt.set_cosine_decay(opts.steps);

    auto snapshot_attention = [&](const std::string& tag) {
        const Dataset& src = test.size() ? test : train;
        std::vector<ModelInput> probe = to_inputs(src);
        if (probe.size() > 16) probe.resize(16);
        RandomStream probe_rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
        out.attention_snapshots.emplace_back(
            tag, model.channel_attention_profile(probe, probe_rng));
    };
    if (opts.snapshots) snapshot_attention("init");

    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t cursor = order.size();  // force an initial shuffle

    double best_acc = -1.0;
    auto last_good = model_state(model);
    out.best_checkpoint = last_good;

    for (std::size_t step = 1; step <= opts.steps; ++step) {
        std::vector<ModelInput> mb;
        std::vector<std::size_t> mb_labels;
        mb.reserve(batch);
        for (std::size_t k = 0; k < batch; ++k) {
            if (cursor >= order.size()) {
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[data_rng.below(i)]);
                cursor = 0;
            }
            mb.push_back(inputs[order[cursor]]);
            mb_labels.push_back(labels[order[cursor]]);
            ++cursor;
        }

        Var probs = model.forward(mb, rng, true);
        Var loss = cross_entropy(probs, one_hot(mb_labels, classes));
        const double loss_val = loss->value[0];

        // every pair-fusion weight column must be a convex combination
        for (const Tensor& w : model.last_fusion_weights())
            for (std::size_t c = 0; c < w.cols(); ++c) {
                const double err = std::fabs(w.at(0, c) + w.at(1, c) - 1.0);
                out.worst_fusion_weight_error = std::max(out.worst_fusion_weight_error, err);
                if (err > 1e-6)
                    throw DataError("fusion: pair weights sum to " +
                                    std::to_string(w.at(0, c) + w.at(1, c)));
            }

        if (!std::isfinite(loss_val) || loss_val > 1e6) {
            out.diverged = true;
            load_model_state(model, last_good);
            break;
        }
        out.loss_curve.push_back(loss_val);
        model.params().zero_grads();
        backward(loss);
        opt.step(model.params());
        last_good = model_state(model);

        if (opts.snapshots && opts.steps >= 4 &&
            (step == opts.steps / 4 || step == opts.steps / 2))
            snapshot_attention(step == opts.steps / 4 ? "p25" : "p50");

        if (step % eval_every == 0 || step == opts.steps) {
            const double acc =
                test.size() ? evaluate_model(model, test).accuracy
                            : evaluate_model(model, train).accuracy;
            if (acc > best_acc) {
                best_acc = acc;
                out.best_checkpoint = last_good;
            }
        }
    }

    load_model_state(model, out.best_checkpoint);
    if (opts.snapshots) snapshot_attention("final");
    out.train_metrics = evaluate_model(model, train);
    out.test_metrics = test.size() ? evaluate_model(model, test) : out.train_metrics;
    return out;
}

std::unique_ptr<MbsmModel> prepare_encoder(const ExperimentConfig& cfg, Dataset& train,
                                           Dataset& test) {
    RandomStream rng(cfg.seed ^ 0xc2b2ae3d27d4eb4full);
    auto enc = std::make_unique<MbsmModel>(cfg.mbsm, train.channels, rng);
    if (!cfg.encoder_checkpoint.empty()) {
        restore_params(enc->params(), load_container(cfg.encoder_checkpoint));
    } else {
        std::vector<Tensor> spans;
        spans.reserve(train.size());
        for (const auto& s : train.samples) spans.push_back(s.raw_span);
        if (spans.empty()) throw DataError("pretrain: no raw spans available");
        AdamOptimizer opt(cfg.mbsm.lr);
        opt.set_cosine_decay(cfg.pretrain_steps);
        RandomStream pre_rng = rng.derive(7);
        const std::size_t batch = std::max<std::size_t>(1, cfg.pretrain_batch);
        for (std::size_t step = 0; step < cfg.pretrain_steps; ++step) {
            std::vector<Tensor> mb;
            for (std::size_t k = 0; k < batch; ++k)
                mb.push_back(spans[pre_rng.below(spans.size())]);
            enc->pretrain_step(mb, pre_rng, opt);
        }
    }
    attach_latents(train, *enc);
    attach_latents(test, *enc);
    return enc;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg,
                                      const std::vector<std::string>& arms) {
    Dataset full = load_configured_dataset(cfg);
    auto [train, test] = split(full, cfg.split_ratio, cfg.seed, cfg.split_by_subject);

    std::vector<AblationRow> rows;
    bool latents_ready = false;
    for (const auto& arm : arms) {
        ExperimentConfig arm_cfg = cfg;
        arm_cfg.preset = arm;
        ModelConfig mc = derive_model_config(arm_cfg, train);
        if (mc.use_encoder && !latents_ready) {
            prepare_encoder(cfg, train, test);
            latents_ready = true;
        }
        RandomStream rng(cfg.seed);
        MoodReaderModel model(mc, rng);
        TrainOptions topts;
        topts.steps = cfg.steps;
        topts.batch = cfg.batch;
        topts.lr = cfg.lr;
        topts.seed = cfg.seed;
        TrainOutput res = train_model(model, train, test, topts);
        rows.push_back({arm, res.test_metrics, model.construction_audit()});
    }
    return rows;
}

}  // namespace mr
