#include "moodreader/capi.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "moodreader/checkpoint.hpp"
#include "moodreader/pipeline.hpp"
#include "moodreader/topomap.hpp"

using namespace mr;

struct mr_session {
    ExperimentConfig cfg;
    std::string error;
};

namespace {

std::string g_open_error;

int fail(mr_session* s, int code, const std::string& msg) {
    if (s) s->error = msg;
    return code;
}

template <typename Fn>
int guarded(mr_session* s, Fn&& fn) {
    if (!s) return MR_ERR_ARG;
    try {
        s->error.clear();
        fn();
        return MR_OK;
    } catch (const ConfigError& e) {
        return fail(s, MR_ERR_CONFIG, e.what());
    } catch (const IoError& e) {
        return fail(s, MR_ERR_IO, e.what());
    } catch (const ShapeError& e) {
        return fail(s, MR_ERR_SHAPE, e.what());
    } catch (const DataError& e) {
        return fail(s, MR_ERR_DATA, e.what());
    } catch (const std::exception& e) {
        return fail(s, MR_ERR_INTERNAL, e.what());
    }
}

std::filesystem::path out_path(const mr_session* s, const std::string& name) {
    std::filesystem::create_directories(s->cfg.out_dir);
    return std::filesystem::path(s->cfg.out_dir) / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
}

std::vector<Electrode> layout_for(const Dataset& ds) {
    if (ds.channels == 62) return seed62_layout();
    // fallback: evenly spaced ring
    std::vector<Electrode> v;
    for (std::size_t i = 0; i < ds.channels; ++i) {
        const double a = 2.0 * 3.14159265358979323846 * i / ds.channels;
        std::string name = i < ds.channel_names.size() ? ds.channel_names[i]
                                                       : "CH" + std::to_string(i);
        v.push_back({name, 0.8 * std::cos(a), 0.8 * std::sin(a)});
    }
    return v;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// Shared setup for train/eval/viz: load, split, attach encoder latents.
struct Prepared {
    Dataset train, test;
    ModelConfig mc;
    std::unique_ptr<MbsmModel> encoder;
};

Prepared prepare(const ExperimentConfig& cfg) {
    Prepared p;
    Dataset full = load_configured_dataset(cfg);
    std::tie(p.train, p.test) = split(full, cfg.split_ratio, cfg.seed, cfg.split_by_subject);
    p.mc = derive_model_config(cfg, p.train);
    if (p.mc.use_encoder) {
        p.encoder = prepare_encoder(cfg, p.train, p.test);
        p.mc.encoder_dim = p.encoder->d_model();
    }
    return p;
}

TrainOptions options_from(const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainOptions t;
    t.steps = cfg.steps;
    t.batch = cfg.batch;
    t.lr = cfg.lr;
    t.seed = seed;
    return t;
}

std::string metrics_block(const Metrics& m) { return m.to_json(); }

}  // namespace

extern "C" {

mr_session* mr_session_open(const char* config_path) {
    try {
        auto* s = new mr_session;
        if (config_path && *config_path) s->cfg = ExperimentConfig::from_file(config_path);
        return s;
    } catch (const std::exception& e) {
        g_open_error = e.what();
        return nullptr;
    }
}

mr_session* mr_session_open_text(const char* config_json) {
    try {
        auto* s = new mr_session;
        if (config_json && *config_json)
            s->cfg = ExperimentConfig::from_json_text(config_json);
        return s;
    } catch (const std::exception& e) {
        g_open_error = e.what();
        return nullptr;
    }
}

void mr_session_close(mr_session* s) { delete s; }

int mr_session_set_seed(mr_session* s, uint64_t seed) {
    if (!s) return MR_ERR_ARG;
    s->cfg.seed = seed;
    return MR_OK;
}

int mr_session_set_out_dir(mr_session* s, const char* dir) {
    if (!s || !dir) return MR_ERR_ARG;
    s->cfg.out_dir = dir;
    return MR_OK;
}

int mr_session_set_option(mr_session* s, const char* key, const char* value) {
    if (!s || !key || !value) return MR_ERR_ARG;
    return guarded(s, [&] {
        const std::string k = key, v = value;
        if (k == "preset")
            s->cfg.preset = v;
        else if (k == "dataset")
            s->cfg.dataset_type = v;
        else if (k == "manifest") {
            s->cfg.manifest_path = v;
            s->cfg.dataset_type = "manifest";
        } else if (k == "steps")
            s->cfg.steps = std::stoul(v);
        else if (k == "pretrain-steps")
            s->cfg.pretrain_steps = std::stoul(v);
        else if (k == "encoder-checkpoint")
            s->cfg.encoder_checkpoint = v;
        else if (k == "repeats")
            s->cfg.repeats = std::stoul(v);
        else
            throw ConfigError("unknown option '" + k + "'");
    });
}

const char* mr_session_error(const mr_session* s) {
    return s ? s->error.c_str() : "null session";
}

const char* mr_global_error(void) { return g_open_error.c_str(); }

int mr_run_features(mr_session* s) {
    return guarded(s, [&] {
        Dataset ds = load_configured_dataset(s->cfg);
        std::map<std::string, Tensor> entries;
        Tensor labels = Tensor::matrix(1, ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "sample_%06zu.de", i);
            entries.emplace(name, ds.samples[i].de.values);
            labels[i] = static_cast<double>(ds.samples[i].label);
        }
        entries.emplace("labels", labels);
        save_container(out_path(s, "features.bin").string(), entries);

        const DETensor& de = ds.samples.front().de;
        std::ostringstream js;
        js << "{\n  \"samples\": " << ds.size() << ",\n  \"windows\": " << de.windows()
           << ",\n  \"bands\": " << de.bands() << ",\n  \"channels\": " << de.channels()
           << ",\n  \"classes\": " << ds.classes << ",\n  \"warnings\": [";
        for (std::size_t i = 0; i < ds.warnings.size(); ++i)
            js << (i ? ", " : "") << '"' << ds.warnings[i] << '"';
        js << "]\n}\n";
        write_text(out_path(s, "features.json"), js.str());
    });
}

int mr_run_pretrain(mr_session* s) {
    return guarded(s, [&] {
        Dataset ds = load_configured_dataset(s->cfg);
        std::vector<Tensor> spans;
        for (const auto& sample : ds.samples) spans.push_back(sample.raw_span);
        RandomStream rng(s->cfg.seed ^ 0xc2b2ae3d27d4eb4full);
        MbsmModel enc(s->cfg.mbsm, ds.channels, rng);
        AdamOptimizer opt(s->cfg.mbsm.lr);
        opt.set_cosine_decay(s->cfg.pretrain_steps);
        RandomStream pre_rng = rng.derive(7);
        const std::size_t batch = std::max<std::size_t>(1, s->cfg.pretrain_batch);
        std::ostringstream curve;
        curve << "step,loss\n";
        for (std::size_t step = 1; step <= s->cfg.pretrain_steps; ++step) {
            std::vector<Tensor> mb;
            for (std::size_t k = 0; k < batch; ++k)
                mb.push_back(spans[pre_rng.below(spans.size())]);
            const double loss = enc.pretrain_step(mb, pre_rng, opt);
            curve << step << "," << fmt(loss) << "\n";
        }
        save_container(out_path(s, "encoder.bin").string(), snapshot_params(enc.params()));
        write_text(out_path(s, "pretrain_loss.csv"), curve.str());
    });
}

int mr_run_train(mr_session* s) {
    return guarded(s, [&] {
        Prepared p = prepare(s->cfg);
        const std::size_t repeats = std::max<std::size_t>(1, s->cfg.repeats);
        std::vector<double> accs;
        Metrics first_metrics;
        for (std::size_t r = 0; r < repeats; ++r) {
            RandomStream rng(s->cfg.seed + r);
            MoodReaderModel model(p.mc, rng);
            TrainOutput res =
                train_model(model, p.train, p.test, options_from(s->cfg, s->cfg.seed + r));
            accs.push_back(res.test_metrics.accuracy);
            if (r == 0) {
                first_metrics = res.test_metrics;
                save_container(out_path(s, "model.bin").string(), model_state(model));
                std::ostringstream curve;
                curve << "step,loss\n";
                for (std::size_t i = 0; i < res.loss_curve.size(); ++i)
                    curve << (i + 1) << "," << fmt(res.loss_curve[i]) << "\n";
                write_text(out_path(s, "loss_curve.csv"), curve.str());
            }
        }
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= accs.size();
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        first_metrics.accuracy = mean;
        first_metrics.accuracy_std = std::sqrt(var / accs.size());
        write_text(out_path(s, "metrics.json"), metrics_block(first_metrics));
    });
}

int mr_run_eval(mr_session* s, const char* checkpoint_path) {
    if (!checkpoint_path) return fail(s, MR_ERR_ARG, "eval: checkpoint path is required");
    return guarded(s, [&] {
        Prepared p = prepare(s->cfg);
        RandomStream rng(s->cfg.seed);
        MoodReaderModel model(p.mc, rng);
        load_model_state(model, load_container(checkpoint_path));
        Metrics m = evaluate_model(model, p.test.size() ? p.test : p.train);
        write_text(out_path(s, "eval_metrics.json"), metrics_block(m));
    });
}

int mr_run_ablate(mr_session* s, const char* arms) {
    return guarded(s, [&] {
        std::vector<std::string> wanted;
        if (arms && *arms) {
            std::stringstream ss(arms);
            std::string item;
            while (std::getline(ss, item, ',')) wanted.push_back(item);
        } else {
            wanted = kAblationPresets;
        }
        auto rows = run_ablation(s->cfg, wanted);
        std::ostringstream csv, js;
        csv << "preset,accuracy,correct,total,modules\n";
        js << "{\n  \"arms\": [\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            std::string mods;
            for (std::size_t j = 0; j < r.audit.size(); ++j)
                mods += (j ? ";" : "") + r.audit[j];
            csv << r.preset << "," << fmt(r.test_metrics.accuracy) << ","
                << r.test_metrics.correct << "," << r.test_metrics.total << "," << mods
                << "\n";
            js << "    {\"preset\": \"" << r.preset
               << "\", \"accuracy\": " << fmt(r.test_metrics.accuracy)
               << ", \"modules\": [";
            for (std::size_t j = 0; j < r.audit.size(); ++j)
                js << (j ? ", " : "") << '"' << r.audit[j] << '"';
            js << "]}" << (i + 1 < rows.size() ? "," : "") << "\n";
        }
        js << "  ]\n}\n";
        write_text(out_path(s, "ablation.csv"), csv.str());
        write_text(out_path(s, "ablation.json"), js.str());
    });
}

int mr_run_viz(mr_session* s, const char* checkpoint_path) {
    return guarded(s, [&] {
        Prepared p = prepare(s->cfg);
        RandomStream rng(s->cfg.seed);
        MoodReaderModel model(p.mc, rng);
        if (checkpoint_path && *checkpoint_path) {
            load_model_state(model, load_container(checkpoint_path));
        } else {
            train_model(model, p.train, p.test, options_from(s->cfg, s->cfg.seed));
        }
        const Dataset& src = p.test.size() ? p.test : p.train;
        auto probe = to_inputs(src);
        if (probe.size() > 32) probe.resize(32);
        RandomStream probe_rng(s->cfg.seed ^ 0x9e3779b97f4a7c15ull);
        Tensor profile = model.channel_attention_profile(probe, probe_rng);
        auto layout = layout_for(src);
        write_attention_csv(out_path(s, "attention.csv").string(), profile, layout);
        write_topomap_ppm(out_path(s, "topomap.ppm").string(), profile, layout);
    });
}

int mr_run_synth(mr_session* s, const char* dir) {
    if (!dir || !*dir) return fail(s, MR_ERR_ARG, "synth: output directory is required");
    return guarded(s, [&] { write_synth_corpus(s->cfg.synth, s->cfg.seed, dir); });
}

const char* mr_version(void) { return "1.0.0"; }

}  // extern "C"
