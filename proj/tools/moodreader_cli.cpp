// Command-line front end. Links only the shared C API.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "moodreader/capi.h"

namespace {

struct Global {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
};

using Session = std::unique_ptr<mr_session, decltype(&mr_session_close)>;

Session open_session(const Global& g) {
    Session s(mr_session_open(g.config.empty() ? nullptr : g.config.c_str()),
              &mr_session_close);
    if (!s) {
        std::fprintf(stderr, "error: %s\n", mr_global_error());
        return s;
    }
    if (g.seed_set) mr_session_set_seed(s.get(), g.seed);
    if (!g.out.empty()) mr_session_set_out_dir(s.get(), g.out.c_str());
    return s;
}

int finish(const Session& s, int rc, const char* verb) {
    if (rc != MR_OK) {
        std::fprintf(stderr, "%s failed (%d): %s\n", verb, rc, mr_session_error(s.get()));
        return 1;
    }
    std::printf("%s: ok\n", verb);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal EEG emotion recognition pipeline"};
    app.require_subcommand(1);

    Global g;
    app.add_option("--config", g.config, "JSON experiment configuration");
    app.add_option("--seed", g.seed, "Random seed override")
        ->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--out", g.out, "Output directory override");

    std::string preset, manifest, encoder_ckpt, checkpoint, arms, synth_dir;
    std::uint64_t steps = 0, pretrain_steps = 0, repeats = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--preset", preset, "Ablation preset name");
        cmd->add_option("--manifest", manifest, "Dataset manifest path");
        cmd->add_option("--steps", steps, "Training steps override");
    };

    auto* c_features = app.add_subcommand("features", "Preprocess and export DE features");
    c_features->add_option("--manifest", manifest, "Dataset manifest path");

    auto* c_pretrain =
        app.add_subcommand("pretrain", "Masked-signal pretraining of the EEG encoder");
    c_pretrain->add_option("--manifest", manifest, "Dataset manifest path");
    c_pretrain->add_option("--steps", pretrain_steps, "Pretraining steps override");

    auto* c_train = app.add_subcommand("train", "Train the classifier");
    add_common(c_train);
    c_train->add_option("--encoder-checkpoint", encoder_ckpt, "Pretrained encoder to load");
    c_train->add_option("--repeats", repeats, "Seeded repetitions for accuracy spread");

    auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
    add_common(c_eval);
    c_eval->add_option("checkpoint", checkpoint, "Model checkpoint")->required();
    c_eval->add_option("--encoder-checkpoint", encoder_ckpt, "Pretrained encoder to load");

    auto* c_ablate = app.add_subcommand("ablate", "Run the ablation arms");
    add_common(c_ablate);
    c_ablate->add_option("--arms", arms, "Comma-separated preset names (default: all)");
    c_ablate->add_option("--encoder-checkpoint", encoder_ckpt, "Pretrained encoder to load");

    auto* c_viz = app.add_subcommand("viz", "Channel-attention visualization");
    add_common(c_viz);
    c_viz->add_option("checkpoint", checkpoint, "Model checkpoint (omit to train first)");
    c_viz->add_option("--encoder-checkpoint", encoder_ckpt, "Pretrained encoder to load");

    auto* c_synth = app.add_subcommand("synth", "Write a synthetic corpus");
    c_synth->add_option("dir", synth_dir, "Target directory")->required();

    CLI11_PARSE(app, argc, argv);

    Session s = open_session(g);
    if (!s) return 1;

    auto set = [&](const char* key, const std::string& value) {
        if (value.empty()) return true;
        if (mr_session_set_option(s.get(), key, value.c_str()) != MR_OK) {
            std::fprintf(stderr, "error: %s\n", mr_session_error(s.get()));
            return false;
        }
        return true;
    };
    if (!set("preset", preset) || !set("manifest", manifest) ||
        !set("encoder-checkpoint", encoder_ckpt))
        return 1;
    if (steps && !set("steps", std::to_string(steps))) return 1;
    if (pretrain_steps && !set("pretrain-steps", std::to_string(pretrain_steps))) return 1;
    if (repeats && !set("repeats", std::to_string(repeats))) return 1;

    if (c_features->parsed()) return finish(s, mr_run_features(s.get()), "features");
    if (c_pretrain->parsed()) return finish(s, mr_run_pretrain(s.get()), "pretrain");
    if (c_train->parsed()) return finish(s, mr_run_train(s.get()), "train");
    if (c_eval->parsed()) return finish(s, mr_run_eval(s.get(), checkpoint.c_str()), "eval");
    if (c_ablate->parsed())
        return finish(s, mr_run_ablate(s.get(), arms.empty() ? nullptr : arms.c_str()),
                      "ablate");
    if (c_viz->parsed())
        return finish(
            s, mr_run_viz(s.get(), checkpoint.empty() ? nullptr : checkpoint.c_str()),
            "viz");
    if (c_synth->parsed()) return finish(s, mr_run_synth(s.get(), synth_dir.c_str()), "synth");
    return 1;
}
