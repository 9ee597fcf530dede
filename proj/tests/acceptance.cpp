// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are pinned here, not configurable.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "moodreader/capi.h"
#include "moodreader/checkpoint.hpp"
#include "moodreader/interlink.hpp"
#include "moodreader/pipeline.hpp"

using namespace mr;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s: [%2d] %s (%s)\n", ok ? "PASS" : "FAIL", idx, name.c_str(),
                detail.c_str());
    if (!ok) ++g_failures;
}

Tensor random_matrix(std::size_t r, std::size_t c, RandomStream& rng) {
    Tensor t = Tensor::matrix(r, c);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return t;
}

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- criterion 1

void criterion_gradients() {
    double worst_primitive = 0.0;
    RandomStream rng(101);
    auto track = [&](double e) { worst_primitive = std::max(worst_primitive, e); };

    for (int point = 0; point < 10; ++point) {
        Tensor x = random_matrix(3, 4, rng);
        Tensor w = random_matrix(4, 5, rng);
        Tensor g = random_matrix(1, 4, rng);
        Tensor s = random_matrix(1, 4, rng);

        track(gradient_check(
            [](const std::vector<Var>& in) {
                return sum_all(mul(matmul(in[0], in[1]), matmul(in[0], in[1])));
            },
            {x, w}));
        track(gradient_check(
            [](const std::vector<Var>& in) {
                Var y = layer_norm_rows(in[0], in[1], in[2]);
                return sum_all(mul(y, y));
            },
            {x, g, s}));
        track(gradient_check(
            [](const std::vector<Var>& in) {
                Var y = softmax_rows(in[0]);
                return sum_all(mul(y, y));
            },
            {x}));
        track(gradient_check(
            [](const std::vector<Var>& in) {
                return cross_entropy(softmax_rows(in[0]), one_hot({0, 2, 1}, 4));
            },
            {x}));
        track(gradient_check(
            [](const std::vector<Var>& in) {
                Var y = concat_rows({transpose(in[0]), in[1]});
                Var z = slice_rows(y, 1, 5);
                return sum_all(mul(tanh_op(z), z));
            },
            {x, random_matrix(4, 3, rng)}));
        track(gradient_check(
            [](const std::vector<Var>& in) {
                // reversal permutation through reindex
                std::vector<std::size_t> map(in[0]->value.numel());
                for (std::size_t i = 0; i < map.size(); ++i) map[i] = map.size() - 1 - i;
                Var y = reindex(in[0], {4, 3}, map);
                return sum_all(mul(y, y));
            },
            {x}));
    }

    double worst_composed = 0.0;
    {
        // downsized shapes: C=4, N=2, F=2
        ParamStore ps;
        RandomStream r2(102);
        AttentionBlock spatial(ps, "sb", 2 * 2, 2, 0.0, r2);
        AttentionBlock temporal(ps, "tb", 4 * 2, 2, 0.0, r2);
        InterlinkBlock inter(ps, "il", 2, 2, 4, true, 2, 0.0, r2);
        Tensor xs = random_matrix(4, 4, r2);
        Tensor xt = random_matrix(2, 8, r2);

        worst_composed = std::max(
            worst_composed,
            gradient_check(
                [&](const std::vector<Var>& in) {
                    RandomStream fwd(0);
                    Var y = spatial(in[0], fwd, false);
                    return sum_all(mul(y, y));
                },
                {xs}));
        worst_composed = std::max(
            worst_composed,
            gradient_check(
                [&](const std::vector<Var>& in) {
                    RandomStream fwd(0);
                    Var y = temporal(in[0], fwd, false);
                    return sum_all(mul(y, y));
                },
                {xt}));
        worst_composed = std::max(
            worst_composed,
            gradient_check(
                [&](const std::vector<Var>& in) {
                    RandomStream fwd(0);
                    Var y = inter(in[0], in[1], fwd, false);
                    return sum_all(mul(y, y));
                },
                {xs, xt}));

        FinalFuse ff(ps, "ff", 4, 2, r2);
        Classifier clf(ps, "clf", 8, 4, 3, r2);
        worst_composed = std::max(
            worst_composed,
            gradient_check(
                [&](const std::vector<Var>& in) {
                    Var m1 = ff(in[0], in[1]);
                    Var m2 = ff(in[2], in[3]);
                    Var probs = clf(concat_rows({m1, m2}), true);
                    return cross_entropy(probs, one_hot({0, 2}, 3));
                },
                {random_matrix(1, 4, r2), random_matrix(1, 4, r2),
                 random_matrix(1, 4, r2), random_matrix(1, 4, r2)}));
    }

    char detail[128];
    std::snprintf(detail, sizeof detail, "worst primitive %.2e < 1e-4, composed %.2e < 1e-3",
                  worst_primitive, worst_composed);
    report(1, "finite-difference gradient suite",
           worst_primitive < 1e-4 && worst_composed < 1e-3, detail);
}

// ---------------------------------------------------------------- criterion 2

void criterion_de_oracle() {
    std::vector<Band> full = {{"full", 0.0, 100.0}};
    double acc = 0.0;
    for (int r = 0; r < 100; ++r) {
        RandomStream rng(2000 + r);
        Tensor seg = Tensor::matrix(1, 800);
        for (std::size_t i = 0; i < 800; ++i) seg[i] = rng.normal();
        acc += de_features(seg, 200.0, full)[0];
    }
    acc /= 100.0;
    const double expect = 0.5 * std::log(2.0 * 3.14159265358979323846 * std::exp(1.0));
    const bool white_ok = std::fabs(acc - expect) < 0.05;

    RandomStream rng(77);
    Tensor seg = random_matrix(2, 800, rng);
    Tensor seg2 = seg;
    for (std::size_t i = 0; i < seg2.numel(); ++i) seg2[i] *= 2.0;
    auto bands = default_bands();
    Tensor d1 = de_features(seg, 200.0, bands);
    Tensor d2 = de_features(seg2, 200.0, bands);
    double worst_shift = 0.0;
    for (std::size_t i = 0; i < d1.numel(); ++i)
        worst_shift = std::max(worst_shift, std::fabs(d2[i] - d1[i] - std::log(2.0)));

    char detail[128];
    std::snprintf(detail, sizeof detail,
                  "white-noise DE %.4f vs %.4f (tol 0.05); ln2 shift err %.2e (tol 1e-2)",
                  acc, expect, worst_shift);
    report(2, "differential-entropy oracle", white_ok && worst_shift < 1e-2, detail);
}

// ---------------------------------------------------------------- criterion 3

void criterion_filters() {
    auto probe = [](double freq) {
        const double fs = 1000.0;
        const std::size_t n = static_cast<std::size_t>(10.0 * fs);
        RawRecording rec;
        rec.fs = fs;
        rec.data = Tensor::matrix(1, n);
        for (std::size_t i = 0; i < n; ++i)
            rec.data.at(0, i) =
                std::sin(2.0 * 3.14159265358979323846 * freq * double(i) / fs);
        RawRecording y = resample(notch(bandpass(rec, {}), 50.0), 200.0);
        // trim the filter settling transient before measuring
        const std::size_t skip = y.samples() / 5;
        std::vector<double> tail(y.samples() - 2 * skip);
        for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = y.data.at(0, skip + i);
        return tone_amplitude(tail, freq, y.fs);
    };

    const double a50 = probe(50.0);
    const double a10 = probe(10.0);
    const double db50 = 20.0 * std::log10(std::max(a50, 1e-300));
    const double db10 = 20.0 * std::log10(std::max(a10, 1e-300));

    char detail[128];
    std::snprintf(detail, sizeof detail, "50 Hz %.1f dB (<= -20); 10 Hz %+.2f dB (|.| <= 1)",
                  db50, db10);
    report(3, "filter chain frequency response", db50 <= -20.0 && std::fabs(db10) <= 1.0,
           detail);
}

// ---------------------------------------------------------------- criterion 4

void criterion_shapes() {
    const std::size_t C = 62, N = 4, F = 5, D = 16;
    RandomStream rng(4);
    DETensor de;
    de.values = Tensor({N, F, C});
    for (std::size_t i = 0; i < de.values.numel(); ++i) de.values[i] = rng.normal();

    Tensor xs = to_spatial_rep(de);
    Tensor xt = to_temporal_rep(de);
    bool ok = xs.rows() == 62 && xs.cols() == 20 && xt.rows() == 4 && xt.cols() == 310;

    ModelConfig mc;
    mc.windows = N;
    mc.bands = F;
    mc.channels = C;
    mc.heads = 4;
    mc.dropout = 0.0;
    mc.d_unified = D;
    mc.classes = 3;
    mc.use_encoder = true;
    mc.use_eye = true;
    mc.encoder_dim = 16;
    mc.eye_seq_len = 4;
    mc.eye_dim = 8;
    MoodReaderModel model(mc, rng);

    // four streams land in the unified space
    ParamStore ps;
    UnifiedProjection ps1(ps, "u1", 62, 20, D, rng), ps2(ps, "u2", 4, 310, D, rng);
    UnifiedProjection ps3(ps, "u3", 8, 16, D, rng), ps4(ps, "u4", 4, 8, D, rng);
    std::vector<Var> unified = {ps1(constant(xs)), ps2(constant(xt)),
                                ps3(constant(random_matrix(8, 16, rng))),
                                ps4(constant(random_matrix(4, 8, rng)))};
    for (const Var& u : unified) ok = ok && u->value.rows() == 1 && u->value.cols() == D;

    std::vector<ModelInput> batch;
    for (int b = 0; b < 2; ++b) {
        ModelInput in;
        in.de = de;
        in.eye = random_matrix(4, 8, rng);
        in.eeg_latent = random_matrix(8, 16, rng);
        batch.push_back(in);
    }
    RandomStream fwd(0);
    Var probs = model.forward(batch, fwd, false);
    ok = ok && probs->value.rows() == 2 && probs->value.cols() == 3 &&
         probs->value.all_finite();

    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "Xs %zux%zu, Xt %zux%zu, 4 unified 1x%zu vectors, probs %zux%zu",
                  xs.rows(), xs.cols(), xt.rows(), xt.cols(), D, probs->value.rows(),
                  probs->value.cols());
    report(4, "shape ledger C=62 N=4 F=5", ok, detail);
}

// ---------------------------------------------------------------- criterion 5

void criterion_masking() {
    RandomStream rng(5);
    bool exact = true;
    for (std::size_t L : {8ul, 80ul, 333ul}) {
        auto m = sample_mask(L, 0.75, rng);
        exact = exact && m.count() == static_cast<std::size_t>(std::lround(0.75 * double(L)));
    }
    const std::size_t L = 80;
    std::vector<std::size_t> hits(L, 0);
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        auto m = sample_mask(L, 0.75, rng);
        for (std::size_t i = 0; i < L; ++i)
            if (m.masked[i]) ++hits[i];
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < L; ++i)
        worst = std::max(worst, std::fabs(double(hits[i]) / draws - 0.75));

    char detail[128];
    std::snprintf(detail, sizeof detail,
                  "exact counts at L in {8,80,333}; worst frequency dev %.4f (tol 0.02)",
                  worst);
    report(5, "masking exactness and uniformity", exact && worst < 0.02, detail);
}

// ---------------------------------------------------------------- criterion 6

void criterion_mbsm_learning() {
    SynthSpec spec;
    spec.channels = 8;
    spec.signal_channels = 8;
    spec.seconds = 8.0;
    spec.separability = 6.0;
    RandomStream data_rng(6);
    std::vector<Tensor> spans;
    for (int i = 0; i < 4; ++i)
        spans.push_back(synth_recording(spec, i % 3, data_rng).data);

    MbsmConfig cfg;
    cfg.token_size = 20;  // 0.1 s tokens; plenty of visible context per mask
    cfg.d_model = 64;
    cfg.encoder_depth = 2;
    cfg.decoder_depth = 1;
    cfg.heads = 2;
    cfg.dropout = 0.0;
    cfg.lr = 5e-3;
    RandomStream init_rng(60);
    MbsmModel model(cfg, spec.channels, init_rng);
    AdamOptimizer opt(cfg.lr);
    opt.set_cosine_decay(200);
    RandomStream step_rng(61), pick(62);

    double initial = 0.0, final_mean = 0.0;
    for (int step = 0; step < 200; ++step) {
        std::vector<Tensor> mb;
        for (int k = 0; k < 16; ++k) mb.push_back(spans[pick.below(spans.size())]);
        const double loss = model.pretrain_step(mb, step_rng, opt);
        if (step == 0) initial = loss;
        if (step >= 190) final_mean += loss / 10.0;
    }
    const bool halved = final_mean < 0.5 * initial;

    // latents are invariant to masked-token contents
    auto seq = tokenize(spans[0], cfg.token_size);
    MaskPattern m;
    m.masked.assign(seq.length(), false);
    for (std::size_t i = 0; i < seq.length(); i += 2) m.masked[i] = true;
    RandomStream f1(0), f2(0);
    Var a = model.encode(seq, m, f1, false);
    auto seq2 = seq;
    for (std::size_t l = 0; l < seq.length(); ++l)
        if (m.masked[l])
            for (std::size_t j = 0; j < seq2.tokens.cols(); ++j)
                seq2.tokens.at(l, j) = 1e6;
    Var b = model.encode(seq2, m, f2, false);
    const bool invariant = a->value.data() == b->value.data();

    char detail[128];
    std::snprintf(detail, sizeof detail,
                  "loss %.4f -> %.4f (need < %.4f); masked-content invariant: %s", initial,
                  final_mean, 0.5 * initial, invariant ? "yes" : "no");
    report(6, "masked pretraining learns", halved && invariant, detail);
}

// ---------------------------------------------------------------- criterion 7

void criterion_capacity() {
    SynthSpec spec;
    spec.classes = 3;
    spec.subjects = 4;
    spec.trials_per_subject = 8;  // 32 samples
    spec.channels = 8;
    spec.signal_channels = 4;
    spec.seconds = 16.0;
    spec.separability = 2.0;
    Dataset ds = synth_generate(spec, 70);

    ExperimentConfig cfg;
    cfg.synth = spec;
    cfg.preset = "STIB+Eye+MLF";
    cfg.model.d_unified = 16;
    cfg.model.heads = 2;
    ModelConfig mc = derive_model_config(cfg, ds);
    RandomStream rng(71);
    MoodReaderModel model(mc, rng);

    TrainOptions opts;
    opts.steps = 300;  // budget is 500
    opts.batch = 16;
    opts.seed = 72;
    TrainOutput out = train_model(model, ds, ds, opts);

    char detail[128];
    std::snprintf(detail, sizeof detail, "train accuracy %.3f on 32 samples after %zu steps",
                  out.train_metrics.accuracy, opts.steps);
    report(7, "capacity: memorizes 32 samples", out.train_metrics.accuracy == 1.0, detail);
}

// -------------------------------------------------------- criteria 8 and 9

void criterion_generalization_and_fusion() {
    SynthSpec spec;
    spec.classes = 3;
    spec.subjects = 10;
    spec.trials_per_subject = 30;  // 300 samples
    spec.channels = 8;
    spec.signal_channels = 1;  // weak EEG signal; the eye stream carries the rest
    spec.seconds = 16.0;
    spec.separability = 2.0;
    Dataset full = synth_generate(spec, 80);

    ExperimentConfig cfg;
    cfg.synth = spec;
    cfg.model.d_unified = 16;
    cfg.model.heads = 2;

    double worst_fusion = 0.0;
    bool fusion_seen = false;
    auto arm_accuracy = [&](const std::string& preset, std::uint64_t seed) {
        auto [train, test] = split(full, 0.8, seed, true);
        ExperimentConfig arm = cfg;
        arm.preset = preset;
        ModelConfig mc = derive_model_config(arm, train);
        RandomStream rng(seed);
        MoodReaderModel model(mc, rng);
        TrainOptions opts;
        opts.steps = 15;
        opts.batch = 16;
        opts.seed = seed;
        TrainOutput out = train_model(model, train, test, opts);
        if (preset.find("MLF") != std::string::npos) {
            worst_fusion = std::max(worst_fusion, out.worst_fusion_weight_error);
            fusion_seen = true;
        }
        return out.test_metrics.accuracy;
    };

    double mean_full = 0.0, mean_base = 0.0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        mean_full += arm_accuracy("STIB+Eye+MLF", seed) / 3.0;
        mean_base += arm_accuracy("STB+CF", seed) / 3.0;
    }

    char d8[160];
    std::snprintf(d8, sizeof d8,
                  "STIB+Eye+MLF mean %.3f (need >= 0.90); STB+CF mean %.3f (must be lower)",
                  mean_full, mean_base);
    report(8, "generalization ordering", mean_full >= 0.90 && mean_base < mean_full, d8);

    char d9[128];
    std::snprintf(d9, sizeof d9, "worst |c_a + c_b - 1| = %.2e over 3 training runs (tol 1e-6)",
                  worst_fusion);
    report(9, "fusion weights stay convex online", fusion_seen && worst_fusion <= 1e-6, d9);
}

// --------------------------------------------------------------- criterion 10

void criterion_ablation() {
    ExperimentConfig cfg;
    cfg.synth.classes = 3;
    cfg.synth.subjects = 5;
    cfg.synth.trials_per_subject = 9;
    cfg.synth.channels = 6;
    cfg.synth.signal_channels = 3;
    cfg.synth.seconds = 16.0;
    cfg.synth.separability = 2.0;
    cfg.model.d_unified = 16;
    cfg.model.heads = 2;
    cfg.mbsm.token_size = 400;
    cfg.mbsm.d_model = 16;
    cfg.mbsm.encoder_depth = 2;
    cfg.mbsm.decoder_depth = 1;
    cfg.mbsm.heads = 2;
    cfg.pretrain_steps = 5;
    cfg.pretrain_batch = 2;
    cfg.steps = 10;
    cfg.batch = 8;
    cfg.seed = 90;

    auto rows = run_ablation(cfg, kAblationPresets);
    bool ok = rows.size() == 6;
    for (const auto& row : rows) {
        auto has = [&](const char* module) {
            return std::find(row.audit.begin(), row.audit.end(), module) != row.audit.end();
        };
        ok = ok && row.test_metrics.total > 0;
        ok = ok && (has("interlink") == (row.preset.rfind("STIB", 0) == 0));
        ok = ok && (has("eye_branch") == (row.preset.find("Eye") != std::string::npos));
        ok = ok && (has("encoder") == (row.preset.find("Encoder") != std::string::npos));
        ok = ok && (has("multi_level_fusion") == (row.preset.find("MLF") != std::string::npos));
    }
    char detail[128];
    std::snprintf(detail, sizeof detail, "%zu rows, audits match preset names", rows.size());
    report(10, "ablation harness runs all six presets", ok, detail);
}

// --------------------------------------------------------------- criterion 11

void criterion_determinism() {
    const char* config = R"({
      "dataset": {"classes": 3, "subjects": 5, "trials_per_subject": 6,
                  "separability": 2.0, "channels": 6, "seconds": 16.0,
                  "signal_channels": 3},
      "model": {"heads": 2, "d_unified": 16},
      "train": {"steps": 15, "batch": 8},
      "seed": 11
    })";
    namespace fs = std::filesystem;
    bool ok = true;
    std::string why = "metrics.json, loss_curve.csv, attention.csv byte-identical";

    auto run_into = [&](const std::string& out) {
        fs::remove_all(out);
        mr_session* s = mr_session_open_text(config);
        if (!s) return false;
        bool good = mr_session_set_out_dir(s, out.c_str()) == MR_OK &&
                    mr_run_train(s) == MR_OK &&
                    mr_run_viz(s, (out + "/model.bin").c_str()) == MR_OK;
        mr_session_close(s);
        return good;
    };
    const std::string a = "/tmp/mr_accept_det_a", b = "/tmp/mr_accept_det_b";
    ok = run_into(a) && run_into(b);
    if (ok) {
        for (const char* name : {"metrics.json", "loss_curve.csv", "attention.csv"}) {
            const std::string fa = file_bytes(a + "/" + name);
            if (fa.empty() || fa != file_bytes(b + "/" + name)) {
                ok = false;
                why = std::string(name) + " differs between identically seeded runs";
            }
        }
    } else {
        why = "seeded CLI runs failed";
    }
    report(11, "seeded reruns are byte-identical", ok, why);
}

// --------------------------------------------------------------- criterion 12

void criterion_attention_localization() {
    // Class signal confined to channels [0, 8): each trial carries the class
    // tones on one randomly chosen designated channel, so a fixed readout
    // dilutes the signal 8x while attention can route it -- the trained
    // spatial attention must therefore concentrate on the designated set.
    const std::size_t channels = 24, designated = 8;
    SynthSpec spec;
    spec.classes = 3;
    spec.channels = channels;
    spec.signal_channels = 1;
    spec.seconds = 16.0;
    spec.separability = 4.0;

    Dataset ds;
    ds.classes = 3;
    ds.channels = channels;
    RandomStream data_rng(120);
    const auto bands = default_bands();
    for (std::size_t s = 0; s < 5; ++s)
        for (std::size_t t = 0; t < 12; ++t) {
            const std::size_t label = (s * 12 + t) % 3;
            RawRecording rec = synth_recording(spec, label, data_rng);
            const std::size_t active = data_rng.below(designated);
            if (active != 0)
                for (std::size_t i = 0; i < rec.samples(); ++i)
                    std::swap(rec.data.at(0, i), rec.data.at(active, i));
            for (auto& g : preprocess_trial(rec, bands)) {
                DatasetSample smp;
                smp.de = std::move(g.de);
                smp.raw_span = std::move(g.raw_span);
                smp.label = label;
                smp.subject = s;
                smp.trial = t;
                ds.samples.push_back(std::move(smp));
            }
        }
    auto [train, test] = split(ds, 0.8, 121, true);

    ExperimentConfig cfg;
    cfg.preset = "STIB+CF";  // EEG-only arm: attention is the routing path
    cfg.model.d_unified = 16;
    cfg.model.heads = 1;
    ModelConfig mc = derive_model_config(cfg, train);
    RandomStream rng(122);
    MoodReaderModel model(mc, rng);

    TrainOptions opts;
    opts.steps = 1000;
    opts.batch = 16;
    opts.lr = 5e-3;
    opts.seed = 123;
    opts.snapshots = true;
    opts.eval_every = opts.steps;  // keep the fully trained attention pattern
    TrainOutput out = train_model(model, train, test, opts);

    double signal_mass = -1.0;
    for (const auto& [tag, profile] : out.attention_snapshots) {
        if (tag != "final") continue;
        signal_mass = 0.0;
        for (std::size_t c = 0; c < designated; ++c) signal_mass += profile[c];
    }
    const double uniform = double(designated) / double(channels);
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "final mass on 8 signal channels %.3f vs uniform %.3f (need >= %.3f)",
                  signal_mass, uniform, 2.0 * uniform);
    report(12, "attention concentrates on signal channels", signal_mass >= 2.0 * uniform,
           detail);
}

}  // namespace

int main() {
    criterion_gradients();
    criterion_de_oracle();
    criterion_filters();
    criterion_shapes();
    criterion_masking();
    criterion_mbsm_learning();
    criterion_capacity();
    criterion_generalization_and_fusion();
    criterion_ablation();
    criterion_determinism();
    criterion_attention_localization();
    if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures ? 1 : 0;
}
