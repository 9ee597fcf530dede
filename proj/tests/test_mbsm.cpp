#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "moodreader/checkpoint.hpp"
#include "moodreader/mbsm.hpp"

using namespace mr;

namespace {

Tensor noise_span(std::size_t channels, std::size_t samples, RandomStream& rng) {
    Tensor t = Tensor::matrix(channels, samples);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return t;
}

MbsmConfig small_config() {
    MbsmConfig cfg;
    cfg.token_size = 40;
    cfg.d_model = 16;
    cfg.encoder_depth = 2;
    cfg.decoder_depth = 1;
    cfg.heads = 2;
    cfg.dropout = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("tokenize arithmetic") {
    RandomStream rng(1);
    Tensor span = noise_span(4, 3200, rng);
    auto seq = tokenize(span, 40);
    CHECK(seq.length() == 80);
    CHECK(seq.tokens.cols() == 40 * 4);
    CHECK(seq.positions.size() == 80);

    auto one = tokenize(span, 3200);
    CHECK(one.length() == 1);

    CHECK_THROWS_AS(tokenize(span, 6400), ConfigError);
}

TEST_CASE("token boundaries round-trip to source samples") {
    RandomStream rng(2);
    Tensor span = noise_span(3, 160, rng);
    auto seq = tokenize(span, 40);
    REQUIRE(seq.length() == 4);
    for (std::size_t l = 0; l < 4; ++l)
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 40; ++i)
                CHECK(seq.tokens.at(l, c * 40 + i) == span.at(c, l * 40 + i));
}

TEST_CASE("mask counts are exact") {
    RandomStream rng(3);
    for (std::size_t L : {8ul, 80ul, 333ul}) {
        auto m = sample_mask(L, 0.75, rng);
        CHECK(m.count() == static_cast<std::size_t>(std::lround(0.75 * double(L))));
    }
    auto empty = sample_mask(80, 0.0, rng);
    CHECK(empty.count() == 0);
}

TEST_CASE("per-index mask frequency is uniform") {
    RandomStream rng(5);
    const std::size_t L = 80;
    std::vector<std::size_t> hits(L, 0);
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        auto m = sample_mask(L, 0.75, rng);
        for (std::size_t i = 0; i < L; ++i)
            if (m.masked[i]) ++hits[i];
    }
    for (std::size_t i = 0; i < L; ++i) {
        const double f = double(hits[i]) / draws;
        CHECK(f > 0.73);
        CHECK(f < 0.77);
    }
}

TEST_CASE("config validation") {
    MbsmConfig cfg = small_config();
    cfg.decoder_depth = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.encoder_depth = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.mask_ratio = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.d_model = 15;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("encode shape contracts") {
    RandomStream rng(7);
    MbsmModel model(small_config(), 2, rng);
    Tensor span = noise_span(2, 320, rng);
    auto seq = tokenize(span, 40);  // L = 8

    MaskPattern empty;
    empty.masked.assign(8, false);
    RandomStream fwd(0);
    Var all = model.encode(seq, empty, fwd, false);
    CHECK(all->value.rows() == 8);
    CHECK(all->value.cols() == 16);

    MaskPattern half;
    half.masked = {true, false, true, false, true, false, true, false};
    Var vis = model.encode(seq, half, fwd, false);
    CHECK(vis->value.rows() == 4);

    MaskPattern full;
    full.masked.assign(8, true);
    CHECK_THROWS_AS(model.encode(seq, full, fwd, false), DataError);
}

TEST_CASE("encoder latents ignore masked-token contents") {
    RandomStream rng(11);
    MbsmModel model(small_config(), 2, rng);
    Tensor span = noise_span(2, 320, rng);
    auto seq = tokenize(span, 40);
    MaskPattern m;
    m.masked = {true, false, true, false, false, true, false, true};

    RandomStream f1(0), f2(0);
    Var a = model.encode(seq, m, f1, false);

    // garbage in the masked rows must not change visible latents
    auto seq2 = seq;
    for (std::size_t l = 0; l < 8; ++l)
        if (m.masked[l])
            for (std::size_t j = 0; j < seq2.tokens.cols(); ++j)
                seq2.tokens.at(l, j) = 1e6 * double(l + j + 1);
    Var b = model.encode(seq2, m, f2, false);
    CHECK(a->value.data() == b->value.data());
}

TEST_CASE("reconstruct covers every token") {
    RandomStream rng(13);
    MbsmModel model(small_config(), 2, rng);
    Tensor span = noise_span(2, 320, rng);
    auto seq = tokenize(span, 40);
    MaskPattern m;
    m.masked = {true, false, true, false, false, true, false, true};
    RandomStream fwd(0);
    Var latent = model.encode(seq, m, fwd, false);
    Var rec = model.reconstruct(latent, m, seq.positions, fwd, false);
    CHECK(rec->value.rows() == 8);
    CHECK(rec->value.cols() == seq.tokens.cols());
    CHECK(rec->value.all_finite());
}

TEST_CASE("pretrain with zero mask ratio is a no-op") {
    RandomStream rng(17);
    MbsmConfig cfg = small_config();
    cfg.mask_ratio = 0.0;
    MbsmModel model(cfg, 2, rng);
    auto before = snapshot_params(model.params());
    AdamOptimizer opt(1e-3);
    RandomStream step_rng(1);
    const double loss = model.pretrain_step({noise_span(2, 320, rng)}, step_rng, opt);
    CHECK(loss == 0.0);
    auto after = snapshot_params(model.params());
    for (const auto& [name, t] : before) CHECK(t.data() == after.at(name).data());
}

TEST_CASE("identical seeds give identical loss trajectories") {
    auto run = [] {
        RandomStream rng(21);
        MbsmModel model(small_config(), 2, rng);
        AdamOptimizer opt(1e-3);
        RandomStream step_rng(2);
        RandomStream data_rng(3);
        std::vector<double> losses;
        for (int s = 0; s < 5; ++s) {
            Tensor span = noise_span(2, 320, data_rng);
            losses.push_back(model.pretrain_step({span}, step_rng, opt));
        }
        return losses;
    };
    CHECK(run() == run());
}

TEST_CASE("loss gradient flows only through masked positions") {
    RandomStream rng(23);
    MbsmModel model(small_config(), 2, rng);
    Tensor span = noise_span(2, 320, rng);

    auto one_step_loss = [&](const Tensor& s) {
        RandomStream mrng(31);
        MbsmModel m2(small_config(), 2, mrng);
        AdamOptimizer opt(0.0);  // zero lr: loss probe only
        RandomStream step_rng(4);
        return m2.pretrain_step({s}, step_rng, opt);
    };
    const double base = one_step_loss(span);

    // find which tokens the seeded step masks by reproducing its draw
    RandomStream probe(4);
    auto mask = sample_mask(8, small_config().mask_ratio, probe);
    // perturbing masked targets must change the masked-position MSE
    Tensor masked_perturbed = span;
    for (std::size_t l = 0; l < 8; ++l) {
        if (!mask.masked[l]) continue;
        for (std::size_t i = 0; i < 40; ++i) masked_perturbed.at(0, l * 40 + i) += 3.5;
    }
    const double perturbed = one_step_loss(masked_perturbed);
    CHECK(perturbed != doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("latent extraction is frozen-deterministic and checkpointable") {
    RandomStream rng(29);
    MbsmModel model(small_config(), 2, rng);
    Tensor span = noise_span(2, 320, rng);
    Tensor a = model.latent_extract(span);
    Tensor b = model.latent_extract(span);
    CHECK(a.data() == b.data());
    CHECK(a.rows() == 8);
    CHECK(a.cols() == 16);

    const std::string path = "/tmp/mbsm_ckpt_test.bin";
    save_container(path, snapshot_params(model.params()));
    RandomStream rng2(999);
    MbsmModel other(small_config(), 2, rng2);
    restore_params(other.params(), load_container(path));
    Tensor c = other.latent_extract(span);
    CHECK(a.data() == c.data());
}
