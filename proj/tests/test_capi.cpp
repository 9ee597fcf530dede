#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "moodreader/capi.h"

namespace fs = std::filesystem;

namespace {

constexpr const char* kConfig = R"({
  "dataset": {"type": "synthetic", "classes": 3, "subjects": 5,
              "trials_per_subject": 6, "separability": 2.0, "channels": 6,
              "fs": 200.0, "seconds": 16.0, "eye_seq_len": 4, "eye_dim": 6,
              "signal_channels": 3},
  "model": {"heads": 2, "dropout": 0.0, "d_unified": 16},
  "mbsm": {"token_size": 400, "d_model": 16, "encoder_depth": 2,
           "decoder_depth": 1, "heads": 2, "steps": 3, "batch": 2},
  "train": {"steps": 15, "batch": 8, "split_by": "subject"},
  "seed": 7
})";

struct SessionCloser {
    void operator()(mr_session* s) const { mr_session_close(s); }
};
using Session = std::unique_ptr<mr_session, SessionCloser>;

Session open_small(const std::string& out_dir) {
    Session s(mr_session_open_text(kConfig));
    REQUIRE(s != nullptr);
    REQUIRE(mr_session_set_out_dir(s.get(), out_dir.c_str()) == MR_OK);
    return s;
}

}  // namespace

TEST_CASE("library reports a version") {
    const char* v = mr_version();
    REQUIRE(v != nullptr);
    CHECK(std::strlen(v) > 0);
}

TEST_CASE("open failures surface through the global error") {
    CHECK(mr_session_open("/nonexistent/config.json") == nullptr);
    CHECK(std::strlen(mr_global_error()) > 0);

    CHECK(mr_session_open_text("{this is not json") == nullptr);
    CHECK(std::strlen(mr_global_error()) > 0);

    CHECK(mr_session_open_text(R"({"train": {"split_by": "banana"}})") == nullptr);
}

TEST_CASE("null handles and bad arguments are rejected") {
    CHECK(mr_run_train(nullptr) == MR_ERR_ARG);
    CHECK(mr_run_features(nullptr) == MR_ERR_ARG);
    CHECK(mr_session_set_seed(nullptr, 1) == MR_ERR_ARG);

    Session s(mr_session_open_text(kConfig));
    REQUIRE(s != nullptr);
    CHECK(mr_run_eval(s.get(), nullptr) == MR_ERR_ARG);
    CHECK(mr_session_set_option(s.get(), "no-such-key", "1") == MR_ERR_CONFIG);
    CHECK(std::strlen(mr_session_error(s.get())) > 0);
}

TEST_CASE("feature export writes its artifacts") {
    const std::string out = "/tmp/mr_capi_features";
    fs::remove_all(out);
    Session s = open_small(out);
    REQUIRE(mr_run_features(s.get()) == MR_OK);
    CHECK(fs::exists(out + "/features.bin"));
    CHECK(fs::exists(out + "/features.json"));
}

TEST_CASE("pretrain writes the encoder and its loss curve") {
    const std::string out = "/tmp/mr_capi_pretrain";
    fs::remove_all(out);
    Session s = open_small(out);
    REQUIRE(mr_run_pretrain(s.get()) == MR_OK);
    CHECK(fs::exists(out + "/encoder.bin"));
    CHECK(fs::exists(out + "/pretrain_loss.csv"));
}

TEST_CASE("train then eval round-trips the checkpoint") {
    const std::string out = "/tmp/mr_capi_train";
    fs::remove_all(out);
    Session s = open_small(out);
    REQUIRE(mr_session_set_seed(s.get(), 11) == MR_OK);
    REQUIRE(mr_run_train(s.get()) == MR_OK);
    CHECK(fs::exists(out + "/model.bin"));
    CHECK(fs::exists(out + "/metrics.json"));
    CHECK(fs::exists(out + "/loss_curve.csv"));

    REQUIRE(mr_run_eval(s.get(), (out + "/model.bin").c_str()) == MR_OK);
    CHECK(fs::exists(out + "/eval_metrics.json"));

    // a missing checkpoint is an I/O failure with a message
    CHECK(mr_run_eval(s.get(), "/nonexistent/ckpt.bin") == MR_ERR_IO);
    CHECK(std::strlen(mr_session_error(s.get())) > 0);
}

TEST_CASE("ablation over a named subset emits one row per arm") {
    const std::string out = "/tmp/mr_capi_ablate";
    fs::remove_all(out);
    Session s = open_small(out);
    REQUIRE(mr_session_set_option(s.get(), "steps", "10") == MR_OK);
    REQUIRE(mr_run_ablate(s.get(), "STB+CF,STIB+CF") == MR_OK);
    REQUIRE(fs::exists(out + "/ablation.csv"));
    CHECK(fs::exists(out + "/ablation.json"));

    std::ifstream is(out + "/ablation.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line))
        if (!line.empty()) lines.push_back(line);
    REQUIRE(lines.size() == 3);  // header + two arms
    CHECK(lines[1].rfind("STB+CF,", 0) == 0);
    CHECK(lines[2].rfind("STIB+CF,", 0) == 0);

    CHECK(mr_run_ablate(s.get(), "NotAPreset") == MR_ERR_CONFIG);
}

TEST_CASE("synth corpus and manifest loading through the API") {
    const std::string dir = "/tmp/mr_capi_corpus";
    const std::string out = "/tmp/mr_capi_manifest_run";
    fs::remove_all(dir);
    fs::remove_all(out);
    {
        Session s = open_small("/tmp/mr_capi_synth_out");
        REQUIRE(mr_run_synth(s.get(), dir.c_str()) == MR_OK);
    }
    REQUIRE(fs::exists(dir + "/manifest.json"));

    Session s = open_small(out);
    REQUIRE(mr_session_set_option(s.get(), "dataset", "manifest") == MR_OK);
    REQUIRE(mr_session_set_option(s.get(), "manifest",
                                  (dir + "/manifest.json").c_str()) == MR_OK);
    REQUIRE(mr_run_features(s.get()) == MR_OK);
    CHECK(fs::exists(out + "/features.json"));
}
