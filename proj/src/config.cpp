#include "moodreader/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mr {

using nlohmann::json;

const std::vector<std::string> kAblationPresets = {
    "STB+CF",         "STIB+CF",         "STIB+Encoder+CF",
    "STIB+Encoder+MLF", "STIB+Eye+CF",   "STIB+Eye+MLF"};

void apply_preset(ModelConfig& cfg, const std::string& preset) {
    cfg.interlink = false;
    cfg.use_encoder = false;
    cfg.use_eye = false;
    cfg.fusion = FusionMode::Concatenation;
    if (preset == "STB+CF") {
        // base arm: plain spatial-temporal blocks, concatenation fusion
    } else if (preset == "STIB+CF") {
        cfg.interlink = true;
    } else if (preset == "STIB+Encoder+CF") {
        cfg.interlink = true;
        cfg.use_encoder = true;
    } else if (preset == "STIB+Encoder+MLF") {
        cfg.interlink = true;
        cfg.use_encoder = true;
        cfg.fusion = FusionMode::MultiLevel;
    } else if (preset == "STIB+Eye+CF") {
        cfg.interlink = true;
        cfg.use_eye = true;
    } else if (preset == "STIB+Eye+MLF") {
        cfg.interlink = true;
        cfg.use_eye = true;
        cfg.fusion = FusionMode::MultiLevel;
    } else {
        throw ConfigError("unknown ablation preset '" + preset + "'");
    }
}

namespace {

void parse_into(ExperimentConfig& c, const json& j) {
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        c.dataset_type = d.value("type", c.dataset_type);
        c.manifest_path = d.value("manifest", c.manifest_path);
        c.synth.classes = d.value("classes", c.synth.classes);
        c.synth.subjects = d.value("subjects", c.synth.subjects);
        c.synth.trials_per_subject = d.value("trials_per_subject", c.synth.trials_per_subject);
        c.synth.separability = d.value("separability", c.synth.separability);
        c.synth.channels = d.value("channels", c.synth.channels);
        c.synth.fs = d.value("fs", c.synth.fs);
        c.synth.seconds = d.value("seconds", c.synth.seconds);
        c.synth.eye_seq_len = d.value("eye_seq_len", c.synth.eye_seq_len);
        c.synth.eye_dim = d.value("eye_dim", c.synth.eye_dim);
        c.synth.signal_channels = d.value("signal_channels", c.synth.signal_channels);
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        c.model.windows = m.value("windows", c.model.windows);
        c.model.bands = m.value("bands", c.model.bands);
        c.model.st_depth = m.value("st_depth", c.model.st_depth);
        c.model.heads = m.value("heads", c.model.heads);
        c.model.dropout = m.value("dropout", c.model.dropout);
        c.model.interlink = m.value("interlink", c.model.interlink);
        c.model.use_encoder = m.value("use_encoder", c.model.use_encoder);
        c.model.use_eye = m.value("use_eye", c.model.use_eye);
        c.model.d_unified = m.value("d_unified", c.model.d_unified);
        if (m.contains("fusion")) {
            const std::string f = m["fusion"];
            if (f == "multi-level")
                c.model.fusion = FusionMode::MultiLevel;
            else if (f == "concatenation")
                c.model.fusion = FusionMode::Concatenation;
            else
                throw ConfigError("config: unknown fusion mode '" + f + "'");
        }
        c.preset = m.value("preset", c.preset);
    }
    if (j.contains("mbsm")) {
        const auto& m = j["mbsm"];
        c.mbsm.token_size = m.value("token_size", c.mbsm.token_size);
        c.mbsm.d_model = m.value("d_model", c.mbsm.d_model);
        c.mbsm.encoder_depth = m.value("encoder_depth", c.mbsm.encoder_depth);
        c.mbsm.decoder_depth = m.value("decoder_depth", c.mbsm.decoder_depth);
        c.mbsm.heads = m.value("heads", c.mbsm.heads);
        c.mbsm.mask_ratio = m.value("mask_ratio", c.mbsm.mask_ratio);
        c.mbsm.lr = m.value("lr", c.mbsm.lr);
        c.encoder_checkpoint = m.value("checkpoint", c.encoder_checkpoint);
        c.pretrain_steps = m.value("steps", c.pretrain_steps);
        c.pretrain_batch = m.value("batch", c.pretrain_batch);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.steps = t.value("steps", c.steps);
        c.batch = t.value("batch", c.batch);
        c.lr = t.value("lr", c.lr);
        c.split_ratio = t.value("split_ratio", c.split_ratio);
        if (t.contains("split_by")) {
            const std::string s = t["split_by"];
            if (s == "subject")
                c.split_by_subject = true;
            else if (s == "trial")
                c.split_by_subject = false;
            else
                throw ConfigError("config: split_by must be 'subject' or 'trial'");
        }
        c.repeats = t.value("repeats", c.repeats);
    }
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out", c.out_dir);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    ExperimentConfig c;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    parse_into(c, j);
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_text(ss.str());
}

}  // namespace mr
