#include "moodreader/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mr {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor read_csv_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows[0].size())
            throw DataError("ragged matrix file: " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("empty matrix file: " + path);
    Tensor m = Tensor::matrix(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m.at(i, j) = rows[i][j];
    return m;
}

void write_csv_matrix(const std::string& path, const Tensor& m) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write matrix file: " + path);
    os.precision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m.at(i, j);
        }
        os << '\n';
    }
}

namespace {

std::optional<Tensor> slice_eye(const Tensor& eye, std::size_t group_index,
                                std::size_t group_count, const std::string& trial_name) {
    if (group_count == 0) return std::nullopt;
    const std::size_t rows_per = eye.rows() / group_count;
    if (rows_per == 0)
        throw DataError("trial " + trial_name + ": eye sequence shorter than sample count");
    Tensor out = Tensor::matrix(rows_per, eye.cols());
    for (std::size_t i = 0; i < rows_per; ++i)
        for (std::size_t j = 0; j < eye.cols(); ++j)
            out.at(i, j) = eye.at(group_index * rows_per + i, j);
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("cannot open manifest: " + manifest_path);
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw DataError("manifest parse error in " + manifest_path + ": " + e.what());
    }
    if (!manifest.contains("trials") || manifest["trials"].empty())
        throw DataError("manifest " + manifest_path + ": no trials declared");

    Dataset ds;
    ds.classes = manifest.value("classes", 3);
    const double fs = manifest.value("fs", 0.0);
    if (fs <= 0.0) throw DataError("manifest: missing or invalid fs");
    if (manifest.contains("channels"))
        for (const auto& c : manifest["channels"]) ds.channel_names.push_back(c);

    const fs::path base = fs::path(manifest_path).parent_path();
    const auto bands = default_bands();

    for (const auto& t : manifest["trials"]) {
        const std::size_t subject = t.value("subject", 0);
        const std::size_t trial = t.value("trial", 0);
        const std::string trial_name =
            "subject " + std::to_string(subject) + " trial " + std::to_string(trial);
        if (!t.contains("label") || !t.contains("eeg"))
            throw DataError("manifest: " + trial_name + " missing label or eeg path");
        const long long label = t["label"].get<long long>();
        if (label < 0 || static_cast<std::size_t>(label) >= ds.classes)
            throw DataError("manifest: " + trial_name + ": label " + std::to_string(label) +
                            " out of range for " + std::to_string(ds.classes) + " classes");

        const std::string eeg_path = (base / t["eeg"].get<std::string>()).string();
        RawRecording rec;
        rec.data = read_csv_matrix(eeg_path);
        rec.fs = fs;
        rec.channel_names = ds.channel_names;
        if (ds.channels == 0)
            ds.channels = rec.channels();
        else if (rec.channels() != ds.channels)
            throw DataError("manifest: " + trial_name + ": channel count " +
                            std::to_string(rec.channels()) + " differs from " +
                            std::to_string(ds.channels));

        std::optional<Tensor> eye;
        if (t.contains("eye")) {
            eye = read_csv_matrix((base / t["eye"].get<std::string>()).string());
            if (ds.eye_dim == 0) ds.eye_dim = eye->cols();
        }

        auto groups = preprocess_trial(rec, bands);
        if (groups.empty()) {
            ds.warnings.push_back(trial_name + ": too short for one grouped sample, skipped");
            continue;
        }
        for (std::size_t g = 0; g < groups.size(); ++g) {
            DatasetSample s;
            s.de = std::move(groups[g].de);
            s.raw_span = std::move(groups[g].raw_span);
            s.label = static_cast<std::size_t>(label);
            s.subject = subject;
            s.trial = trial;
            if (eye) {
                s.eye = slice_eye(*eye, g, groups.size(), trial_name);
                if (ds.eye_seq_len == 0) ds.eye_seq_len = s.eye->rows();
            }
            ds.samples.push_back(std::move(s));
        }
    }
    if (ds.samples.empty()) throw DataError("manifest yielded no usable samples");
    return ds;
}

RawRecording synth_recording(const SynthSpec& spec, std::size_t label, RandomStream& rng) {
    const std::size_t t = static_cast<std::size_t>(spec.seconds * spec.fs);
    RawRecording rec;
    rec.fs = spec.fs;
    rec.data = Tensor::matrix(spec.channels, t);

    // class-dependent band: cycle through alpha/beta/gamma/theta/delta centers
    static const double centers[] = {10.0, 22.0, 40.0, 6.0, 2.5};
    static const double half_width[] = {2.0, 4.0, 5.0, 1.5, 1.0};
    const double fc = centers[label % 5];
    const double hw = half_width[label % 5];

    const std::size_t n_tones = 8;
    std::vector<double> freqs(n_tones), phases(n_tones);
    for (std::size_t j = 0; j < n_tones; ++j) {
        freqs[j] = fc + rng.uniform(-hw, hw);
        phases[j] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    }
    const double amp = spec.separability * std::sqrt(2.0 / static_cast<double>(n_tones));

    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        const bool carries_signal = ch < spec.signal_channels;
        for (std::size_t i = 0; i < t; ++i) {
            double v = rng.normal();
            if (carries_signal) {
                const double ts = static_cast<double>(i) / spec.fs;
                for (std::size_t j = 0; j < n_tones; ++j)
                    v += amp * std::sin(2.0 * 3.14159265358979323846 * freqs[j] * ts +
                                        phases[j]);
            }
            rec.data.at(ch, i) = v;
        }
    }
    return rec;
}

namespace {
Tensor synth_eye(const SynthSpec& spec, std::size_t label, RandomStream& rng) {
    Tensor eye = Tensor::matrix(spec.eye_seq_len, spec.eye_dim);
    for (std::size_t i = 0; i < spec.eye_seq_len; ++i)
        for (std::size_t j = 0; j < spec.eye_dim; ++j) {
            const double mean = (j % spec.classes == label) ? spec.separability : 0.0;
            eye.at(i, j) = mean + 0.5 * rng.normal();
        }
    return eye;
}
}  // namespace

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.separability < 0.0) throw ConfigError("synth: separability must be >= 0");
    Dataset ds;
    ds.classes = spec.classes;
    ds.channels = spec.channels;
    ds.eye_seq_len = spec.eye_seq_len;
    ds.eye_dim = spec.eye_dim;
    RandomStream rng(seed);
    const auto bands = default_bands();
    for (std::size_t s = 0; s < spec.subjects; ++s) {
        // mild per-subject gain so "subjects" differ in distribution
        const double subject_gain = 1.0 + 0.1 * rng.normal();
        for (std::size_t t = 0; t < spec.trials_per_subject; ++t) {
            const std::size_t label = (s * spec.trials_per_subject + t) % spec.classes;
            RawRecording rec = synth_recording(spec, label, rng);
            for (double& v : rec.data.data()) v *= subject_gain;
            auto groups = preprocess_trial(rec, bands);
            Tensor eye = synth_eye(spec, label, rng);
            for (std::size_t g = 0; g < groups.size(); ++g) {
                DatasetSample sample;
                sample.de = std::move(groups[g].de);
                sample.raw_span = std::move(groups[g].raw_span);
                sample.eye = eye;
                sample.label = label;
                sample.subject = s;
                sample.trial = t;
                ds.samples.push_back(std::move(sample));
            }
        }
    }
    return ds;
}

void write_synth_corpus(const SynthSpec& spec, std::uint64_t seed, const std::string& dir) {
    fs::create_directories(dir);
    RandomStream rng(seed);
    json manifest;
    manifest["fs"] = spec.fs;
    manifest["classes"] = spec.classes;
    json trials = json::array();
    for (std::size_t s = 0; s < spec.subjects; ++s) {
        const double subject_gain = 1.0 + 0.1 * rng.normal();
        for (std::size_t t = 0; t < spec.trials_per_subject; ++t) {
            const std::size_t label = (s * spec.trials_per_subject + t) % spec.classes;
            RawRecording rec = synth_recording(spec, label, rng);
            for (double& v : rec.data.data()) v *= subject_gain;
            Tensor eye = synth_eye(spec, label, rng);
            char eeg_name[64], eye_name[64];
            std::snprintf(eeg_name, sizeof eeg_name, "eeg_s%02zu_t%03zu.csv", s, t);
            std::snprintf(eye_name, sizeof eye_name, "eye_s%02zu_t%03zu.csv", s, t);
            write_csv_matrix((fs::path(dir) / eeg_name).string(), rec.data);
            write_csv_matrix((fs::path(dir) / eye_name).string(), eye);
            trials.push_back({{"subject", s},
                              {"trial", t},
                              {"label", label},
                              {"eeg", eeg_name},
                              {"eye", eye_name}});
        }
    }
    manifest["trials"] = trials;
    std::ofstream os((fs::path(dir) / "manifest.json").string());
    os << manifest.dump(2) << '\n';
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio, std::uint64_t seed,
                                  bool by_subject) {
    if (ds.size() < 5) throw DataError("split: dataset too small (" +
                                       std::to_string(ds.size()) + " samples)");
    RandomStream rng(seed);
    Dataset train = ds, test = ds;
    train.samples.clear();
    test.samples.clear();

    if (by_subject) {
        std::set<std::size_t> subject_set;
        for (const auto& s : ds.samples) subject_set.insert(s.subject);
        std::vector<std::size_t> subjects(subject_set.begin(), subject_set.end());
        if (subjects.size() < 2) return split(ds, ratio, seed, false);
        for (std::size_t i = subjects.size() - 1; i > 0; --i)
            std::swap(subjects[i], subjects[rng.below(i + 1)]);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(subjects.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, subjects.size() - 1);
        std::set<std::size_t> train_subjects(subjects.begin(), subjects.begin() + n_train);
        for (const auto& s : ds.samples)
            (train_subjects.count(s.subject) ? train : test).samples.push_back(s);
    } else {
        std::vector<std::size_t> idx(ds.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = idx.size() - 1; i > 0; --i)
            std::swap(idx[i], idx[rng.below(i + 1)]);
        const std::size_t n_train = static_cast<std::size_t>(
            std::llround(ratio * static_cast<double>(ds.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? train : test).samples.push_back(ds.samples[idx[i]]);
    }
    if (train.samples.empty() || test.samples.empty())
        throw DataError("split: degenerate partition");
    return {train, test};
}

}  // namespace mr
