/* Copyright 2026 The pulsebench authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulsebench/baselines.hpp"
#include "pulsebench/config.hpp"
#include "pulsebench/errors.hpp"
#include "pulsebench/image_io.hpp"
#include "pulsebench/ingest.hpp"
#include "pulsebench/metrics.hpp"
#include "pulsebench/model.hpp"
#include "pulsebench/plot.hpp"
#include "pulsebench/preprocess.hpp"
#include "pulsebench/spectral.hpp"
#include "pulsebench/synthgen.hpp"
#include "pulsebench/trainer.hpp"

// Command-line surface. Every value resolves as: built-in default, then the
// --config file key, then an explicit flag; the effective configuration is
// echoed to config.resolved.toml in the output directory so any run can be
// reproduced from that file alone. Failures print one machine-readable JSON
// error record to stderr.

namespace fs = std::filesystem;

using pulsebench::Error;
using pulsebench::fail;
using pulsebench::require;

namespace pulsebench::cli {
namespace {

std::string fmt_double(double v) {
    std::array<char, 40> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

int emit_error(const std::string& code, const std::string& message, int status) {
    nlohmann::json j;
    j["error"] = {{"code", code}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return status;
}

void merge_flag(const CLI::App& cmd, const config::Settings& file, const std::string& flag,
                const std::string& key, double& value) {
    if (cmd.count(flag) == 0) value = file.get_double(key, value);
}

void merge_flag(const CLI::App& cmd, const config::Settings& file, const std::string& flag,
                const std::string& key, int& value) {
    if (cmd.count(flag) == 0) value = static_cast<int>(file.get_int(key, value));
}

void merge_flag(const CLI::App& cmd, const config::Settings& file, const std::string& flag,
                const std::string& key, std::string& value) {
    if (cmd.count(flag) == 0) value = file.get_string(key, value);
}

void merge_flag(const CLI::App& cmd, const config::Settings& file, const std::string& flag,
                const std::string& key, std::vector<int>& value) {
    if (cmd.count(flag) == 0) value = file.get_int_list(key, value);
}

std::uint64_t resolve_seed(const CLI::App& cmd, const config::Settings& file,
                           std::uint64_t flag_value) {
    if (cmd.count("--seed") > 0) return flag_value;
    if (file.has("seed")) return file.get_u64("seed", flag_value);
    if (const char* env = std::getenv("PULSEBENCH_SEED")) {
        std::uint64_t v = 0;
        const char* end = env + std::strlen(env);
        const auto res = std::from_chars(env, end, v);
        require(res.ec == std::errc() && res.ptr == end && end != env, "cli.ConfigError",
                "PULSEBENCH_SEED is not an unsigned integer: '" + std::string(env) + "'");
        return v;
    }
    return flag_value;
}

void require_key(const std::string& value, const std::string& key, const std::string& flag) {
    require(!value.empty(), "cli.ConfigError",
            "key '" + key + "' is required: pass " + flag + " or set it in the config file");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cli.IoFailure", "cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    require(out.good(), "cli.IoFailure", "failed while writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cli.IoFailure", "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

config::Settings load_config(const std::string& path) {
    config::Settings file;
    if (!path.empty()) file = config::parse_file(path);
    return file;
}

void echo_resolved(const fs::path& out_dir, const config::Settings& resolved) {
    write_text(out_dir / "config.resolved.toml", config::serialize(resolved));
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

CsvTable read_csv(const fs::path& path) {
    const std::string text = read_text(path);
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (table.header.empty()) {
            table.header = split_csv_line(line);
            continue;
        }
        const auto cells = split_csv_line(line);
        require(cells.size() == table.header.size(), "cli.ConfigError",
                "'" + path.string() + "' has a row with " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(table.header.size()));
        std::vector<double> row;
        for (const std::string& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            require(end == c.c_str() + c.size() && !c.empty(), "cli.ConfigError",
                    "non-numeric cell '" + c + "' in '" + path.string() + "'");
            row.push_back(v);
        }
        table.rows.push_back(std::move(row));
    }
    require(!table.header.empty(), "cli.ConfigError", "'" + path.string() + "' is empty");
    return table;
}

std::vector<double> csv_column(const CsvTable& table, const std::string& name,
                               const fs::path& path) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    require(it != table.header.end(), "cli.ConfigError",
            "'" + path.string() + "' has no '" + name + "' column");
    const std::size_t idx = static_cast<std::size_t>(it - table.header.begin());
    std::vector<double> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) out.push_back(row[idx]);
    return out;
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string out;
    std::string config_path;
    int identities = 8;
    int per_id = 20;
    int height = 128;
    int width = 128;
    double fps = 30;
    double duration = 8;
    double noise_std = 0;
    double drift = 0;
    double hr_lo = 60;
    double hr_hi = 150;
    std::uint64_t seed = 0;
};

int run_generate(const CLI::App& cmd, GenerateArgs a) {
    const config::Settings file = load_config(a.config_path);
    merge_flag(cmd, file, "--out", "out", a.out);
    merge_flag(cmd, file, "--identities", "identities", a.identities);
    merge_flag(cmd, file, "--per-id", "per_id", a.per_id);
    merge_flag(cmd, file, "--height", "height", a.height);
    merge_flag(cmd, file, "--width", "width", a.width);
    merge_flag(cmd, file, "--fps", "fps", a.fps);
    merge_flag(cmd, file, "--duration", "duration", a.duration);
    merge_flag(cmd, file, "--noise-std", "noise_std", a.noise_std);
    merge_flag(cmd, file, "--drift", "drift", a.drift);
    merge_flag(cmd, file, "--hr-lo", "hr_lo", a.hr_lo);
    merge_flag(cmd, file, "--hr-hi", "hr_hi", a.hr_hi);
    const std::uint64_t seed = resolve_seed(cmd, file, a.seed);
    require_key(a.out, "out", "--out");

    synthgen::DatasetSpec spec;
    spec.num_identities = a.identities;
    spec.records_per_identity = a.per_id;
    spec.hr_lo = a.hr_lo;
    spec.hr_hi = a.hr_hi;
    spec.fps = a.fps;
    spec.duration_seconds = a.duration;
    spec.height = a.height;
    spec.width = a.width;
    spec.noise_std = a.noise_std;
    spec.illum_drift_amp = a.drift;

    const ingest::DatasetIndex index = synthgen::generate_dataset(spec, seed, a.out);

    config::Settings resolved;
    resolved.set("command", "generate");
    resolved.set("out", a.out);
    resolved.set("identities", std::to_string(a.identities));
    resolved.set("per_id", std::to_string(a.per_id));
    resolved.set("height", std::to_string(a.height));
    resolved.set("width", std::to_string(a.width));
    resolved.set("fps", fmt_double(a.fps));
    resolved.set("duration", fmt_double(a.duration));
    resolved.set("noise_std", fmt_double(a.noise_std));
    resolved.set("drift", fmt_double(a.drift));
    resolved.set("hr_lo", fmt_double(a.hr_lo));
    resolved.set("hr_hi", fmt_double(a.hr_hi));
    resolved.set("seed", std::to_string(seed));
    echo_resolved(a.out, resolved);

    std::cout << "wrote " << index.records.size() << " records for " << index.num_identities
              << " identities under " << a.out << " (seed " << seed << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string out;
    std::string device = "cpu";
    std::string config_path;
    int epochs = 10;
    int batch_size = 16;
    int clip_stride = 64;
    int eval_every = 1;
    int workers = 1;
    double lr = 1e-5;
    double weight_decay = 5e-5;
    double val_fraction = 0.2;
    double target_mae = -1;
    double target_acc = -1;
    std::uint64_t seed = 0;
    int frames = 64;
    std::vector<int> stage_channels = {16, 32, 64};
    int fusion_stage = 3;
    int tcu_upsample = 1;
    double temperature = 0.05;
    double band_lo = 0.5;
    double band_hi = 4.2;
};

int run_train(const CLI::App& cmd, TrainArgs a) {
    const config::Settings file = load_config(a.config_path);
    merge_flag(cmd, file, "--data", "data", a.data);
    merge_flag(cmd, file, "--out", "out", a.out);
    merge_flag(cmd, file, "--device", "device", a.device);
    merge_flag(cmd, file, "--epochs", "epochs", a.epochs);
    merge_flag(cmd, file, "--batch-size", "batch_size", a.batch_size);
    merge_flag(cmd, file, "--clip-stride", "clip_stride", a.clip_stride);
    merge_flag(cmd, file, "--eval-every", "eval_every", a.eval_every);
    merge_flag(cmd, file, "--workers", "workers", a.workers);
    merge_flag(cmd, file, "--lr", "lr", a.lr);
    merge_flag(cmd, file, "--weight-decay", "weight_decay", a.weight_decay);
    merge_flag(cmd, file, "--val-fraction", "val_fraction", a.val_fraction);
    merge_flag(cmd, file, "--target-mae", "target_mae", a.target_mae);
    merge_flag(cmd, file, "--target-acc", "target_acc", a.target_acc);
    merge_flag(cmd, file, "--frames", "frames", a.frames);
    merge_flag(cmd, file, "--stage-channels", "stage_channels", a.stage_channels);
    merge_flag(cmd, file, "--fusion-stage", "fusion_stage", a.fusion_stage);
    merge_flag(cmd, file, "--tcu-upsample", "tcu_upsample", a.tcu_upsample);
    merge_flag(cmd, file, "--temperature", "temperature", a.temperature);
    merge_flag(cmd, file, "--band-lo", "band_lo", a.band_lo);
    merge_flag(cmd, file, "--band-hi", "band_hi", a.band_hi);
    const std::uint64_t seed = resolve_seed(cmd, file, a.seed);
    require_key(a.data, "data", "--data");
    require_key(a.out, "out", "--out");
    require(a.stage_channels.size() == 3, "cli.ConfigError",
            "stage_channels needs exactly 3 widths, got " +
                std::to_string(a.stage_channels.size()));

    const ingest::DatasetIndex index = ingest::index_dataset(a.data);
    const std::vector<ingest::Record> records = trainer::load_dataset_records(index);

    model::ModelConfig mcfg;
    mcfg.t = a.frames;
    mcfg.c = records.front().frames.front().dim(0);
    mcfg.h = records.front().frames.front().dim(1);
    mcfg.w = records.front().frames.front().dim(2);
    std::copy(a.stage_channels.begin(), a.stage_channels.end(), mcfg.stage_channels.begin());
    mcfg.fusion_stage = a.fusion_stage;
    mcfg.tcu_upsample_factor = a.tcu_upsample;
    mcfg.num_identities = index.num_identities;
    mcfg.temperature = a.temperature;
    mcfg.band = {a.band_lo, a.band_hi};

    trainer::TrainConfig tcfg;
    tcfg.batch_size = a.batch_size;
    tcfg.lr = a.lr;
    tcfg.weight_decay = a.weight_decay;
    tcfg.epochs = a.epochs;
    tcfg.seed = seed;
    tcfg.clip_stride = a.clip_stride;
    tcfg.val_fraction = a.val_fraction;
    tcfg.eval_every = a.eval_every;
    tcfg.workers = a.workers;
    tcfg.target_mae = a.target_mae;
    tcfg.target_acc = a.target_acc;
    tcfg.device = a.device;

    const trainer::TrainResult result = trainer::train_on_records(mcfg, tcfg, records);

    for (const trainer::EpochStats& st : result.history) {
        std::printf("epoch %3d loss %.4f bvp %.4f hr %.4f id %.4f mae %.4f acc %.4f\n",
                    st.epoch, st.loss, st.bvp_term, st.hr_term, st.id_term, st.mae, st.id_acc);
    }
    std::printf("trained on %zu records, held out %zu, %ld steps\n",
                result.train_records.size(), result.val_records.size(), result.steps);
    if (result.best_epoch > 0) {
        std::printf("best validation mae %.4f bpm at epoch %d\n", result.best_val_mae,
                    result.best_epoch);
    }

    fs::create_directories(fs::path(a.out) / "plots");
    model::save_checkpoint(fs::path(a.out) / "checkpoint.pbck", result.params, result.config);
    write_text(fs::path(a.out) / "history.csv", trainer::history_to_csv(result.history));
    try {
        image_io::write_png(fs::path(a.out) / "plots" / "history.png",
                            plot::render_history(result.history));
    } catch (const Error& e) {
        if (std::string(e.code()) != "plot.EmptyChart") throw;
        std::cout << "no validation metrics, skipped plots/history.png\n";
    }

    config::Settings resolved;
    resolved.set("command", "train");
    resolved.set("data", a.data);
    resolved.set("out", a.out);
    resolved.set("epochs", std::to_string(a.epochs));
    resolved.set("batch_size", std::to_string(a.batch_size));
    resolved.set("lr", fmt_double(a.lr));
    resolved.set("weight_decay", fmt_double(a.weight_decay));
    resolved.set("val_fraction", fmt_double(a.val_fraction));
    resolved.set("clip_stride", std::to_string(a.clip_stride));
    resolved.set("eval_every", std::to_string(a.eval_every));
    resolved.set("workers", std::to_string(a.workers));
    resolved.set("target_mae", fmt_double(a.target_mae));
    resolved.set("target_acc", fmt_double(a.target_acc));
    resolved.set("device", a.device);
    resolved.set("seed", std::to_string(seed));
    resolved.set("frames", std::to_string(a.frames));
    resolved.set("stage_channels", "[" + std::to_string(a.stage_channels[0]) + ", " +
                                       std::to_string(a.stage_channels[1]) + ", " +
                                       std::to_string(a.stage_channels[2]) + "]");
    resolved.set("fusion_stage", std::to_string(a.fusion_stage));
    resolved.set("tcu_upsample", std::to_string(a.tcu_upsample));
    resolved.set("temperature", fmt_double(a.temperature));
    resolved.set("band_lo", fmt_double(a.band_lo));
    resolved.set("band_hi", fmt_double(a.band_hi));
    echo_resolved(a.out, resolved);

    std::cout << "saved checkpoint.pbck and history.csv under " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval and baseline

struct EvalArgs {
    std::string data;
    std::string ckpt;
    std::string method;
    std::string out;
    std::string config_path;
    double band_lo = 0.5;
    double band_hi = 4.2;
};

using TraceFn = spectral::BvpTrace (*)(const pulsebench::TensorD&, double);

TraceFn trace_fn(const std::string& method) {
    if (method == "green") return &baselines::green_trace;
    if (method == "chrom") return &baselines::chrom_trace;
    if (method == "pos") return &baselines::pos_trace;
    fail("cli.ConfigError", "unknown method '" + method + "', expected green, chrom, or pos");
}

/// Classical methods read the raw pixel statistics, so they run on the whole
/// unstandardized record rather than on standardized eval segments.
trainer::EvalResult method_eval(const std::string& method,
                                const std::vector<ingest::Record>& records,
                                const spectral::HrBand& band) {
    require(!records.empty(), "trainer.EmptyDataset", "no records to evaluate");
    const TraceFn fn = trace_fn(method);
    std::vector<double> preds, gts;
    for (const ingest::Record& rec : records) {
        const TensorD clip =
            preprocess::stack_frames(rec.frames, 0, rec.frames.size()).cast<double>();
        double hr;
        try {
            hr = spectral::estimate_hr(fn(clip, rec.fps), band);
        } catch (const Error& e) {
            if (std::string(e.code()) != "spectral.NoSpectralPeak") throw;
            hr = 60.0 * 0.5 * (band.lo + band.hi);
        }
        preds.push_back(hr);
        gts.push_back(rec.hr_bpm);
    }
    trainer::EvalResult res;
    res.hr = trainer::stats_or_fallback(preds, gts);
    res.agreement = trainer::agreement_or_fallback(preds, gts);
    res.id_accuracy = std::numeric_limits<double>::quiet_NaN();
    res.num_segments = static_cast<int>(records.size());
    return res;
}

std::string metrics_json(const trainer::EvalResult& res, const std::string& source) {
    nlohmann::json j = nlohmann::json::parse(metrics::to_json(res.hr));
    j["schema"] = "pulsebench.metrics.v1";
    j["source"] = source;
    j["id_accuracy"] = res.id_accuracy;
    j["num_segments"] = res.num_segments;
    j["agreement"] = {{"mean_diff", res.agreement.mean_diff},
                      {"loa_lo", res.agreement.loa_lo},
                      {"loa_hi", res.agreement.loa_hi}};
    return j.dump(2) + "\n";
}

int run_eval(const CLI::App& cmd, EvalArgs a, bool baseline_command) {
    const config::Settings file = load_config(a.config_path);
    merge_flag(cmd, file, "--data", "data", a.data);
    merge_flag(cmd, file, "--method", "method", a.method);
    merge_flag(cmd, file, "--out", "out", a.out);
    merge_flag(cmd, file, "--band-lo", "band_lo", a.band_lo);
    merge_flag(cmd, file, "--band-hi", "band_hi", a.band_hi);
    if (!baseline_command) merge_flag(cmd, file, "--ckpt", "ckpt", a.ckpt);
    require_key(a.data, "data", "--data");

    trainer::EvalResult res;
    std::string source;
    if (baseline_command || a.ckpt == "none") {
        require_key(a.method, "method", "--method");
        const ingest::DatasetIndex index = ingest::index_dataset(a.data);
        const std::vector<ingest::Record> records = trainer::load_dataset_records(index);
        res = method_eval(a.method, records, {a.band_lo, a.band_hi});
        source = a.method;
    } else {
        require_key(a.ckpt, "ckpt", "--ckpt");
        res = trainer::evaluate(a.ckpt, a.data);
        source = "checkpoint";
    }

    const std::string json_text = metrics_json(res, source);
    std::cout << json_text;

    if (!a.out.empty()) {
        fs::create_directories(fs::path(a.out) / "plots");
        write_text(fs::path(a.out) / "metrics.json", json_text);
        std::string ba = "mean,diff\n";
        for (const auto& [mean, diff] : res.agreement.points) {
            ba += fmt_double(mean) + "," + fmt_double(diff) + "\n";
        }
        write_text(fs::path(a.out) / "bland_altman.csv", ba);
        image_io::write_png(fs::path(a.out) / "plots" / "bland_altman.png",
                            plot::render_bland_altman(res.agreement));

        config::Settings resolved;
        resolved.set("command", baseline_command ? "baseline" : "eval");
        resolved.set("data", a.data);
        if (!baseline_command) resolved.set("ckpt", a.ckpt);
        if (baseline_command || a.ckpt == "none") resolved.set("method", a.method);
        resolved.set("out", a.out);
        resolved.set("band_lo", fmt_double(a.band_lo));
        resolved.set("band_hi", fmt_double(a.band_hi));
        echo_resolved(a.out, resolved);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
    std::string ckpt;
    std::string data;
    std::string out;
    std::string config_path;
};

std::string record_file_stem(const fs::path& record_dir, const fs::path& root) {
    std::string rel = fs::relative(record_dir, root).generic_string();
    if (rel.empty() || rel == ".") rel = record_dir.filename().generic_string();
    std::replace(rel.begin(), rel.end(), '/', '_');
    return rel;
}

int run_infer(const CLI::App& cmd, InferArgs a) {
    const config::Settings file = load_config(a.config_path);
    merge_flag(cmd, file, "--ckpt", "ckpt", a.ckpt);
    merge_flag(cmd, file, "--data", "data", a.data);
    merge_flag(cmd, file, "--out", "out", a.out);
    require_key(a.ckpt, "ckpt", "--ckpt");
    require_key(a.data, "data", "--data");
    require_key(a.out, "out", "--out");

    const model::Checkpoint ck = model::load_checkpoint(a.ckpt);
    const ingest::DatasetIndex index = ingest::index_dataset(a.data);
    const std::vector<ingest::Record> records = trainer::load_dataset_records(index);
    fs::create_directories(fs::path(a.out) / "bvp");

    std::string hr_csv = "record,identity,identity_pred,hr_gt_bpm,hr_pred_bpm\n";
    for (std::size_t r = 0; r < records.size(); ++r) {
        const ingest::Record& rec = records[r];
        const auto clips = preprocess::window_clips(rec, ck.config.t, ck.config.t);
        std::vector<double> pred, ref;
        std::vector<double> logit_sum;
        for (const preprocess::FrameClip& clip : clips) {
            const auto fw = model::forward(clip.data, ck.params, ck.config);
            for (int t = 0; t < ck.config.t; ++t) pred.push_back(fw.bvp[t]);
            ref.insert(ref.end(), clip.bvp.begin(), clip.bvp.end());
            if (logit_sum.empty()) logit_sum.assign(fw.id_logits.numel(), 0.0);
            for (std::size_t k = 0; k < logit_sum.size(); ++k) logit_sum[k] += fw.id_logits[k];
        }

        double hr;
        try {
            spectral::BvpTrace trace;
            trace.values = pred;
            trace.fs = rec.fps;
            hr = spectral::estimate_hr(trace, ck.config.band);
        } catch (const Error& e) {
            if (std::string(e.code()) != "spectral.NoSpectralPeak") throw;
            hr = 60.0 * 0.5 * (ck.config.band.lo + ck.config.band.hi);
        }
        const std::size_t id_pred = argmax(logit_sum);

        std::string trace_csv = "frame,seconds,predicted,reference\n";
        for (std::size_t i = 0; i < pred.size(); ++i) {
            trace_csv += std::to_string(i) + "," + fmt_double(static_cast<double>(i) / rec.fps) +
                         "," + fmt_double(pred[i]) + "," + fmt_double(ref[i]) + "\n";
        }
        const std::string stem = record_file_stem(index.records[r].path, a.data);
        write_text(fs::path(a.out) / "bvp" / (stem + ".csv"), trace_csv);

        hr_csv += stem + "," + std::to_string(rec.identity) + "," + std::to_string(id_pred) +
                  "," + fmt_double(rec.hr_bpm) + "," + fmt_double(hr) + "\n";
        std::cout << stem << " hr " << fmt_double(hr) << " bpm (reference " <<
            fmt_double(rec.hr_bpm) << "), identity " << id_pred << "\n";
    }
    write_text(fs::path(a.out) / "hr.csv", hr_csv);

    config::Settings resolved;
    resolved.set("command", "infer");
    resolved.set("ckpt", a.ckpt);
    resolved.set("data", a.data);
    resolved.set("out", a.out);
    echo_resolved(a.out, resolved);

    std::cout << "wrote " << records.size() << " traces under " << a.out << "/bvp\n";
    return 0;
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
    std::string history;
    std::string agreement;
    std::string overlay;
    std::string out = ".";
    std::string config_path;
};

int run_plot(const CLI::App& cmd, PlotArgs a) {
    const config::Settings file = load_config(a.config_path);
    merge_flag(cmd, file, "--history", "history", a.history);
    merge_flag(cmd, file, "--agreement", "agreement", a.agreement);
    merge_flag(cmd, file, "--overlay", "overlay", a.overlay);
    merge_flag(cmd, file, "--out", "out", a.out);
    require(!a.history.empty() || !a.agreement.empty() || !a.overlay.empty(), "cli.ConfigError",
            "nothing to plot: pass --history, --agreement, or --overlay");

    fs::create_directories(fs::path(a.out) / "plots");

    if (!a.history.empty()) {
        const trainer::TrainHistory history = trainer::history_from_csv(read_text(a.history));
        image_io::write_png(fs::path(a.out) / "plots" / "history.png",
                            plot::render_history(history));
        std::cout << "wrote plots/history.png\n";
    }
    if (!a.agreement.empty()) {
        const CsvTable table = read_csv(a.agreement);
        const std::vector<double> means = csv_column(table, "mean", a.agreement);
        const std::vector<double> diffs = csv_column(table, "diff", a.agreement);
        require(!means.empty(), "cli.ConfigError",
                "'" + a.agreement + "' has no data rows");
        std::vector<double> preds, gts;
        for (std::size_t i = 0; i < means.size(); ++i) {
            preds.push_back(means[i] + diffs[i] / 2.0);
            gts.push_back(means[i] - diffs[i] / 2.0);
        }
        const auto stats = trainer::agreement_or_fallback(preds, gts);
        image_io::write_png(fs::path(a.out) / "plots" / "bland_altman.png",
                            plot::render_bland_altman(stats));
        std::cout << "wrote plots/bland_altman.png\n";
    }
    if (!a.overlay.empty()) {
        const CsvTable table = read_csv(a.overlay);
        const std::vector<double> seconds = csv_column(table, "seconds", a.overlay);
        const std::vector<double> predicted = csv_column(table, "predicted", a.overlay);
        const std::vector<double> reference = csv_column(table, "reference", a.overlay);
        require(seconds.size() >= 2 && seconds[1] > seconds[0], "cli.ConfigError",
                "'" + a.overlay + "' needs at least 2 rows of increasing seconds");
        const double fs = 1.0 / (seconds[1] - seconds[0]);
        image_io::write_png(fs::path(a.out) / "plots" / "overlay.png",
                            plot::render_overlay(predicted, reference, fs));
        std::cout << "wrote plots/overlay.png\n";
    }

    config::Settings resolved;
    resolved.set("command", "plot");
    if (!a.history.empty()) resolved.set("history", a.history);
    if (!a.agreement.empty()) resolved.set("agreement", a.agreement);
    if (!a.overlay.empty()) resolved.set("overlay", a.overlay);
    resolved.set("out", a.out);
    echo_resolved(a.out, resolved);
    return 0;
}

}  // namespace
}  // namespace pulsebench::cli

int main(int argc, char** argv) {
    using namespace pulsebench::cli;

    static const std::array<const char*, 6> kCommands = {"generate", "train", "eval",
                                                         "infer",    "baseline", "plot"};
    if (argc >= 2 && argv[1][0] != '-') {
        const bool known = std::any_of(kCommands.begin(), kCommands.end(),
                                       [&](const char* c) { return std::strcmp(c, argv[1]) == 0; });
        if (!known) {
            return emit_error("cli.UnknownCommand",
                              std::string("'") + argv[1] +
                                  "' is not a command; expected one of generate, train, eval, "
                                  "infer, baseline, plot",
                              2);
        }
    }

    CLI::App app{"synthetic rPPG toolkit: dataset generation, training, evaluation, plotting"};
    app.require_subcommand(1);

    GenerateArgs g;
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic face-video dataset");
    generate->add_option("--out", g.out, "dataset root directory");
    generate->add_option("--identities", g.identities, "number of subjects");
    generate->add_option("--per-id", g.per_id, "records per subject");
    generate->add_option("--fps", g.fps, "frame rate");
    generate->add_option("--duration", g.duration, "record length in seconds");
    generate->add_option("--height", g.height, "frame height");
    generate->add_option("--width", g.width, "frame width");
    generate->add_option("--noise-std", g.noise_std, "pixel noise sigma in 8-bit units");
    generate->add_option("--drift", g.drift, "illumination drift amplitude");
    generate->add_option("--hr-lo", g.hr_lo, "lowest ground-truth HR in bpm");
    generate->add_option("--hr-hi", g.hr_hi, "highest ground-truth HR in bpm");
    generate->add_option("--seed", g.seed, "RNG seed");
    generate->add_option("--config", g.config_path, "key = value config file");

    TrainArgs t;
    CLI::App* train = app.add_subcommand("train", "train the two-branch pulse network");
    train->add_option("--data", t.data, "dataset root");
    train->add_option("--out", t.out, "run output directory");
    train->add_option("--epochs", t.epochs, "training epochs");
    train->add_option("--batch-size", t.batch_size, "clips per step");
    train->add_option("--lr", t.lr, "learning rate");
    train->add_option("--weight-decay", t.weight_decay, "decoupled weight decay");
    train->add_option("--val-fraction", t.val_fraction, "held-out share of records per subject");
    train->add_option("--clip-stride", t.clip_stride, "frames between training windows");
    train->add_option("--eval-every", t.eval_every, "validation cadence in epochs");
    train->add_option("--workers", t.workers, "batch materialization threads");
    train->add_option("--target-mae", t.target_mae, "early-stop validation MAE, negative to disable");
    train->add_option("--target-acc", t.target_acc, "early-stop identity accuracy, negative to disable");
    train->add_option("--device", t.device, "compute device (cpu)");
    train->add_option("--seed", t.seed, "RNG seed");
    train->add_option("--frames", t.frames, "clip length in frames");
    train->add_option("--stage-channels", t.stage_channels, "3 stage widths, comma separated")
        ->delimiter(',');
    train->add_option("--fusion-stage", t.fusion_stage, "stage fed by the combiner, 0 disables");
    train->add_option("--tcu-upsample", t.tcu_upsample, "compressed-frame upsampling factor");
    train->add_option("--temperature", t.temperature, "spectral softmax temperature");
    train->add_option("--band-lo", t.band_lo, "pulse band lower edge in Hz");
    train->add_option("--band-hi", t.band_hi, "pulse band upper edge in Hz");
    train->add_option("--config", t.config_path, "key = value config file");

    EvalArgs e;
    e.method = "pos";
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint or classical method");
    eval_cmd->add_option("--data", e.data, "dataset root");
    eval_cmd->add_option("--ckpt", e.ckpt, "checkpoint path, or 'none' to use --method");
    eval_cmd->add_option("--method", e.method, "green, chrom, or pos when --ckpt none");
    eval_cmd->add_option("--out", e.out, "artifact directory (metrics.json, bland_altman.csv)");
    eval_cmd->add_option("--band-lo", e.band_lo, "pulse band lower edge in Hz (methods only)");
    eval_cmd->add_option("--band-hi", e.band_hi, "pulse band upper edge in Hz (methods only)");
    eval_cmd->add_option("--config", e.config_path, "key = value config file");

    EvalArgs b;
    CLI::App* baseline = app.add_subcommand("baseline", "evaluate GREEN, CHROM, or POS");
    baseline->add_option("--data", b.data, "dataset root");
    baseline->add_option("--method", b.method, "green, chrom, or pos");
    baseline->add_option("--out", b.out, "artifact directory (metrics.json, bland_altman.csv)");
    baseline->add_option("--band-lo", b.band_lo, "pulse band lower edge in Hz");
    baseline->add_option("--band-hi", b.band_hi, "pulse band upper edge in Hz");
    baseline->add_option("--config", b.config_path, "key = value config file");

    InferArgs n;
    CLI::App* infer = app.add_subcommand("infer", "write per-record BVP traces and HR estimates");
    infer->add_option("--ckpt", n.ckpt, "checkpoint path");
    infer->add_option("--data", n.data, "dataset root");
    infer->add_option("--out", n.out, "artifact directory (bvp/*.csv, hr.csv)");
    infer->add_option("--config", n.config_path, "key = value config file");

    PlotArgs p;
    CLI::App* plot_cmd = app.add_subcommand("plot", "render training, agreement, or trace figures");
    plot_cmd->add_option("--history", p.history, "history.csv from train");
    plot_cmd->add_option("--agreement", p.agreement, "bland_altman.csv from eval");
    plot_cmd->add_option("--overlay", p.overlay, "trace csv from infer");
    plot_cmd->add_option("--out", p.out, "artifact directory, default '.'");
    plot_cmd->add_option("--config", p.config_path, "key = value config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        return emit_error("cli.BadArguments", ex.what(), 2);
    }

    try {
        if (app.got_subcommand(generate)) return run_generate(*generate, g);
        if (app.got_subcommand(train)) return run_train(*train, t);
        if (app.got_subcommand(eval_cmd)) return run_eval(*eval_cmd, e, false);
        if (app.got_subcommand(baseline)) return run_eval(*baseline, b, true);
        if (app.got_subcommand(infer)) return run_infer(*infer, n);
        if (app.got_subcommand(plot_cmd)) return run_plot(*plot_cmd, p);
    } catch (const Error& ex) {
        const std::string what = ex.what();
        return emit_error(ex.code(), what.substr(ex.code().size() + 2), 1);
    } catch (const std::exception& ex) {
        return emit_error("cli.InternalError", ex.what(), 1);
    }
    return 0;
}
