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

#include "pulsebench/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pulsebench/errors.hpp"

namespace pulsebench::ingest {

namespace fs = std::filesystem;

namespace {

struct Meta {
    double fps = 0;
    int identity = 0;
    double hr_bpm = -1;
    std::map<std::string, std::string> extra;
};

Meta read_meta(const fs::path& record_dir) {
    const fs::path meta_path = record_dir / "meta.json";
    std::ifstream in(meta_path);
    if (!in) {
        fail("ingest.MalformedMeta", "cannot open '" + meta_path.string() + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail("ingest.MalformedMeta",
             "cannot parse '" + meta_path.string() + "': " + e.what());
    }
    if (!j.is_object() || !j.contains("fps") || !j["fps"].is_number() ||
        !j.contains("identity") || !j["identity"].is_number_integer()) {
        fail("ingest.MalformedMeta",
             "'" + meta_path.string() + "' needs numeric fps and integer identity");
    }

    Meta meta;
    meta.fps = j["fps"].get<double>();
    meta.identity = j["identity"].get<int>();
    require(meta.fps > 0, "ingest.MalformedMeta", "fps must be positive");
    require(meta.identity >= 0, "ingest.MalformedMeta", "identity must be >= 0");
    if (j.contains("hr_bpm")) {
        require(j["hr_bpm"].is_number(), "ingest.MalformedMeta",
                "hr_bpm must be numeric");
        meta.hr_bpm = j["hr_bpm"].get<double>();
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "fps" || key == "identity" || key == "hr_bpm") continue;
        meta.extra[key] = value.is_string() ? value.get<std::string>()
                                            : value.dump();
    }
    return meta;
}

std::vector<fs::path> list_frame_files(const fs::path& record_dir) {
    const fs::path frames_dir = record_dir / "frames";
    std::vector<fs::path> files;
    if (fs::is_directory(frames_dir)) {
        for (const auto& entry : fs::directory_iterator(frames_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".png") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                  return a.filename().string() < b.filename().string();
              });
    return files;
}

void parse_bvp_csv(const fs::path& record_dir, std::vector<double>* values,
                   double* fs) {
    const fs::path csv_path = record_dir / "bvp.csv";
    std::ifstream in(csv_path);
    if (!in) {
        fail("ingest.LabelMismatch", "cannot open '" + csv_path.string() + "'");
    }

    std::vector<double> times;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            continue;  // header row
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            fail("ingest.LabelMismatch",
                 "'" + csv_path.string() + "' row missing comma: " + line);
        }
        char* end = nullptr;
        const double t = std::strtod(line.c_str(), &end);
        const double v = std::strtod(line.c_str() + comma + 1, &end);
        times.push_back(t);
        values->push_back(v);
    }

    if (values->size() < 2 || times.back() <= times.front()) {
        fail("ingest.LabelMismatch",
             "'" + csv_path.string() + "' needs >= 2 rows with increasing time");
    }
    *fs = static_cast<double>(times.size() - 1) / (times.back() - times.front());
}

}  // namespace

Record load_record(const fs::path& path) {
    const Meta meta = read_meta(path);

    const std::vector<fs::path> frame_files = list_frame_files(path);
    require(frame_files.size() >= 2, "ingest.MissingFrames",
            "'" + (path / "frames").string() + "' needs at least 2 png frames");

    Record record;
    record.fps = meta.fps;
    record.identity = meta.identity;
    record.hr_bpm = meta.hr_bpm;
    record.meta = meta.extra;
    record.frames.reserve(frame_files.size());
    for (const fs::path& file : frame_files) {
        record.frames.push_back(image_io::read_png(file));
    }

    parse_bvp_csv(path, &record.bvp_values, &record.bvp_fs);

    const double duration = record.duration_seconds();
    const double expected = duration * record.bvp_fs;
    const double n = static_cast<double>(record.bvp_values.size());
    require(std::abs(expected - n) <= 1.0 + 1e-9, "ingest.LabelMismatch",
            "bvp length " + std::to_string(record.bvp_values.size()) +
                " inconsistent with " + std::to_string(duration) + " s at " +
                std::to_string(record.bvp_fs) + " Hz");
    return record;
}

std::vector<double> resample_labels(const std::vector<double>& trace,
                                    double src_fs, double dst_fs) {
    require(src_fs > 0 && dst_fs > 0, "ingest.BadRate",
            "sampling rates must be positive");
    require(trace.size() >= 2, "ingest.EmptyTrace",
            "need at least 2 samples to resample");

    const std::size_t n = trace.size();
    const double duration = static_cast<double>(n) / src_fs;
    const auto out_len =
        static_cast<std::size_t>(std::llround(duration * dst_fs));
    std::vector<double> out(out_len);
    for (std::size_t j = 0; j < out_len; ++j) {
        const double pos = static_cast<double>(j) / dst_fs * src_fs;
        const auto i = static_cast<std::size_t>(pos);
        if (i >= n - 1) {
            out[j] = trace[n - 1];
        } else {
            const double frac = pos - static_cast<double>(i);
            out[j] = (1.0 - frac) * trace[i] + frac * trace[i + 1];
        }
    }
    return out;
}

DatasetIndex index_dataset(const fs::path& root) {
    require(fs::is_directory(root), "ingest.EmptyDataset",
            "'" + root.string() + "' is not a directory");

    std::vector<fs::path> record_dirs;
    if (fs::exists(root / "meta.json")) record_dirs.push_back(root);
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
            record_dirs.push_back(entry.path());
        }
    }
    require(!record_dirs.empty(), "ingest.EmptyDataset",
            "no record directories under '" + root.string() + "'");
    std::sort(record_dirs.begin(), record_dirs.end(),
              [](const fs::path& a, const fs::path& b) {
                  return a.generic_string() < b.generic_string();
              });

    struct Raw {
        fs::path path;
        int identity;
        double duration;
    };
    std::vector<Raw> raws;
    std::set<int> identities;
    for (const fs::path& dir : record_dirs) {
        const Meta meta = read_meta(dir);
        const std::size_t frame_count = list_frame_files(dir).size();
        raws.push_back({dir, meta.identity,
                        static_cast<double>(frame_count) / meta.fps});
        identities.insert(meta.identity);
    }

    std::map<int, int> remap;
    int next = 0;
    for (int id : identities) remap[id] = next++;

    DatasetIndex index;
    index.num_identities = next;
    index.records.reserve(raws.size());
    for (const Raw& raw : raws) {
        index.records.push_back({raw.path, remap.at(raw.identity), raw.duration});
    }
    return index;
}

}  // namespace pulsebench::ingest
