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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pulsebench/image_io.hpp"

namespace pulsebench::ingest {

/// One video record: decoded frames plus its physiological labels.
struct Record {
    std::vector<image_io::ImageU8> frames;  // each 3 x H x W
    double fps = 0;
    std::vector<double> bvp_values;
    double bvp_fs = 0;
    double hr_bpm = -1;  // -1 when the record carries no scalar HR label
    int identity = 0;
    std::map<std::string, std::string> meta;

    double duration_seconds() const {
        return fps > 0 ? static_cast<double>(frames.size()) / fps : 0.0;
    }
};

struct RecordDescriptor {
    std::filesystem::path path;
    int identity = 0;  // remapped, contiguous in [0, K)
    double duration_seconds = 0;
};

struct DatasetIndex {
    std::vector<RecordDescriptor> records;
    int num_identities = 0;
};

/// Loads one record directory: frames/*.png in filename order, bvp.csv
/// (t_seconds,value rows) and meta.json (fps, identity, hr_bpm optional).
/// Throws ingest.MissingFrames, ingest.LabelMismatch, ingest.MalformedMeta.
Record load_record(const std::filesystem::path& path);

/// Linear interpolation of a label trace onto the dst_fs grid covering the
/// same duration (n_src / src_fs seconds). Output length is
/// round(duration * dst_fs); samples beyond the last source sample clamp to
/// its value. Throws ingest.EmptyTrace when the input has fewer than 2
/// samples.
std::vector<double> resample_labels(const std::vector<double>& trace,
                                    double src_fs, double dst_fs);

/// Recursively scans root for record directories (those containing a
/// meta.json), ordered lexicographically by path, and remaps the identities
/// found to a contiguous [0, K). Throws ingest.EmptyDataset.
DatasetIndex index_dataset(const std::filesystem::path& root);

}  // namespace pulsebench::ingest
