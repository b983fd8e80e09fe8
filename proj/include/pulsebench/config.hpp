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

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

// Flat key = value configuration files, a small TOML subset: line comments
// with '#', quoted strings with the usual escapes, bare numbers and booleans,
// and bracketed integer lists. Values are kept as raw text and parsed by the
// typed getters, which name the offending key on failure. Every failure in
// this module carries the code config.ConfigError.

namespace pulsebench::config {

struct Settings {
    std::vector<std::pair<std::string, std::string>> entries;  // insertion order

    bool has(const std::string& key) const;
    const std::string* find(const std::string& key) const;

    /// Replaces the value in place when the key exists, appends otherwise.
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
};

Settings parse_string(const std::string& text);
Settings parse_file(const std::filesystem::path& path);

/// Emits one key = value line per entry in insertion order. Values that read
/// back as numbers, booleans, or integer lists stay bare; everything else is
/// quoted. parse_string(serialize(s)) reproduces the entries.
std::string serialize(const Settings& settings);

}  // namespace pulsebench::config
