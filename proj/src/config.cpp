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

#include "pulsebench/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pulsebench/errors.hpp"

namespace pulsebench::config {

namespace {

constexpr const char* kCode = "config.ConfigError";

bool key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

std::string trim(const std::string& s) {
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

std::string where(int line_no) { return "line " + std::to_string(line_no); }

/// Reads a double-quoted value with \" \\ \n \t escapes, then insists the
/// remainder of the line is whitespace or a comment.
std::string parse_quoted(const std::string& rest, int line_no) {
    std::string out;
    std::size_t i = 1;
    for (; i < rest.size(); ++i) {
        const char c = rest[i];
        if (c == '"') break;
        if (c == '\\') {
            require(i + 1 < rest.size(), kCode, where(line_no) + ": dangling escape");
            const char e = rest[++i];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default:
                    fail(kCode, where(line_no) + ": unsupported escape \\" + std::string(1, e));
            }
            continue;
        }
        out += c;
    }
    require(i < rest.size() && rest[i] == '"', kCode,
            where(line_no) + ": unterminated string");
    const std::string tail = trim(rest.substr(i + 1));
    require(tail.empty() || tail[0] == '#', kCode,
            where(line_no) + ": trailing characters after string");
    return out;
}

/// Bare values run to the first '#'; they cannot contain one.
std::string parse_bare(const std::string& rest, int line_no) {
    const std::size_t hash = rest.find('#');
    const std::string value = trim(rest.substr(0, hash));
    require(!value.empty(), kCode, where(line_no) + ": missing value");
    return value;
}

bool parse_full_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return errno == 0 && end == text.c_str() + text.size();
}

bool parse_full_int(const std::string& text, long long& out) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtoll(text.c_str(), &end, 10);
    return errno == 0 && end == text.c_str() + text.size();
}

bool parse_list(const std::string& text, std::vector<int>& out) {
    std::string body = trim(text);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') return false;
    body = trim(body.substr(1, body.size() - 2));
    out.clear();
    if (body.empty()) return true;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = body.find(',', start);
        const std::string cell = trim(body.substr(start, comma - start));
        long long v = 0;
        if (!parse_full_int(cell, v)) return false;
        out.push_back(static_cast<int>(v));
        if (comma == std::string::npos) return true;
        start = comma + 1;
    }
}

bool looks_bare(const std::string& value) {
    if (value == "true" || value == "false") return true;
    double d = 0;
    if (parse_full_double(value, d)) return true;
    std::vector<int> list;
    return parse_list(value, list);
}

std::string quote(const std::string& value) {
    std::string out = "\"";
    for (char c : value) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

}  // namespace

bool Settings::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* Settings::find(const std::string& key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) return &v;
    }
    return nullptr;
}

void Settings::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries.emplace_back(key, value);
}

std::string Settings::get_string(const std::string& key, const std::string& fallback) const {
    const std::string* v = find(key);
    return v ? *v : fallback;
}

double Settings::get_double(const std::string& key, double fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    double out = 0;
    require(parse_full_double(*v, out), kCode, "key '" + key + "': not a number: " + *v);
    return out;
}

long long Settings::get_int(const std::string& key, long long fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    long long out = 0;
    require(parse_full_int(*v, out), kCode, "key '" + key + "': not an integer: " + *v);
    return out;
}

bool Settings::get_bool(const std::string& key, bool fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(kCode, "key '" + key + "': not a boolean: " + *v);
}

std::uint64_t Settings::get_u64(const std::string& key, std::uint64_t fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    require(!v->empty() && (*v)[0] != '-', kCode, "key '" + key + "': negative: " + *v);
    errno = 0;
    char* end = nullptr;
    const std::uint64_t out = std::strtoull(v->c_str(), &end, 10);
    require(errno == 0 && end == v->c_str() + v->size(), kCode,
            "key '" + key + "': not an unsigned integer: " + *v);
    return out;
}

std::vector<int> Settings::get_int_list(const std::string& key,
                                        std::vector<int> fallback) const {
    const std::string* v = find(key);
    if (!v) return fallback;
    std::vector<int> out;
    require(parse_list(*v, out), kCode, "key '" + key + "': not an integer list: " + *v);
    return out;
}

Settings parse_string(const std::string& text) {
    Settings s;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, kCode, where(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), kCode, where(line_no) + ": empty key");
        for (char c : key) {
            require(key_char(c), kCode,
                    where(line_no) + ": bad character in key '" + key + "'");
        }
        require(!s.has(key), kCode, where(line_no) + ": duplicate key '" + key + "'");

        const std::string rest = trim(line.substr(eq + 1));
        require(!rest.empty() && rest[0] != '#', kCode, where(line_no) + ": missing value");
        const std::string value =
            rest[0] == '"' ? parse_quoted(rest, line_no) : parse_bare(rest, line_no);
        s.entries.emplace_back(key, value);
    }
    return s;
}

Settings parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), kCode, "cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

std::string serialize(const Settings& settings) {
    std::string out;
    for (const auto& [key, value] : settings.entries) {
        out += key;
        out += " = ";
        out += looks_bare(value) ? value : quote(value);
        out += "\n";
    }
    return out;
}

}  // namespace pulsebench::config
