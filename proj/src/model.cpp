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

#include "pulsebench/model.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace pulsebench::model {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written as raw little-endian words");

constexpr char kMagic[4] = {'P', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{
        {"t", cfg.t},
        {"c", cfg.c},
        {"h", cfg.h},
        {"w", cfg.w},
        {"stage_channels", cfg.stage_channels},
        {"fusion_stage", cfg.fusion_stage},
        {"tcu_upsample_factor", cfg.tcu_upsample_factor},
        {"num_identities", cfg.num_identities},
        {"temperature", cfg.temperature},
        {"band_lo", cfg.band.lo},
        {"band_hi", cfg.band.hi},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    try {
        cfg.t = j.at("t").get<int>();
        cfg.c = j.at("c").get<int>();
        cfg.h = j.at("h").get<int>();
        cfg.w = j.at("w").get<int>();
        const auto ch = j.at("stage_channels").get<std::vector<int>>();
        require(ch.size() == 3, "model.BadCheckpoint", "stage_channels must have three entries");
        std::copy(ch.begin(), ch.end(), cfg.stage_channels.begin());
        cfg.fusion_stage = j.at("fusion_stage").get<int>();
        cfg.tcu_upsample_factor = j.at("tcu_upsample_factor").get<int>();
        cfg.num_identities = j.at("num_identities").get<int>();
        cfg.temperature = j.at("temperature").get<double>();
        cfg.band.lo = j.at("band_lo").get<double>();
        cfg.band.hi = j.at("band_hi").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail("model.BadCheckpoint", std::string("malformed config block: ") + e.what());
    }
    return cfg;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const ModelConfig& config) {
    validate(config);
    const auto refs = param_refs(params);

    nlohmann::json dir = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& r : refs) {
        dir.push_back({{"name", r.name},
                       {"shape", r.shape},
                       {"dtype", "f32"},
                       {"offset", offset}});
        offset += r.numel * sizeof(float);
    }
    nlohmann::json header{
        {"config", config_to_json(config)},
        {"arrays", dir},
    };
    const std::string header_bytes = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "model.CheckpointError", "cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t hlen = header_bytes.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    for (const auto& r : refs)
        out.write(reinterpret_cast<const char*>(r.data),
                  static_cast<std::streamsize>(r.numel * sizeof(float)));
    out.flush();
    require(out.good(), "model.CheckpointError", "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "model.BadCheckpoint", "cannot open " + path.string());

    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t hlen = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    require(in.good() && std::memcmp(magic, kMagic, 4) == 0, "model.BadCheckpoint",
            path.string() + " is not a checkpoint file");
    require(version == kVersion, "model.BadCheckpoint",
            "unsupported checkpoint version " + std::to_string(version));
    require(hlen > 0 && hlen < (1u << 24), "model.BadCheckpoint", "implausible header length");

    std::string header_bytes(hlen, '\0');
    in.read(header_bytes.data(), static_cast<std::streamsize>(hlen));
    require(in.good(), "model.BadCheckpoint", "truncated checkpoint header");
    nlohmann::json header = nlohmann::json::parse(header_bytes, nullptr, false);
    require(!header.is_discarded() && header.contains("config") && header.contains("arrays"),
            "model.BadCheckpoint", "checkpoint header is not valid JSON");

    std::vector<char> payload(std::istreambuf_iterator<char>(in), {});

    Checkpoint ck;
    ck.config = config_from_json(header.at("config"));
    validate(ck.config);
    ck.params = zero_params<float>(ck.config);
    auto refs = param_refs(ck.params);
    std::map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < refs.size(); ++i) by_name[refs[i].name] = i;

    std::vector<bool> seen(refs.size(), false);
    for (const auto& entry : header.at("arrays")) {
        std::string name;
        std::vector<int> shape;
        std::string dtype;
        std::uint64_t offset = 0;
        try {
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<int>>();
            dtype = entry.at("dtype").get<std::string>();
            offset = entry.at("offset").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            fail("model.BadCheckpoint", std::string("malformed array entry: ") + e.what());
        }
        auto it = by_name.find(name);
        require(it != by_name.end(), "model.BadCheckpoint", "unexpected array " + name);
        auto& ref = refs[it->second];
        require(!seen[it->second], "model.BadCheckpoint", "duplicate array " + name);
        require(shape == ref.shape, "model.BadCheckpoint", "shape mismatch for " + name);
        require(dtype == "f32", "model.BadCheckpoint", "unsupported dtype for " + name);
        const std::uint64_t bytes = ref.numel * sizeof(float);
        require(offset + bytes <= payload.size(), "model.BadCheckpoint",
                "payload too short for " + name);
        std::memcpy(ref.data, payload.data() + offset, bytes);
        seen[it->second] = true;
    }
    for (std::size_t i = 0; i < refs.size(); ++i)
        require(seen[i], "model.BadCheckpoint", "missing array " + refs[i].name);
    return ck;
}

}  // namespace pulsebench::model
