#include "idl/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "idl/io.hpp"

namespace idl {

void RunManifest::write(const std::filesystem::path& dir) const {
    nlohmann::json j;
    j["command_line"] = command_line;
    j["tool_version"] = kToolVersion;
    j["seed"] = seed;
    j["wall_seconds"] = wall_seconds;
    if (!config_json.empty()) j["config"] = nlohmann::json::parse(config_json);
    j["outputs"] = nlohmann::json::array();
    for (const auto& p : outputs)
        j["outputs"].push_back({{"path", p.filename().string()}, {"digest", file_digest(p)}});
    std::ofstream f(dir / "manifest.json");
    if (!f) throw std::runtime_error("manifest: cannot open " + (dir / "manifest.json").string());
    f << j.dump(2) << '\n';
}

}  // namespace idl
