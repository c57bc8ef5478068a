#include "notesim/presets.hpp"

namespace notesim {

const Json& preset_raw(const std::string& name) {
    static const std::map<std::string, Json> parsed = [] {
        std::map<std::string, Json> out;
        for (const auto& [key, text] : embedded_preset_sources()) out.emplace(key, parse_toml_text(text, key + ".toml"));
        return out;
    }();
    const auto it = parsed.find(name);
    if (it == parsed.end()) {
        std::string known;
        for (const auto& [key, _] : parsed) known += (known.empty() ? "" : ", ") + key;
        throw LookupError("unknown preset '" + name + "' (available: " + known + ")");
    }
    return it->second;
}

std::vector<PresetEntry> preset_library() {
    std::vector<PresetEntry> out;
    for (const auto& [name, _] : embedded_preset_sources()) {
        PresetEntry e;
        e.name = name;
        e.raw = resolve_inheritance(preset_raw(name));
        e.description = e.raw.value("description", std::string());
        e.kind = e.raw.contains("calibrate") ? "calibrate"
                 : e.raw.contains("threshold") ? "threshold"
                 : e.raw.contains("sweep")     ? "sweep"
                                               : "scenario";
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace notesim
