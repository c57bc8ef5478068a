#pragma once
// Named scenario presets, one per reproduced experiment. The TOML sources live
// in presets/ and are compiled into the library.

#include <map>
#include <string>
#include <vector>

#include "notesim/config.hpp"

namespace notesim {

struct PresetEntry {
    std::string name;
    std::string kind;  // scenario | sweep | threshold | calibrate
    std::string description;
    Json raw;  // inheritance already resolved
};

// Raw TOML text of every embedded preset, keyed by name.
const std::map<std::string, std::string>& embedded_preset_sources();

// Throws LookupError for an unknown name.
const Json& preset_raw(const std::string& name);

std::vector<PresetEntry> preset_library();

}  // namespace notesim
