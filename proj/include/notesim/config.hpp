#pragma once
// Scenario documents: TOML or JSON files describing one experimental
// condition, optionally with sweep axes and a threshold search.
//
// Every document is a scenario at top level. A `base = "<preset>"` key
// inherits from a named preset (JSON merge-patch semantics). Optional tables:
//   [sweep]      axes = [{ path = "adversary.fraction_bad", values = [...] }, ...]
//   [threshold]  metric, level, resolution, scan_min, scan_max
//   [calibrate]  n_draws, epsilon, pairs_per_draw

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "notesim/adversary.hpp"
#include "notesim/network.hpp"
#include "notesim/population.hpp"
#include "notesim/scorer.hpp"

namespace notesim {

using Json = nlohmann::ordered_json;

enum class GraphSource : std::uint8_t { Synthetic, Empirical, Complete };

// Which node labels define "same group" for in-group bias.
enum class HomophilyGroups : std::uint8_t {
    BiasSign,  // f >= 0 vs f < 0
    Assigned,  // the Plus/Minus group drawn with the population
};

struct NetworkConfig {
    GraphSource source = GraphSource::Synthetic;
    std::string note_degree_file;   // degree CSV (empirical source)
    std::string rater_degree_file;  // degree CSV (empirical source)
    std::int64_t target_edges = 1839726;
    SynthDegreeOptions synth;
    std::int64_t n_pair_swaps = 1000000;
    bool top_up = true;  // re-point edges when swaps cannot reach homophily_p
    double homophily_p = 0.5;
    HomophilyGroups homophily_groups = HomophilyGroups::BiasSign;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::string description;
    PopulationSpec population;
    GlobalParams global;
    NetworkConfig network;
    AdversaryConfig adversary{0.0, 1.0, BadMode::None, 1, 0.4};
    bool phi_random = true;
    FitHyper fit;
    bool filter_enabled = true;
    FilterSettings filter;
    std::int64_t n_replicates = 10;
    std::int64_t n_replicates_full = 50;
    std::uint64_t base_seed = 1;

    // Throws ConfigError listing every offending key.
    void validate() const;
};

struct SweepAxis {
    std::string path;
    std::vector<Json> values;
};

struct ThresholdSettings {
    std::string metric = "suppression";
    double level = 0.9;
    double resolution = 0.01;
    double scan_min = 0.0;
    double scan_max = 1.0;
};

struct CalibrationSettings {
    std::int64_t n_draws = 100000;
    double epsilon = 0.0012;
    std::int64_t pairs_per_draw = 10000;
    std::vector<std::string> free;  // drawn parameters; empty means all
};

// A parsed document: the scenario plus the raw JSON it came from (kept so
// sweep axes can be applied as overrides).
struct ScenarioDocument {
    Json raw;
    ScenarioConfig scenario;
    std::vector<SweepAxis> axes;
    std::optional<ThresholdSettings> threshold;
    std::optional<CalibrationSettings> calibrate;
    std::int64_t max_points = 10000;
};

// Reads a .toml or .json file. Missing file -> ConfigError naming the path.
Json load_document_file(const std::filesystem::path& path);
Json parse_toml_text(const std::string& text, const std::string& origin);

// Resolves `base` inheritance against the preset library.
Json resolve_inheritance(const Json& doc);

ScenarioDocument parse_document(const Json& doc);
ScenarioConfig scenario_from_json(const Json& doc);
Json scenario_to_json(const ScenarioConfig& cfg);

// Sets `path` (dot-separated) in a scenario document. Derived paths:
//   population.rater_polarization  -> mu_plus_u = r, mu_minus_u = -r
//   population.note_polarization   -> mu_plus_n = r, mu_minus_n = -r
//   network.ingroup_bias           -> homophily_p = (E_h + 1) / 2
//   network.scale                  -> n_notes, n_raters and target_edges times k
void apply_override(Json& doc, const std::string& path, const Json& value);

// Either a preset name or a file path.
ScenarioDocument load_scenario(const std::string& name_or_path);

}  // namespace notesim
