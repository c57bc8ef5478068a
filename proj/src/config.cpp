#include "notesim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "notesim/presets.hpp"

namespace notesim {

namespace {

// Reads typed keys from one JSON object, collecting every problem instead of
// stopping at the first.
class KeyReader {
public:
    KeyReader(const Json& obj, std::string prefix, std::vector<std::string>& errors)
        : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

    void number(const char* key, double& out) {
        const auto* v = find(key);
        if (!v) return;
        if (!v->is_number()) return fail(key, "must be a number");
        out = v->get<double>();
    }

    void integer(const char* key, std::int64_t& out) {
        const auto* v = find(key);
        if (!v) return;
        if (v->is_number_integer()) {
            out = v->get<std::int64_t>();
        } else if (v->is_number_float() && std::floor(v->get<double>()) == v->get<double>()) {
            out = static_cast<std::int64_t>(v->get<double>());
        } else {
            fail(key, "must be an integer");
        }
    }

    void seed(const char* key, std::uint64_t& out) {
        std::int64_t tmp = static_cast<std::int64_t>(out);
        const auto before = errors_.size();
        integer(key, tmp);
        if (errors_.size() == before && tmp < 0) return fail(key, "must be >= 0");
        out = static_cast<std::uint64_t>(tmp);
    }

    void boolean(const char* key, bool& out) {
        const auto* v = find(key);
        if (!v) return;
        if (!v->is_boolean()) return fail(key, "must be true or false");
        out = v->get<bool>();
    }

    void string(const char* key, std::string& out) {
        const auto* v = find(key);
        if (!v) return;
        if (!v->is_string()) return fail(key, "must be a string");
        out = v->get<std::string>();
    }

    template <class Fn>
    void custom(const char* key, Fn&& fn) {
        const auto* v = find(key);
        if (!v) return;
        try {
            fn(*v);
        } catch (const std::exception& e) {
            fail(key, e.what());
        }
    }

    void ignore(const char* key) { seen_.insert(key); }

    void finish() {
        if (!obj_.is_object()) return;
        for (const auto& [k, _] : obj_.items())
            if (!seen_.contains(k)) errors_.push_back(prefix_ + k + ": unknown key");
    }

private:
    const Json* find(const char* key) {
        seen_.insert(key);
        if (!obj_.is_object()) return nullptr;
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }
    void fail(const char* key, const std::string& what) { errors_.push_back(prefix_ + key + ": " + what); }

    const Json& obj_;
    std::string prefix_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

const Json& section(const Json& doc, const char* name, std::vector<std::string>& errors) {
    static const Json empty = Json::object();
    const auto it = doc.find(name);
    if (it == doc.end()) return empty;
    if (!it->is_object()) {
        errors.push_back(std::string(name) + ": must be a table");
        return empty;
    }
    return *it;
}

std::string join_errors(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) out += "  " + e + "\n";
    return out;
}

void collect(std::vector<std::string>& errors, auto&& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);  // headline
        while (std::getline(lines, line))
            if (!line.empty()) errors.push_back(line.substr(line.find_first_not_of(' ')));
    }
}

std::filesystem::path resolve_data_path(const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative()) {
        if (const char* dir = std::getenv("NOTESIM_DATA_DIR"); dir && *dir) return std::filesystem::path(dir) / path;
    }
    return path;
}

}  // namespace

namespace {

void validation_errors(const ScenarioConfig& cfg, std::vector<std::string>& errors) {
    const auto& population = cfg.population;
    const auto& adversary = cfg.adversary;
    const auto& fit = cfg.fit;
    const auto& global = cfg.global;
    const auto& network = cfg.network;
    const auto n_replicates = cfg.n_replicates;
    const auto n_replicates_full = cfg.n_replicates_full;
    collect(errors, [&] { population.validate(); });
    collect(errors, [&] { adversary.validate(); });
    collect(errors, [&] { fit.validate(); });
    if (!(global.gamma >= 0.0)) errors.push_back("global.gamma must be >= 0");
    if (!std::isfinite(global.mu)) errors.push_back("global.mu must be finite");
    if (n_replicates < 1) errors.push_back("n_replicates must be >= 1");
    if (n_replicates_full < 1) errors.push_back("n_replicates_full must be >= 1");
    if (!(network.homophily_p >= 0.0 && network.homophily_p <= 1.0))
        errors.push_back("network.homophily_p must lie in [0, 1]");
    if (network.n_pair_swaps < 0) errors.push_back("network.n_pair_swaps must be >= 0");
    if (network.source == GraphSource::Empirical &&
        (network.note_degree_file.empty() || network.rater_degree_file.empty()))
        errors.push_back("network.note_degree_file and network.rater_degree_file are required for source 'empirical'");
    if (network.source == GraphSource::Complete &&
        population.n_raters * population.n_notes > std::int64_t{200'000'000})
        errors.push_back("population: complete graph is too large");
}

}  // namespace

void ScenarioConfig::validate() const {
    std::vector<std::string> errors;
    validation_errors(*this, errors);
    if (!errors.empty()) throw ConfigError("invalid scenario '" + name + "':\n" + join_errors(errors));
}

Json parse_toml_text(const std::string& text, const std::string& origin) {
    toml::table table;
    try {
        table = toml::parse(text, origin);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
        throw ConfigError(os.str());
    }
    std::ostringstream os;
    os << toml::json_formatter{table};
    return Json::parse(os.str());
}

Json load_document_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json") {
        try {
            return Json::parse(buf.str());
        } catch (const Json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    return parse_toml_text(buf.str(), path.string());
}

Json resolve_inheritance(const Json& doc) {
    if (!doc.is_object() || !doc.contains("base")) return doc;
    if (!doc["base"].is_string()) throw ConfigError("base: must be a preset name");
    Json merged = resolve_inheritance(preset_raw(doc["base"].get<std::string>()));
    for (const char* k : {"name", "description"}) merged.erase(k);
    Json patch = doc;
    patch.erase("base");
    merged.merge_patch(patch);
    return merged;
}

ScenarioConfig scenario_from_json(const Json& doc) {
    ScenarioConfig cfg;
    std::vector<std::string> errors;
    if (!doc.is_object()) throw ConfigError("scenario document must be a table");

    KeyReader top(doc, "", errors);
    top.string("name", cfg.name);
    top.string("description", cfg.description);
    top.integer("n_replicates", cfg.n_replicates);
    top.integer("n_replicates_full", cfg.n_replicates_full);
    top.seed("base_seed", cfg.base_seed);
    top.boolean("filter_enabled", cfg.filter_enabled);
    for (const char* k : {"global", "population", "network", "adversary", "fit", "filter", "sweep", "threshold", "calibrate",
                          "max_points", "base"})
        top.ignore(k);
    top.finish();

    {
        KeyReader r(section(doc, "global", errors), "global.", errors);
        r.number("mu", cfg.global.mu);
        r.number("gamma", cfg.global.gamma);
        r.finish();
    }
    {
        auto& p = cfg.population;
        KeyReader r(section(doc, "population", errors), "population.", errors);
        r.number("mu_I_u", p.mu_I_u);
        r.number("mu_I_n", p.mu_I_n);
        r.number("sigma_I_u", p.sigma_I_u);
        r.number("sigma_I_n", p.sigma_I_n);
        r.number("mu_plus_u", p.mu_plus_u);
        r.number("mu_minus_u", p.mu_minus_u);
        r.number("mu_plus_n", p.mu_plus_n);
        r.number("mu_minus_n", p.mu_minus_n);
        r.number("sigma_plus_u", p.sigma_plus_u);
        r.number("sigma_minus_u", p.sigma_minus_u);
        r.number("sigma_plus_n", p.sigma_plus_n);
        r.number("sigma_minus_n", p.sigma_minus_n);
        r.integer("n_raters", p.n_raters);
        r.integer("n_notes", p.n_notes);
        r.finish();
    }
    {
        auto& n = cfg.network;
        KeyReader r(section(doc, "network", errors), "network.", errors);
        r.custom("source", [&](const Json& v) {
            const auto s = v.get<std::string>();
            if (s == "synthetic") n.source = GraphSource::Synthetic;
            else if (s == "empirical") n.source = GraphSource::Empirical;
            else if (s == "complete") n.source = GraphSource::Complete;
            else throw ConfigError("must be 'synthetic', 'empirical' or 'complete'");
        });
        r.string("note_degree_file", n.note_degree_file);
        r.string("rater_degree_file", n.rater_degree_file);
        r.integer("target_edges", n.target_edges);
        r.number("alpha_notes", n.synth.alpha_notes);
        r.number("alpha_raters", n.synth.alpha_raters);
        r.integer("max_note_degree", n.synth.max_note_deg);
        r.integer("min_note_degree", n.synth.min_note_deg);
        r.integer("min_rater_degree", n.synth.min_rater_deg);
        r.boolean("forced_uniform", n.synth.forced_uniform);
        r.integer("n_pair_swaps", n.n_pair_swaps);
        r.boolean("top_up", n.top_up);
        r.number("homophily_p", n.homophily_p);
        r.custom("homophily_groups", [&](const Json& v) {
            const auto s = v.get<std::string>();
            if (s == "bias-sign") n.homophily_groups = HomophilyGroups::BiasSign;
            else if (s == "assigned") n.homophily_groups = HomophilyGroups::Assigned;
            else throw ConfigError("must be 'bias-sign' or 'assigned'");
        });
        r.finish();
    }
    {
        auto& a = cfg.adversary;
        KeyReader r(section(doc, "adversary", errors), "adversary.", errors);
        r.number("fraction_bad", a.fraction_bad);
        r.number("behavior_rate", a.behavior_rate);
        r.custom("mode", [&](const Json& v) { a.mode = parse_bad_mode(v.get<std::string>()); });
        r.custom("phi", [&](const Json& v) {
            if (v.is_string() && v.get<std::string>() == "random") {
                cfg.phi_random = true;
            } else if (v.is_number_integer() && (v.get<int>() == 1 || v.get<int>() == -1)) {
                cfg.phi_random = false;
                a.phi = v.get<int>();
            } else {
                throw ConfigError("must be \"random\", 1 or -1");
            }
        });
        r.number("helpful_threshold", a.helpful_threshold);
        r.finish();
    }
    {
        auto& f = cfg.fit;
        KeyReader r(section(doc, "fit", errors), "fit.", errors);
        r.number("lambda_i", f.lambda_i);
        r.number("lambda_f", f.lambda_f);
        r.number("learning_rate", f.learning_rate);
        r.integer("max_epochs", f.max_epochs);
        r.number("tol", f.tol);
        r.number("init_scale", f.init_scale);
        r.custom("regularization", [&](const Json& v) { f.regularization = parse_regularization(v.get<std::string>()); });
        r.custom("mu_penalty", [&](const Json& v) { f.mu_penalty = parse_mu_penalty(v.get<std::string>()); });
        r.custom("optimizer", [&](const Json& v) { f.optimizer = parse_optimizer(v.get<std::string>()); });
        r.finish();
    }
    {
        auto& f = cfg.filter;
        KeyReader r(section(doc, "filter", errors), "filter.", errors);
        r.custom("rule", [&](const Json& v) { f.rule = parse_filter_rule(v.get<std::string>()); });
        r.number("not_helpful_intercept", f.not_helpful_intercept);
        r.number("not_helpful_slope", f.not_helpful_slope);
        r.finish();
    }
    // Value checks run even when keys failed to parse, so one message lists
    // every problem.
    validation_errors(cfg, errors);
    if (!errors.empty()) throw ConfigError("invalid scenario '" + cfg.name + "':\n" + join_errors(errors));

    if (cfg.network.source == GraphSource::Empirical) {
        cfg.network.note_degree_file = resolve_data_path(cfg.network.note_degree_file).string();
        cfg.network.rater_degree_file = resolve_data_path(cfg.network.rater_degree_file).string();
    }
    return cfg;
}

Json scenario_to_json(const ScenarioConfig& cfg) {
    Json j;
    j["name"] = cfg.name;
    j["description"] = cfg.description;
    j["n_replicates"] = cfg.n_replicates;
    j["n_replicates_full"] = cfg.n_replicates_full;
    j["base_seed"] = cfg.base_seed;
    j["filter_enabled"] = cfg.filter_enabled;
    j["global"] = {{"mu", cfg.global.mu}, {"gamma", cfg.global.gamma}};
    const auto& p = cfg.population;
    j["population"] = {{"mu_I_u", p.mu_I_u},           {"mu_I_n", p.mu_I_n},
                       {"sigma_I_u", p.sigma_I_u},     {"sigma_I_n", p.sigma_I_n},
                       {"mu_plus_u", p.mu_plus_u},     {"mu_minus_u", p.mu_minus_u},
                       {"mu_plus_n", p.mu_plus_n},     {"mu_minus_n", p.mu_minus_n},
                       {"sigma_plus_u", p.sigma_plus_u}, {"sigma_minus_u", p.sigma_minus_u},
                       {"sigma_plus_n", p.sigma_plus_n}, {"sigma_minus_n", p.sigma_minus_n},
                       {"n_raters", p.n_raters},       {"n_notes", p.n_notes}};
    const auto& n = cfg.network;
    const char* source = n.source == GraphSource::Synthetic ? "synthetic"
                         : n.source == GraphSource::Empirical ? "empirical"
                                                              : "complete";
    j["network"] = {{"source", source},
                    {"note_degree_file", n.note_degree_file},
                    {"rater_degree_file", n.rater_degree_file},
                    {"target_edges", n.target_edges},
                    {"alpha_notes", n.synth.alpha_notes},
                    {"alpha_raters", n.synth.alpha_raters},
                    {"max_note_degree", n.synth.max_note_deg},
                    {"min_note_degree", n.synth.min_note_deg},
                    {"min_rater_degree", n.synth.min_rater_deg},
                    {"forced_uniform", n.synth.forced_uniform},
                    {"n_pair_swaps", n.n_pair_swaps},
                    {"top_up", n.top_up},
                    {"homophily_p", n.homophily_p},
                    {"homophily_groups", n.homophily_groups == HomophilyGroups::BiasSign ? "bias-sign" : "assigned"}};
    const auto& a = cfg.adversary;
    j["adversary"] = {{"fraction_bad", a.fraction_bad},
                      {"behavior_rate", a.behavior_rate},
                      {"mode", std::string(to_string(a.mode))},
                      {"helpful_threshold", a.helpful_threshold}};
    if (cfg.phi_random) j["adversary"]["phi"] = "random";
    else j["adversary"]["phi"] = a.phi;
    const auto& f = cfg.fit;
    j["fit"] = {{"lambda_i", f.lambda_i},
                {"lambda_f", f.lambda_f},
                {"learning_rate", f.learning_rate},
                {"max_epochs", f.max_epochs},
                {"tol", f.tol},
                {"init_scale", f.init_scale},
                {"regularization", std::string(to_string(f.regularization))},
                {"mu_penalty", std::string(to_string(f.mu_penalty))},
                {"optimizer", std::string(to_string(f.optimizer))}};
    j["filter"] = {{"rule", std::string(to_string(cfg.filter.rule))},
                   {"not_helpful_intercept", cfg.filter.not_helpful_intercept},
                   {"not_helpful_slope", cfg.filter.not_helpful_slope}};
    return j;
}

void apply_override(Json& doc, const std::string& path, const Json& value) {
    if (path == "population.rater_polarization" || path == "population.note_polarization") {
        if (!value.is_number()) throw ConfigError(path + ": value must be a number");
        const double rho = value.get<double>();
        const char* plus = path == "population.rater_polarization" ? "mu_plus_u" : "mu_plus_n";
        const char* minus = path == "population.rater_polarization" ? "mu_minus_u" : "mu_minus_n";
        doc["population"][plus] = rho;
        doc["population"][minus] = -rho;
        return;
    }
    if (path == "network.scale") {
        if (!value.is_number() || !(value.get<double>() > 0.0)) throw ConfigError(path + ": value must be a positive number");
        const double k = value.get<double>();
        const ScenarioConfig defaults;
        auto scale = [&](const char* section, const char* key, std::int64_t fallback) {
            Json& sec = doc[section];
            const auto current = sec.contains(key) ? sec[key].get<std::int64_t>() : fallback;
            sec[key] = static_cast<std::int64_t>(std::llround(static_cast<double>(current) * k));
        };
        scale("population", "n_notes", defaults.population.n_notes);
        scale("population", "n_raters", defaults.population.n_raters);
        scale("network", "target_edges", defaults.network.target_edges);
        return;
    }
    if (path == "network.ingroup_bias") {
        if (!value.is_number()) throw ConfigError(path + ": value must be a number");
        doc["network"]["homophily_p"] = (value.get<double>() + 1.0) / 2.0;
        return;
    }
    Json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("malformed override path '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

ScenarioDocument parse_document(const Json& input) {
    ScenarioDocument out;
    out.raw = resolve_inheritance(input);
    std::vector<std::string> errors;

    if (const auto it = out.raw.find("sweep"); it != out.raw.end()) {
        const auto& axes = it->contains("axes") ? (*it)["axes"] : Json();
        for (const auto& [k, _] : it->items())
            if (k != "axes") errors.push_back("sweep." + k + ": unknown key");
        if (!axes.is_array() || axes.empty()) {
            errors.push_back("sweep.axes: must be a non-empty array of {path, values}");
        } else {
            for (std::size_t k = 0; k < axes.size(); ++k) {
                const auto& a = axes[k];
                const auto where = "sweep.axes[" + std::to_string(k) + "]";
                if (!a.is_object() || !a.contains("path") || !a["path"].is_string() || !a.contains("values") ||
                    !a["values"].is_array() || a["values"].empty()) {
                    errors.push_back(where + ": needs a string 'path' and a non-empty 'values' array");
                    continue;
                }
                out.axes.push_back({a["path"].get<std::string>(), a["values"].get<std::vector<Json>>()});
            }
        }
    }
    if (const auto it = out.raw.find("threshold"); it != out.raw.end()) {
        ThresholdSettings t;
        KeyReader r(*it, "threshold.", errors);
        r.string("metric", t.metric);
        r.number("level", t.level);
        r.number("resolution", t.resolution);
        r.number("scan_min", t.scan_min);
        r.number("scan_max", t.scan_max);
        r.finish();
        if (t.metric != "suppression" && t.metric != "pollution")
            errors.push_back("threshold.metric: must be 'suppression' or 'pollution'");
        if (!(t.resolution > 0.0)) errors.push_back("threshold.resolution: must be > 0");
        if (!(t.scan_min >= 0.0 && t.scan_max <= 1.0 && t.scan_min <= t.scan_max))
            errors.push_back("threshold: need 0 <= scan_min <= scan_max <= 1");
        out.threshold = t;
    }
    if (const auto it = out.raw.find("calibrate"); it != out.raw.end()) {
        CalibrationSettings c;
        KeyReader r(*it, "calibrate.", errors);
        r.integer("n_draws", c.n_draws);
        r.number("epsilon", c.epsilon);
        r.integer("pairs_per_draw", c.pairs_per_draw);
        r.custom("free", [&](const Json& v) { c.free = v.get<std::vector<std::string>>(); });
        r.finish();
        out.calibrate = c;
    }
    if (const auto it = out.raw.find("max_points"); it != out.raw.end()) {
        if (!it->is_number_integer() || it->get<std::int64_t>() < 1) errors.push_back("max_points: must be a positive integer");
        else out.max_points = it->get<std::int64_t>();
    }

    // Scenario key errors are reported together with the document-level ones.
    try {
        out.scenario = scenario_from_json(out.raw);
    } catch (const ConfigError& e) {
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);
        while (std::getline(lines, line))
            if (!line.empty()) errors.push_back(line.substr(line.find_first_not_of(' ')));
        if (errors.empty()) errors.push_back(e.what());
    }
    std::size_t points = 1;
    for (const auto& a : out.axes) points *= a.values.size();
    if (!out.axes.empty() && static_cast<std::int64_t>(points) > out.max_points)
        errors.push_back("sweep: " + std::to_string(points) + " grid points exceed max_points " +
                         std::to_string(out.max_points));
    if (!errors.empty()) {
        const auto name = out.raw.value("name", std::string("document"));
        throw ConfigError("invalid scenario '" + name + "':\n" + join_errors(errors));
    }
    return out;
}

ScenarioDocument load_scenario(const std::string& name_or_path) {
    const std::filesystem::path path(name_or_path);
    const bool looks_like_file = path.has_extension() || name_or_path.find('/') != std::string::npos;
    if (looks_like_file) {
        if (!std::filesystem::exists(path)) throw ConfigError("scenario file not found: " + name_or_path);
        return parse_document(load_document_file(path));
    }
    return parse_document(preset_raw(name_or_path));
}

}  // namespace notesim
