// notesim: command-line entry point.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "notesim/csv.hpp"
#include "notesim/experiments.hpp"
#include "notesim/network.hpp"
#include "notesim/presets.hpp"

namespace fs = std::filesystem;
using namespace notesim;

namespace {

struct CommonArgs {
    std::string scenario;
    std::string scenario_pos;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replicates;
    int jobs = 1;
    bool resume = false;
    bool quiet = false;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("scenario_name", a.scenario_pos, "Preset name or scenario file (same as --scenario)");
    cmd->add_option("--scenario,-s", a.scenario, "Preset name or path to a .toml/.json scenario file");
    cmd->add_option("--out,-o", a.out, "Output directory (default: results/<scenario>)");
    cmd->add_option("--seed", a.seed, "Override the base seed");
    cmd->add_option("--replicates,-r", a.replicates, "Override the number of replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--jobs,-j", a.jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--resume", a.resume, "Skip (point, replicate) pairs listed in an existing sweep.manifest");
    cmd->add_flag("--quiet,-q", a.quiet, "No progress output");
    cmd->add_option("--set", a.sets, "Override a scenario key: path=value (value parsed as JSON when possible)");
}

ScenarioDocument load(const CommonArgs& a) {
    const auto& name = a.scenario.empty() ? a.scenario_pos : a.scenario;
    if (name.empty()) throw ConfigError("no scenario given (use --scenario <preset|file>)");
    auto doc = load_scenario(name);
    if (a.sets.empty()) return doc;
    Json raw = doc.raw;
    for (const auto& s : a.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects path=value, got '" + s + "'");
        const auto text = s.substr(eq + 1);
        Json value;
        try {
            value = Json::parse(text);
        } catch (const Json::parse_error&) {
            value = text;
        }
        apply_override(raw, s.substr(0, eq), value);
    }
    return parse_document(raw);
}

RunOptions options(const CommonArgs& a, const ScenarioDocument& doc) {
    RunOptions o;
    o.out_dir = a.out.empty() ? fs::path("results") / doc.scenario.name : fs::path(a.out);
    o.jobs = a.jobs;
    o.resume = a.resume;
    o.seed = a.seed;
    o.replicates = a.replicates;
    o.quiet = a.quiet;
    return o;
}

void print_summary(const fs::path& summary_path) {
    const auto rows = read_csv(summary_path);
    if (rows.size() < 2) return;
    const auto& header = rows.front();
    auto column = [&](const std::string& name) -> std::ptrdiff_t {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return static_cast<std::ptrdiff_t>(k);
        return -1;
    };
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::cout << "point " << r - 1 << ":";
        for (const char* m : {"suppression", "pollution", "infiltration", "waste", "publication_rate"}) {
            const auto mean = column(std::string(m) + "_mean"), se = column(std::string(m) + "_se");
            const auto& row = rows[r];
            std::cout << "  " << m << "=" << (row[mean].empty() ? "NA" : row[mean]);
            if (!row[se].empty()) std::cout << " (se " << row[se] << ")";
        }
        std::cout << '\n';
    }
}

int run_main(int argc, char** argv) {
    CLI::App app{"Community Notes scoring simulator"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Build degree tables from a ratings TSV");
    std::string ratings, ingest_out;
    std::int64_t min_note = 5, min_rater = 10;
    ingest->add_option("ratings", ratings, "Ratings TSV (needs noteId and raterParticipantId columns)")->required();
    ingest->add_option("--out,-o", ingest_out, "Output directory (default: $NOTESIM_DATA_DIR or .)");
    ingest->add_option("--min-note-degree", min_note, "Drop notes with fewer distinct raters");
    ingest->add_option("--min-rater-degree", min_rater, "Drop raters with fewer distinct notes");

    CommonArgs run_args, sweep_args, thr_args, cal_args;
    auto* run = app.add_subcommand("run", "Run all replicates of one scenario");
    add_common(run, run_args);
    auto* sweep = app.add_subcommand("sweep", "Run every grid point of a sweep");
    add_common(sweep, sweep_args);
    auto* threshold = app.add_subcommand("threshold", "Critical fraction of bad raters per grid point");
    add_common(threshold, thr_args);
    std::string metric;
    std::optional<double> level;
    threshold->add_option("--metric", metric, "suppression or pollution")
        ->check(CLI::IsMember({"suppression", "pollution"}));
    threshold->add_option("--level", level, "Target level of the metric");
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Rejection search for rating-mix parameters");
    add_common(calibrate_cmd, cal_args);
    std::optional<double> draws;
    calibrate_cmd->add_option("--draws", draws, "Number of parameter draws (e.g. 1e5)");

    auto* presets = app.add_subcommand("presets", "Inspect built-in presets");
    presets->require_subcommand(1);
    auto* presets_list = presets->add_subcommand("list", "List presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*ingest) {
        const fs::path out = !ingest_out.empty()                    ? fs::path(ingest_out)
                             : std::getenv("NOTESIM_DATA_DIR") != nullptr ? fs::path(std::getenv("NOTESIM_DATA_DIR"))
                                                                     : fs::path(".");
        IngestStats stats;
        const auto tables = ingest_degree_tables(ratings, min_note, min_rater, &stats);
        fs::create_directories(out);
        write_degree_csv(out / "note_degrees.csv", tables.note_degrees);
        write_degree_csv(out / "rater_degrees.csv", tables.rater_degrees);
        std::cout << "rows: " << stats.rows << " (distinct rater-note pairs: " << stats.distinct_pairs << ")\n"
                  << "notes: " << stats.notes_before << " before filtering, " << tables.note_degrees.size()
                  << " with degree >= " << min_note << "\n"
                  << "raters: " << stats.raters_before << " before filtering, " << tables.rater_degrees.size()
                  << " with degree >= " << min_rater << "\n"
                  << "wrote " << (out / "note_degrees.csv").string() << " and " << (out / "rater_degrees.csv").string()
                  << '\n';
        return 0;
    }
    if (*run) {
        auto doc = load(run_args);
        if (!doc.axes.empty()) {
            std::cerr << "note: '" << doc.scenario.name << "' defines sweep axes; running its base scenario only\n";
            doc.axes.clear();
        }
        auto opts = options(run_args, doc);
        opts.write_fitted = true;
        const auto outcome = run_sweep(doc, opts);
        print_summary(opts.out_dir / "summary.csv");
        std::cout << "results in " << opts.out_dir.string() << '\n';
        return outcome.failed > 0 ? 1 : 0;
    }
    if (*sweep) {
        const auto doc = load(sweep_args);
        const auto opts = options(sweep_args, doc);
        const auto outcome = run_sweep(doc, opts);
        std::cout << outcome.points << " points, " << outcome.tasks << " tasks, " << outcome.executed
                  << " run now, " << outcome.failed << " failed; results in " << opts.out_dir.string() << '\n';
        return outcome.failed > 0 ? 1 : 0;
    }
    if (*threshold) {
        auto doc = load(thr_args);
        if (!doc.threshold) doc.threshold = ThresholdSettings{};
        if (!metric.empty()) doc.threshold->metric = metric;
        if (level) doc.threshold->level = *level;
        const auto opts = options(thr_args, doc);
        run_threshold(doc, opts);
        std::cout << "thresholds in " << (opts.out_dir / "threshold.csv").string() << '\n';
        return 0;
    }
    if (*calibrate_cmd) {
        const auto doc = load(cal_args);
        const auto opts = options(cal_args, doc);
        std::optional<std::int64_t> n;
        if (draws) {
            if (!(*draws >= 0.0)) throw ConfigError("--draws must be >= 0");
            n = static_cast<std::int64_t>(*draws);
        }
        const auto res = run_calibrate(doc, opts, n);
        std::cout << "acceptance rate: " << format_real(res.acceptance_rate()) << " (" << res.accepted.size()
                  << " of " << res.draws << " draws)\n";
        return 0;
    }
    if (*presets_list) {
        for (const auto& p : preset_library()) std::cout << p.name << '\t' << p.kind << '\t' << p.description << '\n';
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const LookupError& e) {
        std::cerr << "lookup error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
