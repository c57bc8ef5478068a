#pragma once
// Scenario orchestration: one replicate end to end, replicate aggregation,
// grid sweeps with an on-disk manifest, critical-threshold scans and the
// rating-mix calibration search.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "notesim/config.hpp"
#include "notesim/metrics.hpp"

namespace notesim {

struct ReplicateResult {
    std::string scenario;
    std::int64_t replicate = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;

    double nominal_eh = 0.0;
    double realized_eh = 0.0;
    int phi = 1;
    std::int64_t n_raters = 0, n_notes = 0, n_edges = 0;
    std::int64_t raters_plus = 0, raters_minus = 0, notes_plus = 0, notes_minus = 0;
    std::int64_t n_bad = 0, n_removed = 0;
    std::array<double, 3> rating_mix{};  // HELPFUL, SOMEWHAT, NOT HELPFUL
    std::int64_t epochs_phase1 = 0, epochs_phase2 = 0;

    MetricReport overall, targeted, non_targeted;
    double runtime_seconds = 0.0;
};

// Optional heavy outputs of a replicate (fitted parameters, seed graph).
struct ReplicateDetail {
    Population population;
    PipelineResult pipeline;
    std::vector<std::int64_t> seed_note_degrees, seed_rater_degrees;
};

std::uint64_t replicate_seed(std::uint64_t base_seed, std::int64_t index) noexcept;

// Never throws for data-dependent failures: they are returned with ok=false.
// Configuration errors still throw.
ReplicateResult run_replicate(const ScenarioConfig& cfg, std::int64_t index, ReplicateDetail* detail = nullptr);

// Flat metric view of a replicate, used for CSV rows and aggregation.
const std::vector<std::string>& metric_columns();
std::vector<MaybeReal> metric_values(const ReplicateResult& r);

struct Summary {
    MaybeReal mean, stderr_;
    std::int64_t k = 0;          // defined values used
    std::int64_t n_undefined = 0;
};

// Mean over defined values and standard error sd/sqrt(k) with the sample
// standard deviation; k = 1 gives stderr 0.
Summary summarize(const std::vector<MaybeReal>& values);

// Per metric column, over the successful replicates.
std::vector<Summary> aggregate(const std::vector<ReplicateResult>& results);

struct RunOptions {
    std::filesystem::path out_dir;
    int jobs = 1;
    bool resume = false;
    std::optional<std::int64_t> replicates;
    std::optional<std::uint64_t> seed;
    bool write_fitted = false;  // per-replicate fitted-parameter CSVs
    bool quiet = false;
};

struct SweepOutcome {
    std::int64_t points = 0;
    std::int64_t tasks = 0;
    std::int64_t executed = 0;  // tasks run in this invocation
    std::int64_t failed = 0;
};

// Runs every (grid point, replicate) pair and writes
//   results.csv   one row per replicate per point
//   summary.csv   mean / stderr / k per metric per point
//   scenario.json resolved document
//   sweep.manifest completed (point, replicate) pairs
// A document without sweep axes is a one-point grid.
SweepOutcome run_sweep(const ScenarioDocument& doc, const RunOptions& opts);

// Scenario for each grid point, in output order (first axis slowest).
std::vector<std::pair<std::vector<Json>, ScenarioConfig>> expand_grid(const ScenarioDocument& doc);

struct ThresholdScanPoint {
    double fraction_bad = 0.0;
    Summary metric;
};

struct ThresholdResult {
    std::optional<double> threshold;          // smallest scanned value reaching the level
    std::optional<double> bracket_low;        // last scanned value below the level
    std::optional<double> bracket_high;       // == threshold
    std::vector<ThresholdScanPoint> scan;
};

// Ascending scan of fraction_bad. The metric is read in the targeted frame
// for coordinated attackers and overall otherwise. Every scan value reuses
// the same replicate indices.
ThresholdResult critical_threshold(const ScenarioConfig& tmpl, const ThresholdSettings& settings,
                                   std::int64_t replicates, int jobs = 1);

// Writes threshold.csv and threshold_scan.csv, one threshold row per grid point.
void run_threshold(const ScenarioDocument& doc, const RunOptions& opts);

// Free parameters of the calibration search.
struct CalibrationParam {
    std::string name;
    double lo, hi;
};
const std::vector<CalibrationParam>& calibration_params();

struct MixEstimate {
    double p_helpful = 0.0, p_not = 0.0, p_somewhat = 0.0;
    double distance = 0.0;  // squared distance to the empirical mix
};

inline constexpr std::array<double, 3> kEmpiricalMix{0.596, 0.030, 0.374};

// Population-expected rating mix over `pairs` random rater-note pairs.
MixEstimate estimate_mix(const PopulationSpec& spec, const GlobalParams& g, std::int64_t pairs, std::uint64_t seed);

struct CalibrationResult {
    std::vector<std::string> names;                    // free parameters, drawn in this order
    std::vector<std::vector<double>> accepted;         // parameter values per accepted draw
    std::vector<MixEstimate> accepted_mix;
    std::int64_t draws = 0;
    double acceptance_rate() const { return draws ? static_cast<double>(accepted.size()) / draws : 0.0; }
};

// `free` names parameters drawn uniformly within their bounds; the rest keep
// the scenario's values. Empty `free` means all of them.
CalibrationResult calibrate(const ScenarioConfig& base, const CalibrationSettings& settings,
                            const std::vector<std::string>& free, std::uint64_t seed, int jobs = 1);

// Writes calibration_accepted.csv and calibration_histograms.csv.
CalibrationResult run_calibrate(const ScenarioDocument& doc, const RunOptions& opts,
                                std::optional<std::int64_t> draws_override = std::nullopt);

}  // namespace notesim
