#pragma once
// Shared helpers for the long-running scenario checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "notesim/experiments.hpp"
#include "notesim/presets.hpp"

namespace harness {

using namespace notesim;

inline constexpr std::int64_t kReplicates = 5;

struct Batch {
    std::vector<ReplicateResult> runs;

    double mean(const std::string& column) const {
        const auto& cols = metric_columns();
        const auto idx = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), column) - cols.begin());
        if (idx == cols.size()) throw std::logic_error("unknown column " + column);
        std::vector<MaybeReal> v;
        for (const auto& r : runs) v.push_back(metric_values(r)[idx]);
        const auto s = summarize(v);
        return s.mean ? *s.mean : std::nan("");
    }
};

using Overrides = std::vector<std::pair<std::string, Json>>;

inline ScenarioConfig scenario(const std::string& preset, const Overrides& overrides) {
    Json raw = preset_raw(preset);
    raw.erase("sweep");
    raw.erase("threshold");
    raw.erase("calibrate");
    for (const auto& [path, value] : overrides) apply_override(raw, path, value);
    return scenario_from_json(raw);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline Batch run(const std::string& label, const ScenarioConfig& cfg, std::int64_t n = kReplicates) {
    const auto t0 = std::chrono::steady_clock::now();
    Batch b;
    for (std::int64_t k = 0; k < n; ++k) {
        b.runs.push_back(run_replicate(cfg, k));
        if (!b.runs.back().ok) std::cerr << label << " replicate " << k << " failed: " << b.runs.back().error << '\n';
    }
    std::cerr << "  ran " << label << " (" << n << " replicates, " << static_cast<int>(seconds_since(t0)) << " s)\n";
    return b;
}

inline Overrides adversary(const char* mode, double fraction, double rate) {
    return {{"adversary.mode", mode}, {"adversary.fraction_bad", fraction}, {"adversary.behavior_rate", rate}};
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("none"); }

inline bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

class Reporter {
public:
    void operator()(const std::string& name, bool ok, const std::string& detail) {
        if (!ok) ++failures_;
        std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    }
    int finish() const {
        std::cout << (failures_ == 0 ? "all criteria passed" : std::to_string(failures_) + " criteria failed")
                  << std::endl;
        return failures_ == 0 ? 0 : 1;
    }

private:
    int failures_ = 0;
};

inline std::optional<double> coordinated_threshold(double eh, double rho_u, std::int64_t replicates) {
    ThresholdSettings t;
    t.level = 0.9;
    t.resolution = 0.02;
    t.scan_min = 0.02;
    t.scan_max = 0.3;
    const auto cfg = scenario("baseline-main", {{"adversary.mode", "coordinated"},
                                                {"adversary.behavior_rate", 1.0},
                                                {"network.ingroup_bias", eh},
                                                {"population.rater_polarization", rho_u}});
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = critical_threshold(cfg, t, replicates);
    std::cerr << "  threshold E_h=" << eh << " rho_u=" << rho_u << ": " << fmt(r.threshold) << " ("
              << static_cast<int>(seconds_since(t0)) << " s)\n";
    return r.threshold;
}

}  // namespace harness
