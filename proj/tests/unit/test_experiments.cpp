#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "notesim/csv.hpp"
#include "notesim/experiments.hpp"
#include "notesim/presets.hpp"

using namespace notesim;

namespace fs = std::filesystem;

namespace {

Json small_doc() {
    return Json::parse(R"({
        "name": "tiny",
        "n_replicates": 2,
        "base_seed": 5,
        "population": {"n_raters": 120, "n_notes": 150, "sigma_I_n": 0.5},
        "network": {"source": "complete", "n_pair_swaps": 0},
        "adversary": {"mode": "none", "fraction_bad": 0.0}
    })");
}

ScenarioConfig small() { return scenario_from_json(small_doc()); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "notesim_unit" / name;
    fs::remove_all(dir);
    return dir;
}

bool same_values(const ReplicateResult& a, const ReplicateResult& b) {
    const auto va = metric_values(a), vb = metric_values(b);
    return va == vb;
}

}  // namespace

TEST_CASE("summarize") {
    auto s = summarize({0.4, 0.6});
    CHECK(*s.mean == doctest::Approx(0.5));
    CHECK(*s.stderr_ == doctest::Approx(0.1));
    CHECK(s.k == 2);
    s = summarize({0.5, std::nullopt});
    CHECK(*s.mean == 0.5);
    CHECK(*s.stderr_ == 0.0);
    CHECK(s.k == 1);
    CHECK(s.n_undefined == 1);
    s = summarize({std::nullopt});
    CHECK_FALSE(s.mean.has_value());
}

TEST_CASE("run_replicate is deterministic") {
    const auto cfg = small();
    const auto a = run_replicate(cfg, 0);
    const auto b = run_replicate(cfg, 0);
    const auto c = run_replicate(cfg, 1);
    REQUIRE(a.ok);
    CHECK(a.seed == replicate_seed(cfg.base_seed, 0));
    CHECK(same_values(a, b));
    CHECK_FALSE(same_values(a, c));
    CHECK(a.n_edges == 120 * 150);
    CHECK(a.rating_mix[0] + a.rating_mix[1] + a.rating_mix[2] == doctest::Approx(1.0));
}

TEST_CASE("phi and an idle adversary change nothing") {
    auto cfg = small();
    cfg.phi_random = false;
    cfg.adversary.phi = 1;
    const auto a = run_replicate(cfg, 0);
    cfg.adversary.phi = -1;
    const auto b = run_replicate(cfg, 0);
    CHECK(metric_values(a)[0] == metric_values(b)[0]);
    CHECK(*a.overall.rates.suppression == *b.overall.rates.suppression);
    CHECK(*a.overall.rates.pollution == *b.overall.rates.pollution);
    CHECK(a.overall.counts == b.overall.counts);

    // Coordinated mode with no bad raters or a zero behavior rate is the honest run.
    auto coord = small();
    coord.adversary.mode = BadMode::Coordinated;
    const auto c = run_replicate(coord, 0);
    CHECK(c.overall.counts == a.overall.counts);
    coord.adversary.fraction_bad = 0.3;
    coord.adversary.behavior_rate = 0.0;
    coord.filter_enabled = false;
    auto honest = small();
    honest.filter_enabled = false;
    CHECK(run_replicate(coord, 0).overall.counts == run_replicate(honest, 0).overall.counts);
}

TEST_CASE("expand_grid puts the first axis outermost") {
    auto raw = small_doc();
    raw["sweep"] = Json::parse(R"({"axes": [
        {"path": "adversary.fraction_bad", "values": [0.0, 0.1]},
        {"path": "adversary.behavior_rate", "values": [0.2, 0.5, 1.0]}]})");
    raw["adversary"]["mode"] = "indiscriminate";
    const auto doc = parse_document(raw);
    const auto grid = expand_grid(doc);
    REQUIRE(grid.size() == 6);
    CHECK(grid[0].second.adversary.fraction_bad == 0.0);
    CHECK(grid[0].second.adversary.behavior_rate == 0.2);
    CHECK(grid[2].second.adversary.behavior_rate == 1.0);
    CHECK(grid[3].second.adversary.fraction_bad == 0.1);
    CHECK(grid[3].second.adversary.behavior_rate == 0.2);
    CHECK(grid[5].first == std::vector<Json>{0.1, 1.0});
}

TEST_CASE("sweep output and resume") {
    auto raw = small_doc();
    raw["population"]["n_raters"] = 60;
    raw["population"]["n_notes"] = 60;
    raw["sweep"] = Json::parse(R"({"axes": [{"path": "population.sigma_I_u", "values": [0.1, 0.3]}]})");
    const auto doc = parse_document(raw);
    RunOptions opts;
    opts.out_dir = fresh_dir("sweep");
    opts.quiet = true;
    const auto first = run_sweep(doc, opts);
    CHECK(first.points == 2);
    CHECK(first.tasks == 4);
    CHECK(first.executed == 4);
    CHECK(first.failed == 0);
    const auto results = read_csv(opts.out_dir / "results.csv");
    REQUIRE(results.size() == 5);
    CHECK(std::find(results[0].begin(), results[0].end(), "population.sigma_I_u") != results[0].end());
    const auto summary = read_csv(opts.out_dir / "summary.csv");
    CHECK(summary.size() == 3);

    std::vector<std::string> before;
    for (const auto* f : {"results.csv", "summary.csv", "scenario.json", "sweep.manifest"})
        before.push_back(slurp(opts.out_dir / f));
    opts.resume = true;
    const auto second = run_sweep(doc, opts);
    CHECK(second.executed == 0);
    std::size_t k = 0;
    for (const auto* f : {"results.csv", "summary.csv", "scenario.json", "sweep.manifest"})
        CHECK(slurp(opts.out_dir / f) == before[k++]);
}

TEST_CASE("threshold at level zero is the scan minimum") {
    auto cfg = small();
    cfg.adversary.mode = BadMode::Indiscriminate;
    ThresholdSettings t;
    t.level = 0.0;
    t.scan_min = 0.05;
    t.scan_max = 0.2;
    t.resolution = 0.05;
    const auto r = critical_threshold(cfg, t, 1);
    REQUIRE(r.threshold.has_value());
    CHECK(*r.threshold == doctest::Approx(0.05));
    CHECK_FALSE(r.bracket_low.has_value());
    CHECK(r.scan.size() == 1);

    t.level = 2.0;  // unreachable
    t.scan_max = 0.1;
    const auto none = critical_threshold(cfg, t, 1);
    CHECK_FALSE(none.threshold.has_value());
    CHECK(none.scan.size() == 2);
}

TEST_CASE("rating mix estimates") {
    PopulationSpec spec;
    const auto m = estimate_mix(spec, GlobalParams{}, 200000, 3);
    CHECK(m.p_helpful + m.p_somewhat + m.p_not == doctest::Approx(1.0));
    CHECK(std::abs(m.p_helpful - 0.596) < 0.02);
    CHECK(std::abs(m.p_not - 0.374) < 0.02);
    // The default calibration point is accepted at the default epsilon.
    CHECK(m.distance < 0.0012);
    spec.sigma_plus_u = spec.sigma_minus_u = spec.sigma_plus_n = spec.sigma_minus_n = 0.25;
    CHECK(estimate_mix(spec, GlobalParams{}, 200000, 3).distance < 0.0012);
}

TEST_CASE("calibration") {
    const auto base = scenario_from_json(Json::object());
    CalibrationSettings loose;
    loose.n_draws = 200;
    loose.epsilon = 3.0;
    loose.pairs_per_draw = 500;
    const auto all = calibrate(base, loose, {}, 1);
    CHECK(all.draws == 200);
    CHECK(all.acceptance_rate() == 1.0);
    CHECK(all.names.size() == calibration_params().size());

    CalibrationSettings tight;
    tight.n_draws = 40000;
    tight.pairs_per_draw = 2000;
    const auto res = calibrate(base, tight, {}, 2);
    REQUIRE(res.accepted.size() >= 20);
    const auto col = std::find(res.names.begin(), res.names.end(), "mu_I") - res.names.begin();
    std::size_t inside = 0;
    for (const auto& row : res.accepted) inside += row[col] >= 0.2 && row[col] <= 0.4;
    MESSAGE("accepted " << res.accepted.size() << ", mu_I in [0.2, 0.4]: " << inside);
    CHECK(static_cast<double>(inside) / res.accepted.size() >= 0.75);

    CHECK_THROWS_AS(calibrate(base, loose, {"nope"}, 1), ConfigError);
}

TEST_CASE("failed replicates are reported, not dropped") {
    auto cfg = small();
    cfg.network.source = GraphSource::Empirical;
    cfg.network.note_degree_file = "/nonexistent/notes.csv";
    cfg.network.rater_degree_file = "/nonexistent/raters.csv";
    const auto r = run_replicate(cfg, 0);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.error.empty());
    const auto values = metric_values(r);
    CHECK(std::all_of(values.begin(), values.end(), [](const MaybeReal& v) { return !v; }));
}
