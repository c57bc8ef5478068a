#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

#include "notesim/network.hpp"

using namespace notesim;

namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(NOTESIM_FIXTURE_DIR) / "ratings_small.tsv";

fs::path temp_file(const std::string& name, const std::string& text) {
    const auto dir = fs::temp_directory_path() / "notesim_unit";
    fs::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path;
}

std::vector<std::int64_t> sorted(std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

bool has_duplicates(const RatingGraph& g) {
    std::unordered_set<std::uint64_t> seen;
    for (const auto& e : g.edges()) {
        const auto key = (static_cast<std::uint64_t>(e.rater) << 32) | static_cast<std::uint32_t>(e.note);
        if (!seen.insert(key).second) return true;
    }
    return false;
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<std::int64_t> a, std::vector<std::int64_t> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const auto x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

std::vector<Group> alternating(std::int32_t n) {
    std::vector<Group> g(static_cast<std::size_t>(n));
    for (std::int32_t k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = k % 2 ? Group::Minus : Group::Plus;
    return g;
}

RatingGraph uniform_graph(std::uint64_t seed) {
    SynthDegreeOptions opts;
    opts.forced_uniform = true;
    const auto tables = synth_degree_tables(400, 200, 4000, seed, opts);
    return sample_seed_graph(tables, 400, seed);
}

}  // namespace

TEST_CASE("ingest counts distinct raters and notes") {
    IngestStats stats;
    const auto t = ingest_degree_tables(kFixture, 5, 1, &stats);
    CHECK(t.source == DegreeSource::EmpiricalFile);
    CHECK(sorted(t.note_degrees) == std::vector<std::int64_t>{5});
    CHECK(sorted(t.rater_degrees) == std::vector<std::int64_t>{1, 1, 1, 1, 2});
    CHECK(stats.rows == 6);
    CHECK(stats.notes_before == 2);
    CHECK(stats.raters_before == 5);

    const auto t2 = ingest_degree_tables(kFixture, 5, 2);
    CHECK(sorted(t2.rater_degrees) == std::vector<std::int64_t>{2});
}

TEST_CASE("ingest collapses duplicate rows") {
    const auto path = temp_file("dups.tsv",
                                "raterParticipantId\tnoteId\n"
                                "a\tx\na\tx\nb\tx\nc\tx\nd\tx\ne\tx\ne\tx\n");
    IngestStats stats;
    const auto t = ingest_degree_tables(path, 5, 1, &stats);
    CHECK(stats.rows == 7);
    CHECK(stats.distinct_pairs == 5);
    CHECK(t.note_degrees == std::vector<std::int64_t>{5});
}

TEST_CASE("ingest errors") {
    CHECK_THROWS_AS(ingest_degree_tables(temp_file("nocol.tsv", "noteId\tfoo\nn1\tr1\n")), FormatError);
    CHECK_THROWS_AS(ingest_degree_tables(temp_file("empty.tsv", "")), DataError);
    CHECK_THROWS_AS(ingest_degree_tables(kFixture, 10, 1), DataError);
    CHECK_THROWS_AS(ingest_degree_tables("/nonexistent/ratings.tsv"), DataError);
}

TEST_CASE("degree csv round trip") {
    const auto dir = fs::temp_directory_path() / "notesim_unit";
    fs::create_directories(dir);
    const std::vector<std::int64_t> d{7, 5, 5, 12, 5, 7};
    write_degree_csv(dir / "deg.csv", d);
    CHECK(sorted(read_degree_csv(dir / "deg.csv")) == sorted(d));
    std::ifstream in(dir / "deg.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "degree,count");
}

TEST_CASE("forced-uniform synthetic degrees") {
    SynthDegreeOptions opts;
    opts.forced_uniform = true;
    const auto t = synth_degree_tables(4, 2, 20, 1, opts);
    CHECK(t.note_degrees == std::vector<std::int64_t>{5, 5, 5, 5});
    CHECK(t.rater_degrees == std::vector<std::int64_t>{10, 10});
}

TEST_CASE("synthetic degree totals balance and respect the floors") {
    const auto t = synth_degree_tables(2000, 1000, 180000, 3);
    std::int64_t sn = 0, sr = 0;
    for (auto d : t.note_degrees) {
        sn += d;
        REQUIRE(d >= 5);
    }
    for (auto d : t.rater_degrees) {
        sr += d;
        REQUIRE(d >= 10);
    }
    CHECK(sn == sr);
    const auto u = synth_degree_tables(2000, 1000, 180000, 3, {0.0});
    std::int64_t su = 0;
    for (auto d : u.note_degrees) su += d;
    CHECK(std::abs(su / 180000.0 - 1.0) < 0.05);
    CHECK_THROWS_AS(synth_degree_tables(100, 100, 10, 1), ConfigError);
}

TEST_CASE("default synthetic tables land near the empirical edge count") {
    const auto t = synth_degree_tables(20000, 10750, 1839726, 5);
    const auto g = sample_seed_graph(t, 20000, 6);
    CHECK(std::abs(static_cast<double>(g.n_edges()) / 1839726.0 - 1.0) < 0.05);
    CHECK_FALSE(has_duplicates(g));
}

TEST_CASE("seed graph from single-valued tables") {
    DegreeTables t;
    t.note_degrees = {5};
    t.rater_degrees = {10};
    // Ten notes: every rater connects to all of them.
    const auto g = sample_seed_graph(t, 10, 1);
    CHECK(g.n_edges() == 50);
    CHECK(g.n_raters() == 5);
    CHECK(g.rater_degrees() == std::vector<std::int64_t>(5, 10));

    // Two notes: a rater can reach at most two distinct notes, so the ten
    // stubs go to five raters truncated to degree 2.
    SeedGraphStats stats;
    const auto small = sample_seed_graph(t, 2, 1, &stats);
    CHECK(small.n_edges() == 10);
    CHECK(small.note_degrees() == std::vector<std::int64_t>{5, 5});
    CHECK(small.rater_degrees() == std::vector<std::int64_t>(5, 2));
    CHECK(stats.truncated_raters == 5);
    CHECK_FALSE(has_duplicates(small));
}

TEST_CASE("seed graph realizes the sampled note degrees") {
    const auto t = synth_degree_tables(20000, 10750, 1839726, 12);
    SeedGraphStats stats;
    const auto g = sample_seed_graph(t, 20000, 13, &stats);
    g.validate();
    CHECK_FALSE(has_duplicates(g));
    const auto nd = g.note_degrees();
    std::int64_t stubs = 0;
    for (auto d : nd) {
        REQUIRE(d >= 5);
        stubs += d;
    }
    std::int64_t placed = 0;
    for (auto d : g.rater_degrees()) placed += d;
    CHECK(stubs == static_cast<std::int64_t>(g.n_edges()));
    CHECK(placed == stubs);
    CHECK(ks_statistic(nd, t.note_degrees) < 0.02);
    CHECK(stats.truncated_raters < g.n_raters() / 100);

    // Same seed, same graph.
    const auto g2 = sample_seed_graph(t, 20000, 13);
    CHECK(g2.n_edges() == g.n_edges());
    bool same = true;
    for (std::size_t k = 0; k < g.n_edges(); ++k)
        same = same && g.edges()[k].rater == g2.edges()[k].rater && g.edges()[k].note == g2.edges()[k].note;
    CHECK(same);
}

TEST_CASE("measure_ingroup_bias examples") {
    const std::vector<Group> raters{Group::Plus, Group::Minus};
    const std::vector<Group> notes{Group::Plus, Group::Minus, Group::Plus, Group::Minus};
    RatingGraph same(2, 4, {{0, 0}, {0, 2}, {1, 1}, {1, 3}});
    CHECK(measure_ingroup_bias(same, raters, notes) == 1.0);
    RatingGraph cross(2, 4, {{0, 1}, {0, 3}, {1, 0}, {1, 2}});
    CHECK(measure_ingroup_bias(cross, raters, notes) == -1.0);
    RatingGraph three(2, 4, {{0, 0}, {0, 2}, {1, 1}, {1, 2}});
    CHECK(measure_ingroup_bias(three, raters, notes) == 0.5);
    CHECK_THROWS_AS(measure_ingroup_bias(RatingGraph(2, 4, {}), raters, notes), DataError);
}

TEST_CASE("graph validation rejects duplicates and bad ids") {
    CHECK_THROWS_AS(RatingGraph(2, 2, {{0, 0}, {0, 0}}).validate(), DataError);
    CHECK_THROWS_AS(RatingGraph(2, 2, {{0, 2}}).validate(), DataError);
    const auto g = complete_graph(3, 4);
    CHECK(g.n_edges() == 12);
    g.validate();
}

TEST_CASE("rewiring preserves degrees and hits the target in-group bias") {
    const auto ng = alternating(400);
    for (double p : {0.0, 0.5, 1.0}) {
        CAPTURE(p);
        auto g = uniform_graph(17);
        const auto rg = alternating(g.n_raters());
        const auto rd = g.rater_degrees();
        const auto nd = g.note_degrees();
        const auto stats = rewire(g, rg, ng, HomophilyTarget{p}, 400000, 99);
        CHECK(g.rater_degrees() == rd);
        CHECK(g.note_degrees() == nd);
        CHECK_FALSE(has_duplicates(g));
        const double eh = measure_ingroup_bias(g, rg, ng);
        CHECK(stats.realized_ingroup_bias == doctest::Approx(eh));
        CHECK(std::abs(eh - (2.0 * p - 1.0)) < 0.02);
    }
}

TEST_CASE("unbiased rewiring averages to zero in-group bias") {
    const auto ng = alternating(400);
    std::vector<double> eh;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto g = uniform_graph(100 + s);
        const auto rg = alternating(g.n_raters());
        eh.push_back(rewire(g, rg, ng, HomophilyTarget{0.5}, 40000, 200 + s).realized_ingroup_bias);
    }
    double mean = 0.0;
    for (double v : eh) mean += v;
    mean /= eh.size();
    double ss = 0.0;
    for (double v : eh) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (eh.size() - 1)) / std::sqrt(double(eh.size()));
    CHECK(std::abs(mean) <= 3.0 * se + 1e-12);
}

TEST_CASE("top-up closes the gap left by unbalanced groups") {
    // Two thirds of the raters are Plus, so swaps alone cannot reach p = 1.
    const auto ng = alternating(400);
    auto g = uniform_graph(5);
    std::vector<Group> rg(static_cast<std::size_t>(g.n_raters()));
    for (std::size_t k = 0; k < rg.size(); ++k) rg[k] = k % 3 ? Group::Plus : Group::Minus;
    const auto rd = g.rater_degrees();
    const double after_swaps = rewire(g, rg, ng, HomophilyTarget{1.0}, 400000, 6).realized_ingroup_bias;
    CHECK(after_swaps < 0.8);
    const auto stats = top_up_ingroup_bias(g, rg, ng, HomophilyTarget{1.0}, 5, 7);
    CHECK(stats.moved > 0);
    CHECK(stats.realized_ingroup_bias > 0.9);
    CHECK(stats.realized_ingroup_bias == doctest::Approx(measure_ingroup_bias(g, rg, ng)));
    CHECK(g.rater_degrees() == rd);
    for (auto d : g.note_degrees()) REQUIRE(d >= 5);
    CHECK_FALSE(has_duplicates(g));

    // Already on target: nothing moves.
    auto h = uniform_graph(5);
    const auto balanced = alternating(h.n_raters());
    rewire(h, balanced, ng, HomophilyTarget{0.5}, 100000, 8);
    const double before = measure_ingroup_bias(h, balanced, ng);
    if (std::abs(before) <= 0.005) CHECK(top_up_ingroup_bias(h, balanced, ng, HomophilyTarget{0.5}, 5, 9).moved == 0);
}
