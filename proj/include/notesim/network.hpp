#pragma once
// Bipartite rater-note rating graph: degree ingestion, seed-graph sampling and
// degree-preserving rewiring with tunable in-group bias.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "notesim/rng.hpp"
#include "notesim/types.hpp"

namespace notesim {

enum class DegreeSource : std::uint8_t { EmpiricalFile, Synthetic };

struct DegreeTables {
    std::vector<std::int64_t> note_degrees;
    std::vector<std::int64_t> rater_degrees;
    DegreeSource source = DegreeSource::Synthetic;
};

struct Edge {
    std::int32_t rater = 0;
    std::int32_t note = 0;
    Rating rating = Rating::Unassigned;
};

class RatingGraph {
public:
    RatingGraph() = default;
    RatingGraph(std::int32_t n_raters, std::int32_t n_notes, std::vector<Edge> edges);

    std::int32_t n_raters() const noexcept { return n_raters_; }
    std::int32_t n_notes() const noexcept { return n_notes_; }
    std::size_t n_edges() const noexcept { return edges_.size(); }

    std::span<const Edge> edges() const noexcept { return edges_; }
    std::span<Edge> edges() noexcept { return edges_; }

    std::vector<std::int64_t> rater_degrees() const;
    std::vector<std::int64_t> note_degrees() const;

    // Throws DataError on out-of-range ids or duplicate (rater, note) pairs.
    void validate() const;

private:
    std::int32_t n_raters_ = 0;
    std::int32_t n_notes_ = 0;
    std::vector<Edge> edges_;
};

struct IngestStats {
    std::int64_t rows = 0;
    std::int64_t distinct_pairs = 0;
    std::int64_t notes_before = 0, raters_before = 0;
};

// Public ratings dump (TSV with header; needs `noteId` and
// `raterParticipantId`). Duplicate (rater, note) rows count once. Memory use
// is 8 bytes per distinct pair plus the id dictionaries.
DegreeTables ingest_degree_tables(const std::filesystem::path& ratings_file,
                                  std::int64_t min_note_deg = 5,
                                  std::int64_t min_rater_deg = 10,
                                  IngestStats* stats = nullptr);

// Bounded discrete power laws. The note law alone fixes the edge total; the
// rater table is rescaled to match it. alpha_notes = 0 solves for the
// exponent whose expected total is target_edges.
struct SynthDegreeOptions {
    double alpha_notes = 1.46;
    double alpha_raters = 2.4;
    std::int64_t min_note_deg = 5;
    std::int64_t min_rater_deg = 10;
    std::int64_t max_note_deg = 1500;  // 0: n_raters
    bool forced_uniform = false;
};

DegreeTables synth_degree_tables(std::int64_t n_notes, std::int64_t n_raters,
                                 std::int64_t target_edges, std::uint64_t seed,
                                 const SynthDegreeOptions& opts = {});

// Two-column `degree,count` CSV, ascending degree.
void write_degree_csv(const std::filesystem::path& path, std::span<const std::int64_t> degrees);
std::vector<std::int64_t> read_degree_csv(const std::filesystem::path& path);

struct SeedGraphStats {
    std::int64_t truncated_raters = 0;  // raters placed with fewer edges than drawn
};

RatingGraph sample_seed_graph(const DegreeTables& tables, std::int64_t n_notes, std::uint64_t seed,
                              SeedGraphStats* stats = nullptr);

// Every rater rates every note.
RatingGraph complete_graph(std::int32_t n_raters, std::int32_t n_notes);

struct HomophilyTarget {
    double p = 0.5;  // probability that an edge joins same-group endpoints
    static HomophilyTarget from_ingroup_bias(double e_h) { return {(e_h + 1.0) / 2.0}; }
    double expected_ingroup_bias() const noexcept { return 2.0 * p - 1.0; }
};

struct RewireStats {
    std::int64_t attempted = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected_duplicate = 0;
    double realized_ingroup_bias = 0.0;
};

// Double-edge swaps (exchange the notes of two edges). Each attempt proposes
// a swap that turns two cross-group edges into same-group ones with
// probability p, or the reverse with probability 1-p, and accepts it by a
// Metropolis-Hastings rule whose stationary same-group edge fraction is p for
// balanced groups. Swaps creating a duplicate pair are rejected. Degrees are
// preserved exactly.
RewireStats rewire(RatingGraph& graph, std::span<const Group> rater_groups,
                   std::span<const Group> note_groups, HomophilyTarget target,
                   std::int64_t n_pair_swaps, std::uint64_t seed);

struct TopUpStats {
    std::int64_t moved = 0;
    std::int64_t skipped = 0;  // would push a note below the degree floor, or no free target
    double realized_ingroup_bias = 0.0;
};

// Closes the gap between the realized same-group edge fraction and p when
// swaps alone cannot (unequal group degree totals). Edges of the surplus
// kind are re-pointed, in random order, to a note of the other group drawn
// in proportion to its degree; rater degrees are kept, note degrees change,
// and no note drops below min_note_degree. Does nothing when the gap is
// within `tolerance`.
TopUpStats top_up_ingroup_bias(RatingGraph& graph, std::span<const Group> rater_groups,
                               std::span<const Group> note_groups, HomophilyTarget target,
                               std::int64_t min_note_degree, std::uint64_t seed, double tolerance = 0.005);

// E_h = 2 e_h / E - 1. Throws DataError when the graph has no edges.
double measure_ingroup_bias(const RatingGraph& graph, std::span<const Group> rater_groups,
                            std::span<const Group> note_groups);

}  // namespace notesim
