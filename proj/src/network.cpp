#include "notesim/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace notesim {

namespace {

std::uint64_t pair_key(std::int32_t rater, std::int32_t note) noexcept {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(rater)) << 32) |
           static_cast<std::uint32_t>(note);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

// Inverse-CDF sampler for a discrete power law P(k) ~ k^-alpha on [lo, hi].
class PowerLawSampler {
public:
    PowerLawSampler(double alpha, std::int64_t lo, std::int64_t hi) : lo_(lo) {
        cdf_.reserve(static_cast<std::size_t>(hi - lo + 1));
        double acc = 0.0;
        for (std::int64_t k = lo; k <= hi; ++k) {
            acc += std::pow(static_cast<double>(k), -alpha);
            cdf_.push_back(acc);
        }
        for (auto& c : cdf_) c /= acc;
    }
    static double mean(double alpha, std::int64_t lo, std::int64_t hi) {
        double z = 0.0, m = 0.0;
        for (std::int64_t k = lo; k <= hi; ++k) {
            const double w = std::pow(static_cast<double>(k), -alpha);
            z += w;
            m += w * static_cast<double>(k);
        }
        return m / z;
    }
    std::int64_t operator()(Xoshiro256& rng) const {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1);
        return lo_ + idx;
    }

private:
    std::int64_t lo_;
    std::vector<double> cdf_;
};

}  // namespace

RatingGraph::RatingGraph(std::int32_t n_raters, std::int32_t n_notes, std::vector<Edge> edges)
    : n_raters_(n_raters), n_notes_(n_notes), edges_(std::move(edges)) {}

std::vector<std::int64_t> RatingGraph::rater_degrees() const {
    std::vector<std::int64_t> deg(static_cast<std::size_t>(n_raters_), 0);
    for (const auto& e : edges_) ++deg[static_cast<std::size_t>(e.rater)];
    return deg;
}

std::vector<std::int64_t> RatingGraph::note_degrees() const {
    std::vector<std::int64_t> deg(static_cast<std::size_t>(n_notes_), 0);
    for (const auto& e : edges_) ++deg[static_cast<std::size_t>(e.note)];
    return deg;
}

void RatingGraph::validate() const {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges_.size() * 2);
    for (const auto& e : edges_) {
        if (e.rater < 0 || e.rater >= n_raters_ || e.note < 0 || e.note >= n_notes_)
            throw DataError("edge endpoint out of range");
        if (!seen.insert(pair_key(e.rater, e.note)).second)
            throw DataError("duplicate edge (rater " + std::to_string(e.rater) + ", note " +
                            std::to_string(e.note) + ")");
    }
}

DegreeTables ingest_degree_tables(const std::filesystem::path& ratings_file, std::int64_t min_note_deg,
                                  std::int64_t min_rater_deg, IngestStats* stats) {
    std::ifstream in(ratings_file);
    if (!in) throw DataError("cannot open ratings file: " + ratings_file.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("ratings file is empty: " + ratings_file.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_tabs(line);
    std::ptrdiff_t note_col = -1, rater_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "noteId") note_col = static_cast<std::ptrdiff_t>(c);
        if (header[c] == "raterParticipantId") rater_col = static_cast<std::ptrdiff_t>(c);
    }
    if (note_col < 0 || rater_col < 0) {
        std::string missing;
        if (note_col < 0) missing += " noteId";
        if (rater_col < 0) missing += " raterParticipantId";
        throw FormatError(ratings_file.string() + ":1: header is missing column(s):" + missing);
    }
    const auto needed = static_cast<std::size_t>(std::max(note_col, rater_col)) + 1;

    std::unordered_map<std::string, std::int32_t> note_ids, rater_ids;
    std::vector<std::uint64_t> pairs;
    std::int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() < needed)
            throw FormatError(ratings_file.string() + ":" + std::to_string(line_no) + ": expected at least " +
                              std::to_string(needed) + " fields, found " + std::to_string(fields.size()));
        const auto note_key = std::string(fields[static_cast<std::size_t>(note_col)]);
        const auto rater_key = std::string(fields[static_cast<std::size_t>(rater_col)]);
        if (note_key.empty() || rater_key.empty())
            throw FormatError(ratings_file.string() + ":" + std::to_string(line_no) + ": empty id field");
        const auto n = note_ids.try_emplace(note_key, static_cast<std::int32_t>(note_ids.size())).first->second;
        const auto r = rater_ids.try_emplace(rater_key, static_cast<std::int32_t>(rater_ids.size())).first->second;
        pairs.push_back(pair_key(r, n));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    std::vector<std::int64_t> note_deg(note_ids.size(), 0), rater_deg(rater_ids.size(), 0);
    for (const auto key : pairs) {
        ++rater_deg[static_cast<std::size_t>(key >> 32)];
        ++note_deg[static_cast<std::size_t>(key & 0xFFFFFFFFULL)];
    }

    if (stats) {
        stats->rows = line_no - 1;
        stats->distinct_pairs = static_cast<std::int64_t>(pairs.size());
        stats->notes_before = static_cast<std::int64_t>(note_deg.size());
        stats->raters_before = static_cast<std::int64_t>(rater_deg.size());
    }

    DegreeTables tables;
    tables.source = DegreeSource::EmpiricalFile;
    for (const auto d : note_deg)
        if (d >= min_note_deg) tables.note_degrees.push_back(d);
    for (const auto d : rater_deg)
        if (d >= min_rater_deg) tables.rater_degrees.push_back(d);
    if (tables.note_degrees.empty() || tables.rater_degrees.empty())
        throw DataError("no degrees left after filtering (min note degree " + std::to_string(min_note_deg) +
                        ", min rater degree " + std::to_string(min_rater_deg) + ")");
    return tables;
}

DegreeTables synth_degree_tables(std::int64_t n_notes, std::int64_t n_raters, std::int64_t target_edges,
                                 std::uint64_t seed, const SynthDegreeOptions& opts) {
    if (n_notes <= 0 || n_raters <= 0) throw ConfigError("synthetic degrees need positive node counts");
    if (target_edges < opts.min_note_deg * n_notes || target_edges < opts.min_rater_deg * n_raters)
        throw ConfigError("target_edges " + std::to_string(target_edges) + " is below the degree floors (" +
                          std::to_string(opts.min_note_deg) + " x notes, " + std::to_string(opts.min_rater_deg) +
                          " x raters)");

    DegreeTables tables;
    tables.source = DegreeSource::Synthetic;
    if (opts.forced_uniform) {
        tables.note_degrees.assign(static_cast<std::size_t>(n_notes), target_edges / n_notes);
        tables.rater_degrees.assign(static_cast<std::size_t>(n_raters), target_edges / n_raters);
        return tables;
    }

    auto rng = make_stream(seed, "network.synth_degrees");
    const auto note_cap = opts.max_note_deg > 0 ? std::min(opts.max_note_deg, n_raters) : n_raters;
    double alpha_notes = opts.alpha_notes;
    if (alpha_notes <= 0.0) {
        // Solve for the exponent whose expected note total is target_edges.
        const double want = static_cast<double>(target_edges) / static_cast<double>(n_notes);
        const auto top = std::max(opts.min_note_deg, note_cap);
        if (want > PowerLawSampler::mean(0.0, opts.min_note_deg, top))
            throw ConfigError("target_edges is above what the note degree cap allows");
        double a_lo = 0.0, a_hi = 10.0;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (a_lo + a_hi);
            (PowerLawSampler::mean(mid, opts.min_note_deg, top) > want ? a_lo : a_hi) = mid;
        }
        alpha_notes = 0.5 * (a_lo + a_hi);
    }
    const PowerLawSampler note_law(alpha_notes, opts.min_note_deg, std::max(opts.min_note_deg, note_cap));
    const PowerLawSampler rater_law(opts.alpha_raters, opts.min_rater_deg, std::max(opts.min_rater_deg, n_notes));
    tables.note_degrees.resize(static_cast<std::size_t>(n_notes));
    for (auto& d : tables.note_degrees) d = note_law(rng);
    std::vector<double> raw(static_cast<std::size_t>(n_raters));
    for (auto& d : raw) d = static_cast<double>(rater_law(rng));

    // Scale rater degrees to the note total, then settle the remainder one
    // stub at a time so both sides sum to the same edge count.
    const auto edges = std::accumulate(tables.note_degrees.begin(), tables.note_degrees.end(), std::int64_t{0});
    const auto max_rater = std::max(opts.min_rater_deg, n_notes);
    auto scaled = [&](double factor) {
        std::vector<std::int64_t> out(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) {
            const auto v = static_cast<std::int64_t>(std::llround(raw[k] * factor));
            out[k] = std::clamp(v, opts.min_rater_deg, max_rater);
        }
        return out;
    };
    auto total = [](const std::vector<std::int64_t>& v) { return std::accumulate(v.begin(), v.end(), std::int64_t{0}); };
    double lo = 0.0, hi = 1.0;
    while (total(scaled(hi)) < edges && hi < 1e9) hi *= 2.0;
    auto best = scaled(hi);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto cand = scaled(mid);
        const auto t = total(cand);
        if (std::llabs(t - edges) < std::llabs(total(best) - edges)) best = cand;
        if (std::llabs(t - edges) <= n_raters) break;
        (t < edges ? lo : hi) = mid;
    }
    auto gap = edges - total(best);
    for (std::size_t guard = 0; gap != 0 && guard < 4 * best.size() + 4; ++guard) {
        auto& d = best[uniform_index(rng, best.size())];
        if (gap > 0 && d < max_rater) {
            ++d;
            --gap;
        } else if (gap < 0 && d > opts.min_rater_deg) {
            --d;
            ++gap;
        }
    }
    tables.rater_degrees = std::move(best);
    return tables;
}

void write_degree_csv(const std::filesystem::path& path, std::span<const std::int64_t> degrees) {
    std::map<std::int64_t, std::int64_t> counts;
    for (const auto d : degrees) ++counts[d];
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "degree,count\n";
    for (const auto& [d, c] : counts) out << d << ',' << c << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::int64_t> read_degree_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open degree file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("degree file is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "degree,count") throw FormatError(path.string() + ":1: expected header 'degree,count'");
    std::vector<std::int64_t> out;
    std::int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::int64_t d = 0, c = 0;
        char comma = 0;
        if (!(ss >> d >> comma >> c) || comma != ',' || d <= 0 || c < 0)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed 'degree,count' row");
        out.insert(out.end(), static_cast<std::size_t>(c), d);
    }
    if (out.empty()) throw DataError("degree file has no entries: " + path.string());
    return out;
}

RatingGraph sample_seed_graph(const DegreeTables& tables, std::int64_t n_notes, std::uint64_t seed,
                              SeedGraphStats* stats) {
    if (tables.note_degrees.empty() || tables.rater_degrees.empty())
        throw DataError("degree tables are empty");
    if (n_notes <= 0) throw ConfigError("n_notes must be positive");

    auto rng = make_stream(seed, "network.seed_graph");
    const auto n = static_cast<std::size_t>(n_notes);
    std::vector<std::int64_t> remaining(n);
    std::vector<std::int32_t> stubs;
    for (std::size_t k = 0; k < n; ++k) {
        remaining[k] = tables.note_degrees[uniform_index(rng, tables.note_degrees.size())];
        stubs.insert(stubs.end(), static_cast<std::size_t>(remaining[k]), static_cast<std::int32_t>(k));
    }
    std::int64_t open_notes = n_notes;

    std::vector<Edge> edges;
    edges.reserve(stubs.size());
    std::vector<std::int32_t> last_user(n, -1);  // dedup marker: last rater connected to each note
    std::int32_t rater = 0;
    SeedGraphStats local;

    auto take_stub = [&](std::size_t idx) {
        const auto note = stubs[idx];
        stubs[idx] = stubs.back();
        stubs.pop_back();
        if (--remaining[static_cast<std::size_t>(note)] == 0) --open_notes;
        last_user[static_cast<std::size_t>(note)] = rater;
        edges.push_back({rater, note, Rating::Unassigned});
    };

    while (!stubs.empty()) {
        const auto drawn = tables.rater_degrees[uniform_index(rng, tables.rater_degrees.size())];
        const auto degree = std::min<std::int64_t>(drawn, open_notes);
        if (degree < drawn) ++local.truncated_raters;

        std::int64_t placed = 0;
        std::int64_t misses = 0;
        // Stub-uniform placement with rejection of repeated notes.
        while (placed < degree && misses < 20 * degree + 100) {
            const auto idx = uniform_index(rng, stubs.size());
            if (last_user[static_cast<std::size_t>(stubs[idx])] == rater) {
                ++misses;
                continue;
            }
            take_stub(idx);
            ++placed;
        }
        if (placed < degree) {
            // Rejection stalled: choose the remaining notes without
            // replacement, weighted by their open stubs (Efraimidis-Spirakis).
            std::vector<std::pair<double, std::int32_t>> keys;
            for (std::size_t k = 0; k < n; ++k) {
                if (remaining[k] > 0 && last_user[k] != rater) {
                    const double u = std::max(uniform01(rng), 1e-300);
                    keys.emplace_back(std::log(u) / static_cast<double>(remaining[k]), static_cast<std::int32_t>(k));
                }
            }
            const auto want = std::min<std::size_t>(static_cast<std::size_t>(degree - placed), keys.size());
            std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(want), keys.end(),
                              [](const auto& a, const auto& b) { return a.first > b.first; });
            for (std::size_t k = 0; k < want; ++k) {
                const auto note = keys[k].second;
                const auto it = std::find(stubs.begin(), stubs.end(), note);
                take_stub(static_cast<std::size_t>(it - stubs.begin()));
                ++placed;
            }
            if (placed < degree) ++local.truncated_raters;
        }
        ++rater;
    }
    if (stats) *stats = local;
    return RatingGraph(rater, static_cast<std::int32_t>(n_notes), std::move(edges));
}

RatingGraph complete_graph(std::int32_t n_raters, std::int32_t n_notes) {
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n_raters) * static_cast<std::size_t>(n_notes));
    for (std::int32_t u = 0; u < n_raters; ++u)
        for (std::int32_t n = 0; n < n_notes; ++n) edges.push_back({u, n, Rating::Unassigned});
    return RatingGraph(n_raters, n_notes, std::move(edges));
}

RewireStats rewire(RatingGraph& graph, std::span<const Group> rater_groups, std::span<const Group> note_groups,
                   HomophilyTarget target, std::int64_t n_pair_swaps, std::uint64_t seed) {
    if (rater_groups.size() != static_cast<std::size_t>(graph.n_raters()) ||
        note_groups.size() != static_cast<std::size_t>(graph.n_notes()))
        throw ConfigError("group maps must cover every rater and note");
    if (!(target.p >= 0.0 && target.p <= 1.0)) throw ConfigError("homophily p must lie in [0, 1]");

    auto edges = graph.edges();
    RewireStats stats;
    stats.attempted = n_pair_swaps;

    // Edge classes: 0 = (+,+), 1 = (+,-), 2 = (-,+), 3 = (-,-) as (rater, note).
    auto cls_of = [&](const Edge& e) {
        return 2 * static_cast<int>(rater_groups[static_cast<std::size_t>(e.rater)] == Group::Minus) +
               static_cast<int>(note_groups[static_cast<std::size_t>(e.note)] == Group::Minus);
    };
    std::array<std::vector<std::uint32_t>, 4> members;
    std::vector<std::uint32_t> slot(edges.size());
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        auto& bucket = members[static_cast<std::size_t>(cls_of(edges[k]))];
        slot[k] = static_cast<std::uint32_t>(bucket.size());
        bucket.push_back(static_cast<std::uint32_t>(k));
        present.insert(pair_key(edges[k].rater, edges[k].note));
    }
    auto move_edge = [&](std::uint32_t e, int from, int to) {
        auto& src = members[static_cast<std::size_t>(from)];
        const auto pos = slot[e];
        src[pos] = src.back();
        slot[src[pos]] = pos;
        src.pop_back();
        auto& dst = members[static_cast<std::size_t>(to)];
        slot[e] = static_cast<std::uint32_t>(dst.size());
        dst.push_back(e);
    };

    const double p = target.p;
    auto rng = make_stream(seed, "network.rewire");
    for (std::int64_t t = 0; t < n_pair_swaps; ++t) {
        const bool up = bernoulli(rng, p);
        // up: (+,-) & (-,+) -> (+,+) & (-,-); down: the reverse.
        const int ca = up ? 1 : 0;
        const int cb = up ? 2 : 3;
        const int da = up ? 0 : 1;
        const int db = up ? 3 : 2;
        auto& A = members[static_cast<std::size_t>(ca)];
        auto& B = members[static_cast<std::size_t>(cb)];
        if (A.empty() || B.empty()) continue;

        double accept = 1.0;
        if (p > 0.0 && p < 1.0) {
            const double weight = up ? p / (1.0 - p) : (1.0 - p) / p;
            const double n_a = static_cast<double>(A.size()), n_b = static_cast<double>(B.size());
            const double m_a = static_cast<double>(members[static_cast<std::size_t>(da)].size()) + 1.0;
            const double m_b = static_cast<double>(members[static_cast<std::size_t>(db)].size()) + 1.0;
            accept = std::min(1.0, weight * n_a * n_b / (m_a * m_b));
        }
        const auto e1 = A[uniform_index(rng, A.size())];
        const auto e2 = B[uniform_index(rng, B.size())];
        const double u = uniform01(rng);
        if (u >= accept) continue;

        auto& x = edges[e1];
        auto& y = edges[e2];
        const auto k1 = pair_key(x.rater, y.note);
        const auto k2 = pair_key(y.rater, x.note);
        if (present.contains(k1) || present.contains(k2)) {
            ++stats.rejected_duplicate;
            continue;
        }
        present.erase(pair_key(x.rater, x.note));
        present.erase(pair_key(y.rater, y.note));
        present.insert(k1);
        present.insert(k2);
        std::swap(x.note, y.note);
        move_edge(e1, ca, da);
        move_edge(e2, cb, db);
        ++stats.accepted;
    }
    stats.realized_ingroup_bias =
        graph.n_edges() == 0 ? 0.0 : measure_ingroup_bias(graph, rater_groups, note_groups);
    return stats;
}

TopUpStats top_up_ingroup_bias(RatingGraph& graph, std::span<const Group> rater_groups,
                               std::span<const Group> note_groups, HomophilyTarget target,
                               std::int64_t min_note_degree, std::uint64_t seed, double tolerance) {
    if (rater_groups.size() != static_cast<std::size_t>(graph.n_raters()) ||
        note_groups.size() != static_cast<std::size_t>(graph.n_notes()))
        throw ConfigError("group maps must cover every rater and note");
    if (!(target.p >= 0.0 && target.p <= 1.0)) throw ConfigError("homophily p must lie in [0, 1]");
    TopUpStats stats;
    auto edges = graph.edges();
    if (edges.empty()) throw DataError("in-group bias is undefined for a graph without edges");

    auto same = [&](const Edge& e) {
        return rater_groups[static_cast<std::size_t>(e.rater)] == note_groups[static_cast<std::size_t>(e.note)];
    };
    const auto n_edges = static_cast<double>(edges.size());
    std::int64_t n_same = 0;
    for (const auto& e : edges) n_same += same(e);
    const double gap = target.p - static_cast<double>(n_same) / n_edges;
    if (std::abs(gap) <= tolerance) {
        stats.realized_ingroup_bias = 2.0 * static_cast<double>(n_same) / n_edges - 1.0;
        return stats;
    }
    // gap > 0: cross edges become same-group; gap < 0: the reverse.
    const bool to_same = gap > 0.0;
    auto need = static_cast<std::int64_t>(std::llround(std::abs(gap) * n_edges));

    auto degree = graph.note_degrees();
    std::array<std::vector<std::int32_t>, 2> stubs;  // note ids repeated by degree, per group
    for (std::size_t n = 0; n < degree.size(); ++n)
        stubs[note_groups[n] == Group::Plus ? 0 : 1].insert(stubs[note_groups[n] == Group::Plus ? 0 : 1].end(),
                                                            static_cast<std::size_t>(degree[n]),
                                                            static_cast<std::int32_t>(n));
    std::unordered_set<std::uint64_t> present;
    present.reserve(edges.size() * 2);
    for (const auto& e : edges) present.insert(pair_key(e.rater, e.note));

    std::vector<std::uint32_t> order;
    for (std::size_t k = 0; k < edges.size(); ++k)
        if (same(edges[k]) != to_same) order.push_back(static_cast<std::uint32_t>(k));
    auto rng = make_stream(seed, "network.top_up");
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);

    for (const auto idx : order) {
        if (need == 0) break;
        auto& e = edges[idx];
        const auto old_note = static_cast<std::size_t>(e.note);
        if (degree[old_note] <= min_note_degree) {
            ++stats.skipped;
            continue;
        }
        const bool rater_plus = rater_groups[static_cast<std::size_t>(e.rater)] == Group::Plus;
        const auto& pool = stubs[(rater_plus == to_same) ? 0 : 1];
        if (pool.empty()) {
            ++stats.skipped;
            continue;
        }
        std::int32_t chosen = -1;
        for (int attempt = 0; attempt < 50 && chosen < 0; ++attempt) {
            const auto cand = pool[uniform_index(rng, pool.size())];
            if (!present.contains(pair_key(e.rater, cand))) chosen = cand;
        }
        if (chosen < 0) {
            ++stats.skipped;
            continue;
        }
        present.erase(pair_key(e.rater, e.note));
        present.insert(pair_key(e.rater, chosen));
        --degree[old_note];
        ++degree[static_cast<std::size_t>(chosen)];
        e.note = chosen;
        ++stats.moved;
        --need;
    }
    stats.realized_ingroup_bias = measure_ingroup_bias(graph, rater_groups, note_groups);
    return stats;
}

double measure_ingroup_bias(const RatingGraph& graph, std::span<const Group> rater_groups,
                            std::span<const Group> note_groups) {
    if (graph.n_edges() == 0) throw DataError("in-group bias is undefined for a graph without edges");
    std::int64_t same = 0;
    for (const auto& e : graph.edges())
        same += rater_groups[static_cast<std::size_t>(e.rater)] == note_groups[static_cast<std::size_t>(e.note)];
    return 2.0 * static_cast<double>(same) / static_cast<double>(graph.n_edges()) - 1.0;
}

}  // namespace notesim
