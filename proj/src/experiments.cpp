#include "notesim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "notesim/csv.hpp"

namespace notesim {

namespace {

namespace fs = std::filesystem;

// Runs fn(k) for k in [0, n) on `jobs` threads. The first exception is
// rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || n <= 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            while (true) {
                const auto k = next.fetch_add(1);
                if (k >= n) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// The seed graph depends only on the network settings and base seed, so all
// replicates of a scenario share it. The most recent one is cached.
std::string graph_key(const ScenarioConfig& cfg) {
    const auto& n = cfg.network;
    std::ostringstream os;
    os << static_cast<int>(n.source) << '|' << n.note_degree_file << '|' << n.rater_degree_file << '|'
       << n.target_edges << '|' << n.synth.alpha_notes << '|' << n.synth.alpha_raters << '|' << n.synth.max_note_deg << '|' << n.synth.min_note_deg
       << '|' << n.synth.min_rater_deg << '|' << n.synth.forced_uniform << '|' << cfg.population.n_notes << '|'
       << cfg.population.n_raters << '|' << cfg.base_seed;
    return os.str();
}

struct SeedGraph {
    RatingGraph graph;
    std::vector<std::int64_t> note_degrees, rater_degrees;
};

std::shared_ptr<const SeedGraph> build_seed_graph(const ScenarioConfig& cfg) {
    auto out = std::make_shared<SeedGraph>();
    const auto& net = cfg.network;
    const auto n_notes = cfg.population.n_notes;
    switch (net.source) {
        case GraphSource::Complete:
            out->graph = complete_graph(static_cast<std::int32_t>(cfg.population.n_raters),
                                        static_cast<std::int32_t>(n_notes));
            break;
        case GraphSource::Empirical: {
            DegreeTables tables;
            tables.source = DegreeSource::EmpiricalFile;
            tables.note_degrees = read_degree_csv(net.note_degree_file);
            tables.rater_degrees = read_degree_csv(net.rater_degree_file);
            out->graph = sample_seed_graph(tables, n_notes, derive_seed(cfg.base_seed, "network.seed_graph"));
            break;
        }
        case GraphSource::Synthetic: {
            const auto tables = synth_degree_tables(n_notes, cfg.population.n_raters, net.target_edges,
                                                    derive_seed(cfg.base_seed, "network.degrees"), net.synth);
            out->graph = sample_seed_graph(tables, n_notes, derive_seed(cfg.base_seed, "network.seed_graph"));
            break;
        }
    }
    out->note_degrees = out->graph.note_degrees();
    out->rater_degrees = out->graph.rater_degrees();
    return out;
}

std::shared_ptr<const SeedGraph> seed_graph(const ScenarioConfig& cfg) {
    static std::mutex mutex;
    static std::string cached_key;
    static std::shared_ptr<const SeedGraph> cached;
    const auto key = graph_key(cfg);
    std::lock_guard lock(mutex);
    if (cached && cached_key == key) return cached;
    cached.reset();
    cached = build_seed_graph(cfg);
    cached_key = key;
    return cached;
}

const std::vector<std::string> kFrameFields = {
    "n_ph",           "n_pbar_h",         "n_p_hbar",          "n_pbar_hbar",       "suppression",
    "pollution",      "infiltration",     "waste",             "publication_rate",  "excess_help_pub",
    "excess_help_unpub", "excess_bias_pub", "excess_bias_unpub", "corr_help",       "corr_bias_abs",
    "corr_bias_signed", "frac_unhelpful_pub", "frac_helpful_unpub", "frac_helpful_pub", "frac_unhelpful_unpub",
};

const std::vector<std::string> kReplicateFields = {
    "realized_Eh",  "rating_mix_H", "rating_mix_SH", "rating_mix_NH", "nominal_Eh",  "phi",
    "n_raters",     "n_notes",      "n_edges",       "raters_plus",   "raters_minus", "notes_plus",
    "notes_minus",  "n_bad",        "n_removed",     "filter_recall", "filter_precision", "epochs_phase1",
    "epochs_phase2",
};

void append_frame(std::vector<MaybeReal>& out, const MetricReport& m) {
    const auto& c = m.counts;
    out.insert(out.end(), {static_cast<double>(c.n_ph), static_cast<double>(c.n_pbar_h),
                           static_cast<double>(c.n_p_hbar), static_cast<double>(c.n_pbar_hbar)});
    out.insert(out.end(), {m.rates.suppression, m.rates.pollution, m.rates.infiltration, m.rates.waste,
                           m.rates.publication_rate});
    out.insert(out.end(), {m.excess.help_pub, m.excess.help_unpub, m.excess.bias_pub, m.excess.bias_unpub});
    out.insert(out.end(), {m.corr.help, m.corr.bias_abs, m.corr.bias_signed});
    for (int k = 0; k < 4; ++k) out.push_back(m.categories ? MaybeReal((*m.categories)[k]) : MaybeReal());
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

std::string axis_cell(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void log_line(bool quiet, const std::string& msg) {
    if (quiet) return;
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::cerr << msg << '\n';
}

void write_fitted(const fs::path& dir, const std::string& stem, const ReplicateDetail& d) {
    fs::create_directories(dir);
    const auto& p = d.pipeline.params;
    {
        CsvWriter w(dir / (stem + "_notes.csv"));
        w.write({"note_id", "i_hat", "f_hat", "status"});
        for (std::size_t n = 0; n < p.i_n_hat.size(); ++n) {
            const bool rated = p.note_rated.empty() || p.note_rated[n];
            w.write({std::to_string(n), rated ? format_real(p.i_n_hat[n]) : "", rated ? format_real(p.f_n_hat[n]) : "",
                     d.pipeline.status[n] == NoteStatus::Published ? "published" : "not_published"});
        }
    }
    {
        std::vector<std::uint8_t> removed(p.i_u_hat.size(), 0);
        for (const auto u : d.pipeline.removed) removed[static_cast<std::size_t>(u)] = 1;
        CsvWriter w(dir / (stem + "_raters.csv"));
        w.write({"rater_id", "i_hat", "f_hat", "removed"});
        for (std::size_t u = 0; u < p.i_u_hat.size(); ++u) {
            const bool rated = p.rater_rated.empty() || p.rater_rated[u];
            w.write({std::to_string(u), rated ? format_real(p.i_u_hat[u]) : "",
                     rated ? format_real(p.f_u_hat[u]) : "", removed[u] ? "1" : "0"});
        }
    }
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t base_seed, std::int64_t index) noexcept {
    return derive_seed(base_seed, "replicate", static_cast<std::uint64_t>(index));
}

ReplicateResult run_replicate(const ScenarioConfig& cfg, std::int64_t index, ReplicateDetail* detail) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    ReplicateResult r;
    r.scenario = cfg.name;
    r.replicate = index;
    r.seed = replicate_seed(cfg.base_seed, index);
    r.nominal_eh = 2.0 * cfg.network.homophily_p - 1.0;
    const auto seed = r.seed;
    try {
        const auto base = seed_graph(cfg);
        RatingGraph graph = base->graph;

        PopulationSpec spec = cfg.population;
        spec.n_raters = graph.n_raters();
        spec.n_notes = graph.n_notes();
        Population pop = sample_population(spec, derive_seed(seed, "population"));

        AdversaryConfig adv = cfg.adversary;
        if (cfg.phi_random) {
            auto rng = make_stream(seed, "adversary.phi");
            adv.phi = bernoulli(rng, 0.5) ? 1 : -1;
        }
        r.phi = adv.phi;
        pop.raters = assign_bad(pop.raters, adv, derive_seed(seed, "adversary"));

        std::vector<Group> rater_groups(pop.raters.size()), note_groups(pop.notes.size());
        const bool by_sign = cfg.network.homophily_groups == HomophilyGroups::BiasSign;
        for (std::size_t u = 0; u < pop.raters.size(); ++u) {
            const auto& x = pop.raters[u];
            rater_groups[u] = by_sign ? (x.f >= 0.0 ? Group::Plus : Group::Minus) : x.group;
            (rater_groups[u] == Group::Plus ? r.raters_plus : r.raters_minus) += 1;
            r.n_bad += x.is_bad ? 1 : 0;
        }
        for (std::size_t n = 0; n < pop.notes.size(); ++n) {
            const auto& x = pop.notes[n];
            note_groups[n] = by_sign ? (x.f >= 0.0 ? Group::Plus : Group::Minus) : x.group;
            (note_groups[n] == Group::Plus ? r.notes_plus : r.notes_minus) += 1;
        }

        if (cfg.network.n_pair_swaps > 0) {
            const auto stats = rewire(graph, rater_groups, note_groups, HomophilyTarget{cfg.network.homophily_p},
                                      cfg.network.n_pair_swaps, derive_seed(seed, "network.rewire"));
            r.realized_eh = stats.realized_ingroup_bias;
            if (cfg.network.top_up)
                r.realized_eh = top_up_ingroup_bias(graph, rater_groups, note_groups,
                                                    HomophilyTarget{cfg.network.homophily_p},
                                                    cfg.network.synth.min_note_deg, derive_seed(seed, "network.top_up"))
                                    .realized_ingroup_bias;
            if (std::abs(r.realized_eh - r.nominal_eh) > 0.05) {
                std::ostringstream os;
                os << "warning: " << cfg.name << " replicate " << index << ": realized in-group bias "
                   << r.realized_eh << " differs from nominal " << r.nominal_eh;
                log_line(false, os.str());
            }
        } else {
            r.realized_eh = measure_ingroup_bias(graph, rater_groups, note_groups);
        }

        std::array<std::int64_t, 3> mix{};
        auto rng = make_stream(seed, "ratings");
        for (auto& e : graph.edges()) {
            const auto probs = effective_probs(cfg.global, pop.raters[static_cast<std::size_t>(e.rater)],
                                               pop.notes[static_cast<std::size_t>(e.note)], adv, rng);
            e.rating = draw_rating(probs, rng);
            ++mix[e.rating == Rating::Helpful ? 0 : e.rating == Rating::Somewhat ? 1 : 2];
        }
        const double total = static_cast<double>(std::max<std::size_t>(graph.n_edges(), 1));
        for (int k = 0; k < 3; ++k) r.rating_mix[k] = static_cast<double>(mix[k]) / total;
        r.n_raters = graph.n_raters();
        r.n_notes = graph.n_notes();
        r.n_edges = static_cast<std::int64_t>(graph.n_edges());

        FitHyper hyper = cfg.fit;
        hyper.seed = derive_seed(seed, "scorer");
        auto pipe = score_pipeline(graph, hyper, cfg.filter_enabled, cfg.filter);
        r.n_removed = static_cast<std::int64_t>(pipe.removed.size());
        r.epochs_phase1 = pipe.phase1.epochs_run;
        r.epochs_phase2 = pipe.fits_performed > 1 ? pipe.params.epochs_run : 0;

        const int phi = adv.phi;
        const NotePredicate targeted = [phi](const NoteProfile& n) { return phi * n.f < 0.0; };
        const NotePredicate non_targeted = [phi](const NoteProfile& n) { return !(phi * n.f < 0.0); };
        r.overall = compute_report(pop.notes, pop.raters, pipe.params, pipe.status, pipe.removed);
        r.targeted = compute_report(pop.notes, pop.raters, pipe.params, pipe.status, pipe.removed, targeted);
        r.non_targeted = compute_report(pop.notes, pop.raters, pipe.params, pipe.status, pipe.removed, non_targeted);

        if (detail) {
            detail->population = std::move(pop);
            detail->pipeline = std::move(pipe);
            detail->seed_note_degrees = base->note_degrees;
            detail->seed_rater_degrees = base->rater_degrees;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
    }
    r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = kReplicateFields;
        for (const char* prefix : {"", "targeted_", "nontargeted_"})
            for (const auto& f : kFrameFields) c.push_back(prefix + f);
        return c;
    }();
    return cols;
}

std::vector<MaybeReal> metric_values(const ReplicateResult& r) {
    std::vector<MaybeReal> v;
    v.reserve(metric_columns().size());
    if (!r.ok) {
        v.assign(metric_columns().size(), std::nullopt);
        return v;
    }
    auto d = [](auto x) { return MaybeReal(static_cast<double>(x)); };
    v.insert(v.end(), {d(r.realized_eh), d(r.rating_mix[0]), d(r.rating_mix[1]), d(r.rating_mix[2]),
                       d(r.nominal_eh), d(r.phi), d(r.n_raters), d(r.n_notes), d(r.n_edges), d(r.raters_plus),
                       d(r.raters_minus), d(r.notes_plus), d(r.notes_minus), d(r.n_bad), d(r.n_removed),
                       r.overall.filter.recall, r.overall.filter.precision, d(r.epochs_phase1),
                       d(r.epochs_phase2)});
    append_frame(v, r.overall);
    append_frame(v, r.targeted);
    append_frame(v, r.non_targeted);
    return v;
}

Summary summarize(const std::vector<MaybeReal>& values) {
    Summary s;
    double sum = 0.0;
    for (const auto& v : values) {
        if (!v) {
            ++s.n_undefined;
            continue;
        }
        sum += *v;
        ++s.k;
    }
    if (s.k == 0) return s;
    const double mean = sum / static_cast<double>(s.k);
    s.mean = mean;
    if (s.k == 1) {
        s.stderr_ = 0.0;
        return s;
    }
    double ss = 0.0;
    for (const auto& v : values)
        if (v) ss += (*v - mean) * (*v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(s.k - 1));
    s.stderr_ = sd / std::sqrt(static_cast<double>(s.k));
    return s;
}

std::vector<Summary> aggregate(const std::vector<ReplicateResult>& results) {
    const auto n_cols = metric_columns().size();
    std::vector<std::vector<MaybeReal>> cols(n_cols);
    for (const auto& r : results) {
        if (!r.ok) continue;
        const auto v = metric_values(r);
        for (std::size_t c = 0; c < n_cols; ++c) cols[c].push_back(v[c]);
    }
    std::vector<Summary> out;
    out.reserve(n_cols);
    for (const auto& c : cols) out.push_back(summarize(c));
    return out;
}

std::vector<std::pair<std::vector<Json>, ScenarioConfig>> expand_grid(const ScenarioDocument& doc) {
    std::vector<std::pair<std::vector<Json>, ScenarioConfig>> out;
    if (doc.axes.empty()) {
        out.emplace_back(std::vector<Json>{}, doc.scenario);
        return out;
    }
    std::vector<std::size_t> idx(doc.axes.size(), 0);
    while (true) {
        Json raw = doc.raw;
        std::vector<Json> values;
        for (std::size_t a = 0; a < doc.axes.size(); ++a) {
            values.push_back(doc.axes[a].values[idx[a]]);
            apply_override(raw, doc.axes[a].path, values.back());
        }
        ScenarioConfig cfg;
        try {
            cfg = scenario_from_json(raw);
        } catch (const ConfigError& e) {
            std::string where;
            for (std::size_t a = 0; a < doc.axes.size(); ++a)
                where += (a ? ", " : "") + doc.axes[a].path + "=" + axis_cell(values[a]);
            throw ConfigError("grid point (" + where + "): " + e.what());
        }
        out.emplace_back(std::move(values), std::move(cfg));
        std::size_t a = doc.axes.size();
        while (a > 0) {
            --a;
            if (++idx[a] < doc.axes[a].values.size()) break;
            idx[a] = 0;
            if (a == 0) return out;
        }
    }
}

SweepOutcome run_sweep(const ScenarioDocument& doc, const RunOptions& opts) {
    auto grid = expand_grid(doc);
    for (auto& [_, cfg] : grid) {
        if (opts.replicates) cfg.n_replicates = *opts.replicates;
        if (opts.seed) cfg.base_seed = *opts.seed;
        cfg.validate();
    }
    const auto reps = grid.front().second.n_replicates;
    const auto& name = grid.front().second.name;
    fs::create_directories(opts.out_dir);

    SweepOutcome outcome;
    outcome.points = static_cast<std::int64_t>(grid.size());
    outcome.tasks = outcome.points * reps;

    Json record;
    record["document"] = doc.raw;
    record["points"] = Json::array();
    for (const auto& [values, cfg] : grid) record["points"].push_back(scenario_to_json(cfg));
    const auto record_text = record.dump(2) + "\n";
    const auto fingerprint = hex64(hash_tag(record_text));
    {
        std::ofstream out(opts.out_dir / "scenario.json", std::ios::binary);
        out << record_text;
    }

    const auto manifest_path = opts.out_dir / "sweep.manifest";
    const auto partial_path = opts.out_dir / "results.partial";
    const std::string manifest_header = "# sweep manifest " + fingerprint;
    std::set<std::int64_t> done;
    std::map<std::int64_t, CsvRow> rows;
    if (opts.resume && fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        std::string line;
        std::getline(in, line);
        if (line != manifest_header)
            throw ConfigError("cannot resume: " + manifest_path.string() + " belongs to a different sweep");
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            done.insert(std::stoll(line.substr(0, comma)) * reps + std::stoll(line.substr(comma + 1)));
        }
        if (fs::exists(partial_path)) {
            for (auto& row : read_csv(partial_path)) {
                if (row.empty()) continue;
                const auto task = std::stoll(row.front());
                row.erase(row.begin());
                rows[task] = std::move(row);
            }
        }
        for (auto it = done.begin(); it != done.end();)
            it = rows.contains(*it) ? std::next(it) : done.erase(it);
    } else {
        std::ofstream(manifest_path, std::ios::binary | std::ios::trunc) << manifest_header << '\n';
        std::ofstream(partial_path, std::ios::binary | std::ios::trunc);
    }

    std::vector<std::int64_t> pending;
    for (std::int64_t t = 0; t < outcome.tasks; ++t)
        if (!done.contains(t)) pending.push_back(t);

    std::vector<std::string> header = {"scenario", "replicate", "seed"};
    for (const auto& a : doc.axes) header.push_back(a.path);
    for (const auto& c : metric_columns()) header.push_back(c);
    header.push_back("status");
    header.push_back("error");

    std::mutex io_mutex;
    std::ofstream manifest(manifest_path, std::ios::binary | std::ios::app);
    std::ofstream partial(partial_path, std::ios::binary | std::ios::app);
    std::atomic<std::int64_t> finished{0}, failed{0};
    parallel_for(pending.size(), opts.jobs, [&](std::size_t k) {
        const auto task = pending[k];
        const auto point = task / reps;
        const auto rep = task % reps;
        const auto& [values, cfg] = grid[static_cast<std::size_t>(point)];
        ReplicateDetail detail;
        const auto res = run_replicate(cfg, rep, opts.write_fitted ? &detail : nullptr);

        CsvRow row = {res.scenario, std::to_string(res.replicate), std::to_string(res.seed)};
        for (const auto& v : values) row.push_back(axis_cell(v));
        for (const auto& v : metric_values(res)) row.push_back(format_real(v));
        row.push_back(res.ok ? "ok" : "error");
        row.push_back(res.error);

        if (opts.write_fitted && res.ok) {
            const auto stem = (grid.size() > 1 ? "point" + std::to_string(point) + "_" : std::string()) + "rep" +
                              std::to_string(rep);
            write_fitted(opts.out_dir / "fitted", stem, detail);
            if (rep == 0) {
                const auto pfx = grid.size() > 1 ? "point" + std::to_string(point) + "_" : std::string();
                write_degree_csv(opts.out_dir / (pfx + "seed_note_degrees.csv"), detail.seed_note_degrees);
                write_degree_csv(opts.out_dir / (pfx + "seed_rater_degrees.csv"), detail.seed_rater_degrees);
            }
        }

        std::lock_guard lock(io_mutex);
        CsvRow tagged = row;
        tagged.insert(tagged.begin(), std::to_string(task));
        partial << csv_line(tagged) << '\n' << std::flush;
        if (res.ok) manifest << point << ',' << rep << '\n' << std::flush;
        else ++failed;
        rows[task] = std::move(row);
        const auto n = ++finished;
        std::ostringstream msg;
        msg << "[" << n << "/" << pending.size() << "] " << name << " point " << point << " replicate " << rep
            << (res.ok ? " ok" : " FAILED: " + res.error) << " (" << res.runtime_seconds << " s)";
        log_line(opts.quiet, msg.str());
    });
    outcome.executed = static_cast<std::int64_t>(pending.size());

    const auto n_metrics = metric_columns().size();
    const auto first_metric = 3 + doc.axes.size();
    {
        CsvWriter results(opts.out_dir / "results.csv");
        results.write(header);
        for (const auto& [task, row] : rows)
            if (task < outcome.tasks) results.write(row);
    }
    {
        CsvWriter summary(opts.out_dir / "summary.csv");
        CsvRow h = {"scenario"};
        for (const auto& a : doc.axes) h.push_back(a.path);
        h.push_back("n_replicates");
        h.push_back("n_failed");
        for (const auto& c : metric_columns()) {
            h.push_back(c + "_mean");
            h.push_back(c + "_se");
            h.push_back(c + "_k");
        }
        summary.write(h);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            std::vector<std::vector<MaybeReal>> cols(n_metrics);
            std::int64_t n_failed = 0, n_rows = 0;
            for (std::int64_t rep = 0; rep < reps; ++rep) {
                const auto it = rows.find(static_cast<std::int64_t>(p) * reps + rep);
                if (it == rows.end()) continue;
                ++n_rows;
                if (it->second[first_metric + n_metrics] != "ok") {
                    ++n_failed;
                    continue;
                }
                for (std::size_t c = 0; c < n_metrics; ++c) cols[c].push_back(parse_real(it->second[first_metric + c]));
            }
            CsvRow row = {name};
            for (const auto& v : grid[p].first) row.push_back(axis_cell(v));
            row.push_back(std::to_string(n_rows));
            row.push_back(std::to_string(n_failed));
            for (const auto& c : cols) {
                const auto s = summarize(c);
                row.push_back(format_real(s.mean));
                row.push_back(format_real(s.stderr_));
                row.push_back(std::to_string(s.k));
            }
            summary.write(row);
            outcome.failed += n_failed;
        }
    }
    return outcome;
}

ThresholdResult critical_threshold(const ScenarioConfig& tmpl, const ThresholdSettings& settings,
                                   std::int64_t replicates, int jobs) {
    if (settings.metric != "suppression" && settings.metric != "pollution")
        throw ConfigError("threshold metric must be 'suppression' or 'pollution'");
    if (!(settings.resolution > 0.0)) throw ConfigError("threshold resolution must be > 0");
    ThresholdResult out;
    const bool targeted = tmpl.adversary.mode == BadMode::Coordinated;
    const auto steps = static_cast<std::int64_t>(std::floor((settings.scan_max - settings.scan_min) / settings.resolution + 1e-9));
    std::optional<double> previous;
    for (std::int64_t s = 0; s <= steps; ++s) {
        const double fraction = std::min(1.0, settings.scan_min + static_cast<double>(s) * settings.resolution);
        ScenarioConfig cfg = tmpl;
        cfg.adversary.fraction_bad = fraction;
        if (cfg.adversary.mode == BadMode::None && fraction > 0.0)
            throw ConfigError("threshold scan needs an adversary mode other than 'none'");
        std::vector<MaybeReal> values(static_cast<std::size_t>(replicates));
        parallel_for(values.size(), jobs, [&](std::size_t k) {
            const auto r = run_replicate(cfg, static_cast<std::int64_t>(k));
            if (!r.ok) return;
            const auto& frame = targeted ? r.targeted : r.overall;
            values[k] = settings.metric == "suppression" ? frame.rates.suppression : frame.rates.pollution;
        });
        const auto summary = summarize(values);
        out.scan.push_back({fraction, summary});
        if (summary.mean && *summary.mean >= settings.level) {
            out.threshold = fraction;
            out.bracket_high = fraction;
            out.bracket_low = previous;
            return out;
        }
        previous = fraction;
    }
    out.bracket_low = previous;
    return out;
}

void run_threshold(const ScenarioDocument& doc, const RunOptions& opts) {
    const auto settings = doc.threshold.value_or(ThresholdSettings{});
    auto grid = expand_grid(doc);
    fs::create_directories(opts.out_dir);
    {
        Json record;
        record["document"] = doc.raw;
        record["threshold"] = {{"metric", settings.metric},
                               {"level", settings.level},
                               {"resolution", settings.resolution},
                               {"scan_min", settings.scan_min},
                               {"scan_max", settings.scan_max}};
        std::ofstream(opts.out_dir / "scenario.json", std::ios::binary) << record.dump(2) << '\n';
    }
    CsvWriter main(opts.out_dir / "threshold.csv");
    CsvWriter scan(opts.out_dir / "threshold_scan.csv");
    CsvRow h = {"scenario"};
    for (const auto& a : doc.axes) h.push_back(a.path);
    CsvRow mh = h, sh = h;
    for (const char* c : {"metric", "level", "resolution", "n_replicates", "threshold", "bracket_low", "bracket_high",
                          "found"})
        mh.push_back(c);
    for (const char* c : {"metric", "fraction_bad", "metric_mean", "metric_se", "metric_k"}) sh.push_back(c);
    main.write(mh);
    scan.write(sh);
    for (auto& [values, cfg] : grid) {
        if (opts.replicates) cfg.n_replicates = *opts.replicates;
        if (opts.seed) cfg.base_seed = *opts.seed;
        const auto res = critical_threshold(cfg, settings, cfg.n_replicates, opts.jobs);
        CsvRow prefix = {cfg.name};
        for (const auto& v : values) prefix.push_back(axis_cell(v));
        CsvRow row = prefix;
        row.insert(row.end(), {settings.metric, format_real(settings.level), format_real(settings.resolution),
                               std::to_string(cfg.n_replicates), format_real(res.threshold),
                               format_real(res.bracket_low), format_real(res.bracket_high),
                               res.threshold ? "1" : "0"});
        main.write(row);
        main.flush();
        for (const auto& p : res.scan) {
            CsvRow s = prefix;
            s.insert(s.end(), {settings.metric, format_real(p.fraction_bad), format_real(p.metric.mean),
                               format_real(p.metric.stderr_), std::to_string(p.metric.k)});
            scan.write(s);
        }
        scan.flush();
        std::ostringstream msg;
        msg << cfg.name;
        for (std::size_t a = 0; a < values.size(); ++a) msg << ' ' << doc.axes[a].path << '=' << axis_cell(values[a]);
        msg << ": " << settings.metric << " threshold "
            << (res.threshold ? format_real(*res.threshold) : std::string("not found"));
        log_line(opts.quiet, msg.str());
    }
}

const std::vector<CalibrationParam>& calibration_params() {
    static const std::vector<CalibrationParam> params = {
        {"mu_I", -1.0, 1.0},       {"sigma_I_u", 0.0, 1.0},  {"sigma_I_n", 0.0, 1.0},
        {"rho_u", 0.0, 1.0},       {"rho_n", 0.0, 1.0},      {"sigma_pm_u", 0.0, 1.0},
        {"sigma_pm_n", 0.0, 1.0},  {"gamma", 0.0, 100.0},
    };
    return params;
}

namespace {

void set_calibration_param(PopulationSpec& spec, GlobalParams& g, const std::string& name, double v) {
    if (name == "mu_I") spec.mu_I_u = spec.mu_I_n = v;
    else if (name == "sigma_I_u") spec.sigma_I_u = v;
    else if (name == "sigma_I_n") spec.sigma_I_n = v;
    else if (name == "rho_u") spec.mu_plus_u = v, spec.mu_minus_u = -v;
    else if (name == "rho_n") spec.mu_plus_n = v, spec.mu_minus_n = -v;
    else if (name == "sigma_pm_u") spec.sigma_plus_u = spec.sigma_minus_u = v;
    else if (name == "sigma_pm_n") spec.sigma_plus_n = spec.sigma_minus_n = v;
    else if (name == "gamma") g.gamma = v;
    else throw ConfigError("unknown calibration parameter '" + name + "'");
}

}  // namespace

MixEstimate estimate_mix(const PopulationSpec& spec, const GlobalParams& g, std::int64_t pairs, std::uint64_t seed) {
    auto rng = make_stream(seed, "calibrate.pairs");
    double sum_h = 0.0, sum_n = 0.0;
    for (std::int64_t k = 0; k < pairs; ++k) {
        RaterProfile r;
        r.i = normal(rng, spec.mu_I_u, spec.sigma_I_u);
        r.f = bernoulli(rng, 0.5) ? normal(rng, spec.mu_plus_u, spec.sigma_plus_u)
                                  : normal(rng, spec.mu_minus_u, spec.sigma_minus_u);
        NoteProfile n;
        n.i = normal(rng, spec.mu_I_n, spec.sigma_I_n);
        n.f = bernoulli(rng, 0.5) ? normal(rng, spec.mu_plus_n, spec.sigma_plus_n)
                                  : normal(rng, spec.mu_minus_n, spec.sigma_minus_n);
        const auto p = honest_probs(g, r, n);
        sum_h += p.p_helpful;
        sum_n += p.p_not;
    }
    MixEstimate m;
    const double denom = static_cast<double>(std::max<std::int64_t>(pairs, 1));
    m.p_helpful = sum_h / denom;
    m.p_not = sum_n / denom;
    m.p_somewhat = 1.0 - m.p_helpful - m.p_not;
    const double dh = m.p_helpful - kEmpiricalMix[0];
    const double ds = m.p_somewhat - kEmpiricalMix[1];
    const double dn = m.p_not - kEmpiricalMix[2];
    m.distance = dh * dh + dn * dn + ds * ds;
    return m;
}

CalibrationResult calibrate(const ScenarioConfig& base, const CalibrationSettings& settings,
                            const std::vector<std::string>& free, std::uint64_t seed, int jobs) {
    if (settings.n_draws < 0) throw ConfigError("calibrate.n_draws must be >= 0");
    if (settings.pairs_per_draw < 1) throw ConfigError("calibrate.pairs_per_draw must be >= 1");
    std::vector<CalibrationParam> drawn;
    for (const auto& p : calibration_params())
        if (free.empty() || std::find(free.begin(), free.end(), p.name) != free.end()) drawn.push_back(p);
    for (const auto& name : free)
        if (std::none_of(drawn.begin(), drawn.end(), [&](const auto& p) { return p.name == name; }))
            throw ConfigError("unknown calibration parameter '" + name + "'");

    CalibrationResult out;
    for (const auto& p : drawn) out.names.push_back(p.name);
    out.draws = settings.n_draws;

    constexpr std::int64_t kChunk = 256;
    const auto n_chunks = static_cast<std::size_t>((settings.n_draws + kChunk - 1) / kChunk);
    std::vector<std::vector<std::vector<double>>> chunk_params(n_chunks);
    std::vector<std::vector<MixEstimate>> chunk_mix(n_chunks);
    parallel_for(n_chunks, jobs, [&](std::size_t c) {
        const auto first = static_cast<std::int64_t>(c) * kChunk;
        const auto last = std::min(settings.n_draws, first + kChunk);
        for (auto d = first; d < last; ++d) {
            auto rng = make_stream(seed, "calibrate.draw", static_cast<std::uint64_t>(d));
            PopulationSpec spec = base.population;
            GlobalParams g = base.global;
            std::vector<double> values;
            for (const auto& p : drawn) {
                values.push_back(p.lo + (p.hi - p.lo) * uniform01(rng));
                set_calibration_param(spec, g, p.name, values.back());
            }
            const auto mix = estimate_mix(spec, g, settings.pairs_per_draw,
                                          derive_seed(seed, "calibrate.mix", static_cast<std::uint64_t>(d)));
            if (mix.distance < settings.epsilon) {
                chunk_params[c].push_back(std::move(values));
                chunk_mix[c].push_back(mix);
            }
        }
    });
    for (std::size_t c = 0; c < n_chunks; ++c) {
        for (auto& v : chunk_params[c]) out.accepted.push_back(std::move(v));
        for (auto& m : chunk_mix[c]) out.accepted_mix.push_back(m);
    }
    return out;
}

CalibrationResult run_calibrate(const ScenarioDocument& doc, const RunOptions& opts,
                                std::optional<std::int64_t> draws_override) {
    auto settings = doc.calibrate.value_or(CalibrationSettings{});
    if (draws_override) settings.n_draws = *draws_override;
    const auto seed = opts.seed.value_or(doc.scenario.base_seed);
    const auto res = calibrate(doc.scenario, settings, settings.free, seed, opts.jobs);
    fs::create_directories(opts.out_dir);
    {
        CsvWriter w(opts.out_dir / "calibration_accepted.csv");
        CsvRow h = res.names;
        h.insert(h.end(), {"p_helpful", "p_somewhat", "p_not", "distance"});
        w.write(h);
        for (std::size_t k = 0; k < res.accepted.size(); ++k) {
            CsvRow row;
            for (const auto v : res.accepted[k]) row.push_back(format_real(v));
            const auto& m = res.accepted_mix[k];
            row.insert(row.end(), {format_real(m.p_helpful), format_real(m.p_somewhat), format_real(m.p_not),
                                   format_real(m.distance)});
            w.write(row);
        }
    }
    {
        constexpr int kBins = 20;
        CsvWriter w(opts.out_dir / "calibration_histograms.csv");
        w.write({"parameter", "bin_low", "bin_high", "count"});
        for (std::size_t p = 0; p < res.names.size(); ++p) {
            const auto& spec = *std::find_if(calibration_params().begin(), calibration_params().end(),
                                             [&](const auto& c) { return c.name == res.names[p]; });
            std::vector<std::int64_t> counts(kBins, 0);
            const double width = (spec.hi - spec.lo) / kBins;
            for (const auto& row : res.accepted) {
                const auto b = std::clamp(static_cast<int>((row[p] - spec.lo) / width), 0, kBins - 1);
                ++counts[static_cast<std::size_t>(b)];
            }
            for (int b = 0; b < kBins; ++b)
                w.write({res.names[p], format_real(spec.lo + b * width), format_real(spec.lo + (b + 1) * width),
                         std::to_string(counts[static_cast<std::size_t>(b)])});
        }
    }
    {
        CsvWriter w(opts.out_dir / "calibration_stats.csv");
        w.write({"draws", "accepted", "acceptance_rate", "epsilon", "pairs_per_draw", "seed"});
        w.write({std::to_string(res.draws), std::to_string(res.accepted.size()), format_real(res.acceptance_rate()),
                 format_real(settings.epsilon), std::to_string(settings.pairs_per_draw), std::to_string(seed)});
    }
    return res;
}

}  // namespace notesim
