// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails. Runs every scenario at desk scale with 5 replicates.

#include <sys/wait.h>

#include <cstdlib>

#include "harness.hpp"

namespace {

using namespace harness;

int run_property_suite() {
    const std::string filter =
        "softmax normalization over a million random draws,"
        "analytic gradient matches central differences,"
        "loss never increases across accepted epochs,"
        "rewiring preserves degrees and hits the target in-group bias,"
        "single-rating fit matches the closed form,"
        "error rates agree with a per-note oracle,"
        "fit is bit-deterministic for a fixed seed,"
        "population is bit-deterministic,"
        "run_replicate is deterministic";
    const std::string cmd = std::string(NOTESIM_UNIT_PATH) + " --minimal \"--test-case=" + filter + "\" 1>&2";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
    Reporter report;
    std::cerr << "acceptance: " << kReplicates << " replicates per condition\n";

    // Baseline on the complete 2000 x 2000 graph.
    {
        const auto b = run("baseline-small", scenario("baseline-small", {}));
        const double s = b.mean("suppression"), p = b.mean("pollution"), w = b.mean("waste"),
                     i = b.mean("infiltration");
        const bool ok = within(s, 0.013, 0.03) && within(p, 0.070, 0.03) && within(w, 0.005, 0.03) &&
                        within(i, 0.027, 0.03);
        report("baseline-small error rates", ok,
               "suppression " + fmt(s) + " (0.013), pollution " + fmt(p) + " (0.070), waste " + fmt(w) +
                   " (0.005), infiltration " + fmt(i) + " (0.027), tolerance 0.03");
    }

    // Honest baseline-main, in the coordinated frame split with no bad raters.
    const auto honest = run("baseline-main honest", scenario("baseline-main", adversary("coordinated", 0.0, 1.0)));
    {
        const double h = honest.mean("rating_mix_H"), s = honest.mean("rating_mix_SH"), n = honest.mean("rating_mix_NH");
        const bool ok = within(h, 0.596, 0.02) && within(s, 0.030, 0.02) && within(n, 0.374, 0.02);
        report("rating mix", ok,
               "H " + fmt(h) + " (0.596), SH " + fmt(s) + " (0.030), NH " + fmt(n) + " (0.374), tolerance 0.02; " +
                   fmt(honest.mean("n_edges")) + " edges, " + fmt(honest.mean("n_raters")) + " raters");
    }
    const double honest_sup = honest.mean("suppression");

    const auto ind25 = run("indiscriminate 0.25 / 1.0", scenario("baseline-main", adversary("indiscriminate", 0.25, 1.0)));
    {
        const double s = ind25.mean("suppression"), p = ind25.mean("pollution");
        report("indiscriminate breakdown at 0.25 / 1.0", s >= 0.95 && p >= 0.95,
               "suppression " + fmt(s) + ", pollution " + fmt(p) + " (both >= 0.95)");
    }
    {
        const auto b = run("indiscriminate 0.05 / 0.5", scenario("baseline-main", adversary("indiscriminate", 0.05, 0.5)));
        const double s = b.mean("suppression");
        report("indiscriminate 0.05 / 0.5 near honest", within(s, honest_sup, 0.15),
               "suppression " + fmt(s) + " vs honest " + fmt(honest_sup) + " (within 0.15)");
    }

    const auto coord = run("coordinated 0.25 / 1.0", scenario("baseline-main", adversary("coordinated", 0.25, 1.0)));
    {
        const double ts = coord.mean("targeted_suppression");
        const double ns = coord.mean("nontargeted_suppression");
        const double hns = honest.mean("nontargeted_suppression");
        const double tp = coord.mean("targeted_publication_rate");
        const double htp = honest.mean("targeted_publication_rate");
        const bool ok = ts >= 0.95 && within(ns, hns, 0.10) && tp <= 0.05 && within(htp, 0.20, 0.10);
        report("coordinated asymmetry", ok,
               "targeted suppression " + fmt(ts) + " (>= 0.95), non-targeted suppression " + fmt(ns) + " vs honest " +
                   fmt(hns) + " (within 0.10), targeted publication " + fmt(tp) + " (<= 0.05) vs honest " +
                   fmt(htp) + " (0.20 +- 0.10)");
    }
    {
        const double hp = coord.mean("targeted_excess_help_pub");
        const double hu = coord.mean("targeted_excess_help_unpub");
        const double np = coord.mean("nontargeted_excess_help_pub");
        const bool ok = within(hp, -0.549, 0.10) && within(hu, 2.35, 0.40) && within(np, -0.078, 0.05);
        report("excess helpfulness table", ok,
               "targeted pub " + fmt(hp) + " (-0.549 +- 0.10), targeted unpub " + fmt(hu) +
                   " (2.35 +- 0.40), non-targeted pub " + fmt(np) + " (-0.078 +- 0.05)");
    }

    {
        const auto b = run("indiscriminate 0.05 / 1.0", scenario("baseline-main", adversary("indiscriminate", 0.05, 1.0)));
        const double low = b.mean("filter_recall"), high = ind25.mean("filter_recall");
        report("filter recall", low >= 0.8 && high <= 0.2,
               "recall " + fmt(low) + " at 0.05 (>= 0.8), " + fmt(high) + " at 0.25 (<= 0.2)");
    }

    {
        const auto aligned = coordinated_threshold(1.0, 1.0, kReplicates);
        const auto neutral = coordinated_threshold(0.0, 0.0, kReplicates);
        const auto in_range = [](const std::optional<double>& v) { return v && *v >= 0.04 - 1e-9 && *v <= 0.25 + 1e-9; };
        const bool ok = aligned && neutral && *aligned < *neutral && in_range(aligned) && in_range(neutral);
        report("threshold ordering", ok,
               "E_h=+1, rho_u=1: " + fmt(aligned) + " < E_h=0, rho_u=0: " + fmt(neutral) + ", both in [0.04, 0.25]");
    }

    {
        const int rc = run_property_suite();
        report("property suite", rc == 0, rc == 0 ? "all property checks passed" : "unit binary exited with " + std::to_string(rc));
    }

    return report.finish();
}
