// Reference values quoted from the published results that are not part of
// the acceptance list. Same output format as the acceptance run.

#include "harness.hpp"

using namespace harness;

int main() {
    Reporter report;

    const auto honest = run("baseline-main honest", scenario("baseline-main", adversary("coordinated", 0.0, 1.0)));
    {
        const double s = honest.mean("suppression");
        report("honest baseline-main suppression band", s >= 0.30 && s <= 0.45, "suppression " + fmt(s) + " in [0.30, 0.45]");
    }
    {
        // Paired difference of targeted and non-targeted excess helpfulness.
        std::vector<MaybeReal> diff;
        for (const auto& r : honest.runs)
            if (r.targeted.excess.help_pub && r.non_targeted.excess.help_pub)
                diff.push_back(*r.targeted.excess.help_pub - *r.non_targeted.excess.help_pub);
        const auto s = summarize(diff);
        const bool ok = s.mean && s.stderr_ && std::abs(*s.mean) <= 3.0 * *s.stderr_ + 0.02;
        report("no bad raters: targeted and non-targeted excess helpfulness agree", ok,
               "mean difference " + fmt(s.mean) + ", stderr " + fmt(s.stderr_));
    }
    {
        const auto low = run("in-group bias -1", scenario("fig2d", {{"network.ingroup_bias", -1.0}}));
        const auto high = run("in-group bias +1", scenario("fig2d", {{"network.ingroup_bias", 1.0}}));
        const double a = low.mean("suppression"), b = high.mean("suppression");
        report("in-group bias raises suppression", a < b, "E_h=-1: " + fmt(a) + " < E_h=+1: " + fmt(b));
    }
    {
        std::vector<double> sup;
        for (int k = 0; k <= 10; ++k) {
            const double rate = k / 10.0;
            sup.push_back(run("indiscriminate 0.25 / " + fmt(rate),
                              scenario("baseline-main", adversary("indiscriminate", 0.25, rate)), 3)
                              .mean("suppression"));
        }
        double worst = 0.0;
        std::string curve;
        for (std::size_t k = 0; k < sup.size(); ++k) {
            if (k) worst = std::max(worst, sup[k - 1] - sup[k]);
            curve += (k ? " " : "") + fmt(sup[k]);
        }
        report("suppression non-decreasing in behavior rate at 0.25", worst <= 0.02,
               "largest drop " + fmt(worst) + " (<= 0.02); curve " + curve);
    }
    {
        const auto b = run("indiscriminate 0.25 / 1.0", scenario("baseline-main", adversary("indiscriminate", 0.25, 1.0)));
        const double survive = 1.0 - b.mean("filter_recall");
        report("bad raters survive the filter at 0.25 / 1.0", survive >= 0.90,
               "surviving fraction " + fmt(survive) + " (0.95, tolerance 0.05)");
    }
    {
        const auto t = coordinated_threshold(0.0, 0.0, kReplicates);
        report("unpolarized coordinated threshold", t && *t >= 0.15 - 1e-9 && *t <= 0.25 + 1e-9,
               "threshold " + fmt(t) + " in [0.15, 0.25]");
    }
    return report.finish();
}
