#include "notesim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace notesim {

namespace {

bool in_subset(const NotePredicate& subset, const NoteProfile& n) { return !subset || subset(n); }

MaybeReal ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

struct MeanAcc {
    double sum = 0.0;
    std::int64_t count = 0;
    void add(double v) {
        sum += v;
        ++count;
    }
    MaybeReal mean() const { return count == 0 ? MaybeReal{} : MaybeReal{sum / static_cast<double>(count)}; }
};

MaybeReal excess(const MeanAcc& realized, const MeanAcc& ideal) {
    const auto h = realized.mean();
    const auto big_h = ideal.mean();
    if (!h || !big_h || *big_h == 0.0) return std::nullopt;
    return *h / *big_h - 1.0;
}

}  // namespace

ConfusionCounts confusion(std::span<const NoteProfile> notes, std::span<const NoteStatus> status,
                          const NotePredicate& subset) {
    ConfusionCounts c;
    for (std::size_t k = 0; k < notes.size(); ++k) {
        if (!in_subset(subset, notes[k])) continue;
        const bool published = status[k] == NoteStatus::Published;
        const bool helpful = truly_helpful(notes[k]);
        if (published && helpful) ++c.n_ph;
        else if (!published && helpful) ++c.n_pbar_h;
        else if (published) ++c.n_p_hbar;
        else ++c.n_pbar_hbar;
    }
    return c;
}

ErrorRates error_rates(const ConfusionCounts& c) {
    ErrorRates r;
    r.suppression = ratio(c.n_pbar_h, c.n_pbar_h + c.n_ph);
    r.pollution = ratio(c.n_p_hbar, c.n_p_hbar + c.n_ph);
    r.infiltration = ratio(c.n_p_hbar, c.n_pbar_hbar + c.n_p_hbar);
    r.waste = ratio(c.n_pbar_h, c.n_pbar_h + c.n_pbar_hbar);
    r.publication_rate = ratio(c.n_p_hbar + c.n_ph, c.total());
    return r;
}

ExcessValues excess_values(std::span<const NoteProfile> notes, std::span<const NoteStatus> status,
                           const NotePredicate& subset) {
    MeanAcc help_pub, help_publishable, help_unpub, help_unpublishable;
    MeanAcc bias_pub, bias_publishable, bias_unpub, bias_unpublishable;
    for (std::size_t k = 0; k < notes.size(); ++k) {
        const auto& n = notes[k];
        if (!in_subset(subset, n)) continue;
        const double abs_f = std::abs(n.f);
        if (status[k] == NoteStatus::Published) {
            help_pub.add(n.i);
            bias_pub.add(abs_f);
        } else {
            help_unpub.add(n.i);
            bias_unpub.add(abs_f);
        }
        if (truly_helpful(n)) {
            help_publishable.add(n.i);
            bias_publishable.add(abs_f);
        } else {
            help_unpublishable.add(n.i);
            bias_unpublishable.add(abs_f);
        }
    }
    return {excess(help_pub, help_publishable), excess(help_unpub, help_unpublishable),
            excess(bias_pub, bias_publishable), excess(bias_unpub, bias_unpublishable)};
}

MaybeReal pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = x[k] - mx, dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlations correlations(std::span<const NoteProfile> notes, std::span<const RaterProfile> raters,
                          const FittedParams& fitted, const NotePredicate& subset) {
    double orientation = 0.0;
    for (std::size_t u = 0; u < raters.size() && u < fitted.f_u_hat.size(); ++u) {
        if (!fitted.rater_rated.empty() && !fitted.rater_rated[u]) continue;
        orientation += raters[u].f * fitted.f_u_hat[u];
    }
    const double sign = orientation < 0.0 ? -1.0 : 1.0;

    std::vector<double> i_true, i_hat, f_true, f_hat, abs_true, abs_hat;
    for (std::size_t k = 0; k < notes.size(); ++k) {
        if (!in_subset(subset, notes[k])) continue;
        if (!fitted.note_rated.empty() && !fitted.note_rated[k]) continue;
        i_true.push_back(notes[k].i);
        i_hat.push_back(fitted.i_n_hat[k]);
        f_true.push_back(notes[k].f);
        f_hat.push_back(sign * fitted.f_n_hat[k]);
        abs_true.push_back(std::abs(notes[k].f));
        abs_hat.push_back(std::abs(fitted.f_n_hat[k]));
    }
    return {pearson(i_true, i_hat), pearson(abs_true, abs_hat), pearson(f_true, f_hat)};
}

FilterEfficacy filter_efficacy(std::span<const std::int32_t> removed, std::span<const std::int32_t> bad) {
    std::vector<std::int32_t> r(removed.begin(), removed.end()), b(bad.begin(), bad.end());
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<std::int32_t> both;
    std::set_intersection(r.begin(), r.end(), b.begin(), b.end(), std::back_inserter(both));
    const auto hits = static_cast<std::int64_t>(both.size());
    return {ratio(hits, static_cast<std::int64_t>(b.size())), ratio(hits, static_cast<std::int64_t>(r.size()))};
}

std::array<double, 4> category_fractions(std::span<const NoteProfile> notes, std::span<const NoteStatus> status,
                                         const NotePredicate& subset) {
    const auto c = confusion(notes, status, subset);
    const auto total = c.total();
    if (total == 0) throw DataError("category fractions need a non-empty note subset");
    const double t = static_cast<double>(total);
    return {static_cast<double>(c.n_p_hbar) / t, static_cast<double>(c.n_pbar_h) / t,
            static_cast<double>(c.n_ph) / t, static_cast<double>(c.n_pbar_hbar) / t};
}

MetricReport compute_report(std::span<const NoteProfile> notes, std::span<const RaterProfile> raters,
                            const FittedParams& fitted, std::span<const NoteStatus> status,
                            std::span<const std::int32_t> removed, const NotePredicate& subset) {
    MetricReport rep;
    rep.counts = confusion(notes, status, subset);
    rep.rates = error_rates(rep.counts);
    rep.excess = excess_values(notes, status, subset);
    rep.corr = correlations(notes, raters, fitted, subset);
    std::vector<std::int32_t> bad;
    for (const auto& r : raters)
        if (r.is_bad) bad.push_back(r.id);
    rep.filter = filter_efficacy(removed, bad);
    if (rep.counts.total() > 0) rep.categories = category_fractions(notes, status, subset);
    return rep;
}

}  // namespace notesim
