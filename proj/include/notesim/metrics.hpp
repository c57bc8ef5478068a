#pragma once
// Evaluation of publication decisions against true note parameters.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "notesim/population.hpp"
#include "notesim/scorer.hpp"

namespace notesim {

using NotePredicate = std::function<bool(const NoteProfile&)>;

// Truly helpful (publishable): i_n > 0.4 and |f_n| < 0.5, both strict.
inline bool truly_helpful(const NoteProfile& n) noexcept {
    return n.i > kPublishHelpfulness && std::abs(n.f) < kPublishMaxBias;
}

struct ConfusionCounts {
    std::int64_t n_ph = 0;         // published, helpful
    std::int64_t n_pbar_h = 0;     // unpublished, helpful
    std::int64_t n_p_hbar = 0;     // published, unhelpful
    std::int64_t n_pbar_hbar = 0;  // unpublished, unhelpful

    std::int64_t total() const noexcept { return n_ph + n_pbar_h + n_p_hbar + n_pbar_hbar; }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const NoteProfile> notes, std::span<const NoteStatus> status,
                          const NotePredicate& subset = {});

struct ErrorRates {
    MaybeReal suppression, pollution, infiltration, waste, publication_rate;
};

ErrorRates error_rates(const ConfusionCounts& c);

struct ExcessValues {
    MaybeReal help_pub, help_unpub, bias_pub, bias_unpub;
};

// h/H - 1 with means of i_n (help) or |f_n| (bias) over published vs
// publishable and unpublished vs unpublishable notes.
ExcessValues excess_values(std::span<const NoteProfile> notes, std::span<const NoteStatus> status,
                           const NotePredicate& subset = {});

MaybeReal pearson(std::span<const double> x, std::span<const double> y);

struct Correlations {
    MaybeReal help, bias_abs, bias_signed;
};

// Over notes present in the fit (and in the subset). The signed bias
// correlation first flips the global sign of the fitted biases so that
// sum_u f_u * f_hat_u >= 0.
Correlations correlations(std::span<const NoteProfile> notes, std::span<const RaterProfile> raters,
                          const FittedParams& fitted, const NotePredicate& subset = {});

struct FilterEfficacy {
    MaybeReal recall, precision;
};

FilterEfficacy filter_efficacy(std::span<const std::int32_t> removed, std::span<const std::int32_t> bad);

// (unhelpful & published, helpful & unpublished, helpful & published,
//  unhelpful & unpublished). Throws DataError on an empty subset.
std::array<double, 4> category_fractions(std::span<const NoteProfile> notes, std::span<const NoteStatus> status,
                                         const NotePredicate& subset = {});

struct MetricReport {
    ConfusionCounts counts;
    ErrorRates rates;
    ExcessValues excess;
    Correlations corr;
    FilterEfficacy filter;
    std::optional<std::array<double, 4>> categories;
};

MetricReport compute_report(std::span<const NoteProfile> notes, std::span<const RaterProfile> raters,
                            const FittedParams& fitted, std::span<const NoteStatus> status,
                            std::span<const std::int32_t> removed, const NotePredicate& subset = {});

}  // namespace notesim
