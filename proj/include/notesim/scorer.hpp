#pragma once
// Matrix-factorization note scorer: rating model
//   r_hat = mu + i_u + i_n + f_u * f_n
// fitted by regularized least squares, the publication rule, and the
// helpfulness filter with a single refit.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "notesim/network.hpp"

namespace notesim {

// How the penalties are weighted against the summed squared error.
//   Normalized: squared error and penalties are both means, i.e.
//     mean (r - r_hat)^2 + lambda_i (mean i_u^2 + mean i_n^2 + mu^2)
//                        + lambda_f (mean f_u^2 + mean f_n^2)
//   Entity: each rated entity is penalized once; MuPenalty decides mu.
enum class Regularization : std::uint8_t { Normalized, Entity };

// Entity mode only: the global intercept's penalty counted once per rating or
// once overall.
enum class MuPenalty : std::uint8_t { PerRating, Once };

enum class Optimizer : std::uint8_t {
    Lbfgs,            // preconditioned L-BFGS with halving line search
    GradientDescent,  // preconditioned full-batch descent with step halving
};

std::string_view to_string(Regularization r) noexcept;
std::string_view to_string(MuPenalty m) noexcept;
std::string_view to_string(Optimizer o) noexcept;
Regularization parse_regularization(std::string_view s);
MuPenalty parse_mu_penalty(std::string_view s);
Optimizer parse_optimizer(std::string_view s);

struct FitHyper {
    double lambda_i = 0.15;
    double lambda_f = 0.03;
    double learning_rate = 0.2;
    std::int64_t max_epochs = 2000;
    double tol = 1e-7;
    double init_scale = 0.05;
    std::uint64_t seed = 0;
    Regularization regularization = Regularization::Normalized;
    MuPenalty mu_penalty = MuPenalty::PerRating;
    Optimizer optimizer = Optimizer::Lbfgs;

    void validate() const;
};

struct FittedParams {
    double mu_hat = 0.0;
    std::vector<double> i_u_hat, f_u_hat;  // indexed by rater id
    std::vector<double> i_n_hat, f_n_hat;  // indexed by note id
    std::vector<std::uint8_t> rater_rated;  // 1 if the rater had a rating in the fit
    std::vector<std::uint8_t> note_rated;
    double final_loss = 0.0;
    std::int64_t epochs_run = 0;
    std::vector<double> loss_history;  // loss after each accepted epoch, starting with the initial loss
};

enum class NoteStatus : std::uint8_t { NotPublished, Published };

inline constexpr double kPublishHelpfulness = 0.4;  // strict: i_hat > 0.4
inline constexpr double kPublishMaxBias = 0.5;      // strict: |f_hat| < 0.5
inline constexpr double kFilterMatchFraction = 2.0 / 3.0;

// Least-squares objective over the rated edges of a graph, optionally
// restricted to a subset of raters. Parameter layout:
//   [mu, i_u (n_raters), i_n (n_notes), f_u (n_raters), f_n (n_notes)].
// Entities with no rating carry no penalty and a zero gradient.
class MfProblem {
public:
    MfProblem(const RatingGraph& graph, const FitHyper& hyper, std::span<const std::uint8_t> rater_active = {});

    std::size_t dim() const noexcept { return 1 + 2 * (n_raters_ + n_notes_); }
    std::size_t n_ratings() const noexcept { return value_.size(); }

    double value(std::span<const double> theta) const;
    double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;

    // Diagonal curvature bound used as the preconditioner.
    std::vector<double> diagonal_scale() const;

    std::vector<double> pack(const FittedParams& params) const;
    FittedParams unpack(std::span<const double> theta) const;

    std::span<const std::uint8_t> rater_rated() const noexcept { return rater_rated_; }
    std::span<const std::uint8_t> note_rated() const noexcept { return note_rated_; }

private:
    std::size_t n_raters_ = 0, n_notes_ = 0;
    FitHyper hyper_;
    std::vector<std::int32_t> rater_, note_;
    std::vector<double> value_;
    std::vector<std::int64_t> rater_deg_, note_deg_;
    std::vector<std::uint8_t> rater_rated_, note_rated_;
    double w_rater_ = 1.0, w_note_ = 1.0, w_mu_ = 1.0;  // penalty weights
};

double loss(const FittedParams& params, const RatingGraph& graph, const FitHyper& hyper);

FittedParams fit(const RatingGraph& graph, const FitHyper& hyper, std::span<const std::uint8_t> rater_active = {});

std::vector<NoteStatus> decide_status(const FittedParams& params);

// Note labels the helpfulness filter compares ratings against.
enum class FilterLabel : std::uint8_t { NotHelpful, Helpful, Undecided };

// Binary: every unpublished note counts as NOT HELPFUL.
// ThreeWay: an unpublished note counts as NOT HELPFUL only when
//   i_hat < not_helpful_intercept - not_helpful_slope * |f_hat|,
// otherwise it is undecided and its ratings are skipped.
enum class FilterRule : std::uint8_t { Binary, ThreeWay };

std::string_view to_string(FilterRule r) noexcept;
FilterRule parse_filter_rule(std::string_view s);

struct FilterSettings {
    FilterRule rule = FilterRule::ThreeWay;
    double not_helpful_intercept = -0.05;
    double not_helpful_slope = 0.8;
};

std::vector<FilterLabel> filter_labels(const FittedParams& params, std::span<const NoteStatus> status,
                                       const FilterSettings& settings);

// Raters whose binary ratings (HELPFUL / NOT HELPFUL) agree with the note
// statuses less than two thirds of the time. SOMEWHAT HELPFUL ratings are
// ignored; raters without binary ratings are kept. Returns sorted rater ids.
std::vector<std::int32_t> helpfulness_filter(const RatingGraph& graph, std::span<const NoteStatus> status);
// Same rule against explicit labels; ratings on undecided notes are skipped.
std::vector<std::int32_t> helpfulness_filter(const RatingGraph& graph, std::span<const FilterLabel> labels);

struct PipelineResult {
    FittedParams params;             // final fit
    std::vector<NoteStatus> status;  // final statuses
    std::vector<std::int32_t> removed;
    FittedParams phase1;
    std::vector<NoteStatus> phase1_status;
    int fits_performed = 0;
};

PipelineResult score_pipeline(const RatingGraph& graph, const FitHyper& hyper, bool filter_enabled,
                              const FilterSettings& filter = {});

}  // namespace notesim
