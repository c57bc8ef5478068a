#pragma once
// True rater/note parameters and the honest softmax rating model.

#include <cstdint>
#include <vector>

#include "notesim/rng.hpp"
#include "notesim/types.hpp"

namespace notesim {

struct GlobalParams {
    double mu = 0.17;
    double gamma = 30.0;
};

struct PopulationSpec {
    double mu_I_u = 0.25;
    double mu_I_n = 0.25;
    double sigma_I_u = 0.2;
    double sigma_I_n = 0.5;
    double mu_plus_u = 0.0;
    double mu_minus_u = 0.0;
    double mu_plus_n = 0.0;
    double mu_minus_n = 0.0;
    double sigma_plus_u = 0.5;
    double sigma_minus_u = 0.5;
    double sigma_plus_n = 0.5;
    double sigma_minus_n = 0.5;
    std::int64_t n_raters = 10750;
    std::int64_t n_notes = 20000;

    double rater_polarization() const noexcept { return 0.5 * mu_plus_u - 0.5 * mu_minus_u; }
    double note_polarization() const noexcept { return 0.5 * mu_plus_n - 0.5 * mu_minus_n; }

    // Throws ConfigError listing every violated constraint.
    void validate() const;
};

struct RaterProfile {
    std::int32_t id = 0;
    double i = 0.0;  // friendliness
    double f = 0.0;  // bias
    Group group = Group::Plus;
    bool is_bad = false;
    BadMode bad_mode = BadMode::None;
};

struct NoteProfile {
    std::int32_t id = 0;
    double i = 0.0;  // helpfulness
    double f = 0.0;  // bias
    Group group = Group::Plus;
};

struct Population {
    std::vector<RaterProfile> raters;
    std::vector<NoteProfile> notes;
};

struct RatingProbs {
    double p_helpful = 1.0 / 3.0;
    double p_somewhat = 1.0 / 3.0;
    double p_not = 1.0 / 3.0;
};

Population sample_population(const PopulationSpec& spec, std::uint64_t seed);

// Score entering the softmax: mu + i_u + i_n + f_u * f_n.
inline double latent_score(const GlobalParams& g, const RaterProfile& r, const NoteProfile& n) noexcept {
    return g.mu + r.i + n.i + r.f * n.f;
}

// Three-way softmax over exponents {+x, 0, -x} with x = -gamma * (1/2 - score),
// evaluated with the max exponent subtracted.
RatingProbs probs_from_score(double gamma, double score) noexcept;

inline RatingProbs honest_probs(const GlobalParams& g, const RaterProfile& r, const NoteProfile& n) noexcept {
    return probs_from_score(g.gamma, latent_score(g, r, n));
}

Rating draw_rating(const RatingProbs& probs, Xoshiro256& rng) noexcept;

}  // namespace notesim
