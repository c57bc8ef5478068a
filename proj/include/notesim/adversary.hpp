#pragma once
// Bad raters: probability transforms over the honest rating model.

#include <cstdint>
#include <span>
#include <vector>

#include "notesim/population.hpp"

namespace notesim {

struct AdversaryConfig {
    double fraction_bad = 0.0;
    double behavior_rate = 1.0;
    BadMode mode = BadMode::Indiscriminate;
    int phi = 1;  // coordinated target sign: notes with phi * f_n < 0 are attacked
    double helpful_threshold = 0.4;

    void validate() const;
};

// Flags each rater bad independently with probability fraction_bad.
std::vector<RaterProfile> assign_bad(std::span<const RaterProfile> raters, const AdversaryConfig& cfg,
                                     std::uint64_t seed);

// True when a bad rater with an active suppression draw would attack this note.
bool is_attack_target(const AdversaryConfig& cfg, const NoteProfile& note) noexcept;

inline RatingProbs swap_helpful(RatingProbs p) noexcept {
    std::swap(p.p_helpful, p.p_not);
    return p;
}

// Honest probabilities, or for a bad rater whose per-(rater, note)
// Bernoulli(behavior_rate) draw fires on a targeted note, the same
// probabilities with HELPFUL and NOT HELPFUL exchanged. The draw is consumed
// from `rng` only for bad raters.
RatingProbs effective_probs(const GlobalParams& g, const RaterProfile& rater, const NoteProfile& note,
                            const AdversaryConfig& cfg, Xoshiro256& rng);

}  // namespace notesim
