#include "notesim/adversary.hpp"

#include <sstream>

namespace notesim {

void AdversaryConfig::validate() const {
    std::ostringstream err;
    if (!(fraction_bad >= 0.0 && fraction_bad <= 1.0)) err << "  adversary.fraction_bad must lie in [0, 1]\n";
    if (!(behavior_rate >= 0.0 && behavior_rate <= 1.0)) err << "  adversary.behavior_rate must lie in [0, 1]\n";
    if (phi != 1 && phi != -1) err << "  adversary.phi must be +1 or -1\n";
    if (mode == BadMode::None && fraction_bad > 0.0) err << "  adversary.mode 'none' requires fraction_bad = 0\n";
    const auto msg = err.str();
    if (!msg.empty()) throw ConfigError("invalid adversary config:\n" + msg);
}

std::vector<RaterProfile> assign_bad(std::span<const RaterProfile> raters, const AdversaryConfig& cfg,
                                     std::uint64_t seed) {
    cfg.validate();
    std::vector<RaterProfile> out(raters.begin(), raters.end());
    auto rng = make_stream(seed, "adversary.assign");
    for (auto& r : out) {
        r.is_bad = bernoulli(rng, cfg.fraction_bad);
        r.bad_mode = r.is_bad ? cfg.mode : BadMode::None;
    }
    return out;
}

bool is_attack_target(const AdversaryConfig& cfg, const NoteProfile& note) noexcept {
    if (note.i < cfg.helpful_threshold) return false;
    switch (cfg.mode) {
        case BadMode::Indiscriminate: return true;
        // f_n == 0 satisfies neither strict inequality and stays honest.
        case BadMode::Coordinated: return static_cast<double>(cfg.phi) * note.f < 0.0;
        case BadMode::None: return false;
    }
    return false;
}

RatingProbs effective_probs(const GlobalParams& g, const RaterProfile& rater, const NoteProfile& note,
                            const AdversaryConfig& cfg, Xoshiro256& rng) {
    const auto honest = honest_probs(g, rater, note);
    if (!rater.is_bad) return honest;
    const bool active = bernoulli(rng, cfg.behavior_rate);
    if (active && is_attack_target(cfg, note)) return swap_helpful(honest);
    return honest;
}

}  // namespace notesim
