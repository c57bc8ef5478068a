#include "notesim/population.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace notesim {

std::string_view to_string(BadMode m) noexcept {
    switch (m) {
        case BadMode::None: return "none";
        case BadMode::Indiscriminate: return "indiscriminate";
        case BadMode::Coordinated: return "coordinated";
    }
    return "none";
}

BadMode parse_bad_mode(std::string_view s) {
    if (s == "none") return BadMode::None;
    if (s == "indiscriminate") return BadMode::Indiscriminate;
    if (s == "coordinated") return BadMode::Coordinated;
    throw ConfigError("unknown adversary mode '" + std::string(s) + "'");
}

void PopulationSpec::validate() const {
    std::ostringstream err;
    auto check_sigma = [&](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) err << "  population." << name << " must be >= 0 (got " << v << ")\n";
    };
    check_sigma(sigma_I_u, "sigma_I_u");
    check_sigma(sigma_I_n, "sigma_I_n");
    check_sigma(sigma_plus_u, "sigma_plus_u");
    check_sigma(sigma_minus_u, "sigma_minus_u");
    check_sigma(sigma_plus_n, "sigma_plus_n");
    check_sigma(sigma_minus_n, "sigma_minus_n");
    if (!(mu_plus_u >= 0.0)) err << "  population.mu_plus_u must be >= 0\n";
    if (!(mu_minus_u <= 0.0)) err << "  population.mu_minus_u must be <= 0\n";
    if (!(mu_plus_n >= 0.0)) err << "  population.mu_plus_n must be >= 0\n";
    if (!(mu_minus_n <= 0.0)) err << "  population.mu_minus_n must be <= 0\n";
    if (n_raters <= 0) err << "  population.n_raters must be positive\n";
    if (n_notes <= 0) err << "  population.n_notes must be positive\n";
    const auto msg = err.str();
    if (!msg.empty()) throw ConfigError("invalid population spec:\n" + msg);
}

Population sample_population(const PopulationSpec& spec, std::uint64_t seed) {
    spec.validate();
    Population pop;
    pop.raters.resize(static_cast<std::size_t>(spec.n_raters));
    pop.notes.resize(static_cast<std::size_t>(spec.n_notes));

    // Separate streams per side keep note parameters unchanged when only the
    // rater count changes.
    auto rater_rng = make_stream(seed, "population.raters");
    for (std::size_t k = 0; k < pop.raters.size(); ++k) {
        auto& r = pop.raters[k];
        r.id = static_cast<std::int32_t>(k);
        r.i = normal(rater_rng, spec.mu_I_u, spec.sigma_I_u);
        r.group = bernoulli(rater_rng, 0.5) ? Group::Plus : Group::Minus;
        r.f = r.group == Group::Plus ? normal(rater_rng, spec.mu_plus_u, spec.sigma_plus_u)
                                     : normal(rater_rng, spec.mu_minus_u, spec.sigma_minus_u);
    }
    auto note_rng = make_stream(seed, "population.notes");
    for (std::size_t k = 0; k < pop.notes.size(); ++k) {
        auto& n = pop.notes[k];
        n.id = static_cast<std::int32_t>(k);
        n.i = normal(note_rng, spec.mu_I_n, spec.sigma_I_n);
        n.group = bernoulli(note_rng, 0.5) ? Group::Plus : Group::Minus;
        n.f = n.group == Group::Plus ? normal(note_rng, spec.mu_plus_n, spec.sigma_plus_n)
                                     : normal(note_rng, spec.mu_minus_n, spec.sigma_minus_n);
    }
    return pop;
}

RatingProbs probs_from_score(double gamma, double score) noexcept {
    const double x = -gamma * (0.5 - score);  // exponent of HELPFUL; NOT HELPFUL gets -x
    const double top = std::abs(x);
    const double e_h = std::exp(x - top);
    const double e_s = std::exp(-top);
    const double e_n = std::exp(-x - top);
    const double z = e_h + e_s + e_n;
    RatingProbs p;
    p.p_helpful = e_h / z;
    p.p_not = e_n / z;
    p.p_somewhat = 1.0 - p.p_helpful - p.p_not;
    if (p.p_somewhat < 0.0) p.p_somewhat = 0.0;
    return p;
}

Rating draw_rating(const RatingProbs& probs, Xoshiro256& rng) noexcept {
    const double u = uniform01(rng);
    if (u < probs.p_helpful) return Rating::Helpful;
    if (u < probs.p_helpful + probs.p_somewhat) return Rating::Somewhat;
    return Rating::NotHelpful;
}

}  // namespace notesim
