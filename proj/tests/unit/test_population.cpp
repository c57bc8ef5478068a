#include <doctest.h>

#include <cmath>

#include "notesim/population.hpp"

using namespace notesim;

namespace {

double sum(const RatingProbs& p) { return p.p_helpful + p.p_somewhat + p.p_not; }

}  // namespace

TEST_CASE("softmax at score one half is uniform") {
    for (double gamma : {0.0, 1.0, 30.0, 1000.0}) {
        const auto p = probs_from_score(gamma, 0.5);
        CHECK(p.p_helpful == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(p.p_somewhat == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(p.p_not == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    const auto p = probs_from_score(0.0, 3.7);
    CHECK(p.p_helpful == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p.p_not == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax at the default calibration point") {
    // Reference values from a 50-digit evaluation of
    // e^x / (e^x + 1 + e^-x) with x = 30 * (0.67 - 0.5) = 5.1.
    GlobalParams g;
    RaterProfile r;
    r.i = 0.25;
    NoteProfile n;
    n.i = 0.25;
    CHECK(latent_score(g, r, n) == doctest::Approx(0.67).epsilon(1e-14));
    const auto p = honest_probs(g, r, n);
    CHECK(std::abs(p.p_helpful - 0.99390347867) < 1e-9);
    CHECK(std::abs(p.p_not - 3.6943709e-5) < 1e-11);
    CHECK(std::abs(p.p_somewhat - 0.00605957762) < 1e-9);
}

TEST_CASE("softmax stays finite and normalized for extreme arguments") {
    for (double score : {-1e6, -50.0, 50.0, 1e6}) {
        const auto p = probs_from_score(30.0, score);
        CHECK(std::isfinite(p.p_helpful));
        CHECK(std::isfinite(p.p_not));
        CHECK(std::abs(sum(p) - 1.0) < 1e-12);
    }
    CHECK(probs_from_score(30.0, 1e6).p_helpful == doctest::Approx(1.0));
    CHECK(probs_from_score(30.0, -1e6).p_not == doctest::Approx(1.0));
}

TEST_CASE("softmax normalization over a million random draws") {
    Xoshiro256 rng(11);
    double worst = 0.0;
    for (int k = 0; k < 1000000; ++k) {
        const double gamma = 100.0 * uniform01(rng);
        const double score = normal(rng, 0.5, 2.0);
        const auto p = probs_from_score(gamma, score);
        REQUIRE(p.p_helpful >= 0.0);
        REQUIRE(p.p_somewhat >= 0.0);
        REQUIRE(p.p_not >= 0.0);
        REQUIRE(p.p_helpful <= 1.0);
        worst = std::max(worst, std::abs(sum(p) - 1.0));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("p_helpful is monotone in note helpfulness") {
    Xoshiro256 rng(3);
    GlobalParams g;
    for (int trial = 0; trial < 200; ++trial) {
        RaterProfile r;
        r.i = normal(rng, 0.25, 0.3);
        r.f = normal(rng, 0.0, 0.7);
        NoteProfile n;
        n.f = normal(rng, 0.0, 0.7);
        double prev = -1.0;
        for (double i = -2.0; i <= 2.0; i += 0.01) {
            n.i = i;
            const double p = honest_probs(g, r, n).p_helpful;
            REQUIRE(p >= prev);
            prev = p;
        }
    }
}

TEST_CASE("degenerate population") {
    PopulationSpec spec;
    spec.sigma_I_u = spec.sigma_I_n = 0.0;
    spec.sigma_plus_u = spec.sigma_minus_u = spec.sigma_plus_n = spec.sigma_minus_n = 0.0;
    spec.n_raters = 50;
    spec.n_notes = 70;
    const auto pop = sample_population(spec, 9);
    REQUIRE(pop.raters.size() == 50);
    REQUIRE(pop.notes.size() == 70);
    for (const auto& r : pop.raters) {
        CHECK(r.i == 0.25);
        CHECK(r.f == 0.0);
        CHECK_FALSE(r.is_bad);
    }
    for (const auto& n : pop.notes) {
        CHECK(n.i == 0.25);
        CHECK(n.f == 0.0);
    }
}

TEST_CASE("population sample moments") {
    PopulationSpec spec;
    spec.n_raters = 100000;
    spec.n_notes = 100000;
    spec.sigma_I_u = 0.2;
    const auto pop = sample_population(spec, 21);
    double mean_i = 0.0;
    for (const auto& r : pop.raters) mean_i += r.i;
    mean_i /= static_cast<double>(pop.raters.size());
    CHECK(std::abs(mean_i - 0.25) < 0.002);

    std::int64_t plus = 0;
    for (const auto& n : pop.notes) plus += n.group == Group::Plus;
    CHECK(std::abs(static_cast<double>(plus) / 100000.0 - 0.5) < 0.005);
}

TEST_CASE("group bias means follow the group") {
    PopulationSpec spec;
    spec.n_raters = 20000;
    spec.n_notes = 10;
    spec.mu_plus_u = 0.8;
    spec.mu_minus_u = -0.8;
    spec.sigma_plus_u = spec.sigma_minus_u = 0.1;
    const auto pop = sample_population(spec, 4);
    double plus = 0.0, minus = 0.0;
    int np = 0, nm = 0;
    for (const auto& r : pop.raters) {
        if (r.group == Group::Plus) {
            plus += r.f;
            ++np;
        } else {
            minus += r.f;
            ++nm;
        }
    }
    CHECK(plus / np == doctest::Approx(0.8).epsilon(0.01));
    CHECK(minus / nm == doctest::Approx(-0.8).epsilon(0.01));
    CHECK(spec.rater_polarization() == doctest::Approx(0.8));
}

TEST_CASE("population is bit-deterministic") {
    PopulationSpec spec;
    spec.n_raters = 500;
    spec.n_notes = 800;
    const auto a = sample_population(spec, 77);
    const auto b = sample_population(spec, 77);
    const auto c = sample_population(spec, 78);
    bool same = true, differs = false;
    for (std::size_t k = 0; k < a.raters.size(); ++k) {
        same = same && a.raters[k].i == b.raters[k].i && a.raters[k].f == b.raters[k].f &&
               a.raters[k].group == b.raters[k].group;
        differs = differs || a.raters[k].i != c.raters[k].i;
    }
    for (std::size_t k = 0; k < a.notes.size(); ++k)
        same = same && a.notes[k].i == b.notes[k].i && a.notes[k].f == b.notes[k].f;
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("invalid specs are rejected") {
    PopulationSpec spec;
    spec.sigma_I_n = -0.1;
    spec.n_raters = 0;
    try {
        spec.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sigma_I_n") != std::string::npos);
        CHECK(msg.find("n_raters") != std::string::npos);
    }
    PopulationSpec bad_mean;
    bad_mean.mu_plus_u = -0.2;
    CHECK_THROWS_AS(bad_mean.validate(), ConfigError);
}

TEST_CASE("draw_rating frequencies") {
    Xoshiro256 rng(8);
    RatingProbs always_h{1.0, 0.0, 0.0};
    RatingProbs always_n{0.0, 0.0, 1.0};
    for (int k = 0; k < 1000; ++k) {
        REQUIRE(draw_rating(always_h, rng) == Rating::Helpful);
        REQUIRE(draw_rating(always_n, rng) == Rating::NotHelpful);
    }
    RatingProbs p{0.6, 0.1, 0.3};
    int h = 0, s = 0, n = 0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        switch (draw_rating(p, rng)) {
            case Rating::Helpful: ++h; break;
            case Rating::Somewhat: ++s; break;
            case Rating::NotHelpful: ++n; break;
            default: break;
        }
    }
    CHECK(std::abs(h / double(draws) - 0.6) < 0.01);
    CHECK(std::abs(s / double(draws) - 0.1) < 0.01);
    CHECK(std::abs(n / double(draws) - 0.3) < 0.01);
    CHECK(rating_value(Rating::Somewhat) == 0.5);
}
