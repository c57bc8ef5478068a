#include "notesim/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace notesim {

std::string_view to_string(MuPenalty m) noexcept { return m == MuPenalty::PerRating ? "per-rating" : "once"; }
std::string_view to_string(Regularization r) noexcept {
    return r == Regularization::Normalized ? "normalized" : "entity";
}

Regularization parse_regularization(std::string_view s) {
    if (s == "normalized") return Regularization::Normalized;
    if (s == "entity") return Regularization::Entity;
    throw ConfigError("fit.regularization must be 'normalized' or 'entity' (got '" + std::string(s) + "')");
}

std::string_view to_string(Optimizer o) noexcept { return o == Optimizer::Lbfgs ? "lbfgs" : "gd"; }

MuPenalty parse_mu_penalty(std::string_view s) {
    if (s == "per-rating") return MuPenalty::PerRating;
    if (s == "once") return MuPenalty::Once;
    throw ConfigError("fit.mu_penalty must be 'per-rating' or 'once' (got '" + std::string(s) + "')");
}

Optimizer parse_optimizer(std::string_view s) {
    if (s == "lbfgs") return Optimizer::Lbfgs;
    if (s == "gd") return Optimizer::GradientDescent;
    throw ConfigError("fit.optimizer must be 'lbfgs' or 'gd' (got '" + std::string(s) + "')");
}

void FitHyper::validate() const {
    std::ostringstream err;
    if (!(lambda_i >= 0.0)) err << "  fit.lambda_i must be >= 0\n";
    if (!(lambda_f >= 0.0)) err << "  fit.lambda_f must be >= 0\n";
    if (!(learning_rate > 0.0)) err << "  fit.learning_rate must be > 0\n";
    if (!(tol > 0.0)) err << "  fit.tol must be > 0\n";
    if (max_epochs < 1) err << "  fit.max_epochs must be >= 1\n";
    if (!(init_scale >= 0.0)) err << "  fit.init_scale must be >= 0\n";
    const auto msg = err.str();
    if (!msg.empty()) throw ConfigError("invalid fit hyperparameters:\n" + msg);
}

MfProblem::MfProblem(const RatingGraph& graph, const FitHyper& hyper, std::span<const std::uint8_t> rater_active)
    : n_raters_(static_cast<std::size_t>(graph.n_raters())),
      n_notes_(static_cast<std::size_t>(graph.n_notes())),
      hyper_(hyper),
      rater_deg_(n_raters_, 0),
      note_deg_(n_notes_, 0),
      rater_rated_(n_raters_, 0),
      note_rated_(n_notes_, 0) {
    if (!rater_active.empty() && rater_active.size() != n_raters_)
        throw ConfigError("rater_active mask size does not match the graph");
    rater_.reserve(graph.n_edges());
    note_.reserve(graph.n_edges());
    value_.reserve(graph.n_edges());
    for (const auto& e : graph.edges()) {
        if (e.rating == Rating::Unassigned) continue;
        const auto u = static_cast<std::size_t>(e.rater);
        if (!rater_active.empty() && !rater_active[u]) continue;
        const auto n = static_cast<std::size_t>(e.note);
        rater_.push_back(e.rater);
        note_.push_back(e.note);
        value_.push_back(rating_value(e.rating));
        ++rater_deg_[u];
        ++note_deg_[n];
    }
    for (std::size_t u = 0; u < n_raters_; ++u) rater_rated_[u] = rater_deg_[u] > 0;
    for (std::size_t n = 0; n < n_notes_; ++n) note_rated_[n] = note_deg_[n] > 0;

    const auto n_ratings = static_cast<double>(value_.size());
    if (hyper_.regularization == Regularization::Normalized) {
        // Penalties on per-type means, scaled to the summed squared error.
        const auto active_raters = std::count(rater_rated_.begin(), rater_rated_.end(), 1);
        const auto active_notes = std::count(note_rated_.begin(), note_rated_.end(), 1);
        w_rater_ = active_raters ? n_ratings / static_cast<double>(active_raters) : 1.0;
        w_note_ = active_notes ? n_ratings / static_cast<double>(active_notes) : 1.0;
        w_mu_ = n_ratings;
    } else {
        w_mu_ = hyper_.mu_penalty == MuPenalty::PerRating ? n_ratings : 1.0;
    }
}

double MfProblem::value(std::span<const double> theta) const {
    const double mu = theta[0];
    const double* iu = theta.data() + 1;
    const double* in = iu + n_raters_;
    const double* fu = in + n_notes_;
    const double* fn = fu + n_raters_;
    double sse = 0.0;
    for (std::size_t k = 0; k < value_.size(); ++k) {
        const auto u = static_cast<std::size_t>(rater_[k]);
        const auto n = static_cast<std::size_t>(note_[k]);
        const double e = value_[k] - (mu + iu[u] + in[n] + fu[u] * fn[n]);
        sse += e * e;
    }
    double reg_i = 0.0, reg_f = 0.0;
    for (std::size_t u = 0; u < n_raters_; ++u)
        if (rater_rated_[u]) {
            reg_i += w_rater_ * iu[u] * iu[u];
            reg_f += w_rater_ * fu[u] * fu[u];
        }
    for (std::size_t n = 0; n < n_notes_; ++n)
        if (note_rated_[n]) {
            reg_i += w_note_ * in[n] * in[n];
            reg_f += w_note_ * fn[n] * fn[n];
        }
    return sse + hyper_.lambda_i * (reg_i + w_mu_ * mu * mu) + hyper_.lambda_f * reg_f;
}

double MfProblem::value_and_gradient(std::span<const double> theta, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double mu = theta[0];
    const double* iu = theta.data() + 1;
    const double* in = iu + n_raters_;
    const double* fu = in + n_notes_;
    const double* fn = fu + n_raters_;
    double* g_iu = grad.data() + 1;
    double* g_in = g_iu + n_raters_;
    double* g_fu = g_in + n_notes_;
    double* g_fn = g_fu + n_raters_;

    double sse = 0.0, g_mu = 0.0;
    for (std::size_t k = 0; k < value_.size(); ++k) {
        const auto u = static_cast<std::size_t>(rater_[k]);
        const auto n = static_cast<std::size_t>(note_[k]);
        const double e = value_[k] - (mu + iu[u] + in[n] + fu[u] * fn[n]);
        sse += e * e;
        const double m2e = -2.0 * e;
        g_mu += m2e;
        g_iu[u] += m2e;
        g_in[n] += m2e;
        g_fu[u] += m2e * fn[n];
        g_fn[n] += m2e * fu[u];
    }
    double reg_i = 0.0, reg_f = 0.0;
    for (std::size_t u = 0; u < n_raters_; ++u) {
        if (!rater_rated_[u]) continue;
        reg_i += w_rater_ * iu[u] * iu[u];
        reg_f += w_rater_ * fu[u] * fu[u];
        g_iu[u] += 2.0 * hyper_.lambda_i * w_rater_ * iu[u];
        g_fu[u] += 2.0 * hyper_.lambda_f * w_rater_ * fu[u];
    }
    for (std::size_t n = 0; n < n_notes_; ++n) {
        if (!note_rated_[n]) continue;
        reg_i += w_note_ * in[n] * in[n];
        reg_f += w_note_ * fn[n] * fn[n];
        g_in[n] += 2.0 * hyper_.lambda_i * w_note_ * in[n];
        g_fn[n] += 2.0 * hyper_.lambda_f * w_note_ * fn[n];
    }
    grad[0] = g_mu + 2.0 * hyper_.lambda_i * w_mu_ * mu;
    return sse + hyper_.lambda_i * (reg_i + w_mu_ * mu * mu) + hyper_.lambda_f * reg_f;
}

std::vector<double> MfProblem::diagonal_scale() const {
    std::vector<double> d(dim(), 1.0);
    d[0] = 2.0 * (static_cast<double>(value_.size()) + hyper_.lambda_i * w_mu_);
    const std::size_t o_iu = 1, o_in = o_iu + n_raters_, o_fu = o_in + n_notes_, o_fn = o_fu + n_raters_;
    for (std::size_t u = 0; u < n_raters_; ++u) {
        const auto deg = static_cast<double>(rater_deg_[u]);
        d[o_iu + u] = 2.0 * (deg + hyper_.lambda_i * w_rater_) + (rater_rated_[u] ? 0.0 : 1.0);
        d[o_fu + u] = 2.0 * (deg + hyper_.lambda_f * w_rater_) + (rater_rated_[u] ? 0.0 : 1.0);
    }
    for (std::size_t n = 0; n < n_notes_; ++n) {
        const auto deg = static_cast<double>(note_deg_[n]);
        d[o_in + n] = 2.0 * (deg + hyper_.lambda_i * w_note_) + (note_rated_[n] ? 0.0 : 1.0);
        d[o_fn + n] = 2.0 * (deg + hyper_.lambda_f * w_note_) + (note_rated_[n] ? 0.0 : 1.0);
    }
    return d;
}

std::vector<double> MfProblem::pack(const FittedParams& params) const {
    std::vector<double> theta(dim(), 0.0);
    theta[0] = params.mu_hat;
    std::copy(params.i_u_hat.begin(), params.i_u_hat.end(), theta.begin() + 1);
    std::copy(params.i_n_hat.begin(), params.i_n_hat.end(), theta.begin() + 1 + static_cast<std::ptrdiff_t>(n_raters_));
    std::copy(params.f_u_hat.begin(), params.f_u_hat.end(),
              theta.begin() + 1 + static_cast<std::ptrdiff_t>(n_raters_ + n_notes_));
    std::copy(params.f_n_hat.begin(), params.f_n_hat.end(),
              theta.begin() + 1 + static_cast<std::ptrdiff_t>(2 * n_raters_ + n_notes_));
    return theta;
}

FittedParams MfProblem::unpack(std::span<const double> theta) const {
    FittedParams p;
    p.mu_hat = theta[0];
    auto it = theta.begin() + 1;
    p.i_u_hat.assign(it, it + static_cast<std::ptrdiff_t>(n_raters_));
    it += static_cast<std::ptrdiff_t>(n_raters_);
    p.i_n_hat.assign(it, it + static_cast<std::ptrdiff_t>(n_notes_));
    it += static_cast<std::ptrdiff_t>(n_notes_);
    p.f_u_hat.assign(it, it + static_cast<std::ptrdiff_t>(n_raters_));
    it += static_cast<std::ptrdiff_t>(n_raters_);
    p.f_n_hat.assign(it, it + static_cast<std::ptrdiff_t>(n_notes_));
    p.rater_rated = rater_rated_;
    p.note_rated = note_rated_;
    return p;
}

double loss(const FittedParams& params, const RatingGraph& graph, const FitHyper& hyper) {
    const MfProblem problem(graph, hyper);
    return problem.value(problem.pack(params));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string diagnostics(std::int64_t epoch, double loss_value, double step, std::span<const double> grad) {
    std::ostringstream os;
    os << "epoch " << epoch << ", loss " << loss_value << ", last step " << step << ", |grad| "
       << std::sqrt(dot(grad, grad));
    return os.str();
}

struct Convergence {
    double tol;
    int quiet_epochs = 0;
    // Two consecutive epochs under the relative-change tolerance.
    bool update(double prev, double cur) {
        const double rel = std::abs(prev - cur) / std::max(std::abs(prev), 1e-300);
        quiet_epochs = rel < tol ? quiet_epochs + 1 : 0;
        return quiet_epochs >= 2;
    }
};

constexpr double kMinStep = 1e-20;

void run_gradient_descent(const MfProblem& problem, const FitHyper& hyper, std::vector<double>& theta,
                          FittedParams& out) {
    const auto scale = problem.diagonal_scale();
    std::vector<double> grad(theta.size()), trial(theta.size()), trial_grad(theta.size());
    double f = problem.value_and_gradient(theta, grad);
    out.loss_history.push_back(f);
    double lr = hyper.learning_rate;
    Convergence conv{hyper.tol};
    std::int64_t epoch = 0;
    while (epoch < hyper.max_epochs) {
        double f_new = 0.0;
        while (true) {
            for (std::size_t k = 0; k < theta.size(); ++k) trial[k] = theta[k] - lr * grad[k] / scale[k];
            f_new = problem.value_and_gradient(trial, trial_grad);
            if (std::isfinite(f_new) && f_new <= f) break;
            lr *= 0.5;
            if (lr < kMinStep)
                throw OptimizationError("gradient descent failed to decrease the loss: " +
                                        diagnostics(epoch, f, lr, grad));
        }
        ++epoch;
        theta.swap(trial);
        grad.swap(trial_grad);
        const double f_prev = f;
        f = f_new;
        out.loss_history.push_back(f);
        if (conv.update(f_prev, f)) break;
    }
    out.epochs_run = epoch;
}

void run_lbfgs(const MfProblem& problem, const FitHyper& hyper, std::vector<double>& theta, FittedParams& out) {
    constexpr std::size_t kMemory = 10;
    constexpr double kArmijo = 1e-4;
    const auto scale = problem.diagonal_scale();
    const std::size_t dim = theta.size();

    std::vector<double> grad(dim), dir(dim), trial(dim), trial_grad(dim), alpha(kMemory);
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    double f = problem.value_and_gradient(theta, grad);
    if (!std::isfinite(f)) throw OptimizationError("initial loss is not finite");
    out.loss_history.push_back(f);
    Convergence conv{hyper.tol};
    std::int64_t epoch = 0;
    double gamma = 1.0;

    while (epoch < hyper.max_epochs) {
        // Two-loop recursion with H0 = gamma * diag(1/scale).
        for (std::size_t k = 0; k < dim; ++k) dir[k] = -grad[k];
        const std::size_t m = s_hist.size();
        for (std::size_t j = m; j-- > 0;) {
            alpha[j] = rho_hist[j] * dot(s_hist[j], dir);
            for (std::size_t k = 0; k < dim; ++k) dir[k] -= alpha[j] * y_hist[j][k];
        }
        for (std::size_t k = 0; k < dim; ++k) dir[k] *= gamma / scale[k];
        for (std::size_t j = 0; j < m; ++j) {
            const double beta = rho_hist[j] * dot(y_hist[j], dir);
            for (std::size_t k = 0; k < dim; ++k) dir[k] += (alpha[j] - beta) * s_hist[j][k];
        }
        double slope = dot(grad, dir);
        if (!(slope < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            gamma = 1.0;
            for (std::size_t k = 0; k < dim; ++k) dir[k] = -grad[k] / scale[k];
            slope = dot(grad, dir);
            if (!(slope < 0.0)) break;  // zero gradient
        }

        // Unit step on the preconditioned direction, halved until the Armijo
        // condition holds.
        double step = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        while (step >= kMinStep) {
            for (std::size_t k = 0; k < dim; ++k) trial[k] = theta[k] + step * dir[k];
            f_new = problem.value_and_gradient(trial, trial_grad);
            if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!s_hist.empty()) {
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                gamma = 1.0;
                continue;
            }
            // Steepest descent cannot make progress: at the floating-point
            // floor of a minimum unless the gradient is still large.
            const double rel_grad = std::sqrt(dot(grad, grad)) / std::max(1.0, std::abs(f));
            if (rel_grad < 1e-6) break;
            throw OptimizationError("line search failed: " + diagnostics(epoch, f, step, grad));
        }

        ++epoch;
        std::vector<double> s(dim), y(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            s[k] = trial[k] - theta[k];
            y[k] = trial_grad[k] - grad[k];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            double y_hy = 0.0;
            for (std::size_t k = 0; k < dim; ++k) y_hy += y[k] * y[k] / scale[k];
            gamma = sy / y_hy;
            if (s_hist.size() == kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        theta.swap(trial);
        grad.swap(trial_grad);
        const double f_prev = f;
        f = f_new;
        out.loss_history.push_back(f);
        if (conv.update(f_prev, f)) break;
    }
    out.epochs_run = epoch;
}

}  // namespace

FittedParams fit(const RatingGraph& graph, const FitHyper& hyper, std::span<const std::uint8_t> rater_active) {
    hyper.validate();
    const MfProblem problem(graph, hyper, rater_active);
    if (problem.n_ratings() == 0) throw DataError("cannot fit a graph without ratings");

    std::vector<double> theta(problem.dim(), 0.0);
    auto rng = make_stream(hyper.seed, "scorer.init");
    for (auto& t : theta) t = (2.0 * uniform01(rng) - 1.0) * hyper.init_scale;
    {
        // Unrated entities stay at zero.
        const auto nr = problem.rater_rated().size(), nn = problem.note_rated().size();
        for (std::size_t u = 0; u < nr; ++u)
            if (!problem.rater_rated()[u]) theta[1 + u] = theta[1 + nr + nn + u] = 0.0;
        for (std::size_t n = 0; n < nn; ++n)
            if (!problem.note_rated()[n]) theta[1 + nr + n] = theta[1 + 2 * nr + nn + n] = 0.0;
    }

    FittedParams result;
    if (hyper.optimizer == Optimizer::Lbfgs)
        run_lbfgs(problem, hyper, theta, result);
    else
        run_gradient_descent(problem, hyper, theta, result);

    if (!all_finite(theta)) throw OptimizationError("fit produced non-finite parameters");
    auto history = std::move(result.loss_history);
    const auto epochs = result.epochs_run;
    result = problem.unpack(theta);
    result.loss_history = std::move(history);
    result.final_loss = result.loss_history.back();
    result.epochs_run = epochs;
    return result;
}

std::vector<NoteStatus> decide_status(const FittedParams& params) {
    std::vector<NoteStatus> status(params.i_n_hat.size(), NoteStatus::NotPublished);
    for (std::size_t n = 0; n < status.size(); ++n) {
        const bool rated = params.note_rated.empty() || params.note_rated[n];
        if (rated && params.i_n_hat[n] > kPublishHelpfulness && std::abs(params.f_n_hat[n]) < kPublishMaxBias)
            status[n] = NoteStatus::Published;
    }
    return status;
}

std::string_view to_string(FilterRule r) noexcept { return r == FilterRule::Binary ? "binary" : "three-way"; }

FilterRule parse_filter_rule(std::string_view s) {
    if (s == "binary") return FilterRule::Binary;
    if (s == "three-way") return FilterRule::ThreeWay;
    throw ConfigError("filter.rule must be 'binary' or 'three-way' (got '" + std::string(s) + "')");
}

std::vector<FilterLabel> filter_labels(const FittedParams& params, std::span<const NoteStatus> status,
                                       const FilterSettings& settings) {
    std::vector<FilterLabel> labels(status.size(), FilterLabel::NotHelpful);
    for (std::size_t n = 0; n < status.size(); ++n) {
        if (status[n] == NoteStatus::Published) {
            labels[n] = FilterLabel::Helpful;
        } else if (settings.rule == FilterRule::ThreeWay) {
            const bool rated = params.note_rated.empty() || params.note_rated[n];
            const bool not_helpful =
                rated && params.i_n_hat[n] < settings.not_helpful_intercept -
                                                 settings.not_helpful_slope * std::abs(params.f_n_hat[n]);
            labels[n] = not_helpful ? FilterLabel::NotHelpful : FilterLabel::Undecided;
        }
    }
    return labels;
}

std::vector<std::int32_t> helpfulness_filter(const RatingGraph& graph, std::span<const NoteStatus> status) {
    std::vector<FilterLabel> labels(status.size());
    for (std::size_t n = 0; n < status.size(); ++n)
        labels[n] = status[n] == NoteStatus::Published ? FilterLabel::Helpful : FilterLabel::NotHelpful;
    return helpfulness_filter(graph, std::span<const FilterLabel>(labels));
}

std::vector<std::int32_t> helpfulness_filter(const RatingGraph& graph, std::span<const FilterLabel> labels) {
    if (labels.size() != static_cast<std::size_t>(graph.n_notes()))
        throw ConfigError("status vector does not cover every note");
    std::vector<std::int64_t> matches(static_cast<std::size_t>(graph.n_raters()), 0);
    std::vector<std::int64_t> binary(static_cast<std::size_t>(graph.n_raters()), 0);
    for (const auto& e : graph.edges()) {
        if (e.rating != Rating::Helpful && e.rating != Rating::NotHelpful) continue;
        const auto label = labels[static_cast<std::size_t>(e.note)];
        if (label == FilterLabel::Undecided) continue;
        const auto u = static_cast<std::size_t>(e.rater);
        ++binary[u];
        matches[u] += (e.rating == Rating::Helpful) == (label == FilterLabel::Helpful);
    }
    std::vector<std::int32_t> removed;
    for (std::size_t u = 0; u < binary.size(); ++u) {
        // matches / binary < 2/3, in integers.
        if (binary[u] > 0 && 3 * matches[u] < 2 * binary[u]) removed.push_back(static_cast<std::int32_t>(u));
    }
    return removed;
}

PipelineResult score_pipeline(const RatingGraph& graph, const FitHyper& hyper, bool filter_enabled,
                              const FilterSettings& filter) {
    PipelineResult out;
    out.phase1 = fit(graph, hyper);
    out.phase1_status = decide_status(out.phase1);
    out.fits_performed = 1;
    if (!filter_enabled) {
        out.params = out.phase1;
        out.status = out.phase1_status;
        return out;
    }
    const auto labels = filter_labels(out.phase1, out.phase1_status, filter);
    out.removed = helpfulness_filter(graph, std::span<const FilterLabel>(labels));
    std::vector<std::uint8_t> active(static_cast<std::size_t>(graph.n_raters()), 1);
    for (const auto u : out.removed) active[static_cast<std::size_t>(u)] = 0;
    const MfProblem remaining(graph, hyper, active);
    if (remaining.n_ratings() == 0) {
        // Every rating was filtered out: nothing can be published.
        out.params = remaining.unpack(std::vector<double>(remaining.dim(), 0.0));
        out.status.assign(static_cast<std::size_t>(graph.n_notes()), NoteStatus::NotPublished);
        out.fits_performed = 1;
        return out;
    }
    // Cold start with the same seed.
    out.params = fit(graph, hyper, active);
    out.status = decide_status(out.params);
    out.fits_performed = 2;
    return out;
}

}  // namespace notesim
