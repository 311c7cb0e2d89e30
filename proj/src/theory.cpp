#include "gcfed/theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gcfed/gc.hpp"
#include "gcfed/seed.hpp"

namespace gcfed::theory {

namespace {

double sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

Tensor gaussian(const Shape& shape, double sigma, Rng& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    Tensor t(shape);
    for (double& v : t.data()) v = n(rng);
    return t;
}

}  // namespace

double pairwise_sum(const double* values, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

void QuadraticProblem::validate() const {
    if (centers.empty()) throw ConfigError("quadratic problem: no clients");
    if (weights.size() != centers.size()) throw ConfigError("quadratic problem: weight count mismatch");
    double total = 0.0;
    for (double p : weights) {
        if (!(p > 0.0)) throw ConfigError("quadratic problem: weights must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("quadratic problem: weights must sum to 1");
    if (centers.front().rank() != 2) throw ConfigError("quadratic problem: centers must be [F_out, F_in] matrices");
    for (const auto& c : centers) require_same_shape(c, centers.front(), "quadratic centers");
    if (!curvature.empty()) {
        if (curvature.size() != centers.size()) throw ConfigError("quadratic problem: curvature count mismatch");
        for (const auto& h : curvature) {
            require_same_shape(h, centers.front(), "quadratic curvature");
            for (double v : h.data()) {
                if (!(v > 0.0 && v <= 1.0)) throw ConfigError("quadratic problem: curvature must lie in (0, 1]");
            }
        }
    }
}

Tensor QuadraticProblem::client_gradient(std::size_t k, const Tensor& w) const {
    Tensor g = w - centers.at(k);
    if (!curvature.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= curvature[k][i];
    }
    return g;
}

Tensor QuadraticProblem::mean_gradient(const Tensor& w) const {
    Tensor g(shape());
    for (std::size_t k = 0; k < num_clients(); ++k) g.axpy(weights[k], client_gradient(k, w));
    return g;
}

Tensor QuadraticProblem::optimum() const {
    Tensor num(shape()), den(shape());
    for (std::size_t k = 0; k < num_clients(); ++k) {
        for (std::size_t i = 0; i < num.size(); ++i) {
            const double h = curvature.empty() ? 1.0 : curvature[k][i];
            num[i] += weights[k] * h * centers[k][i];
            den[i] += weights[k] * h;
        }
    }
    for (std::size_t i = 0; i < num.size(); ++i) num[i] /= den[i];
    return num;
}

double QuadraticProblem::objective(const Tensor& w) const {
    double f = 0.0;
    for (std::size_t k = 0; k < num_clients(); ++k) {
        double fk = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double d = w[i] - centers[k][i];
            fk += (curvature.empty() ? 1.0 : curvature[k][i]) * d * d;
        }
        f += weights[k] * 0.5 * fk;
    }
    return f;
}

double QuadraticProblem::smoothness() const {
    if (curvature.empty()) return 1.0;
    double l = 0.0;
    for (const auto& h : curvature) l = std::max(l, max_abs(h));
    return l;
}

QuadraticProblem make_problem(const ProblemOptions& opts, std::uint64_t seed) {
    if (opts.rows < 1 || opts.cols < 2 || opts.clients < 1) {
        throw ConfigError("make_problem: need rows >= 1, cols >= 2, clients >= 1");
    }
    Rng rng = make_rng(seed, "quadratic");
    const Shape shape{opts.rows, opts.cols};
    QuadraticProblem p;
    std::uniform_real_distribution<double> weight(0.5, 1.5), curv(0.2, 1.0);
    double total = 0.0;
    for (std::size_t k = 0; k < opts.clients; ++k) {
        p.centers.push_back(gaussian(shape, 1.0, rng));
        p.weights.push_back(weight(rng));
        total += p.weights.back();
        if (opts.heterogeneous_curvature) {
            Tensor h(shape);
            for (double& v : h.data()) v = curv(rng);
            p.curvature.push_back(std::move(h));
        }
    }
    for (double& w : p.weights) w /= total;
    if (opts.optimum_on_hyperplane) {
        // Shifting every center by the same delta shifts w* by exactly delta.
        const Tensor raw = p.optimum();
        const Tensor shift = centralize_mean_sub(raw) - raw;
        for (auto& c : p.centers) c += shift;
    }
    p.validate();
    return p;
}

Tensor random_hyperplane_point(const Shape& shape, std::uint64_t seed) {
    Rng rng = make_rng(seed, "hyperplane_point");
    return centralize_mean_sub(gaussian(shape, 1.0, rng));
}

double one_step_gap(const QuadraticProblem& problem, const Tensor& w0, double eta, StepKind kind,
                    const std::vector<Tensor>* noise) {
    if (noise && noise->size() != problem.num_clients()) throw ConfigError("one_step_gap: one noise tensor per client");
    Tensor avg(problem.shape());
    for (std::size_t k = 0; k < problem.num_clients(); ++k) {
        Tensor g = problem.client_gradient(k, w0);
        if (noise) g += (*noise)[k];
        if (kind == StepKind::Projected) g = centralize_mean_sub(g);
        avg.axpy(problem.weights[k], g);
    }
    Tensor w1 = w0;
    w1.axpy(-eta, avg);
    return squared_norm(w1 - problem.optimum());
}

ReductionTerms gap_reduction_terms(const Tensor& g_stochastic, const Tensor& g_mean, double eta) {
    require_same_shape(g_stochastic, g_mean, "gap_reduction_terms");
    ReductionTerms t;
    t.b2 = eta * eta * sq(e_transpose(g_mean));
    t.a2 = eta * eta * sq(e_transpose(g_stochastic - g_mean));
    return t;
}

GapReport gap_report(const QuadraticProblem& problem, const Tensor& w0, double eta) {
    GapReport r;
    const Tensor w_star = problem.optimum();
    r.gap_before = squared_norm(w0 - w_star);
    r.gap_after_fedavg = one_step_gap(problem, w0, eta, StepKind::Plain);
    r.gap_after_gc = one_step_gap(problem, w0, eta, StepKind::Projected);
    const Tensor g = problem.mean_gradient(w0);
    const auto terms = gap_reduction_terms(g, g, eta);
    r.b2_term = terms.b2;
    r.a2_term = terms.a2;
    r.residual_bound = residual_bound_check(w_star, problem.smoothness()).rhs;
    return r;
}

IdentityCheck expected_gap_identity_check(const QuadraticProblem& problem, const Tensor& w0, double eta,
                                          std::size_t trials, double sigma, std::uint64_t seed) {
    if (trials < 2) throw ConfigError("expected_gap_identity_check: need at least 2 trials");
    const Shape& shape = problem.shape();
    const Tensor w_star = problem.optimum();
    const Tensor g_mean = problem.mean_gradient(w0);
    const Tensor g_mean_proj = centralize_mean_sub(g_mean);
    const Tensor base = w0 - w_star;

    std::vector<double> diff(trials), a2(trials), a3(trials), a3_plain(trials);
    std::vector<Tensor> noise(problem.num_clients());
    for (std::size_t t = 0; t < trials; ++t) {
        Rng rng = make_rng(seed, "gap_noise", {t});
        Tensor g(shape);
        for (std::size_t k = 0; k < problem.num_clients(); ++k) {
            noise[k] = gaussian(shape, sigma, rng);
            g.axpy(problem.weights[k], problem.client_gradient(k, w0) + noise[k]);
        }
        diff[t] = one_step_gap(problem, w0, eta, StepKind::Plain, &noise) -
                  one_step_gap(problem, w0, eta, StepKind::Projected, &noise);
        a2[t] = gap_reduction_terms(g, g_mean, eta).a2;
        // A3 = 2 eta < w - w* - eta Gbar~, G~ - Gbar~ >
        Tensor lead = base;
        lead.axpy(-eta, g_mean_proj);
        a3[t] = 2.0 * eta * dot(lead, centralize_mean_sub(g) - g_mean_proj);
        Tensor lead_plain = base;
        lead_plain.axpy(-eta, g_mean);
        a3_plain[t] = 2.0 * eta * dot(lead_plain, g - g_mean);
    }

    auto mean_se = [&](const std::vector<double>& v) {
        const double m = pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
        std::vector<double> dev(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - m) * (v[i] - m);
        const double var = pairwise_sum(dev.data(), dev.size()) / static_cast<double>(v.size() - 1);
        return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
    };

    IdentityCheck r;
    r.trials = trials;
    r.mc_gap_difference = mean_se(diff).first;
    r.b2_term = gap_reduction_terms(g_mean, g_mean, eta).b2;
    double sum_p2 = 0.0;
    for (double p : problem.weights) sum_p2 += p * p;
    // e^T (G - Gbar) has one entry per output row, each with variance sigma^2 * sum p_k^2.
    r.expected_a2 = eta * eta * static_cast<double>(shape[0]) * sigma * sigma * sum_p2;
    r.full_noise_term = eta * eta * static_cast<double>(shape_numel(shape)) * sigma * sigma * sum_p2;
    r.empirical_a2 = mean_se(a2).first;
    r.predicted = r.b2_term + r.expected_a2;
    r.relative_error = std::abs(r.mc_gap_difference - r.predicted) / r.predicted;
    std::tie(r.a3_mean, r.a3_standard_error) = mean_se(a3);
    std::tie(r.a3_plain_mean, r.a3_plain_standard_error) = mean_se(a3_plain);
    return r;
}

ResidualBound residual_bound_check(const Tensor& w_star, double l_smooth) {
    const Tensor parallel = centralize_mean_sub(w_star);
    const Tensor perp = w_star - parallel;  // e e^T w*
    ResidualBound r;
    // F(w) = 1/2 ||w - w*||^2, so F(w*) = 0.
    r.lhs = 0.5 * squared_norm(parallel - w_star);
    r.rhs = 0.5 * l_smooth * squared_norm(perp);
    r.holds = r.lhs <= r.rhs + 1e-12;
    return r;
}

double projected_trajectory_drift(const QuadraticProblem& problem, const Tensor& w0, double eta, std::size_t steps) {
    Tensor w = w0;
    double drift = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        w.axpy(-eta, centralize_mean_sub(problem.mean_gradient(w)));
        for (double v : e_transpose(w)) drift = std::max(drift, std::abs(v));
    }
    return drift;
}

std::vector<CheckLine> run_theory_suite(std::size_t trials, std::uint64_t seed) {
    std::vector<CheckLine> lines;
    constexpr double kEta = 0.5;

    {
        double worst = 0.0, min_b2 = INFINITY;
        for (std::uint64_t i = 0; i < 50; ++i) {
            const auto p = make_problem({}, derive_seed(seed, "thm1", {i}));
            const Tensor w0 = random_hyperplane_point(p.shape(), derive_seed(seed, "thm1_w0", {i}));
            const auto r = gap_report(p, w0, kEta);
            worst = std::max(worst, std::abs(r.gap_after_fedavg - r.gap_after_gc - r.b2_term));
            min_b2 = std::min(min_b2, r.b2_term);
        }
        lines.push_back({"deterministic_gap_identity", worst, 1e-10, worst <= 1e-10,
                         "max |gap(plain) - gap(proj) - eta^2||e^T Gbar||^2| over 50 problems; min b2 = " +
                             std::to_string(min_b2)});
    }

    {
        const auto p = make_problem({}, derive_seed(seed, "expected_gap"));
        const Tensor w0 = random_hyperplane_point(p.shape(), derive_seed(seed, "expected_gap_w0"));
        const auto r = expected_gap_identity_check(p, w0, kEta, trials, 0.1, derive_seed(seed, "expected_gap_noise"));
        lines.push_back({"expected_gap_identity_rel_error", r.relative_error, 0.02, r.relative_error <= 0.02,
                         "MC " + std::to_string(r.mc_gap_difference) + " vs predicted " + std::to_string(r.predicted)});
        const double z = std::abs(r.a3_mean) / r.a3_standard_error;
        lines.push_back({"cross_term_zero_mean", z, 3.0, z <= 3.0,
                         "|E[A3]| in standard errors (projected step)"});
        const double zp = std::abs(r.a3_plain_mean) / r.a3_plain_standard_error;
        lines.push_back({"cross_term_plain_zero_mean", zp, 3.0, zp <= 3.0,
                         "|E[A3]| in standard errors (plain step)"});
        lines.push_back({"projected_noise_bound", r.empirical_a2 - r.full_noise_term, 0.0,
                         r.empirical_a2 <= r.full_noise_term, "E[A2] - eta^2 E||G - Gbar||^2"});
    }

    {
        double worst_violation = -INFINITY, worst_gap = 0.0;
        for (std::uint64_t i = 0; i < 100; ++i) {
            Rng rng = make_rng(seed, "residual", {i});
            const Tensor w_star = gaussian({4, 6}, 1.0, rng);
            const auto r = residual_bound_check(w_star);
            worst_violation = std::max(worst_violation, r.lhs - r.rhs);
            worst_gap = std::max(worst_gap, std::abs(r.lhs - r.rhs));
        }
        lines.push_back({"residual_bound_holds", worst_violation, 1e-12, worst_violation <= 1e-12,
                         "max (lhs - rhs) over 100 random w*"});
        lines.push_back({"residual_bound_equality_quadratic", worst_gap, 1e-12, worst_gap <= 1e-12,
                         "max |lhs - rhs| over 100 random w*"});
    }

    {
        const auto p = make_problem({}, derive_seed(seed, "trajectory"));
        const Tensor w0 = random_hyperplane_point(p.shape(), derive_seed(seed, "trajectory_w0"));
        const double drift = projected_trajectory_drift(p, w0, kEta, 100);
        lines.push_back({"projected_iterates_stay_on_hyperplane", drift, 1e-12, drift <= 1e-12,
                         "max |e^T w_tau| over 100 steps"});
    }

    {
        const auto p = make_problem({}, derive_seed(seed, "nonneg"));
        const Tensor w0 = random_hyperplane_point(p.shape(), derive_seed(seed, "nonneg_w0"));
        double worst = -INFINITY;
        std::vector<Tensor> noise(p.num_clients());
        for (std::uint64_t t = 0; t < 1000; ++t) {
            Rng rng = make_rng(seed, "nonneg_noise", {t});
            for (auto& n : noise) n = gaussian(p.shape(), 0.1, rng);
            worst = std::max(worst, one_step_gap(p, w0, kEta, StepKind::Projected, &noise) -
                                        one_step_gap(p, w0, kEta, StepKind::Plain, &noise));
        }
        lines.push_back({"projected_gap_not_larger", worst, 1e-12, worst <= 1e-12,
                         "max gap(proj) - gap(plain) over 1000 stochastic trials"});
    }
    return lines;
}

}  // namespace gcfed::theory
