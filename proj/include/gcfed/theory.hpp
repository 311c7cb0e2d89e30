#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcfed/tensor.hpp"

namespace gcfed::theory {

/// F_k(w) = 1/2 * sum_ij h_k,ij (w_ij - c_k,ij)^2 on a single FC-shaped matrix
/// [F_out, F_in]; the projection acts along F_in. With empty curvature h_k = 1
/// and F_k(w) = 1/2 ||w - c_k||^2. Curvature entries lie in (0, 1] so L_smooth = 1.
struct QuadraticProblem {
    std::vector<Tensor> centers;
    std::vector<double> weights;
    std::vector<Tensor> curvature;

    std::size_t num_clients() const noexcept { return centers.size(); }
    const Shape& shape() const { return centers.at(0).shape(); }

    Tensor client_gradient(std::size_t k, const Tensor& w) const;
    Tensor mean_gradient(const Tensor& w) const;
    Tensor optimum() const;
    double objective(const Tensor& w) const;
    double smoothness() const;

    void validate() const;
};

struct ProblemOptions {
    std::size_t rows = 4;     // F_out
    std::size_t cols = 6;     // F_in, the centralized axis
    std::size_t clients = 5;
    bool heterogeneous_curvature = true;
    bool optimum_on_hyperplane = true;  // e^T w* = 0
};

QuadraticProblem make_problem(const ProblemOptions& opts, std::uint64_t seed);

/// Random start with e^T w0 = 0.
Tensor random_hyperplane_point(const Shape& shape, std::uint64_t seed);

enum class StepKind { Plain, Projected };

/// One synchronized step from w0: every client gradient (+ optional noise) is
/// optionally projected, averaged with p_k, and applied. Returns ||w1 - w*||^2.
double one_step_gap(const QuadraticProblem& problem, const Tensor& w0, double eta, StepKind kind,
                    const std::vector<Tensor>* noise = nullptr);

struct ReductionTerms {
    double b2 = 0.0;  // eta^2 ||e^T Gbar||^2
    double a2 = 0.0;  // eta^2 ||e^T (G - Gbar)||^2
};

ReductionTerms gap_reduction_terms(const Tensor& g_stochastic, const Tensor& g_mean, double eta);

struct GapReport {
    double gap_before = 0.0;
    double gap_after_fedavg = 0.0;
    double gap_after_gc = 0.0;
    double b2_term = 0.0;
    double a2_term = 0.0;
    double residual_bound = 0.0;
};

GapReport gap_report(const QuadraticProblem& problem, const Tensor& w0, double eta);

struct IdentityCheck {
    std::size_t trials = 0;
    double mc_gap_difference = 0.0;   // mean of gap(plain) - gap(projected)
    double predicted = 0.0;           // b2 + analytic E[a2]
    double b2_term = 0.0;
    double expected_a2 = 0.0;         // analytic
    double empirical_a2 = 0.0;        // Monte-Carlo mean of a2
    double full_noise_term = 0.0;     // eta^2 E||G - Gbar||^2 (analytic)
    double relative_error = 0.0;
    double a3_mean = 0.0;             // projected-step cross term
    double a3_standard_error = 0.0;
    double a3_plain_mean = 0.0;
    double a3_plain_standard_error = 0.0;
};

/// Monte-Carlo check of E[gap(plain) - gap(projected)] = b2 + E[a2] under
/// i.i.d. N(0, sigma^2) per-client gradient noise.
IdentityCheck expected_gap_identity_check(const QuadraticProblem& problem, const Tensor& w0, double eta,
                                          std::size_t trials, double sigma, std::uint64_t seed);

struct ResidualBound {
    double lhs = 0.0;  // F(P w*) - F(w*)
    double rhs = 0.0;  // L/2 ||e e^T w*||^2
    bool holds = false;
};

/// For F(w) = 1/2 ||w - w*||^2 (the identity-curvature family).
ResidualBound residual_bound_check(const Tensor& w_star, double l_smooth = 1.0);

/// Max |e^T w_tau| over `steps` projected full-gradient steps from w0.
double projected_trajectory_drift(const QuadraticProblem& problem, const Tensor& w0, double eta, std::size_t steps);

/// Deterministic-order pairwise summation.
double pairwise_sum(const double* values, std::size_t n);

struct CheckLine {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

/// Full verification suite used by `gcfed theory-check`.
std::vector<CheckLine> run_theory_suite(std::size_t trials, std::uint64_t seed);

}  // namespace gcfed::theory
