#pragma once

// GLAD: worker ability alpha_j and task difficulty 1/beta_i, fit by
// generalized EM. A worker answers the true class with probability
// sigmoid(alpha_j * beta_i); wrong answers are spread uniformly over the
// other K-1 classes. The class prior is uniform and never re-estimated.

#include "waum/dataset.hpp"
#include "waum/types.hpp"

#include <vector>

namespace waum {

struct GladConfig {
    double epsilon = 1e-6;
    std::size_t max_em_iter = 100;
    double m_step_learning_rate = 0.1;
    std::size_t m_step_iters = 50;
};

struct GladState {
    std::vector<double> abilities;     // alpha_j, one per worker
    std::vector<double> difficulties;  // beta_i > 0, one per task
    std::vector<SoftLabel> posteriors;
    double log_likelihood = 0.0;
    // Marginal log-likelihood before the first M-step, then after each EM iteration.
    std::vector<double> log_likelihood_history;
    std::size_t iterations = 0;
    bool converged = false;
    bool numerically_failed = false;
};

// Parameters in the unconstrained space the M-step optimizes: alpha and b = log(beta).
struct GladParams {
    std::vector<double> alpha;
    std::vector<double> log_beta;
};

struct GladGradient {
    std::vector<double> alpha;
    std::vector<double> log_beta;
};

GladState glad(const CrowdDataset& d, const GladConfig& cfg = {});

// E-step: P(true class | votes, alpha, beta) under a uniform class prior.
std::vector<SoftLabel> glad_posteriors(const CrowdDataset& d, const GladParams& params);

// Marginal log-likelihood of the votes.
double glad_log_likelihood(const CrowdDataset& d, const GladParams& params);

// Auxiliary function Q: expected complete-data log-likelihood under `posteriors`.
double glad_auxiliary(const CrowdDataset& d, const std::vector<SoftLabel>& posteriors, const GladParams& params);

// Analytic gradient of glad_auxiliary with respect to (alpha, log_beta).
GladGradient glad_auxiliary_gradient(const CrowdDataset& d, const std::vector<SoftLabel>& posteriors,
                                     const GladParams& params);

}  // namespace waum
