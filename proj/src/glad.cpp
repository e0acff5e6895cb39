#include "waum/glad.hpp"

#include <algorithm>
#include <cmath>

namespace waum {

namespace {

// log(1 + e^x) without overflow
double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_params(const CrowdDataset& d, const GladParams& p) {
    if (p.alpha.size() != d.n_worker() || p.log_beta.size() != d.n_task()) {
        throw DimensionError("GLAD parameters do not match the dataset shape");
    }
    if (d.n_class() < 2) throw ValidationError("GLAD needs at least two classes");
}

// Unnormalized log posterior of each class for task i (uniform prior included).
std::vector<double> task_log_joint(const CrowdDataset& d, const GladParams& p, std::size_t i) {
    const std::size_t K = d.n_class();
    const double log_wrong_share = std::log(static_cast<double>(K - 1));
    const double beta = std::exp(p.log_beta[i]);
    std::vector<double> joint(K, -std::log(static_cast<double>(K)));
    for (const Vote& v : d.votes(i)) {
        const double z = p.alpha[v.worker] * beta;
        const double log_right = -softplus(-z);
        const double log_wrong = -softplus(z) - log_wrong_share;
        for (std::size_t l = 0; l < K; ++l) joint[l] += (l == v.label) ? log_right : log_wrong;
    }
    return joint;
}

double log_sum_exp(const std::vector<double>& x) {
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

std::vector<SoftLabel> glad_posteriors(const CrowdDataset& d, const GladParams& params) {
    check_params(d, params);
    std::vector<SoftLabel> out;
    out.reserve(d.n_task());
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        auto joint = task_log_joint(d, params, i);
        const double norm = log_sum_exp(joint);
        for (double& v : joint) v = std::exp(v - norm);
        out.push_back(SoftLabel::normalized(std::move(joint)));
    }
    return out;
}

double glad_log_likelihood(const CrowdDataset& d, const GladParams& params) {
    check_params(d, params);
    double total = 0.0;
    for (std::size_t i = 0; i < d.n_task(); ++i) total += log_sum_exp(task_log_joint(d, params, i));
    return total;
}

double glad_auxiliary(const CrowdDataset& d, const std::vector<SoftLabel>& posteriors, const GladParams& params) {
    check_params(d, params);
    const std::size_t K = d.n_class();
    const double log_wrong_share = std::log(static_cast<double>(K - 1));
    double q = -static_cast<double>(d.n_task()) * std::log(static_cast<double>(K));
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        const double beta = std::exp(params.log_beta[i]);
        for (const Vote& v : d.votes(i)) {
            const double p_right = posteriors[i][v.label];
            const double z = params.alpha[v.worker] * beta;
            q += p_right * (-softplus(-z)) + (1.0 - p_right) * (-softplus(z) - log_wrong_share);
        }
    }
    return q;
}

GladGradient glad_auxiliary_gradient(const CrowdDataset& d, const std::vector<SoftLabel>& posteriors,
                                     const GladParams& params) {
    check_params(d, params);
    GladGradient g{std::vector<double>(d.n_worker(), 0.0), std::vector<double>(d.n_task(), 0.0)};
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        const double beta = std::exp(params.log_beta[i]);
        for (const Vote& v : d.votes(i)) {
            const double alpha = params.alpha[v.worker];
            const double residual = posteriors[i][v.label] - sigmoid(alpha * beta);
            g.alpha[v.worker] += beta * residual;
            g.log_beta[i] += alpha * beta * residual;
        }
    }
    return g;
}

namespace {

enum class MStepOutcome { ok, non_finite };

// Gradient ascent on Q with a per-parameter 1/vote-count step scaling. A step
// is only taken if Q does not decrease, which keeps EM monotone.
MStepOutcome glad_m_step(const CrowdDataset& d, const std::vector<SoftLabel>& posteriors, GladParams& params,
                         const GladConfig& cfg, const std::vector<double>& worker_votes,
                         const std::vector<double>& task_votes) {
    double step = cfg.m_step_learning_rate;
    double q_current = glad_auxiliary(d, posteriors, params);
    for (std::size_t it = 0; it < cfg.m_step_iters; ++it) {
        const GladGradient g = glad_auxiliary_gradient(d, posteriors, params);
        bool accepted = false;
        bool retried_non_finite = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            GladParams trial = params;
            for (std::size_t j = 0; j < trial.alpha.size(); ++j) {
                if (worker_votes[j] > 0.0) trial.alpha[j] += step * g.alpha[j] / worker_votes[j];
            }
            for (std::size_t i = 0; i < trial.log_beta.size(); ++i) {
                trial.log_beta[i] += step * g.log_beta[i] / task_votes[i];
            }
            const double q_trial = glad_auxiliary(d, posteriors, trial);
            if (!std::isfinite(q_trial)) {
                if (retried_non_finite) return MStepOutcome::non_finite;
                retried_non_finite = true;
                step *= 0.5;
                continue;
            }
            if (q_trial >= q_current) {
                params = std::move(trial);
                q_current = q_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no ascent step left at this resolution
    }
    return MStepOutcome::ok;
}

}  // namespace

GladState glad(const CrowdDataset& d, const GladConfig& cfg) {
    if (!(cfg.epsilon > 0.0) || cfg.max_em_iter < 1 || !(cfg.m_step_learning_rate > 0.0) || cfg.m_step_iters < 1) {
        throw ValidationError("GLAD config values must all be positive");
    }
    if (d.n_class() < 2) throw ValidationError("GLAD needs at least two classes");

    GladParams params{std::vector<double>(d.n_worker(), 1.0), std::vector<double>(d.n_task(), 0.0)};
    std::vector<double> worker_votes(d.n_worker(), 0.0);
    std::vector<double> task_votes(d.n_task(), 0.0);
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        task_votes[i] = static_cast<double>(d.votes(i).size());
        for (const Vote& v : d.votes(i)) worker_votes[v.worker] += 1.0;
    }

    GladState state;
    state.log_likelihood = glad_log_likelihood(d, params);
    state.log_likelihood_history.push_back(state.log_likelihood);
    for (std::size_t it = 1; it <= cfg.max_em_iter; ++it) {
        const auto posteriors = glad_posteriors(d, params);
        if (glad_m_step(d, posteriors, params, cfg, worker_votes, task_votes) == MStepOutcome::non_finite) {
            state.numerically_failed = true;
            break;
        }
        const double ll = glad_log_likelihood(d, params);
        if (!std::isfinite(ll)) {
            state.numerically_failed = true;
            break;
        }
        const double previous = state.log_likelihood;
        state.log_likelihood = ll;
        state.log_likelihood_history.push_back(ll);
        state.iterations = it;
        if (std::abs(ll - previous) < cfg.epsilon) {
            state.converged = true;
            break;
        }
    }
    state.abilities = params.alpha;
    state.difficulties.reserve(d.n_task());
    for (double b : params.log_beta) state.difficulties.push_back(std::exp(b));
    state.posteriors = glad_posteriors(d, params);
    return state;
}

}  // namespace waum
