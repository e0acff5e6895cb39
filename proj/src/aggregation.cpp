#include "waum/aggregation.hpp"

#include "waum/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace waum {

ConfusionMatrix::ConfusionMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
        throw ValidationError("confusion matrix must be square and non-empty");
    }
    for (Eigen::Index l = 0; l < entries_.rows(); ++l) {
        for (Eigen::Index k = 0; k < entries_.cols(); ++k) {
            double& e = entries_(l, k);
            if (e < 0.0 && e >= -1e-12) e = 0.0;
            if (!(e >= 0.0 && e <= 1.0 + simplex_tolerance)) {
                throw ValidationError("confusion matrix entry (" + std::to_string(l) + "," + std::to_string(k) +
                                      ") = " + std::to_string(e) + " outside [0,1]");
            }
        }
        if (std::abs(entries_.row(l).sum() - 1.0) > simplex_tolerance) {
            throw ValidationError("confusion matrix row " + std::to_string(l) + " does not sum to 1");
        }
    }
}

ConfusionMatrix ConfusionMatrix::identity(std::size_t n_class) {
    const auto k = static_cast<Eigen::Index>(n_class);
    return ConfusionMatrix(Matrix::Identity(k, k));
}

ConfusionMatrix ConfusionMatrix::uniform(std::size_t n_class) {
    const auto k = static_cast<Eigen::Index>(n_class);
    return ConfusionMatrix(Matrix::Constant(k, k, 1.0 / static_cast<double>(n_class)));
}

ConfusionMatrix ConfusionMatrix::symmetric(std::size_t n_class, double diag) {
    if (n_class < 2) return identity(n_class);
    const auto k = static_cast<Eigen::Index>(n_class);
    Matrix m = Matrix::Constant(k, k, (1.0 - diag) / static_cast<double>(n_class - 1));
    m.diagonal().setConstant(diag);
    return ConfusionMatrix(std::move(m));
}

namespace {

std::vector<double> vote_counts(const std::vector<Vote>& votes, std::size_t n_class) {
    std::vector<double> counts(n_class, 0.0);
    for (const Vote& v : votes) counts[v.label] += 1.0;
    return counts;
}

}  // namespace

std::vector<HardLabel> majority_vote(const CrowdDataset& d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<HardLabel> out;
    out.reserve(d.n_task());
    std::vector<std::size_t> tied;
    for (const auto& votes : d.all_votes()) {
        const auto counts = vote_counts(votes, d.n_class());
        const double best = *std::max_element(counts.begin(), counts.end());
        tied.clear();
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] == best) tied.push_back(k);
        }
        const std::size_t pick = tied.size() == 1 ? tied.front() : tied[uniform_index(rng, tied.size())];
        out.push_back(HardLabel{pick});
    }
    return out;
}

std::vector<SoftLabel> naive_soft(const CrowdDataset& d) {
    std::vector<SoftLabel> out;
    out.reserve(d.n_task());
    for (const auto& votes : d.all_votes()) {
        auto counts = vote_counts(votes, d.n_class());
        const double n = static_cast<double>(votes.size());
        for (double& c : counts) c /= n;
        out.emplace_back(std::move(counts));
    }
    return out;
}

namespace {

// Per-task unnormalized log posterior: log rho_l + sum_j log pi^(j)_{l, y_ij}.
void task_log_joint(const std::vector<Vote>& votes, const std::vector<Matrix>& log_pi, const Vector& log_rho,
                    Vector& out) {
    out = log_rho;
    for (const Vote& v : votes) out += log_pi[v.worker].col(static_cast<Eigen::Index>(v.label));
}

double log_sum_exp(const Vector& x) {
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((x.array() - m).exp().sum());
}

std::vector<Matrix> log_confusions(const std::vector<ConfusionMatrix>& confusions, double smoothing) {
    std::vector<Matrix> out;
    out.reserve(confusions.size());
    for (const auto& c : confusions) out.push_back((c.entries().array() + smoothing).log().matrix());
    return out;
}

Vector log_prevalence(const SoftLabel& prevalence, double smoothing) {
    Vector out(static_cast<Eigen::Index>(prevalence.size()));
    for (std::size_t l = 0; l < prevalence.size(); ++l) out(static_cast<Eigen::Index>(l)) = std::log(prevalence[l] + smoothing);
    return out;
}

struct MStep {
    std::vector<ConfusionMatrix> confusions;
    SoftLabel prevalence;
};

MStep ds_m_step(const CrowdDataset& d, const std::vector<SoftLabel>& posteriors) {
    const std::size_t n_class = d.n_class();
    const auto K = static_cast<Eigen::Index>(n_class);
    std::vector<Matrix> counts(d.n_worker(), Matrix::Zero(K, K));
    std::vector<double> rho(n_class, 0.0);
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        const auto& t = posteriors[i].probs();
        for (std::size_t l = 0; l < n_class; ++l) rho[l] += t[l];
        for (const Vote& v : d.votes(i)) {
            for (std::size_t l = 0; l < n_class; ++l) {
                counts[v.worker](static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(v.label)) += t[l];
            }
        }
    }
    MStep out;
    out.confusions.reserve(d.n_worker());
    for (auto& c : counts) {
        for (Eigen::Index l = 0; l < K; ++l) {
            const double row_sum = c.row(l).sum();
            if (row_sum > 0.0) {
                c.row(l) /= row_sum;
            } else {
                // worker never saw effective class l
                c.row(l).setConstant(1.0 / static_cast<double>(n_class));
            }
        }
        out.confusions.emplace_back(std::move(c));
    }
    for (double& r : rho) r /= static_cast<double>(d.n_task());
    out.prevalence = SoftLabel::normalized(std::move(rho));
    return out;
}

}  // namespace

double ds_log_likelihood(const CrowdDataset& d, const std::vector<ConfusionMatrix>& confusions,
                         const SoftLabel& prevalence, double smoothing) {
    const auto log_pi = log_confusions(confusions, smoothing);
    const Vector log_rho = log_prevalence(prevalence, smoothing);
    Vector joint;
    double total = 0.0;
    for (const auto& votes : d.all_votes()) {
        task_log_joint(votes, log_pi, log_rho, joint);
        total += log_sum_exp(joint);
    }
    return total;
}

DsState dawid_skene(const CrowdDataset& d, const EmConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw ValidationError("EM epsilon must be positive");
    if (cfg.max_iter < 1) throw ValidationError("EM max_iter must be at least 1");
    if (cfg.smoothing < 0.0) throw ValidationError("EM smoothing must be non-negative");

    DsState state;
    state.posteriors = naive_soft(d);
    std::vector<double> probs(d.n_class());
    Vector joint;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        MStep m = ds_m_step(d, state.posteriors);
        state.confusions = std::move(m.confusions);
        state.prevalence = std::move(m.prevalence);

        // E-step, accumulating the marginal log-likelihood on the way
        const auto log_pi = log_confusions(state.confusions, cfg.smoothing);
        const Vector log_rho = log_prevalence(state.prevalence, cfg.smoothing);
        double ll = 0.0;
        for (std::size_t i = 0; i < d.n_task(); ++i) {
            task_log_joint(d.votes(i), log_pi, log_rho, joint);
            const double norm = log_sum_exp(joint);
            ll += norm;
            for (std::size_t l = 0; l < d.n_class(); ++l) probs[l] = std::exp(joint(static_cast<Eigen::Index>(l)) - norm);
            state.posteriors[i] = SoftLabel::normalized(probs);
        }
        if (!std::isfinite(ll)) throw NumericalError("Dawid-Skene: non-finite log-likelihood at iteration " + std::to_string(it));

        state.log_likelihood = ll;
        state.log_likelihood_history.push_back(ll);
        state.iterations = it;
        const auto& h = state.log_likelihood_history;
        if (h.size() >= 2 && std::abs(h[h.size() - 1] - h[h.size() - 2]) < cfg.epsilon) {
            state.converged = true;
            break;
        }
    }
    return state;
}

std::vector<SoftLabel> weighted_ds(const CrowdDataset& d, const std::vector<ConfusionMatrix>& confusions) {
    if (confusions.size() != d.n_worker()) {
        throw DimensionError("weighted_ds: " + std::to_string(confusions.size()) + " confusion matrices for " +
                             std::to_string(d.n_worker()) + " workers");
    }
    std::vector<SoftLabel> out;
    out.reserve(d.n_task());
    for (const auto& votes : d.all_votes()) {
        std::vector<double> score(d.n_class(), 0.0);
        double total = 0.0;
        for (const Vote& v : votes) {
            const double w = confusions[v.worker](v.label, v.label);
            score[v.label] += w;
            total += w;
        }
        if (total > 0.0) {
            out.push_back(SoftLabel::normalized(std::move(score)));
        } else {
            auto counts = vote_counts(votes, d.n_class());
            out.push_back(SoftLabel::normalized(std::move(counts)));
        }
    }
    return out;
}

Matrix aggregate_to_targets(const std::vector<Label>& labels, std::size_t n_class) {
    const auto K = static_cast<Eigen::Index>(n_class);
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), K);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        if (const auto* hard = std::get_if<HardLabel>(&labels[i])) {
            if (hard->cls >= n_class) throw ValidationError("hard label " + std::to_string(hard->cls) + " out of range");
            out(row, static_cast<Eigen::Index>(hard->cls)) = 1.0;
        } else {
            const auto& soft = std::get<SoftLabel>(labels[i]);
            if (soft.size() != n_class) throw DimensionError("soft label has wrong number of classes");
            for (std::size_t k = 0; k < n_class; ++k) out(row, static_cast<Eigen::Index>(k)) = soft[k];
        }
    }
    return out;
}

Matrix aggregate_to_targets(const std::vector<SoftLabel>& labels) {
    if (labels.empty()) return Matrix();
    return aggregate_to_targets(std::vector<Label>(labels.begin(), labels.end()), labels.front().size());
}

Matrix aggregate_to_targets(const std::vector<HardLabel>& labels, std::size_t n_class) {
    return aggregate_to_targets(std::vector<Label>(labels.begin(), labels.end()), n_class);
}

}  // namespace waum
