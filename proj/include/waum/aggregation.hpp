#pragma once

// Feature-blind label aggregation: majority vote, naive soft, Dawid-Skene EM
// and the DS-weighted vote.

#include "waum/dataset.hpp"
#include "waum/types.hpp"

#include <cstdint>
#include <vector>

namespace waum {

// Row-stochastic K x K worker error model; entry (l, k) = P(answer k | truth l).
class ConfusionMatrix {
  public:
    ConfusionMatrix() = default;
    // Throws ValidationError if the matrix is not square or a row is off the simplex.
    explicit ConfusionMatrix(Matrix entries);

    static ConfusionMatrix identity(std::size_t n_class);
    static ConfusionMatrix uniform(std::size_t n_class);
    // diag on the diagonal, the remainder spread evenly over the other classes.
    static ConfusionMatrix symmetric(std::size_t n_class, double diag);

    [[nodiscard]] std::size_t n_class() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    [[nodiscard]] double operator()(std::size_t truth, std::size_t answer) const {
        return entries_(static_cast<Eigen::Index>(truth), static_cast<Eigen::Index>(answer));
    }
    [[nodiscard]] Vector diagonal() const { return entries_.diagonal(); }
    [[nodiscard]] const Matrix& entries() const noexcept { return entries_; }

  private:
    Matrix entries_;
};

struct EmConfig {
    double epsilon = 1e-6;
    std::size_t max_iter = 200;
    double smoothing = 1e-12;  // added inside every log
};

struct DsState {
    std::vector<ConfusionMatrix> confusions;  // one per worker
    SoftLabel prevalence;
    std::vector<SoftLabel> posteriors;        // one per task
    double log_likelihood = 0.0;
    // Marginal log-likelihood after each M-step, in iteration order.
    std::vector<double> log_likelihood_history;
    std::size_t iterations = 0;
    bool converged = false;
};

// Mode of the votes; ties are broken by a uniform draw seeded with `seed`.
std::vector<HardLabel> majority_vote(const CrowdDataset& d, std::uint64_t seed);

// Empirical vote distribution per task.
std::vector<SoftLabel> naive_soft(const CrowdDataset& d);

// Dawid-Skene model fit by EM, initialized from naive_soft. Stops once the
// marginal log-likelihood moves by less than cfg.epsilon or after cfg.max_iter
// iterations (flagged as not converged, not an error).
DsState dawid_skene(const CrowdDataset& d, const EmConfig& cfg = {});

// log P(votes | confusions, prevalence) with the task labels marginalized out.
double ds_log_likelihood(const CrowdDataset& d, const std::vector<ConfusionMatrix>& confusions,
                         const SoftLabel& prevalence, double smoothing = 1e-12);

// Votes weighted by the voter's diagonal confusion entry for the voted class.
// Tasks where every weight is zero fall back to naive_soft.
std::vector<SoftLabel> weighted_ds(const CrowdDataset& d, const std::vector<ConfusionMatrix>& confusions);

// Stacks labels into a row-per-task training target matrix (hard labels one-hot).
Matrix aggregate_to_targets(const std::vector<Label>& labels, std::size_t n_class);
Matrix aggregate_to_targets(const std::vector<SoftLabel>& labels);
Matrix aggregate_to_targets(const std::vector<HardLabel>& labels, std::size_t n_class);

}  // namespace waum
