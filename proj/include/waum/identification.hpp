#pragma once

// Ambiguous-task identification from training dynamics: per-vote AUM, AUMC,
// trust scores, WAUM (stacked and worker-wise) and quantile pruning.
//
// Low scores flag tasks whose labels the network struggles to fit. Pruning
// removes every task scoring strictly below the alpha-quantile.

#include "waum/aggregation.hpp"
#include "waum/dataset.hpp"
#include "waum/mlp.hpp"

#include <compare>
#include <map>
#include <string>
#include <vector>

namespace waum {

struct VoteKey {
    std::size_t task = 0;
    std::size_t worker = 0;
    friend auto operator<=>(const VoteKey&, const VoteKey&) = default;
};

using VoteScores = std::map<VoteKey, double>;
using TrustScores = VoteScores;  // s^(j)(x_i) in [0, 1]

enum class IdentificationMethod { aum, aumc, waum, waum_worker_wise };

std::string to_string(IdentificationMethod m);
IdentificationMethod identification_method_from_string(const std::string& name);

struct PruneResult {
    double threshold = 0.0;
    std::vector<bool> pruned;  // true = removed
    [[nodiscard]] std::vector<std::size_t> pruned_tasks() const;
    [[nodiscard]] std::vector<std::size_t> kept_tasks() const;
};

struct IdentificationReport {
    IdentificationMethod method = IdentificationMethod::waum;
    std::vector<double> scores;  // one per task
    VoteScores per_vote_aum;     // empty for aumc
    TrustScores trust;           // empty for aumc
    double alpha = 0.0;
    double threshold = 0.0;
    std::vector<bool> pruned_mask;
    std::vector<std::size_t> fallback_tasks;  // tasks whose trust weights summed to zero
    std::size_t training_runs = 0;
};

// Mean over epochs of margin(softmax, vote) for every vote. The trace rows
// must be the dataset's tasks in order.
VoteScores aum_per_vote(const MarginTrace& trace, const CrowdDataset& d);

// Margin averaged over epochs for one (task, label) pair.
double area_under_margin(const MarginTrace& trace, std::size_t task, std::size_t label);

// AUM of the majority-vote label, from one network trained on one-hot MV targets.
std::vector<double> aumc(const CrowdDataset& d, const MlpSpec& spec, const TrainConfig& cfg, std::uint64_t mv_seed);

// s^(j)(x_i) = <diag(pi^(j)), softmax_i> for each vote.
TrustScores trust_scores(const std::vector<ConfusionMatrix>& confusions, const std::vector<SoftLabel>& final_softmax,
                         const CrowdDataset& d);

// Trust-weighted mean of one task's per-vote AUMs. Equal weights reduce to
// the plain mean; an all-zero weight vector falls back to it as well (and
// sets *fell_back when given).
double weighted_aum(const std::vector<double>& aums, const std::vector<double>& trust, bool* fell_back = nullptr);

struct WaumScores {
    std::vector<double> scores;
    TrustScores trust;
    VoteScores per_vote_aum;
    std::vector<std::size_t> fallback_tasks;
    std::size_t training_runs = 0;
};

// Combines per-vote AUMs and trust scores task by task.
WaumScores combine_waum(const CrowdDataset& d, const VoteScores& per_vote_aum, const TrustScores& trust);

// One network trained on every vote (one row per vote), confusions from DS.
WaumScores stacked_waum(const CrowdDataset& d, const MlpSpec& spec, const TrainConfig& cfg, const EmConfig& em = {});

// One fresh network per worker, each trained only on that worker's answers.
// Worker j uses seeds spec.seed + j and cfg.shuffle_seed + j.
WaumScores worker_wise_waum(const CrowdDataset& d, const MlpSpec& spec, const TrainConfig& cfg, const EmConfig& em = {});

// Nearest-rank alpha-quantile q (k = ceil(alpha * n), k = 1 for alpha = 0);
// tasks with score < q are pruned.
PruneResult prune(const std::vector<double>& scores, double alpha);

// Shannon entropy (natural log) of each soft label.
std::vector<double> entropy_per_task(const std::vector<SoftLabel>& labels);

// Runs the selected method and prunes at alpha.
IdentificationReport identify(const CrowdDataset& d, IdentificationMethod method, double alpha, const MlpSpec& spec,
                              const TrainConfig& cfg, const EmConfig& em = {}, std::uint64_t mv_seed = 0);

}  // namespace waum
