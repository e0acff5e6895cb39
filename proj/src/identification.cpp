#include "waum/identification.hpp"

#include <algorithm>
#include <cmath>

namespace waum {

std::string to_string(IdentificationMethod m) {
    switch (m) {
        case IdentificationMethod::aum: return "aum";
        case IdentificationMethod::aumc: return "aumc";
        case IdentificationMethod::waum: return "waum";
        case IdentificationMethod::waum_worker_wise: return "waum_worker_wise";
    }
    return "unknown";
}

IdentificationMethod identification_method_from_string(const std::string& name) {
    if (name == "aum") return IdentificationMethod::aum;
    if (name == "aumc") return IdentificationMethod::aumc;
    if (name == "waum") return IdentificationMethod::waum;
    if (name == "waum-ww" || name == "waum_worker_wise" || name == "waum-worker-wise") {
        return IdentificationMethod::waum_worker_wise;
    }
    throw ValidationError("unknown identification method \"" + name + "\"");
}

std::vector<std::size_t> PruneResult::pruned_tasks() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pruned.size(); ++i) {
        if (pruned[i]) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> PruneResult::kept_tasks() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pruned.size(); ++i) {
        if (!pruned[i]) out.push_back(i);
    }
    return out;
}

double area_under_margin(const MarginTrace& trace, std::size_t task, std::size_t label) {
    double total = 0.0;
    for (std::size_t t = 0; t < trace.epochs(); ++t) total += margin(trace.softmax(t, task), label);
    return total / static_cast<double>(trace.epochs());
}

VoteScores aum_per_vote(const MarginTrace& trace, const CrowdDataset& d) {
    if (trace.epochs() == 0) throw DimensionError("AUM needs a trace with at least one epoch");
    if (trace.n_task() != d.n_task() || trace.n_class() != d.n_class()) {
        throw DimensionError("trace covers " + std::to_string(trace.n_task()) + " tasks x " +
                             std::to_string(trace.n_class()) + " classes, dataset has " + std::to_string(d.n_task()) +
                             " x " + std::to_string(d.n_class()));
    }
    VoteScores out;
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        for (const Vote& v : d.votes(i)) out.emplace(VoteKey{i, v.worker}, area_under_margin(trace, i, v.label));
    }
    return out;
}

namespace {

void require_features(const CrowdDataset& d) {
    if (!d.has_features()) throw ValidationError("identification needs task features");
}

MlpSpec spec_for(const CrowdDataset& d, MlpSpec spec) {
    spec.input_dim = static_cast<std::size_t>(d.features().cols());
    spec.n_class = d.n_class();
    return spec;
}

std::vector<SoftLabel> final_softmax_rows(const MarginTrace& trace) {
    std::vector<SoftLabel> out;
    out.reserve(trace.n_task());
    for (std::size_t i = 0; i < trace.n_task(); ++i) {
        auto row = trace.final_softmax(i);
        out.push_back(SoftLabel::normalized(std::vector<double>(row.begin(), row.end())));
    }
    return out;
}

double trust_of(const ConfusionMatrix& confusion, std::span<const double> softmax) {
    double s = 0.0;
    for (std::size_t k = 0; k < softmax.size(); ++k) s += confusion(k, k) * softmax[k];
    return std::clamp(s, 0.0, 1.0);
}

}  // namespace

std::vector<double> aumc(const CrowdDataset& d, const MlpSpec& spec, const TrainConfig& cfg, std::uint64_t mv_seed) {
    require_features(d);
    const auto mv = majority_vote(d, mv_seed);
    const Matrix targets = aggregate_to_targets(mv, d.n_class());
    const TrainResult run = train_with_trace(spec_for(d, spec), cfg, d.features(), targets, d.features());
    std::vector<double> scores(d.n_task());
    for (std::size_t i = 0; i < d.n_task(); ++i) scores[i] = area_under_margin(run.trace, i, mv[i].cls);
    return scores;
}

TrustScores trust_scores(const std::vector<ConfusionMatrix>& confusions, const std::vector<SoftLabel>& final_softmax,
                         const CrowdDataset& d) {
    if (confusions.size() != d.n_worker()) throw DimensionError("trust_scores: one confusion matrix per worker required");
    if (final_softmax.size() != d.n_task()) throw DimensionError("trust_scores: one softmax vector per task required");
    TrustScores out;
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        const auto& probs = final_softmax[i].probs();
        for (const Vote& v : d.votes(i)) out.emplace(VoteKey{i, v.worker}, trust_of(confusions[v.worker], probs));
    }
    return out;
}

double weighted_aum(const std::vector<double>& aums, const std::vector<double>& trust, bool* fell_back) {
    if (aums.empty() || aums.size() != trust.size()) throw DimensionError("weighted_aum: mismatched inputs");
    if (fell_back) *fell_back = false;
    const bool all_equal = std::all_of(trust.begin(), trust.end(), [&](double s) { return s == trust.front(); });
    double weight_total = 0.0;
    for (double s : trust) weight_total += s;
    if (all_equal || !(weight_total > 0.0)) {
        if (fell_back && !(weight_total > 0.0)) *fell_back = true;
        double total = 0.0;
        for (double a : aums) total += a;
        return total / static_cast<double>(aums.size());
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < aums.size(); ++j) weighted += trust[j] * aums[j];
    const auto [lo, hi] = std::minmax_element(aums.begin(), aums.end());
    // a convex combination; the clamp only absorbs rounding
    return std::clamp(weighted / weight_total, *lo, *hi);
}

WaumScores combine_waum(const CrowdDataset& d, const VoteScores& per_vote_aum, const TrustScores& trust) {
    WaumScores out;
    out.scores.resize(d.n_task());
    std::vector<double> aums;
    std::vector<double> weights;
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        aums.clear();
        weights.clear();
        for (const Vote& v : d.votes(i)) {
            const VoteKey key{i, v.worker};
            const auto a = per_vote_aum.find(key);
            const auto s = trust.find(key);
            if (a == per_vote_aum.end() || s == trust.end()) {
                throw DimensionError("missing AUM or trust score for task " + std::to_string(i) + ", worker " +
                                     std::to_string(v.worker));
            }
            aums.push_back(a->second);
            weights.push_back(s->second);
        }
        bool fell_back = false;
        out.scores[i] = weighted_aum(aums, weights, &fell_back);
        if (fell_back) out.fallback_tasks.push_back(i);
    }
    out.per_vote_aum = per_vote_aum;
    out.trust = trust;
    return out;
}

WaumScores stacked_waum(const CrowdDataset& d, const MlpSpec& spec, const TrainConfig& cfg, const EmConfig& em) {
    require_features(d);
    const DsState ds = dawid_skene(d, em);

    // one training row per vote, ordered by (task, worker)
    const auto K = static_cast<Eigen::Index>(d.n_class());
    Matrix x(static_cast<Eigen::Index>(d.n_votes()), d.features().cols());
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(d.n_votes()), K);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < d.n_task(); ++i) {
        for (const Vote& v : d.votes(i)) {
            x.row(row) = d.features().row(static_cast<Eigen::Index>(i));
            y(row, static_cast<Eigen::Index>(v.label)) = 1.0;
            ++row;
        }
    }
    const TrainResult run = train_with_trace(spec_for(d, spec), cfg, x, y, d.features());
    const VoteScores aums = aum_per_vote(run.trace, d);
    const TrustScores trust = trust_scores(ds.confusions, final_softmax_rows(run.trace), d);
    WaumScores out = combine_waum(d, aums, trust);
    out.training_runs = 1;
    return out;
}

WaumScores worker_wise_waum(const CrowdDataset& d, const MlpSpec& spec, const TrainConfig& cfg, const EmConfig& em) {
    require_features(d);
    const DsState ds = dawid_skene(d, em);
    const auto tasks_of = task_sets(d);
    const auto K = static_cast<Eigen::Index>(d.n_class());

    VoteScores aums;
    TrustScores trust;
    std::size_t runs = 0;
    for (std::size_t j = 0; j < d.n_worker(); ++j) {
        const auto& tasks = tasks_of[j];
        if (tasks.empty()) continue;
        Matrix x(static_cast<Eigen::Index>(tasks.size()), d.features().cols());
        Matrix y = Matrix::Zero(static_cast<Eigen::Index>(tasks.size()), K);
        std::vector<std::size_t> labels(tasks.size());
        for (std::size_t r = 0; r < tasks.size(); ++r) {
            const std::size_t i = tasks[r];
            x.row(static_cast<Eigen::Index>(r)) = d.features().row(static_cast<Eigen::Index>(i));
            for (const Vote& v : d.votes(i)) {
                if (v.worker == j) labels[r] = v.label;
            }
            y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(labels[r])) = 1.0;
        }
        MlpSpec worker_spec = spec_for(d, spec);
        worker_spec.seed = spec.seed + j;
        TrainConfig worker_cfg = cfg;
        worker_cfg.shuffle_seed = cfg.shuffle_seed + j;
        worker_cfg.batch_size = std::min(cfg.batch_size, tasks.size());
        const TrainResult run = train_with_trace(worker_spec, worker_cfg, x, y, x);
        ++runs;
        for (std::size_t r = 0; r < tasks.size(); ++r) {
            const VoteKey key{tasks[r], j};
            aums.emplace(key, area_under_margin(run.trace, r, labels[r]));
            trust.emplace(key, trust_of(ds.confusions[j], run.trace.final_softmax(r)));
        }
    }
    WaumScores out = combine_waum(d, aums, trust);
    out.training_runs = runs;
    return out;
}

PruneResult prune(const std::vector<double>& scores, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
    PruneResult out;
    out.pruned.assign(scores.size(), false);
    if (scores.empty()) return out;
    const double n = static_cast<double>(scores.size());
    // the small offset keeps products like 0.3 * 10 from rounding up a rank
    auto k = static_cast<std::size_t>(std::ceil(alpha * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, scores.size());
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    out.threshold = sorted[k - 1];
    for (std::size_t i = 0; i < scores.size(); ++i) out.pruned[i] = scores[i] < out.threshold;
    return out;
}

std::vector<double> entropy_per_task(const std::vector<SoftLabel>& labels) {
    std::vector<double> out;
    out.reserve(labels.size());
    for (const auto& label : labels) {
        double h = 0.0;
        for (double p : label.probs()) {
            if (p > 0.0) h -= p * std::log(p);
        }
        out.push_back(h);
    }
    return out;
}

IdentificationReport identify(const CrowdDataset& d, IdentificationMethod method, double alpha, const MlpSpec& spec,
                              const TrainConfig& cfg, const EmConfig& em, std::uint64_t mv_seed) {
    IdentificationReport report;
    report.method = method;
    report.alpha = alpha;
    switch (method) {
        case IdentificationMethod::aumc:
            report.scores = aumc(d, spec, cfg, mv_seed);
            report.training_runs = 1;
            break;
        case IdentificationMethod::aum: {
            // stacked per-vote AUMs with equal weights
            WaumScores w = stacked_waum(d, spec, cfg, em);
            for (auto& [key, s] : w.trust) s = 1.0;
            w = combine_waum(d, w.per_vote_aum, w.trust);
            report.scores = std::move(w.scores);
            report.per_vote_aum = std::move(w.per_vote_aum);
            report.training_runs = 1;
            break;
        }
        case IdentificationMethod::waum:
        case IdentificationMethod::waum_worker_wise: {
            WaumScores w = method == IdentificationMethod::waum ? stacked_waum(d, spec, cfg, em) : worker_wise_waum(d, spec, cfg, em);
            report.scores = std::move(w.scores);
            report.per_vote_aum = std::move(w.per_vote_aum);
            report.trust = std::move(w.trust);
            report.fallback_tasks = std::move(w.fallback_tasks);
            report.training_runs = w.training_runs;
            break;
        }
    }
    const PruneResult p = prune(report.scores, alpha);
    report.threshold = p.threshold;
    report.pruned_mask = p.pruned;
    return report;
}

}  // namespace waum
