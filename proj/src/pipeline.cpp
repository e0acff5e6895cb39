#include "waum/pipeline.hpp"

#include "waum/seeding.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

namespace waum {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::mv: return "mv";
        case Strategy::ns: return "ns";
        case Strategy::ds: return "ds";
        case Strategy::wds: return "wds";
        case Strategy::glad: return "glad";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "mv") return Strategy::mv;
    if (name == "ns") return Strategy::ns;
    if (name == "ds") return Strategy::ds;
    if (name == "wds") return Strategy::wds;
    if (name == "glad") return Strategy::glad;
    throw ValidationError("unknown strategy \"" + name + "\"");
}

std::vector<SoftLabel> aggregate(const CrowdDataset& d, Strategy s, const EmConfig& em, const GladConfig& glad_cfg,
                                 std::uint64_t seed) {
    switch (s) {
        case Strategy::mv: {
            std::vector<SoftLabel> out;
            for (const auto& h : majority_vote(d, seed)) out.push_back(SoftLabel::one_hot(h.cls, d.n_class()));
            return out;
        }
        case Strategy::ns: return naive_soft(d);
        case Strategy::ds: return dawid_skene(d, em).posteriors;
        case Strategy::wds: return weighted_ds(d, dawid_skene(d, em).confusions);
        case Strategy::glad: {
            GladState state = glad(d, glad_cfg);
            if (state.numerically_failed) throw NumericalError("GLAD produced a non-finite likelihood");
            return std::move(state.posteriors);
        }
    }
    return {};
}

TrainConfig PipelineConfig::default_classifier_train() {
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.lr_decay_epochs = {50, 100};
    return cfg;
}

namespace {

// Re-raises a stage failure with the stage name in front, keeping its category.
template <typename F>
auto stage(const std::string& name, F&& fn) {
    try {
        return fn();
    } catch (const NumericalError& e) {
        throw NumericalError(name + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(name + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(name + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(name + ": " + e.what());
    }
}

struct Problem {
    CrowdDataset train;
    Matrix test_features;
    std::vector<HardLabel> test_truth;
};

Problem load_problem(const PipelineConfig& cfg, std::size_t rep) {
    if (cfg.files) {
        const FileSources& f = *cfg.files;
        CrowdDataset train = load_dataset(f.votes, f.features, f.n_class);
        Matrix test = load_features(f.test_features);
        std::vector<HardLabel> truth;
        for (std::size_t t : load_ground_truth(f.test_truth, f.n_class)) truth.push_back(HardLabel{t});
        if (static_cast<std::size_t>(test.rows()) != truth.size()) throw DimensionError("test features and truth differ in length");
        return {std::move(train), std::move(test), std::move(truth)};
    }
    Scenario s = scenario_by_name(cfg.protocol, derive_seed(cfg.master_seed, "data", rep));
    if (s.test_truth.empty()) throw ValidationError("protocol " + cfg.protocol + " has no test split");
    std::vector<HardLabel> truth;
    for (std::size_t t : s.test_truth) truth.push_back(HardLabel{t});
    return {std::move(s.train), std::move(s.test_features), std::move(truth)};
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    if (cfg.repeat < 1) throw ValidationError("repeat must be at least 1");
    if (cfg.strategies.empty() || cfg.alphas.empty()) throw ValidationError("need at least one strategy and one alpha");
    bool any_pruning = false;
    for (double a : cfg.alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
        any_pruning = any_pruning || a > 0.0;
    }

    PipelineResult result;
    for (std::size_t rep = 0; rep < cfg.repeat; ++rep) {
        const Problem problem = stage("load", [&] { return load_problem(cfg, rep); });
        const CrowdDataset& d = problem.train;

        std::vector<double> scores;
        if (any_pruning) {
            MlpSpec net = cfg.identification_net;
            net.seed = derive_seed(cfg.master_seed, "identification_net", rep);
            TrainConfig train_cfg = cfg.identification_train;
            train_cfg.shuffle_seed = derive_seed(cfg.master_seed, "identification_shuffle", rep);
            scores = stage("identify", [&] {
                return identify(d, cfg.method, 0.0, net, train_cfg, cfg.em, derive_seed(cfg.master_seed, "identification_mv", rep))
                    .scores;
            });
        }

        for (Strategy strategy : cfg.strategies) {
            for (double alpha : cfg.alphas) {
                std::vector<std::size_t> kept;
                if (alpha > 0.0) {
                    kept = prune(scores, alpha).kept_tasks();
                } else {
                    for (std::size_t i = 0; i < d.n_task(); ++i) kept.push_back(i);
                }
                const CrowdDataset pruned = d.subset(kept);
                const auto labels = stage("aggregate", [&] {
                    return aggregate(pruned, strategy, cfg.em, cfg.glad, derive_seed(cfg.master_seed, "aggregate", rep));
                });
                MlpSpec net = cfg.classifier_net;
                net.input_dim = static_cast<std::size_t>(pruned.features().cols());
                net.n_class = pruned.n_class();
                net.seed = derive_seed(cfg.master_seed, "classifier_net", rep);
                TrainConfig train_cfg = cfg.classifier_train;
                train_cfg.shuffle_seed = derive_seed(cfg.master_seed, "classifier_shuffle", rep);
                const Mlp model =
                    stage("train", [&] { return train(net, train_cfg, pruned.features(), aggregate_to_targets(labels)); });
                const Matrix pred = model.predict_proba(problem.test_features);
                RunRecord run{strategy, alpha, rep, kept.size(), 0.0, 0.0};
                const std::uint64_t eval_seed = derive_seed(cfg.master_seed, "evaluate", rep);
                run.accuracy = stage("evaluate", [&] { return accuracy(pred, problem.test_truth, eval_seed); });
                EceConfig ece_cfg = cfg.ece;
                ece_cfg.seed = eval_seed;
                run.ece = stage("evaluate", [&] { return ece(pred, problem.test_truth, ece_cfg); });
                result.runs.push_back(run);
            }
        }
    }

    for (Strategy strategy : cfg.strategies) {
        for (double alpha : cfg.alphas) {
            std::vector<double> acc;
            std::vector<double> cal;
            for (const auto& run : result.runs) {
                if (run.strategy == strategy && run.alpha == alpha) {
                    acc.push_back(run.accuracy);
                    cal.push_back(run.ece);
                }
            }
            result.rows.push_back({strategy, alpha, mean(acc), sample_std(acc), mean(cal), sample_std(cal)});
        }
    }
    return result;
}

std::string results_to_json(const std::vector<ResultRow>& rows) {
    std::string out = "[";
    char buf[256];
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const ResultRow& row = rows[r];
        std::snprintf(buf, sizeof buf,
                      "%s\n  {\"acc_mean\": %.4f, \"acc_std\": %.4f, \"alpha\": %.4f, \"ece_mean\": %.4f, "
                      "\"ece_std\": %.4f, \"strategy\": \"%s\"}",
                      r == 0 ? "" : ",", row.acc_mean, row.acc_std, row.alpha, row.ece_mean, row.ece_std,
                      to_string(row.strategy).c_str());
        out += buf;
    }
    out += rows.empty() ? "]\n" : "\n]\n";
    return out;
}

PipelineConfig three_circles_config(std::uint64_t master_seed, std::size_t repeat) {
    PipelineConfig cfg;
    cfg.protocol = "three_circles";
    cfg.strategies = {Strategy::wds};
    cfg.alphas = {0.0, 0.1, 0.25};
    cfg.method = IdentificationMethod::waum;
    cfg.repeat = repeat;
    cfg.master_seed = master_seed;
    return cfg;
}

}  // namespace waum
