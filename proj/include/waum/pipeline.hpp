#pragma once

// End-to-end runs: identify ambiguous tasks, prune, aggregate, retrain and
// evaluate on held-out tasks, repeated over seeds.

#include "waum/aggregation.hpp"
#include "waum/glad.hpp"
#include "waum/identification.hpp"
#include "waum/metrics.hpp"
#include "waum/mlp.hpp"
#include "waum/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace waum {

enum class Strategy { mv, ns, ds, wds, glad };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

// Labels for the training targets of one strategy. `seed` only matters for
// MV ties.
std::vector<SoftLabel> aggregate(const CrowdDataset& d, Strategy s, const EmConfig& em, const GladConfig& glad,
                                 std::uint64_t seed);

// Data read from disk instead of a simulated protocol.
struct FileSources {
    std::filesystem::path votes;
    std::filesystem::path features;
    std::filesystem::path test_features;
    std::filesystem::path test_truth;
    std::size_t n_class = 0;
};

struct PipelineConfig {
    std::string protocol = "three_circles";  // ignored when files is set
    std::optional<FileSources> files;
    std::vector<Strategy> strategies{Strategy::wds};
    std::vector<double> alphas{0.0, 0.1, 0.25};
    IdentificationMethod method = IdentificationMethod::waum;

    MlpSpec identification_net;
    TrainConfig identification_train;  // 50 epochs
    MlpSpec classifier_net;
    TrainConfig classifier_train = default_classifier_train();

    EmConfig em;
    GladConfig glad;
    EceConfig ece;
    std::size_t repeat = 10;
    std::uint64_t master_seed = 0;

    static TrainConfig default_classifier_train();
};

struct RunRecord {
    Strategy strategy = Strategy::wds;
    double alpha = 0.0;
    std::size_t repetition = 0;
    std::size_t kept_tasks = 0;
    double accuracy = 0.0;
    double ece = 0.0;
};

struct ResultRow {
    Strategy strategy = Strategy::wds;
    double alpha = 0.0;
    double acc_mean = 0.0;
    double acc_std = 0.0;  // sample standard deviation, 0 for a single run
    double ece_mean = 0.0;
    double ece_std = 0.0;
};

struct PipelineResult {
    std::vector<ResultRow> rows;  // strategies outer, alphas inner, in config order
    std::vector<RunRecord> runs;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// JSON array of rows, keys sorted, every number with four decimals.
std::string results_to_json(const std::vector<ResultRow>& rows);

// Configuration of the three_circles reproduction: WDS at alpha 0, 0.1, 0.25.
PipelineConfig three_circles_config(std::uint64_t master_seed, std::size_t repeat = 10);

}  // namespace waum
