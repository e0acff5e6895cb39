#pragma once

// Synthetic point clouds, simulated crowds and the canned experiment setups
// used by the CLI and the tests.

#include "waum/aggregation.hpp"
#include "waum/dataset.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace waum {

enum class Generator { circles, moons, blobs };

std::string to_string(Generator g);
Generator generator_from_string(const std::string& name);

// Angular band (radians, counter-clockwise from +x) where circles points get
// a larger radial noise, so neighbouring rings overlap there.
struct AmbiguousSector {
    double start = 0.0;
    double stop = 1.5707963267948966;
    double noise = 0.2;
};

struct SyntheticSpec {
    Generator generator = Generator::circles;
    std::size_t n_task = 750;
    double noise = 0.05;  // radial (circles), isotropic (moons, blobs)
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
    std::size_t n_class = 3;     // circles and blobs; moons is always 2
    std::size_t n_features = 2;  // blobs only
    double spread = 5.0;         // blobs: radius of the circle carrying the centers
    std::optional<AmbiguousSector> sector;
};

struct TaskSplit {
    Matrix train_features;
    std::vector<std::size_t> train_truth;
    Matrix test_features;
    std::vector<std::size_t> test_truth;
};

// Seeded point cloud with planted labels, shuffled and split so that the
// test part holds round(test_fraction * n_task) points.
TaskSplit generate_tasks(const SyntheticSpec& spec);

enum class WorkerKind { confusion, weak_linear, weak_boosted };

std::string to_string(WorkerKind k);
WorkerKind worker_kind_from_string(const std::string& name);

struct WorkerSpec {
    WorkerKind kind = WorkerKind::confusion;
    ConfusionMatrix confusion;   // confusion
    std::size_t max_iter = 20;   // weak_linear: gradient steps
    double learning_rate = 0.5;  // weak_linear and weak_boosted
    std::size_t n_stumps = 10;   // weak_boosted: boosting rounds
    double subsample = 1.0;      // weak_boosted: row fraction per round
    std::uint64_t seed = 0;
};

struct VotesPerTask {
    std::size_t min = 1;
    std::size_t max = 1;
};

// Answers of one worker on every task. Confusion workers sample their row of
// the true class; weak workers are fit on (features, truth) and answer their
// own prediction.
std::vector<std::size_t> worker_answers(const WorkerSpec& worker, const Matrix& features,
                                        const std::vector<std::size_t>& truth, std::size_t n_class,
                                        std::uint64_t seed);

// Each task gets a count drawn uniformly in [min, max] and that many distinct
// workers drawn uniformly.
CrowdDataset simulate_votes(const Matrix& features, const std::vector<std::size_t>& truth, std::size_t n_class,
                            const std::vector<WorkerSpec>& workers, VotesPerTask votes_per_task, std::uint64_t seed);

// Workers as JSON: [{"kind": "confusion", "confusion": [[..],..]}, {"kind": "weak_linear", "max_iter": 20}, ...]
std::vector<WorkerSpec> parse_workers(const std::string& json_text, std::size_t n_class);

// Angular band where every vote is replaced, with probability `rate`, by a
// uniformly drawn class. Angles in [0, 2pi) from the first two features.
struct DisagreementSector {
    double start = 0.0;
    double stop = 1.5707963267948966;
    double rate = 0.6;
};

CrowdDataset scramble_sector(const CrowdDataset& d, const DisagreementSector& sector, std::uint64_t seed);

struct Scenario {
    std::string name;
    CrowdDataset train;
    std::vector<std::size_t> train_truth;
    Matrix test_features;
    std::vector<std::size_t> test_truth;
    std::vector<bool> planted;  // tasks deliberately made ambiguous or corrupted, if any
};

// Three rings, three feature-aware workers of different capacity answering
// every task, votes scrambled in a north-east sector. 525 train / 225 test.
Scenario three_circles(std::uint64_t seed);

// Two moons (500 points, noise 0.2), same worker mix as three_circles.
Scenario two_moons(std::uint64_t seed);

// Four blobs, 1000 points, 30 mixed workers, 1 to 5 votes per task.
Scenario many_workers(std::uint64_t seed);

// 200 well separated binary blobs, 5 good workers, 10 tasks of one blob
// whose votes are all flipped (marked in `planted`). No test split.
Scenario planted_corruption(std::uint64_t seed);

Scenario scenario_by_name(const std::string& name, std::uint64_t seed);

}  // namespace waum
