#pragma once

// Crowdsourced dataset: tasks (feature rows) and sparse worker votes.
//
// Indices are 0-based everywhere (files and API). Ground truth is kept out of
// CrowdDataset on purpose; it is loaded separately and only the evaluation and
// simulation code ever sees it.

#include "waum/types.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace waum {

struct Vote {
    std::size_t worker = 0;
    std::size_t label = 0;
    friend bool operator==(const Vote&, const Vote&) = default;
};

class CrowdDataset {
  public:
    // votes[i] lists the answers for task i; it is sorted by worker on
    // construction. Throws ValidationError on any out-of-range index, a task
    // without votes, or a worker voting twice on one task.
    CrowdDataset(std::vector<std::vector<Vote>> votes, std::size_t n_worker, std::size_t n_class,
                 Matrix features = Matrix());

    [[nodiscard]] std::size_t n_task() const noexcept { return votes_.size(); }
    [[nodiscard]] std::size_t n_worker() const noexcept { return n_worker_; }
    [[nodiscard]] std::size_t n_class() const noexcept { return n_class_; }
    [[nodiscard]] std::size_t n_votes() const noexcept { return n_votes_; }
    [[nodiscard]] bool has_features() const noexcept { return features_.cols() > 0; }
    [[nodiscard]] const Matrix& features() const noexcept { return features_; }

    [[nodiscard]] const std::vector<Vote>& votes(std::size_t task) const { return votes_.at(task); }
    [[nodiscard]] const std::vector<std::vector<Vote>>& all_votes() const noexcept { return votes_; }

    // Restriction to the given tasks (in the given order), re-indexed 0..n-1.
    // Worker indices and n_worker are preserved.
    [[nodiscard]] CrowdDataset subset(const std::vector<std::size_t>& tasks) const;

    friend bool operator==(const CrowdDataset&, const CrowdDataset&);

  private:
    std::vector<std::vector<Vote>> votes_;
    std::size_t n_worker_ = 0;
    std::size_t n_class_ = 0;
    std::size_t n_votes_ = 0;
    Matrix features_;
};

// A(x_i): the workers who answered task i, sorted.
std::vector<std::vector<std::size_t>> annotator_sets(const CrowdDataset& d);
// T(w_j): the tasks answered by worker j, sorted.
std::vector<std::vector<std::size_t>> task_sets(const CrowdDataset& d);

// ---- file formats --------------------------------------------------------
//
// votes:    {"<task>": {"<worker>": <class>, ...}, ...}
// features: CSV, one row per task in task order, no header
// truth:    one class index per line

CrowdDataset parse_votes(const std::string& json_text, std::size_t n_class);
CrowdDataset load_votes(const std::filesystem::path& votes_path, std::size_t n_class);
CrowdDataset load_dataset(const std::filesystem::path& votes_path, const std::filesystem::path& features_path,
                          std::size_t n_class);

// Canonical form: compact JSON, keys sorted, trailing newline.
std::string votes_to_json(const CrowdDataset& d);
void save_votes(const CrowdDataset& d, const std::filesystem::path& votes_path);

Matrix parse_features_csv(const std::string& text);
Matrix load_features(const std::filesystem::path& path);
void save_features(const Matrix& features, const std::filesystem::path& path);

std::vector<std::size_t> load_ground_truth(const std::filesystem::path& path, std::size_t n_class);
void save_ground_truth(const std::vector<std::size_t>& truth, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace waum
