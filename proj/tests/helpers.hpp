#pragma once

#include "waum/dataset.hpp"
#include "waum/seeding.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace testing_support {

// Random dataset: each task gets between 1 and n_worker distinct voters with
// uniformly random answers.
inline waum::CrowdDataset random_dataset(std::uint64_t seed, std::size_t n_task, std::size_t n_worker,
                                         std::size_t n_class, std::size_t n_features = 0) {
    waum::Rng rng(seed);
    std::vector<std::vector<waum::Vote>> votes(n_task);
    std::vector<std::size_t> pool(n_worker);
    for (auto& task : votes) {
        const std::size_t count = 1 + waum::uniform_index(rng, n_worker);
        for (std::size_t j = 0; j < n_worker; ++j) pool[j] = j;
        for (std::size_t c = 0; c < count; ++c) {
            std::swap(pool[c], pool[c + waum::uniform_index(rng, n_worker - c)]);
            task.push_back({pool[c], waum::uniform_index(rng, n_class)});
        }
    }
    waum::Matrix x;
    if (n_features > 0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        x.resize(static_cast<Eigen::Index>(n_task), static_cast<Eigen::Index>(n_features));
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = gauss(rng);
        }
    }
    return waum::CrowdDataset(std::move(votes), n_worker, n_class, x);
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("waum_tests_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
