#include "waum/metrics.hpp"

#include "waum/seeding.hpp"

#include <algorithm>
#include <cmath>

namespace waum {

namespace {

void check_shapes(const Matrix& pred, const std::vector<HardLabel>& truth) {
    if (static_cast<std::size_t>(pred.rows()) != truth.size()) {
        throw DimensionError("predictions have " + std::to_string(pred.rows()) + " rows, truth has " +
                             std::to_string(truth.size()) + " entries");
    }
    if (truth.empty()) throw ValidationError("no samples to evaluate");
    for (const auto& t : truth) {
        if (t.cls >= static_cast<std::size_t>(pred.cols())) throw ValidationError("truth class out of range");
    }
}

}  // namespace

std::vector<std::size_t> seeded_argmax(const Matrix& pred, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> out(static_cast<std::size_t>(pred.rows()));
    std::vector<std::size_t> best;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        const double top = pred.row(r).maxCoeff();
        best.clear();
        for (Eigen::Index k = 0; k < pred.cols(); ++k) {
            if (pred(r, k) == top) best.push_back(static_cast<std::size_t>(k));
        }
        out[static_cast<std::size_t>(r)] = best.size() == 1 ? best[0] : best[uniform_index(rng, best.size())];
    }
    return out;
}

double accuracy(const Matrix& pred, const std::vector<HardLabel>& truth, std::uint64_t seed) {
    check_shapes(pred, truth);
    const auto guess = seeded_argmax(pred, seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += guess[i] == truth[i].cls;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double ece(const Matrix& pred, const std::vector<HardLabel>& truth, const EceConfig& cfg) {
    if (cfg.n_bins < 1) throw ValidationError("ECE needs at least one bin");
    check_shapes(pred, truth);
    const auto guess = seeded_argmax(pred, cfg.seed);
    const std::size_t M = cfg.n_bins;
    std::vector<std::size_t> hits(M, 0);
    std::vector<std::vector<double>> conf(M);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double c = pred.row(static_cast<Eigen::Index>(i)).maxCoeff();
        const double scaled = std::ceil(c * static_cast<double>(M));
        const auto m = static_cast<std::size_t>(std::clamp(scaled, 1.0, static_cast<double>(M))) - 1;
        hits[m] += guess[i] == truth[i].cls;
        conf[m].push_back(c);
    }
    const double n = static_cast<double>(truth.size());
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        if (conf[m].empty()) continue;
        // summing in sorted order makes the result independent of sample order
        std::sort(conf[m].begin(), conf[m].end());
        double conf_sum = 0.0;
        for (double c : conf[m]) conf_sum += c;
        const double size = static_cast<double>(conf[m].size());
        total += (size / n) * std::abs(static_cast<double>(hits[m]) / size - conf_sum / size);
    }
    return std::clamp(total, 0.0, 1.0);
}

}  // namespace waum
