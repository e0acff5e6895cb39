#pragma once

// Small fully connected ReLU network trained by mini-batch SGD on soft
// targets. train_with_trace records the softmax output of every evaluation
// task after each epoch, which is what the margin statistics are built from.

#include "waum/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace waum {

struct MlpSpec {
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden_sizes{30, 20, 20};
    std::size_t n_class = 2;
    std::uint64_t seed = 0;
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::vector<std::size_t> lr_decay_epochs;  // 1-based epochs after which the rate decays
    double lr_decay_factor = 0.1;
    std::uint64_t shuffle_seed = 0;
};

// Learning rate used during epoch `epoch` (1-based).
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

struct DenseLayer {
    Matrix weight;  // fan_in x fan_out
    Vector bias;    // fan_out
};

class Mlp {
  public:
    // Uniform fan-in initialization, bound 1/sqrt(fan_in), seeded by spec.seed.
    explicit Mlp(const MlpSpec& spec);

    [[nodiscard]] const MlpSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::vector<DenseLayer>& layers() noexcept { return layers_; }
    [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] Matrix logits(const Matrix& x) const;
    [[nodiscard]] Matrix predict_proba(const Matrix& x) const;

  private:
    MlpSpec spec_;
    std::vector<DenseLayer> layers_;
};

// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

// Mean soft-target cross-entropy over the rows of x and its gradient with
// respect to every layer (same shapes as Mlp::layers()). Weight decay is not
// part of this loss.
struct LossAndGradient {
    double loss = 0.0;
    std::vector<DenseLayer> grad;
};
LossAndGradient loss_and_gradient(const Mlp& model, const Matrix& x, const Matrix& targets);

// Softmax vectors indexed (epoch, task, class), epochs 0-based here.
class MarginTrace {
  public:
    MarginTrace() = default;
    MarginTrace(std::size_t epochs, std::size_t n_task, std::size_t n_class);

    [[nodiscard]] std::size_t epochs() const noexcept { return epochs_; }
    [[nodiscard]] std::size_t n_task() const noexcept { return n_task_; }
    [[nodiscard]] std::size_t n_class() const noexcept { return n_class_; }

    [[nodiscard]] std::span<const double> softmax(std::size_t epoch, std::size_t task) const;
    [[nodiscard]] std::span<double> softmax(std::size_t epoch, std::size_t task);
    [[nodiscard]] std::span<const double> final_softmax(std::size_t task) const { return softmax(epochs_ - 1, task); }
    void set_epoch(std::size_t epoch, const Matrix& probs);

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }
    friend bool operator==(const MarginTrace&, const MarginTrace&) = default;

  private:
    std::size_t epochs_ = 0;
    std::size_t n_task_ = 0;
    std::size_t n_class_ = 0;
    std::vector<double> data_;
};

struct TrainResult {
    Mlp model;
    MarginTrace trace;
};

// Trains a fresh network from spec on (features, targets). After each epoch
// the softmax of every row of eval_tasks is recorded in the trace. Throws
// NumericalError naming the epoch and batch if the loss stops being finite.
TrainResult train_with_trace(const MlpSpec& spec, const TrainConfig& cfg, const Matrix& features,
                             const Matrix& targets, const Matrix& eval_tasks);

// Same as train_with_trace without recording anything.
Mlp train(const MlpSpec& spec, const TrainConfig& cfg, const Matrix& features, const Matrix& targets);

// sigma_y - sigma_[2], where sigma_[2] is the second largest entry of the whole vector.
double margin(std::span<const double> softmax, std::size_t assigned_class);

}  // namespace waum
