#include "waum/mlp.hpp"

#include "waum/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace waum {

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
    double lr = cfg.learning_rate;
    for (std::size_t milestone : cfg.lr_decay_epochs) {
        if (epoch > milestone) lr *= cfg.lr_decay_factor;
    }
    return lr;
}

Mlp::Mlp(const MlpSpec& spec) : spec_(spec) {
    if (spec.input_dim == 0 || spec.n_class == 0) throw ValidationError("MLP dimensions must be positive");
    for (std::size_t h : spec.hidden_sizes) {
        if (h == 0) throw ValidationError("MLP hidden layer sizes must be positive");
    }
    Rng rng(spec.seed);
    std::vector<std::size_t> dims;
    dims.push_back(spec.input_dim);
    dims.insert(dims.end(), spec.hidden_sizes.begin(), spec.hidden_sizes.end());
    dims.push_back(spec.n_class);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(dims[l]);
        const auto fan_out = static_cast<Eigen::Index>(dims[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> init(-bound, bound);
        DenseLayer layer{Matrix(fan_in, fan_out), Vector(fan_out)};
        for (Eigen::Index r = 0; r < fan_in; ++r) {
            for (Eigen::Index c = 0; c < fan_out; ++c) layer.weight(r, c) = init(rng);
        }
        for (Eigen::Index c = 0; c < fan_out; ++c) layer.bias(c) = init(rng);
        layers_.push_back(std::move(layer));
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Matrix Mlp::logits(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != spec_.input_dim) {
        throw DimensionError("MLP expects " + std::to_string(spec_.input_dim) + " input columns, got " +
                             std::to_string(x.cols()));
    }
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = a * layers_[l].weight;
        z.rowwise() += layers_[l].bias.transpose();
        if (l + 1 < layers_.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix p = logits;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const double m = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - m).exp().matrix();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

Matrix Mlp::predict_proba(const Matrix& x) const {
    return softmax_rows(logits(x));
}

LossAndGradient loss_and_gradient(const Mlp& model, const Matrix& x, const Matrix& targets) {
    const auto& layers = model.layers();
    if (targets.rows() != x.rows() || static_cast<std::size_t>(targets.cols()) != model.spec().n_class) {
        throw DimensionError("targets must have one row per sample and one column per class");
    }
    // forward, keeping every activation
    std::vector<Matrix> acts;
    acts.reserve(layers.size() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z = acts.back() * layers[l].weight;
        z.rowwise() += layers[l].bias.transpose();
        if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
        acts.push_back(std::move(z));
    }
    const Matrix probs = softmax_rows(acts.back());
    const double n = static_cast<double>(x.rows());

    LossAndGradient out;
    out.loss = -(targets.array() * probs.array().max(1e-12).log()).sum() / n;

    // d loss / d logits for -sum_k q_k log softmax_k
    Matrix delta = (probs.array().colwise() * targets.rowwise().sum().array() - targets.array()).matrix() / n;
    out.grad.resize(layers.size());
    for (std::size_t l = layers.size(); l-- > 0;) {
        out.grad[l].weight = acts[l].transpose() * delta;
        out.grad[l].bias = delta.colwise().sum().transpose();
        if (l > 0) {
            Matrix back = delta * layers[l].weight.transpose();
            delta = (acts[l].array() > 0.0).select(back.array(), 0.0).matrix();
        }
    }
    return out;
}

MarginTrace::MarginTrace(std::size_t epochs, std::size_t n_task, std::size_t n_class)
    : epochs_(epochs), n_task_(n_task), n_class_(n_class), data_(epochs * n_task * n_class, 0.0) {}

std::span<const double> MarginTrace::softmax(std::size_t epoch, std::size_t task) const {
    return {data_.data() + (epoch * n_task_ + task) * n_class_, n_class_};
}

std::span<double> MarginTrace::softmax(std::size_t epoch, std::size_t task) {
    return {data_.data() + (epoch * n_task_ + task) * n_class_, n_class_};
}

void MarginTrace::set_epoch(std::size_t epoch, const Matrix& probs) {
    for (std::size_t i = 0; i < n_task_; ++i) {
        auto row = softmax(epoch, i);
        for (std::size_t k = 0; k < n_class_; ++k) {
            row[k] = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        }
    }
}

namespace {

void check_training_inputs(const MlpSpec& spec, const TrainConfig& cfg, const Matrix& features, const Matrix& targets) {
    if (cfg.epochs < 1) throw ValidationError("training needs at least one epoch");
    if (cfg.batch_size < 1) throw ValidationError("batch size must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw ValidationError("momentum must lie in [0, 1)");
    if (cfg.learning_rate < 0.0 || cfg.weight_decay < 0.0) throw ValidationError("negative learning rate or weight decay");
    if (features.rows() == 0) throw ValidationError("no training rows");
    if (static_cast<std::size_t>(features.cols()) != spec.input_dim) {
        throw DimensionError("features have " + std::to_string(features.cols()) + " columns, network expects " +
                             std::to_string(spec.input_dim));
    }
    if (targets.rows() != features.rows() || static_cast<std::size_t>(targets.cols()) != spec.n_class) {
        throw DimensionError("targets must be " + std::to_string(features.rows()) + " x " + std::to_string(spec.n_class));
    }
    for (Eigen::Index r = 0; r < targets.rows(); ++r) {
        if (targets.row(r).minCoeff() < 0.0 || std::abs(targets.row(r).sum() - 1.0) > 1e-6) {
            throw ValidationError("target row " + std::to_string(r) + " is not on the simplex");
        }
    }
}

TrainResult run_training(const MlpSpec& spec, const TrainConfig& cfg, const Matrix& features, const Matrix& targets,
                         const Matrix* eval_tasks) {
    check_training_inputs(spec, cfg, features, targets);
    if (eval_tasks && static_cast<std::size_t>(eval_tasks->cols()) != spec.input_dim) {
        throw DimensionError("evaluation tasks have the wrong number of columns");
    }
    Mlp model(spec);
    auto& layers = model.layers();
    std::vector<DenseLayer> velocity;
    for (const auto& l : layers) {
        velocity.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    }

    MarginTrace trace;
    if (eval_tasks) trace = MarginTrace(cfg.epochs, static_cast<std::size_t>(eval_tasks->rows()), spec.n_class);

    const auto n = static_cast<std::size_t>(features.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(cfg.shuffle_seed);
    Matrix xb;
    Matrix yb;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = learning_rate_at(cfg, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t stop = std::min(n, start + cfg.batch_size);
            const auto rows = static_cast<Eigen::Index>(stop - start);
            xb.resize(rows, features.cols());
            yb.resize(rows, targets.cols());
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
                xb.row(r) = features.row(src);
                yb.row(r) = targets.row(src);
            }
            LossAndGradient lg = loss_and_gradient(model, xb, yb);
            if (!std::isfinite(lg.loss)) {
                throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            }
            for (std::size_t l = 0; l < layers.size(); ++l) {
                velocity[l].weight = cfg.momentum * velocity[l].weight + lg.grad[l].weight + cfg.weight_decay * layers[l].weight;
                velocity[l].bias = cfg.momentum * velocity[l].bias + lg.grad[l].bias + cfg.weight_decay * layers[l].bias;
                layers[l].weight -= lr * velocity[l].weight;
                layers[l].bias -= lr * velocity[l].bias;
            }
        }
        if (eval_tasks) trace.set_epoch(epoch - 1, model.predict_proba(*eval_tasks));
    }
    return TrainResult{std::move(model), std::move(trace)};
}

}  // namespace

TrainResult train_with_trace(const MlpSpec& spec, const TrainConfig& cfg, const Matrix& features,
                             const Matrix& targets, const Matrix& eval_tasks) {
    return run_training(spec, cfg, features, targets, &eval_tasks);
}

Mlp train(const MlpSpec& spec, const TrainConfig& cfg, const Matrix& features, const Matrix& targets) {
    return run_training(spec, cfg, features, targets, nullptr).model;
}

double margin(std::span<const double> softmax, std::size_t assigned_class) {
    if (assigned_class >= softmax.size()) throw ValidationError("margin: class index out of range");
    if (softmax.size() < 2) return 0.0;
    double first = -1.0;
    double second = -1.0;
    for (double p : softmax) {
        if (p > first) {
            second = first;
            first = p;
        } else if (p > second) {
            second = p;
        }
    }
    return softmax[assigned_class] - second;
}

}  // namespace waum
