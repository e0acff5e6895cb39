#pragma once

// Shared numeric types, labels and error classes.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace waum {

using Matrix = Eigen::MatrixXd;  // rows are samples
using Vector = Eigen::VectorXd;

// Input that violates a documented contract (bad index, empty task, ...).
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed file contents.
class ParseError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

// Shape mismatch between two inputs that must agree.
class DimensionError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

// Loss or likelihood became NaN/inf.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double simplex_tolerance = 1e-9;

struct HardLabel {
    std::size_t cls = 0;
    friend bool operator==(const HardLabel&, const HardLabel&) = default;
};

// A point on the probability simplex.
class SoftLabel {
  public:
    SoftLabel() = default;
    // Throws ValidationError unless probs is non-negative and sums to one.
    explicit SoftLabel(std::vector<double> probs);

    static SoftLabel one_hot(std::size_t cls, std::size_t n_class);
    static SoftLabel uniform(std::size_t n_class);
    // Normalizes a non-negative vector with positive sum.
    static SoftLabel normalized(std::vector<double> weights);

    [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
    [[nodiscard]] double operator[](std::size_t k) const { return probs_[k]; }
    [[nodiscard]] const std::vector<double>& probs() const noexcept { return probs_; }

    friend bool operator==(const SoftLabel&, const SoftLabel&) = default;

  private:
    std::vector<double> probs_;
};

using Label = std::variant<SoftLabel, HardLabel>;

}  // namespace waum
