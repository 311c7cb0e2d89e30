#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcfed {

using Shape = std::vector<std::size_t>;

/// Raised for inconsistent shapes, invalid hyperparameters and bad config values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed input data (labels out of range, truncated files, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of doubles. Used for parameters, gradients and updates alike.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool all_finite() const noexcept;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double s) noexcept;

    /// this += alpha * x
    void axpy(double alpha, const Tensor& x);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& t) noexcept;
double max_abs(const Tensor& t) noexcept;
double max_abs_diff(const Tensor& a, const Tensor& b);

/// Ordered parameter groups (weight, bias, weight, bias, ...) of a model, or
/// a gradient/update with the same layout.
using ParamGroups = std::vector<Tensor>;

double squared_norm(const ParamGroups& groups) noexcept;
double dot(const ParamGroups& a, const ParamGroups& b);
double max_abs_diff(const ParamGroups& a, const ParamGroups& b);
bool all_finite(const ParamGroups& groups) noexcept;
void axpy(ParamGroups& y, double alpha, const ParamGroups& x);

}  // namespace gcfed
