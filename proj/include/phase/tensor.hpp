#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace phase {

// Dense row-major f64 tensor. Last axis is fastest; storage is always
// contiguous, so reshape is free and permute copies.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from_vector(const std::vector<double>& v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    // Multi-index access with bounds checking on the index count only;
    // per-axis bounds are the caller's contract in hot loops.
    double& at(const std::vector<std::size_t>& idx);
    double at(const std::vector<std::size_t>& idx) const;
    std::size_t flat_index(const std::vector<std::size_t>& idx) const;

    Tensor reshape(std::vector<std::size_t> new_shape) const;
    Tensor permute_axes(const std::vector<std::size_t>& axes) const;
    // Half-open ranges per axis.
    Tensor slice(const std::vector<std::pair<std::size_t, std::size_t>>& ranges) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// xoshiro256++ seeded through splitmix64; normal draws via Box-Muller with
// the spare cached. The full algorithm is pinned so golden-value tests stay
// portable across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();           // [0, 1)
    double normal();            // N(0, 1)
    std::uint64_t seed() const { return seed_; }

    // Derived stream for parallel work items; deterministic in (seed, index).
    Rng fork(std::uint64_t index) const;

private:
    std::uint64_t seed_ = 0;
    std::uint64_t s_[4] = {};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

Tensor randn(Rng& rng, std::vector<std::size_t> shape);

// Reductions accumulate left-to-right in flat index order so bit-exact
// equality checks are meaningful.
double l2_norm(const Tensor& t);
double sum_all(const Tensor& t);
Tensor sum_axis(const Tensor& t, std::size_t axis);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor tanh_t(const Tensor& a);
Tensor sigmoid_t(const Tensor& a);
Tensor exp_t(const Tensor& a);

double sigmoid(double x);

bool has_nan(const Tensor& t);

}  // namespace phase
