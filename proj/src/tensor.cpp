#include "phase/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace phase {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw std::invalid_argument("Tensor: shape/data size mismatch");
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::from_vector(const std::vector<double>& v) {
    return Tensor({v.size()}, v);
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw std::invalid_argument("Tensor::dim: axis out of range");
    return shape_[axis];
}

std::size_t Tensor::flat_index(const std::vector<std::size_t>& idx) const {
    if (idx.size() != shape_.size()) {
        throw std::invalid_argument("Tensor: index rank mismatch");
    }
    std::size_t flat = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        if (idx[a] >= shape_[a]) throw std::invalid_argument("Tensor: index out of bounds");
        flat = flat * shape_[a] + idx[a];
    }
    return flat;
}

double& Tensor::at(const std::vector<std::size_t>& idx) { return data_[flat_index(idx)]; }
double Tensor::at(const std::vector<std::size_t>& idx) const { return data_[flat_index(idx)]; }

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != data_.size()) {
        throw std::invalid_argument("reshape: element count mismatch");
    }
    return Tensor(std::move(new_shape), data_);
}

Tensor Tensor::permute_axes(const std::vector<std::size_t>& axes) const {
    const std::size_t r = shape_.size();
    if (axes.size() != r) throw std::invalid_argument("permute_axes: wrong axis count");
    std::vector<bool> seen(r, false);
    std::vector<std::size_t> new_shape(r);
    for (std::size_t a = 0; a < r; ++a) {
        if (axes[a] >= r || seen[axes[a]]) {
            throw std::invalid_argument("permute_axes: invalid permutation");
        }
        seen[axes[a]] = true;
        new_shape[a] = shape_[axes[a]];
    }
    Tensor out(new_shape);
    if (data_.empty()) return out;

    std::vector<std::size_t> src_strides(r, 1);
    for (std::size_t a = r; a-- > 1;) src_strides[a - 1] = src_strides[a] * shape_[a];

    std::vector<std::size_t> idx(r, 0);
    for (std::size_t flat = 0; flat < out.data_.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t a = 0; a < r; ++a) src += idx[a] * src_strides[axes[a]];
        out.data_[flat] = data_[src];
        for (std::size_t a = r; a-- > 0;) {
            if (++idx[a] < new_shape[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

Tensor Tensor::slice(const std::vector<std::pair<std::size_t, std::size_t>>& ranges) const {
    const std::size_t r = shape_.size();
    if (ranges.size() != r) throw std::invalid_argument("slice: wrong range count");
    std::vector<std::size_t> new_shape(r);
    for (std::size_t a = 0; a < r; ++a) {
        if (ranges[a].first > ranges[a].second || ranges[a].second > shape_[a]) {
            throw std::invalid_argument("slice: range out of bounds");
        }
        new_shape[a] = ranges[a].second - ranges[a].first;
    }
    Tensor out(new_shape);
    if (out.data_.empty()) return out;
    std::vector<std::size_t> idx(r, 0);
    for (std::size_t flat = 0; flat < out.data_.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t a = 0; a < r; ++a) src = src * shape_[a] + (idx[a] + ranges[a].first);
        out.data_[flat] = data_[src];
        for (std::size_t a = r; a-- > 0;) {
            if (++idx[a] < new_shape[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t a = 0; a < shape_.size(); ++a) os << (a ? "," : "") << shape_[a];
    os << "]";
    return os.str();
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Rng Rng::fork(std::uint64_t index) const {
    std::uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(splitmix64(x));
}

Tensor randn(Rng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    return t;
}

double l2_norm(const Tensor& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i) acc += t[i] * t[i];
    return std::sqrt(acc);
}

double sum_all(const Tensor& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i) acc += t[i];
    return acc;
}

Tensor sum_axis(const Tensor& t, std::size_t axis) {
    const auto& shape = t.shape();
    if (axis >= shape.size()) throw std::invalid_argument("sum_axis: axis out of range");
    std::vector<std::size_t> out_shape;
    for (std::size_t a = 0; a < shape.size(); ++a) {
        if (a != axis) out_shape.push_back(shape[a]);
    }
    if (out_shape.empty()) out_shape.push_back(1);

    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const std::size_t n_axis = shape[axis];

    Tensor out(out_shape);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < n_axis; ++k) {
            const double* src = t.data() + (o * n_axis + k) * inner;
            double* dst = out.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    }
    return out;
}

namespace {

template <typename F>
Tensor binary_op(const Tensor& a, const Tensor& b, F f, const char* name) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(name) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

template <typename F>
Tensor unary_op(const Tensor& a, F f) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i]);
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, [](double x, double y) { return x + y; }, "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, [](double x, double y) { return x * y; }, "mul");
}

Tensor scale(const Tensor& a, double s) {
    return unary_op(a, [s](double x) { return x * s; });
}

Tensor tanh_t(const Tensor& a) {
    return unary_op(a, [](double x) { return std::tanh(x); });
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid_t(const Tensor& a) {
    return unary_op(a, [](double x) { return sigmoid(x); });
}

Tensor exp_t(const Tensor& a) {
    return unary_op(a, [](double x) { return std::exp(x); });
}

bool has_nan(const Tensor& t) {
    for (std::size_t i = 0; i < t.numel(); ++i) {
        if (!std::isfinite(t[i])) return true;
    }
    return false;
}

}  // namespace phase
