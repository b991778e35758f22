#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace qbrain {

using Vector = std::vector<double>;
using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    Matrix transposed() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// y = m v, summed in ascending column order.
Vector matvec(const Matrix& m, std::span<const double> v);
// y = mᵀ v, summed in ascending row order.
Vector matvec_transposed(const Matrix& m, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& m);

bool all_finite(std::span<const double> v);

// Counter-based generator: draw i of (seed, stream) is a pure function of the
// triple, so streams can be consumed in any order or in parallel.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t position() const noexcept { return counter_; }

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    // Standard normal via Box-Muller; no cached spare, so every call costs two draws.
    double normal();

    // Pure access to the value at an arbitrary counter position.
    static std::uint64_t at(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct FiniteDiffReport {
    std::vector<double> analytic;
    std::vector<double> numeric;
    std::vector<double> rel_error;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    bool pass = true;
};

// Compares `grad` against central differences of f at `at`. Relative error is
// |a - b| / max(|a|, |b|, 1e-8). Throws NumericalError if f is non-finite.
FiniteDiffReport finite_diff_check(const std::function<double(std::span<const double>)>& f,
                                   std::span<const double> grad, std::span<const double> at,
                                   double step, double tolerance);

}  // namespace qbrain
