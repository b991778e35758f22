#include <doctest.h>

#include <cmath>

#include "qbrain/errors.hpp"
#include "qbrain/numerics.hpp"

using namespace qbrain;

TEST_CASE("matvec basics") {
    CHECK(matvec(Matrix::identity(3), Vector{1, 2, 3}) == Vector{1, 2, 3});
    CHECK(matvec(Matrix::zeros(2, 2), Vector{5, 7}) == Vector{0, 0});
    const Matrix m(2, 2, {1, 2, 3, 4});
    CHECK(matvec(m, Vector{1, 1}) == Vector{3, 7});
    CHECK(matvec_transposed(m, Vector{1, 1}) == Vector{4, 6});
    CHECK_THROWS_AS(matvec(m, Vector{1, 2, 3}), DimensionError);
}

TEST_CASE("matvec agrees with a naive loop on random matrices") {
    Rng rng(3, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t r = 1 + rng.below(9), c = 1 + rng.below(9);
        Matrix m(r, c);
        for (double& v : m.data()) v = rng.normal();
        Vector x(c);
        for (double& v : x) v = rng.normal();
        const Vector y = matvec(m, x);
        for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) acc += m(i, j) * x[j];
            CHECK(y[i] == acc);
        }
    }
}

TEST_CASE("softmax rows") {
    const Matrix a = softmax_rows(Matrix(1, 3, {0, 0, 0}));
    for (double v : a.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const Matrix b = softmax_rows(Matrix(1, 3, {1000, 0, 0}));
    CHECK(std::abs(b(0, 0) - 1.0) <= 1e-300);
    CHECK(b(0, 1) <= 1e-300);
    CHECK(b(0, 2) <= 1e-300);

    const Matrix c = softmax_rows(Matrix(1, 3, {std::log(1.0), std::log(2.0), std::log(3.0)}));
    CHECK(std::abs(c(0, 0) - 1.0 / 6.0) < 1e-15);
    CHECK(std::abs(c(0, 1) - 2.0 / 6.0) < 1e-15);
    CHECK(std::abs(c(0, 2) - 3.0 / 6.0) < 1e-15);
}

TEST_CASE("finite difference checker") {
    auto sq = [](std::span<const double> v) { return v[0] * v[0]; };
    const Vector at{3.0};
    CHECK(finite_diff_check(sq, Vector{6.0}, at, 1e-6, 1e-4).pass);
    const auto bad = finite_diff_check(sq, Vector{5.0}, at, 1e-6, 1e-4);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_rel_error == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
    auto sn = [](std::span<const double> v) { return std::sin(v[0]); };
    CHECK(finite_diff_check(sn, Vector{1.0}, Vector{0.0}, 1e-6, 1e-4).pass);
    auto nan = [](std::span<const double>) { return std::nan(""); };
    CHECK_THROWS_AS(finite_diff_check(nan, Vector{1.0}, Vector{0.0}, 1e-6, 1e-4), NumericalError);
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42, 5), b(42, 5), c(42, 6);
    bool differs = false;
    for (int i = 0; i < 1'000'000; ++i) {
        const auto x = a.next_u64();
        REQUIRE(x == b.next_u64());
        if (x != c.next_u64()) differs = true;
    }
    CHECK(differs);
    CHECK(Rng::at(42, 5, 0) == Rng(42, 5).next_u64());
}

TEST_CASE("rng distributions") {
    Rng r(1, 0);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(r.below(7) < 7);
    }
}
