#include <doctest.h>

#include <cmath>

#include "qbrain/errors.hpp"
#include "qbrain/model.hpp"

using namespace qbrain;

namespace {

EncoderParams encoder(std::size_t c, std::size_t d, std::size_t blocks, std::uint64_t seed) {
    return EncoderParams::initial(blocks, d, Vector(c, 0.2), Vector(c, 1.5), seed);
}

Vector raw_input(std::size_t c, Rng& rng) {
    Vector v(c);
    for (double& x : v) x = 2.0 * rng.normal();
    return v;
}

void randomise_blocks(EncoderParams& p, Rng& rng, double scale) {
    for (auto& b : p.blocks) {
        for (double& v : b.w_prime.data()) v = scale * rng.normal();
        for (double& v : b.w_dprime.data()) v = scale * rng.normal();
        for (double& v : b.theta0) v = rng.uniform(0, 6);
    }
}

}  // namespace

TEST_CASE("fit_input_stats") {
    auto s = fit_input_stats(std::vector<Vector>{{0.0}, {2.0}});
    CHECK(s.mean == Vector{1.0});
    CHECK(s.std == Vector{1.0});
    s = fit_input_stats(std::vector<Vector>{{1.0, 2.0}, {3.0, 4.0}});
    CHECK(s.mean == Vector{2.0, 3.0});
    CHECK(s.std == Vector{1.0, 1.0});
    s = fit_input_stats(std::vector<Vector>{{5.0}, {5.0}, {5.0}});
    CHECK(s.std == Vector{1e-8});
    CHECK_THROWS_AS(fit_input_stats(std::vector<Vector>{{1.0}}), DataError);
}

TEST_CASE("logistic is stable at the extremes") {
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(-1000.0) == 0.0);
    CHECK(logistic(1000.0) == 1.0);
    CHECK(std::isfinite(logistic(-745.0)));
}

TEST_CASE("identity at initialisation is exact") {
    Rng rng(1, 0);
    const EncoderParams p = encoder(16, 8, 4, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector raw = raw_input(16, rng);
        const EncodeTrace t = encode_traced(raw, p, {});
        const VoxelVector expected = VoxelVector::clamped(t.squashed);
        CHECK(t.final_x.values() == expected.values());
        for (std::size_t i = 0; i < 16; ++i) {
            CHECK(t.squashed[i] == logistic((raw[i] - p.input_mean[i]) / p.input_std[i]));
        }
        // Block-free computation of the embedding.
        Vector q = matvec(p.proj_weight, expected);
        for (std::size_t d = 0; d < q.size(); ++d) q[d] += p.proj_bias[d];
        const double n = norm2(q);
        for (double& v : q) v /= n;
        CHECK(t.embedding == q);
    }
}

TEST_CASE("term flags nest") {
    Rng rng(2, 0);
    EncoderParams p = encoder(10, 4, 3, 5);
    const Vector raw = raw_input(10, rng);
    const AblationFlags off{false, false, false};
    const Vector zero_on = encode(raw, p, {});
    CHECK(encode(raw, p, off) == zero_on);

    randomise_blocks(p, rng, 0.2);
    EncoderParams stripped = p;
    for (auto& b : stripped.blocks) {
        b.w_prime = Matrix(10, 10);
        b.w_dprime = Matrix(10, 10);
    }
    CHECK(encode(raw, p, off) == encode(raw, stripped, {}));

    EncoderParams no_dprime = p;
    for (auto& b : no_dprime.blocks) b.w_dprime = Matrix(10, 10);
    CHECK(encode(raw, no_dprime, {true, true, false}) == encode(raw, no_dprime, {}));
    EncoderParams no_prime = p;
    for (auto& b : no_prime.blocks) b.w_prime = Matrix(10, 10);
    CHECK(encode(raw, no_prime, {true, false, true}) == encode(raw, no_prime, {}));
}

TEST_CASE("encode output is unit norm and deterministic") {
    Rng rng(3, 0);
    EncoderParams p = encoder(12, 6, 2, 9);
    randomise_blocks(p, rng, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector raw = raw_input(12, rng);
        const Vector e = encode(raw, p, {});
        CHECK(std::abs(norm2(e) - 1.0) <= 1e-12);
        CHECK(encode(raw, p, {}) == e);
    }
}

TEST_CASE("encode validates its input") {
    const EncoderParams p = encoder(4, 2, 1, 1);
    CHECK_THROWS_AS(encode(Vector(5, 0.0), p, {}), DimensionError);
    CHECK_THROWS_AS(encode(Vector{0, 0, std::nan(""), 0}, p, {}), NumericalError);
}

TEST_CASE("encode_backward zero cotangent and clamp gating") {
    Rng rng(4, 0);
    EncoderParams p = encoder(8, 4, 2, 2);
    randomise_blocks(p, rng, 0.2);
    const Vector raw = raw_input(8, rng);
    const EncoderParams g = encode_backward(raw, p, {}, Vector(4, 0.0));
    for (double v : flatten(g)) CHECK(v == 0.0);

    Vector saturated = raw;
    saturated[3] = 1e6;  // logistic saturates to 1, beyond the clamp
    Vector up(4);
    for (double& v : up) v = rng.normal();
    const EncoderParams gs = encode_backward(saturated, p, {}, up);
    CHECK(gs.input_mean[3] == 0.0);
    CHECK(gs.input_std[3] == 0.0);
    CHECK(gs.input_mean[2] != 0.0);
}

TEST_CASE("encode_backward matches central differences under every flag set") {
    // Relative error 1e-4 with an absolute floor: coordinates with gradients
    // near 1e-7 are limited by roundoff in double, not by the derivative.
    const AblationFlags sets[] = {{}, {false, true, true}, {true, false, true}, {true, true, false}};
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        for (const auto& flags : sets) {
            Rng rng(seed, 9);
            EncoderParams p = encoder(12, 6, 2, seed);
            randomise_blocks(p, rng, 0.15);
            const Vector raw = raw_input(12, rng);
            Vector up(6);
            for (double& v : up) v = rng.normal();
            const std::vector<double> grad = flatten(encode_backward(raw, p, flags, up));
            EncoderParams scratch = p;
            auto f = [&](std::span<const double> v) {
                unflatten(scratch, v);
                return dot(up, encode(raw, scratch, flags));
            };
            const std::vector<double> at = flatten(p);
            const FiniteDiffReport r = finite_diff_check(f, grad, at, 1e-6, 1e-4);
            std::size_t bad = 0;
            for (std::size_t i = 0; i < at.size(); ++i) {
                const double a = r.analytic[i], n = r.numeric[i];
                bad += std::abs(a - n) <= 1e-4 * std::max(std::abs(a), std::abs(n)) + 1e-9 ? 0 : 1;
            }
            INFO("seed " << seed);
            CHECK(bad == 0);
        }
    }
}

TEST_CASE("parameters flatten in a fixed order") {
    EncoderParams p = encoder(3, 2, 2, 1);
    std::vector<std::string> names;
    for_each_tensor(p, [&](const TensorView& t) { names.push_back(t.name); });
    const std::vector<std::string> expected{"block0.theta0", "block0.theta1", "block0.w_prime", "block0.w_dprime",
                                            "block1.theta0", "block1.theta1", "block1.w_prime", "block1.w_dprime",
                                            "proj_weight",   "proj_bias",     "input_mean",     "input_std"};
    CHECK(names == expected);
    auto flat = flatten(p);
    for (double& v : flat) v += 1.0;
    unflatten(p, flat);
    CHECK(flatten(p) == flat);
    flat.push_back(0.0);
    CHECK_THROWS_AS(unflatten(p, flat), DimensionError);
}

TEST_CASE("attention baseline") {
    const VoxelVector one(Vector{0.4});
    const Matrix m1 = attention_baseline_map(one, 8, 1);
    CHECK(m1.rows() == 1);
    CHECK(m1(0, 0) == doctest::Approx(1.0));

    const VoxelVector x(Vector(5, 0.3));
    const Matrix same = attention_baseline_map(x, Matrix(5, 4, 1.0));
    for (double v : same.data()) CHECK(v == doctest::Approx(0.2).epsilon(1e-15));

    Rng rng(5, 0);
    Vector xs(32);
    for (double& v : xs) v = rng.uniform(0.01, 0.99);
    const Matrix m = attention_baseline_map(VoxelVector(xs), 16, 7);
    for (std::size_t j = 0; j < 32; ++j) {
        double s = 0;
        for (double v : m.row(j)) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}
