#include <doctest.h>

#include <cmath>

#include "qbrain/errors.hpp"
#include "qbrain/eval.hpp"

using namespace qbrain;

namespace {

Matrix random_unit(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed, 0);
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = m.row(i);
        for (double& v : r) v = rng.normal();
        const double s = norm2(r);
        for (double& v : r) v /= s;
    }
    return m;
}

EncoderParams blank(std::size_t c, std::size_t blocks) {
    return EncoderParams::initial(blocks, 2, Vector(c, 0.0), Vector(c, 1.0), 1);
}

}  // namespace

TEST_CASE("perfect embeddings retrieve perfectly") {
    const Matrix e = Matrix::identity(300);
    const RetrievalReport r = retrieval_eval(e, e, 300, 5, 1);
    CHECK(r.image_top1 == 1.0);
    CHECK(r.brain_top1 == 1.0);
    CHECK(r.image_per_repeat.size() == 5);
}

TEST_CASE("ties are never counted as correct") {
    Matrix t(10, 3, 0.0);
    for (std::size_t i = 0; i < 10; ++i) t(i, 0) = 1.0;
    const RetrievalReport r = retrieval_eval(t, t, 10, 3, 1);
    CHECK(r.image_top1 == 0.0);
    CHECK(r.brain_top1 == 0.0);
}

TEST_CASE("random embeddings sit at chance") {
    const Matrix p = random_unit(1000, 16, 1), t = random_unit(1000, 16, 2);
    const RetrievalReport r = retrieval_eval(p, t, 300, 30, 1);
    // 30 x 1000 Bernoulli(1/300) trials per direction.
    const double q = 1.0 / 300.0, se = std::sqrt(q * (1 - q) / 30000.0);
    CHECK(std::abs(r.image_top1 - q) <= 5 * se);
    CHECK(std::abs(r.brain_top1 - q) <= 5 * se);
}

TEST_CASE("retrieval is deterministic and validates sizes") {
    const Matrix p = random_unit(50, 8, 3), t = random_unit(50, 8, 4);
    const auto a = retrieval_eval(p, t, 20, 4, 9), b = retrieval_eval(p, t, 20, 4, 9);
    CHECK(a.image_per_repeat == b.image_per_repeat);
    CHECK(a.brain_per_repeat == b.brain_per_repeat);
    CHECK_THROWS_AS(retrieval_eval(p, t, 51, 1, 1), DataError);
}

TEST_CASE("lowering a losing distractor never changes the outcome") {
    // Query 0 wins against every distractor; pushing the distractors further away keeps it winning,
    // and query 1 (which loses) keeps losing.
    Matrix t = Matrix::identity(4);
    Matrix p = t;
    p(1, 1) = 0.6;
    p(1, 2) = 0.8;
    const auto before = retrieval_eval(p, t, 4, 1, 1);
    Matrix t2 = t;
    t2(2, 0) = -0.6;  // distractor for query 0 drops from 0 to -0.6
    t2(2, 2) = 0.8;
    const auto after = retrieval_eval(p, t2, 4, 1, 1);
    CHECK(before.image_top1 == after.image_top1);
    CHECK(before.image_top1 == doctest::Approx(0.75));
}

TEST_CASE("connectivity map") {
    EncoderParams p = blank(6, 2);
    auto zero = connectivity_map(p, 3);
    for (double v : zero.influence) CHECK(v == 0.0);
    CHECK(edge_recovery_score(pooled_influence(p, 3), PlantedEdges{{{0, 1}}, 3}).degenerate);
    CHECK(edge_recovery_score(pooled_influence(p, 3), PlantedEdges{{{0, 1}}, 3}).ratio == 1.0);

    p.blocks[0].w_prime(5, 2) = 1.0;
    const auto m = connectivity_map(p, 2);
    for (std::size_t j = 0; j < 6; ++j) CHECK(m.influence[j] == (j == 5 ? 1.0 : 0.0));
    CHECK(m.block_maps.size() == 2);
    CHECK_THROWS_AS(connectivity_map(p, 6), RangeError);
    CHECK_THROWS_AS(connectivity_map(p, 3, 3u), RangeError);
    CHECK_THROWS_AS(pooled_influence(p, 4), RangeError);
}

TEST_CASE("transposition swaps source and target") {
    Rng rng(5, 0);
    EncoderParams p = blank(5, 2), q = blank(5, 2);
    for (std::size_t b = 0; b < 2; ++b) {
        for (double& v : p.blocks[b].w_prime.data()) v = rng.normal();
        for (double& v : p.blocks[b].w_dprime.data()) v = rng.normal();
        q.blocks[b].w_prime = p.blocks[b].w_prime.transposed();
        q.blocks[b].w_dprime = p.blocks[b].w_dprime.transposed();
    }
    CHECK(influence_matrix(q) == influence_matrix(p).transposed());
}

TEST_CASE("edge recovery scoring") {
    Matrix pooled(3, 3, 1.0);
    pooled(0, 1) = 2.0;
    pooled(1, 2) = 2.0;
    CHECK(edge_recovery_score(pooled, PlantedEdges{{{0, 1}, {1, 2}}, 3}).ratio == 2.0);
    CHECK(edge_recovery_score(Matrix(3, 3, 0.4), PlantedEdges{{{0, 1}}, 3}).ratio == doctest::Approx(1.0));
    CHECK_THROWS_AS(edge_recovery_score(blank(3, 1), std::nullopt), DataError);

    Rng rng(6, 0);
    EncoderParams p = blank(6, 2);
    for (auto& b : p.blocks)
        for (double& v : b.w_prime.data()) v = rng.normal();
    EncoderParams s = p;
    for (auto& b : s.blocks)
        for (double& v : b.w_prime.data()) v *= 3.5;
    const PlantedEdges e{{{0, 1}, {2, 0}}, 3};
    CHECK(edge_recovery_score(s, e).ratio == doctest::Approx(edge_recovery_score(p, e).ratio).epsilon(1e-12));
    const Matrix ip = influence_matrix(p), is = influence_matrix(s);
    for (std::size_t i = 0; i < ip.size(); ++i) CHECK(is.data()[i] == doctest::Approx(3.5 * ip.data()[i]));
}

TEST_CASE("report and image encodings") {
    RetrievalReport r;
    r.repeats = 1;
    r.image_per_repeat = {0.5};
    r.brain_per_repeat = {0.25};
    r.image_top1 = 0.5;
    r.brain_top1 = 0.25;
    CHECK(retrieval_csv(r) == "direction,repeat,accuracy\nimage,0,0.5\nbrain,0,0.25\nimage,mean,0.5\nbrain,mean,0.25\n");

    const auto pgm = encode_pgm(Matrix(2, 3, {0, 1, 2, 3, 4, 5}));
    const std::string header = "P5\n3 2\n255\n";
    REQUIRE(pgm.size() == header.size() + 6);
    CHECK(std::string(pgm.begin(), pgm.begin() + header.size()) == header);
    CHECK(pgm[header.size()] == 0);
    CHECK(pgm.back() == 255);
    const auto flat = encode_pgm(Matrix(2, 2, 7.0));
    CHECK(flat.back() == 0);
}
