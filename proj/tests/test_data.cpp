#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "qbrain/data.hpp"
#include "qbrain/errors.hpp"
#include "qbrain/fixtures.hpp"

using namespace qbrain;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "qbrain_test_data";
    fs::create_directories(dir);
    return dir / name;
}

SynthConfig small(std::uint64_t seed) {
    SynthConfig c;
    c.voxels = 12;
    c.embed_dim = 5;
    c.latent_dim = 3;
    c.regions = 3;
    c.n_train = 40;
    c.n_test = 10;
    c.seed = seed;
    return c;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<std::uint8_t>& b) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("generator config validation") {
    SynthConfig c;
    c.regions = 7;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(gen_synthetic(c), ConfigError);
    c = {};
    c.noise_std = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.edges = {{0, 9}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    CHECK(c.resolved_edges().size() == 8);
    CHECK(c.resolved_edges()[7] == std::pair<std::uint32_t, std::uint32_t>{7, 0});
}

TEST_CASE("generator is deterministic and seed-sensitive") {
    const auto a = gen_synthetic(small(3)), b = gen_synthetic(small(3)), c = gen_synthetic(small(4));
    CHECK(encode_dataset(a.train) == encode_dataset(b.train));
    CHECK(encode_dataset(a.test) == encode_dataset(b.test));
    CHECK(encode_dataset(a.train) != encode_dataset(c.train));
    CHECK(a.train.voxels.row(0)[0] != a.test.voxels.row(0)[0]);
}

TEST_CASE("generated voxels lie strictly inside the unit interval, targets on the sphere") {
    SynthConfig c = small(5);
    c.interaction_strength = 4.0;
    c.noise_std = 2.0;
    const Dataset d = gen_synthetic(c).train;
    for (double v : d.voxels.data()) CHECK((v > 0.0 && v < 1.0));
    for (std::size_t i = 0; i < d.samples(); ++i) CHECK(std::abs(norm2(d.embeddings.row(i)) - 1.0) <= 1e-6);
}

TEST_CASE("without interaction or noise the voxels are logistic of a linear latent map") {
    SynthConfig a = small(6), b = small(6);
    a.interaction_strength = 0.0;
    a.noise_std = 0.0;
    b.interaction_strength = 0.0;
    b.noise_std = 0.0;
    b.edges = {{0, 1}};
    // Edges only matter through the interaction term.
    CHECK(gen_synthetic(a).train.voxels == gen_synthetic(b).train.voxels);
    b.interaction_strength = 1.0;
    CHECK_FALSE(gen_synthetic(a).train.voxels == gen_synthetic(b).train.voxels);
}

TEST_CASE("planted signal self-test passes with the defaults") {
    const PlantedSignalReport r = planted_signal_selftest(SynthConfig{});
    CHECK(r.pass);
    CHECK(r.z_score > 3.0);
    SynthConfig off;
    off.interaction_strength = 0.0;
    CHECK(std::abs(planted_signal_selftest(off).z_score) < 3.0);
}

TEST_CASE("dataset file size follows the header arithmetic") {
    const SynthConfig c;
    const auto bytes = encode_dataset(gen_synthetic(small(1)).train);
    const Dataset s = gen_synthetic(small(1)).train;
    CHECK(bytes.size() == dataset_byte_size(40, 12, 5, &*s.planted));
    const PlantedEdges ring{c.resolved_edges(), c.regions};
    CHECK(dataset_byte_size(2000, 128, 64, &ring) == 24 + 2000ull * 128 * 4 + 2000ull * 64 * 4 + 4 + 8 * 8 + 4);
    CHECK(dataset_byte_size(10, 3, 2, nullptr) == 24 + 10 * 3 * 4 + 10 * 2 * 4);
}

TEST_CASE("dataset round trip and corruption") {
    const Dataset d = gen_synthetic(small(2)).train;
    const fs::path p = scratch("rt.qbrn");
    write_dataset(d, p);
    CHECK(read_dataset(p) == d);

    auto bytes = slurp(p);
    spit(p, {bytes.begin(), bytes.end() - 7});
    CHECK_THROWS_AS(read_dataset(p), FormatError);

    auto bad = bytes;
    bad[0] = 'X';
    spit(p, bad);
    CHECK_THROWS_WITH_AS(read_dataset(p), doctest::Contains("magic"), FormatError);

    bad = bytes;
    bad[4] = 9;
    spit(p, bad);
    CHECK_THROWS_AS(read_dataset(p), FormatError);

    bad = bytes;
    bad.push_back(0);
    spit(p, bad);
    CHECK_THROWS_AS(read_dataset(p), FormatError);

    // Scale one embedding row off the sphere.
    bad = bytes;
    const std::size_t off = 24 + 40 * 12 * 4;
    float f;
    std::memcpy(&f, &bad[off], 4);
    f *= 3.0f;
    std::memcpy(&bad[off], &f, 4);
    spit(p, bad);
    CHECK_THROWS_AS(read_dataset(p), FormatError);

    CHECK_THROWS_AS(read_dataset(scratch("missing.qbrn")), IoError);
}

TEST_CASE("format errors carry a byte offset") {
    const auto bytes = encode_dataset(gen_synthetic(small(2)).train);
    try {
        decode_dataset({bytes.begin(), bytes.begin() + 30});
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(e.offset() >= 24);
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
}

TEST_CASE("embedding file round trip") {
    Matrix m(3, 4);
    for (std::size_t i = 0; i < 3; ++i) m(i, i) = 1.0;
    const fs::path p = scratch("e.qemb");
    write_embeddings(m, p);
    CHECK(read_embeddings(p) == m);
    CHECK(fs::file_size(p) == 16 + 3 * 4 * 4);
    auto b = slurp(p);
    b[1] = 'Z';
    spit(p, b);
    CHECK_THROWS_AS(read_embeddings(p), FormatError);
}

TEST_CASE("ingest_embeddings") {
    Matrix vox(10, 3, 0.25);
    Matrix emb(10, 4);
    for (std::size_t i = 0; i < 10; ++i) emb(i, i % 4) = 1.0 + 5e-4;  // within the renormalisation band
    const fs::path csv = scratch("v.csv"), qe = scratch("v.qemb");
    write_voxel_csv(vox, csv);
    write_embeddings(emb, qe);
    const Dataset d = ingest_embeddings(csv, qe);
    CHECK(d.samples() == 10);
    CHECK_FALSE(d.planted.has_value());
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(norm2(d.embeddings.row(i)) - 1.0) <= 1e-6);

    write_embeddings(Matrix(9, 4, 0.5), qe);
    CHECK_THROWS_AS(ingest_embeddings(csv, qe), DataError);

    emb(2, 2) = 0.5;
    write_embeddings(emb, qe);
    CHECK_THROWS_AS(ingest_embeddings(csv, qe), InvariantError);

    std::ofstream(csv) << "0.1,0.2\n0.3,abc\n";
    CHECK_THROWS_AS(read_voxel_csv(csv), DataError);
}
