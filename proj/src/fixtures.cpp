#include "qbrain/fixtures.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>

#include "binary_io.hpp"
#include "qbrain/errors.hpp"
#include "qbrain/config.hpp"
#include "qbrain/train.hpp"

namespace qbrain {

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(detail::read_file(path)); }

std::vector<Fixture> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw FixtureError("cannot open fixture manifest " + manifest.string());
    std::vector<Fixture> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw FixtureError("malformed manifest line: " + line);
        out.push_back({line.substr(0, t1), line.substr(t2 + 1), line.substr(t1 + 1, t2 - t1 - 1)});
    }
    return out;
}

bool FixtureReport::pass() const {
    for (const auto& r : results)
        if (!r.ok) return false;
    return !results.empty();
}

FixtureReport verify_fixtures(const std::filesystem::path& manifest) {
    const auto dir = manifest.parent_path();
    FixtureReport report;
    for (const auto& f : read_manifest(manifest)) {
        const auto path = dir / f.path;
        if (!std::filesystem::exists(path)) throw FixtureError("missing fixture " + f.path);
        const std::string actual = sha256_file(path);
        report.results.push_back({f, actual, actual == f.expected_hash});
    }
    return report;
}

SynthConfig tiny_fixture_config() {
    SynthConfig c;
    c.voxels = 8;
    c.embed_dim = 4;
    c.latent_dim = 4;
    c.regions = 2;
    c.n_train = 16;
    c.n_test = 16;
    c.seed = kFixtureSeed;
    return c;
}

Dataset tiny_fixture_dataset() { return gen_synthetic(tiny_fixture_config()).train; }

Checkpoint zero_init_fixture_checkpoint() {
    TrainConfig tc;
    tc.blocks = 2;
    tc.epochs = 1;
    tc.seed = kFixtureSeed;
    return {initial_encoder(tiny_fixture_dataset(), tc), train_config_echo(tc)};
}

Matrix perfect_embedding_fixture() { return Matrix::identity(16); }

void write_fixture_set(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_dataset(tiny_fixture_dataset(), dir / "tiny.qbrn");
    write_checkpoint(zero_init_fixture_checkpoint(), dir / "zero_init.qbck");
    write_embeddings(perfect_embedding_fixture(), dir / "perfect.qemb");
    const std::pair<const char*, const char*> entries[] = {
        {"tiny.qbrn", "synthetic dataset, C=8 D=4 R=2 N=16, seed 7"},
        {"zero_init.qbck", "identity-initialised B=2 encoder for tiny.qbrn, seed 7"},
        {"perfect.qemb", "16 x 16 identity embeddings for the perfect-retrieval check"},
    };
    std::string manifest = "# path\tsha256\tdescription\n";
    for (const auto& [name, desc] : entries) {
        manifest += std::string(name) + "\t" + sha256_file(dir / name) + "\t" + desc + "\n";
    }
    detail::write_file(dir / "MANIFEST", {manifest.begin(), manifest.end()});
}

}  // namespace qbrain
