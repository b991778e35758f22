#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qbrain/checkpoint.hpp"
#include "qbrain/data.hpp"

namespace qbrain {

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Fixture {
    std::string path;  // relative to the manifest directory
    std::string description;
    std::string expected_hash;
};

struct FixtureResult {
    Fixture fixture;
    std::string actual_hash;
    bool ok;
};

struct FixtureReport {
    std::vector<FixtureResult> results;
    bool pass() const;
};

// MANIFEST lines: <path>\t<sha256>\t<description>; '#' starts a comment.
std::vector<Fixture> read_manifest(const std::filesystem::path& manifest);

// Rehashes every listed fixture. A missing file throws FixtureError; a hash
// mismatch is reported as a failed entry.
FixtureReport verify_fixtures(const std::filesystem::path& manifest);

// Committed fixtures, all regenerable from fixed seeds.
inline constexpr std::uint64_t kFixtureSeed = 7;
SynthConfig tiny_fixture_config();                // C=8, D=4, m=4, R=2, N=16
Dataset tiny_fixture_dataset();                    // train split of tiny_fixture_config()
Checkpoint zero_init_fixture_checkpoint();         // B=2 identity blocks over the tiny dataset
Matrix perfect_embedding_fixture();                // 16 x 16 identity rows

// Writes tiny.qbrn, zero_init.qbck, perfect.qemb and MANIFEST into `dir`.
void write_fixture_set(const std::filesystem::path& dir);

}  // namespace qbrain
