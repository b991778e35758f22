#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "qbrain/numerics.hpp"

namespace qbrain {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::uint32_t kFlagPlantedEdges = 1u << 0;

struct PlantedEdges {
    // (r, r') means region r' drives region r.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::uint32_t regions = 0;

    bool operator==(const PlantedEdges&) const = default;
};

// N paired (voxel vector, target embedding) samples. Values are held as doubles
// that are exactly representable in 32-bit float, so a file round-trip is lossless.
struct Dataset {
    Matrix voxels;      // N x C
    Matrix embeddings;  // N x D, unit-norm rows
    std::optional<PlantedEdges> planted;

    std::size_t samples() const noexcept { return voxels.rows(); }
    std::size_t voxel_count() const noexcept { return voxels.cols(); }
    std::size_t embed_dim() const noexcept { return embeddings.cols(); }
    std::vector<Vector> voxel_rows() const;

    bool operator==(const Dataset&) const = default;
};

struct SynthConfig {
    std::uint32_t voxels = 128;
    std::uint32_t embed_dim = 64;
    std::uint32_t latent_dim = 16;
    std::uint32_t regions = 8;
    // Empty means the ring (r, r + 1 mod R).
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    double interaction_strength = 1.0;
    double noise_std = 0.1;
    std::uint32_t n_train = 2000;
    std::uint32_t n_test = 500;
    std::uint64_t seed = 1;

    // Throws ConfigError on invalid settings.
    void validate() const;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> resolved_edges() const;
    std::uint32_t region_of(std::uint32_t voxel) const { return voxel / (voxels / regions); }
};

struct SyntheticSplits {
    Dataset train;
    Dataset test;
};

// Latent-factor generator with planted multiplicative region interactions:
//   u = A z,  s_j = u_j + gamma * u_j * mean_{k in r'} u_k  for each edge (r, r') with j in r,
//   voxel = logistic(s + noise),  target = normalize(B z).
// Sample i of the train split uses RNG stream i; test sample i uses n_train + i.
SyntheticSplits gen_synthetic(const SynthConfig& cfg);

struct PlantedSignalReport {
    double mean = 0.0;
    double standard_error = 0.0;
    double z_score = 0.0;
    bool pass = false;
};

// Covariance between region-mean voxel activity on driven regions and the
// latent product u_r * u_r' over planted edges, on the train split. Passes when
// the z-score exceeds 3.
PlantedSignalReport planted_signal_selftest(const SynthConfig& cfg);

std::uint64_t dataset_byte_size(std::size_t n, std::size_t c, std::size_t d, const PlantedEdges* planted);

// QBRN container, little-endian. Writes throw IoError; reads throw IoError for
// unreadable files and FormatError for malformed content.
void write_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_dataset(const Dataset& d);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);

// QEMB embedding file: magic, version, N, D, then N x D float32.
void write_embeddings(const Matrix& embeddings, const std::filesystem::path& path);
Matrix read_embeddings(const std::filesystem::path& path);

// One sample per line, comma-separated decimals.
Matrix read_voxel_csv(const std::filesystem::path& path);
void write_voxel_csv(const Matrix& voxels, const std::filesystem::path& path);

// Pairs voxel rows with external embeddings. Rows within 1e-3 of unit norm are
// renormalised; anything further off raises InvariantError. Row-count mismatch
// raises DataError.
Dataset ingest_embeddings(const std::filesystem::path& voxel_csv, const std::filesystem::path& embedding_file);

}  // namespace qbrain
