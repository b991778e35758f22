#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qbrain/data.hpp"
#include "qbrain/model.hpp"

namespace qbrain {

struct RetrievalReport {
    double image_top1 = 0.0;
    double brain_top1 = 0.0;
    std::size_t candidates = 300;
    std::size_t repeats = 30;
    std::vector<double> image_per_repeat;
    std::vector<double> brain_per_repeat;
};

// Two-way top-1 retrieval. For each repeat and each sample i, `candidates - 1`
// distractors are drawn without replacement from the other rows; a query is
// correct only if its true pair is strictly more similar than every distractor.
// Image retrieval queries pred_i against targets, brain retrieval queries
// target_i against predictions. DataError if N < candidates.
RetrievalReport retrieval_eval(const Matrix& pred, const Matrix& target, std::size_t candidates = 300,
                               std::size_t repeats = 30, std::uint64_t seed = 1);

// sum over blocks of |W'| + |W''|; entry (j, k) is the influence of voxel k on voxel j.
Matrix influence_matrix(const EncoderParams& params);
// Region-pooled influence: entry (r, s) averages influence_matrix over j in r, k in s.
Matrix pooled_influence(const EncoderParams& params, std::uint32_t regions);

struct ConnectivityMap {
    std::size_t source = 0;
    Vector influence;                // source column, length C or R
    std::vector<Matrix> block_maps;  // |W'_b| + |W''_b| per block
    Matrix full;                     // summed C x C (or pooled R x R) map
};

// Influence of `source` on every voxel (or region when `regions` is set).
// RangeError if the source index is out of range.
ConnectivityMap connectivity_map(const EncoderParams& params, std::size_t source,
                                 std::optional<std::uint32_t> regions = std::nullopt);

struct EdgeRecovery {
    double ratio = 1.0;
    bool degenerate = false;
    double planted_mean = 0.0;
    double other_mean = 0.0;
};

// Mean pooled influence over planted (r <- r') pairs divided by the mean over
// non-planted off-diagonal pairs. A 0/0 ratio is reported as 1.0 and flagged.
EdgeRecovery edge_recovery_score(const Matrix& pooled, const PlantedEdges& planted);
EdgeRecovery edge_recovery_score(const EncoderParams& params, const std::optional<PlantedEdges>& planted);

std::string retrieval_csv(const RetrievalReport& report);
void write_retrieval_csv(const RetrievalReport& report, const std::filesystem::path& path);
void write_influence_csv(const Vector& influence, const std::filesystem::path& path);
// Binary greyscale P5, min-max scaled to 0..255; a constant image maps to 0.
std::vector<std::uint8_t> encode_pgm(const Matrix& image);
void write_pgm(const Matrix& image, const std::filesystem::path& path);

}  // namespace qbrain
