#include "qbrain/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "binary_io.hpp"
#include "qbrain/errors.hpp"

namespace qbrain {

namespace {

// Fraction of queries whose own counterpart beats all drawn distractors.
double retrieval_pass(const Matrix& queries, const Matrix& pool, std::size_t candidates, Rng& rng,
                      std::vector<std::size_t>& scratch) {
    const std::size_t n = queries.rows();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        // Move i to the back, then partially shuffle the first n - 1 slots.
        const auto pos = static_cast<std::size_t>(std::find(scratch.begin(), scratch.end(), i) - scratch.begin());
        std::swap(scratch[pos], scratch[n - 1]);
        const double own = dot(queries.row(i), pool.row(i));
        bool wins = true;
        for (std::size_t d = 0; d + 1 < candidates; ++d) {
            const std::size_t pick = d + static_cast<std::size_t>(rng.below(n - 1 - d));
            std::swap(scratch[d], scratch[pick]);
            if (wins && dot(queries.row(i), pool.row(scratch[d])) >= own) wins = false;
        }
        if (wins) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

RetrievalReport retrieval_eval(const Matrix& pred, const Matrix& target, std::size_t candidates, std::size_t repeats,
                               std::uint64_t seed) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw DimensionError("retrieval_eval: prediction and target shapes differ");
    }
    if (candidates < 1) throw DataError("retrieval_eval: need at least one candidate");
    if (pred.rows() < candidates) {
        throw DataError("retrieval_eval: " + std::to_string(pred.rows()) + " samples cannot supply " +
                        std::to_string(candidates) + " candidates");
    }
    RetrievalReport rep;
    rep.candidates = candidates;
    rep.repeats = repeats;
    const std::size_t n = pred.rows();
    for (std::size_t r = 0; r < repeats; ++r) {
        std::vector<std::size_t> scratch(n);
        std::iota(scratch.begin(), scratch.end(), std::size_t{0});
        Rng image_rng(seed, 2 * r);
        rep.image_per_repeat.push_back(retrieval_pass(pred, target, candidates, image_rng, scratch));
        std::iota(scratch.begin(), scratch.end(), std::size_t{0});
        Rng brain_rng(seed, 2 * r + 1);
        rep.brain_per_repeat.push_back(retrieval_pass(target, pred, candidates, brain_rng, scratch));
    }
    if (repeats > 0) {
        rep.image_top1 = std::accumulate(rep.image_per_repeat.begin(), rep.image_per_repeat.end(), 0.0) /
                         static_cast<double>(repeats);
        rep.brain_top1 = std::accumulate(rep.brain_per_repeat.begin(), rep.brain_per_repeat.end(), 0.0) /
                         static_cast<double>(repeats);
    }
    return rep;
}

Matrix influence_matrix(const EncoderParams& params) {
    const std::size_t c = params.voxels();
    Matrix m(c, c);
    for (const auto& b : params.blocks) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.data()[i] += std::abs(b.w_prime.data()[i]) + std::abs(b.w_dprime.data()[i]);
        }
    }
    return m;
}

namespace {

Matrix pool_matrix(const Matrix& m, std::uint32_t regions) {
    const std::size_t c = m.rows();
    if (regions == 0 || c % regions != 0) throw RangeError("pooling: region count must divide the voxel count");
    const std::size_t width = c / regions;
    Matrix pooled(regions, regions);
    for (std::size_t j = 0; j < c; ++j)
        for (std::size_t k = 0; k < c; ++k) pooled(j / width, k / width) += m(j, k);
    const double cells = static_cast<double>(width * width);
    for (double& v : pooled.data()) v /= cells;
    return pooled;
}

}  // namespace

Matrix pooled_influence(const EncoderParams& params, std::uint32_t regions) {
    return pool_matrix(influence_matrix(params), regions);
}

ConnectivityMap connectivity_map(const EncoderParams& params, std::size_t source,
                                 std::optional<std::uint32_t> regions) {
    ConnectivityMap map;
    map.source = source;
    for (const auto& b : params.blocks) {
        Matrix m(b.w_prime.rows(), b.w_prime.cols());
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.data()[i] = std::abs(b.w_prime.data()[i]) + std::abs(b.w_dprime.data()[i]);
        }
        map.block_maps.push_back(std::move(m));
    }
    map.full = regions ? pooled_influence(params, *regions) : influence_matrix(params);
    if (source >= map.full.cols()) {
        throw RangeError("connectivity_map: source " + std::to_string(source) + " out of range [0, " +
                         std::to_string(map.full.cols()) + ")");
    }
    map.influence.resize(map.full.rows());
    for (std::size_t j = 0; j < map.full.rows(); ++j) map.influence[j] = map.full(j, source);
    return map;
}

EdgeRecovery edge_recovery_score(const Matrix& pooled, const PlantedEdges& planted) {
    const std::size_t r = pooled.rows();
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges(planted.edges.begin(), planted.edges.end());
    double planted_sum = 0.0, other_sum = 0.0;
    std::size_t planted_n = 0, other_n = 0;
    for (std::uint32_t a = 0; a < r; ++a) {
        for (std::uint32_t b = 0; b < r; ++b) {
            if (a == b) continue;
            if (edges.count({a, b})) {
                planted_sum += pooled(a, b);
                ++planted_n;
            } else {
                other_sum += pooled(a, b);
                ++other_n;
            }
        }
    }
    EdgeRecovery out;
    out.planted_mean = planted_n ? planted_sum / static_cast<double>(planted_n) : 0.0;
    out.other_mean = other_n ? other_sum / static_cast<double>(other_n) : 0.0;
    if (out.other_mean == 0.0) {
        out.degenerate = true;
        out.ratio = out.planted_mean == 0.0 ? 1.0 : INFINITY;
    } else {
        out.ratio = out.planted_mean / out.other_mean;
    }
    return out;
}

EdgeRecovery edge_recovery_score(const EncoderParams& params, const std::optional<PlantedEdges>& planted) {
    if (!planted) throw DataError("edge_recovery_score: dataset has no planted-edge metadata");
    return edge_recovery_score(pooled_influence(params, planted->regions), *planted);
}

std::string retrieval_csv(const RetrievalReport& report) {
    std::string out = "direction,repeat,accuracy\n";
    char buf[96];
    auto emit = [&](const char* dir, const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%zu,%.17g\n", dir, i, values[i]);
            out += buf;
        }
    };
    emit("image", report.image_per_repeat);
    emit("brain", report.brain_per_repeat);
    std::snprintf(buf, sizeof buf, "image,mean,%.17g\n", report.image_top1);
    out += buf;
    std::snprintf(buf, sizeof buf, "brain,mean,%.17g\n", report.brain_top1);
    out += buf;
    return out;
}

void write_retrieval_csv(const RetrievalReport& report, const std::filesystem::path& path) {
    const std::string s = retrieval_csv(report);
    detail::write_file(path, {s.begin(), s.end()});
}

void write_influence_csv(const Vector& influence, const std::filesystem::path& path) {
    std::string out = "index,value\n";
    char buf[64];
    for (std::size_t i = 0; i < influence.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, influence[i]);
        out += buf;
    }
    detail::write_file(path, {out.begin(), out.end()});
}

std::vector<std::uint8_t> encode_pgm(const Matrix& image) {
    const std::string header =
        "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    if (image.size() == 0) return bytes;
    const auto [lo, hi] = std::minmax_element(image.data().begin(), image.data().end());
    const double range = *hi - *lo;
    for (double v : image.data()) {
        const double scaled = range > 0.0 ? (v - *lo) / range * 255.0 : 0.0;
        bytes.push_back(static_cast<std::uint8_t>(std::lround(scaled)));
    }
    return bytes;
}

void write_pgm(const Matrix& image, const std::filesystem::path& path) { detail::write_file(path, encode_pgm(image)); }

}  // namespace qbrain
