#include "qbrain/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "qbrain/errors.hpp"
#include "qbrain/model.hpp"

namespace qbrain {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing " + path.string());
}

}  // namespace detail

namespace {

constexpr std::uint64_t kMixingStream = 0x3000'0000'0000ULL;
constexpr std::uint64_t kTargetStream = 0x3000'0000'0001ULL;
constexpr std::size_t kHeaderBytes = 24;

double as_float(double v) { return static_cast<double>(static_cast<float>(v)); }

// float32 rounds logistic(z) to exactly 0 or 1 for large |z|; keep stored voxels strictly inside (0, 1).
double as_unit_float(double v) {
    const float f = std::clamp(static_cast<float>(v), std::nextafter(0.0f, 1.0f), std::nextafter(1.0f, 0.0f));
    return static_cast<double>(f);
}

struct Generator {
    const SynthConfig& cfg;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    Matrix mixing;   // C x m, unit-norm rows
    Matrix targets;  // D x m

    explicit Generator(const SynthConfig& c) : cfg(c), edges(c.resolved_edges()) {
        mixing = Matrix(cfg.voxels, cfg.latent_dim);
        Rng ra(cfg.seed, kMixingStream);
        for (std::size_t j = 0; j < mixing.rows(); ++j) {
            auto row = mixing.row(j);
            for (double& v : row) v = ra.normal();
            const double n = norm2(row);
            for (double& v : row) v /= n;
        }
        targets = Matrix(cfg.embed_dim, cfg.latent_dim);
        Rng rb(cfg.seed, kTargetStream);
        for (double& v : targets.data()) v = rb.normal();
    }

    struct Sample {
        Vector z;
        Vector u;
        Vector voxels;
        Vector target;
    };

    Vector region_means(const Vector& v) const {
        const std::size_t width = cfg.voxels / cfg.regions;
        Vector means(cfg.regions, 0.0);
        for (std::size_t j = 0; j < v.size(); ++j) means[j / width] += v[j];
        for (double& m : means) m /= static_cast<double>(width);
        return means;
    }

    Sample draw(std::uint64_t stream) const {
        Rng rng(cfg.seed, stream);
        Sample s;
        s.z.resize(cfg.latent_dim);
        for (double& v : s.z) v = rng.normal();
        s.u = matvec(mixing, s.z);
        const Vector ubar = region_means(s.u);
        Vector signal = s.u;
        for (const auto& [r, driver] : edges) {
            for (std::uint32_t j = 0; j < cfg.voxels; ++j) {
                if (cfg.region_of(j) == r) signal[j] += cfg.interaction_strength * s.u[j] * ubar[driver];
            }
        }
        s.voxels.resize(cfg.voxels);
        for (std::size_t j = 0; j < signal.size(); ++j) {
            s.voxels[j] = as_unit_float(logistic(signal[j] + cfg.noise_std * rng.normal()));
        }
        s.target = matvec(targets, s.z);
        const double n = norm2(s.target);
        for (double& v : s.target) v = as_float(v / n);
        return s;
    }

    Dataset split(std::uint64_t first_stream, std::uint32_t count) const {
        Dataset d{Matrix(count, cfg.voxels), Matrix(count, cfg.embed_dim), PlantedEdges{edges, cfg.regions}};
        for (std::uint32_t i = 0; i < count; ++i) {
            const Sample s = draw(first_stream + i);
            std::copy(s.voxels.begin(), s.voxels.end(), d.voxels.row(i).begin());
            std::copy(s.target.begin(), s.target.end(), d.embeddings.row(i).begin());
        }
        return d;
    }
};

void check_unit_rows(const Matrix& m, double tol, std::size_t base_offset) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double n = norm2(m.row(i));
        if (std::abs(n - 1.0) > tol) {
            throw FormatError("embedding row " + std::to_string(i) + " has norm " + std::to_string(n),
                              base_offset + i * m.cols() * 4);
        }
    }
}

}  // namespace

std::vector<Vector> Dataset::voxel_rows() const {
    std::vector<Vector> rows;
    rows.reserve(samples());
    for (std::size_t i = 0; i < samples(); ++i) rows.emplace_back(voxels.row(i).begin(), voxels.row(i).end());
    return rows;
}

void SynthConfig::validate() const {
    if (voxels == 0) throw ConfigError("voxels must be positive");
    if (regions == 0 || voxels % regions != 0) {
        throw ConfigError("regions (" + std::to_string(regions) + ") must divide voxels (" +
                          std::to_string(voxels) + ")");
    }
    if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
    if (latent_dim == 0) throw ConfigError("latent_dim must be positive");
    if (!(interaction_strength >= 0.0)) throw ConfigError("interaction_strength must be >= 0");
    if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be >= 0");
    for (const auto& [r, s] : edges) {
        if (r >= regions || s >= regions) throw ConfigError("edge references a region out of range");
    }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> SynthConfig::resolved_edges() const {
    if (!edges.empty()) return edges;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ring;
    for (std::uint32_t r = 0; r < regions; ++r) ring.emplace_back(r, (r + 1) % regions);
    return ring;
}

SyntheticSplits gen_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const Generator gen(cfg);
    return {gen.split(0, cfg.n_train), gen.split(cfg.n_train, cfg.n_test)};
}

PlantedSignalReport planted_signal_selftest(const SynthConfig& cfg) {
    cfg.validate();
    const Generator gen(cfg);
    const auto edges = gen.edges;
    const std::size_t n = cfg.n_train;
    if (n < 2 || edges.empty()) throw DataError("planted_signal_selftest: need samples and edges");

    // Per sample and edge: activity of the driven region and the latent product.
    std::vector<std::vector<double>> activity(edges.size(), std::vector<double>(n));
    std::vector<std::vector<double>> product(edges.size(), std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = gen.draw(i);
        const Vector xbar = gen.region_means(s.voxels);
        const Vector ubar = gen.region_means(s.u);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            activity[e][i] = xbar[edges[e].first];
            product[e][i] = ubar[edges[e].first] * ubar[edges[e].second];
        }
    }
    std::vector<double> v(n, 0.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        double ma = 0.0, mp = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ma += activity[e][i];
            mp += product[e][i];
        }
        ma /= static_cast<double>(n);
        mp /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] += (activity[e][i] - ma) * (product[e][i] - mp) / static_cast<double>(edges.size());
        }
    }
    PlantedSignalReport rep;
    for (double x : v) rep.mean += x;
    rep.mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - rep.mean) * (x - rep.mean);
    var /= static_cast<double>(n - 1);
    rep.standard_error = std::sqrt(var / static_cast<double>(n));
    rep.z_score = rep.standard_error > 0.0 ? rep.mean / rep.standard_error : 0.0;
    rep.pass = rep.z_score > 3.0;
    return rep;
}

std::uint64_t dataset_byte_size(std::size_t n, std::size_t c, std::size_t d, const PlantedEdges* planted) {
    std::uint64_t bytes = kHeaderBytes + 4ull * n * c + 4ull * n * d;
    if (planted) bytes += 4 + 8ull * planted->edges.size() + 4;
    return bytes;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
    if (d.voxels.rows() != d.embeddings.rows()) throw DataError("dataset: voxel/embedding row counts differ");
    detail::ByteWriter w;
    w.raw("QBRN");
    w.u32(kDatasetVersion);
    w.u32(static_cast<std::uint32_t>(d.samples()));
    w.u32(static_cast<std::uint32_t>(d.voxel_count()));
    w.u32(static_cast<std::uint32_t>(d.embed_dim()));
    w.u32(d.planted ? kFlagPlantedEdges : 0u);
    for (double v : d.voxels.data()) w.f32(static_cast<float>(v));
    for (double v : d.embeddings.data()) w.f32(static_cast<float>(v));
    if (d.planted) {
        w.u32(static_cast<std::uint32_t>(d.planted->edges.size()));
        for (const auto& [a, b] : d.planted->edges) {
            w.u32(a);
            w.u32(b);
        }
        w.u32(d.planted->regions);
    }
    return std::move(w.bytes());
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    const std::string magic = r.raw(4, "magic");
    if (magic != "QBRN") throw FormatError("bad magic '" + magic + "', expected 'QBRN'", 0);
    const std::uint32_t version = r.u32("version");
    if (version != kDatasetVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version), 4);
    }
    const std::uint32_t n = r.u32("sample count");
    const std::uint32_t c = r.u32("voxel count");
    const std::uint32_t d = r.u32("embedding dimension");
    const std::uint32_t flags = r.u32("flags");
    if ((flags & ~kFlagPlantedEdges) != 0) throw FormatError("unknown flag bits", 20);

    const std::uint64_t body = 4ull * n * c + 4ull * n * d;
    r.need(static_cast<std::size_t>(body), "sample blocks");
    Dataset ds{Matrix(n, c), Matrix(n, d), std::nullopt};
    for (double& v : ds.voxels.data()) v = r.f32("voxels");
    const std::size_t embed_offset = r.offset();
    for (double& v : ds.embeddings.data()) v = r.f32("embeddings");
    if (flags & kFlagPlantedEdges) {
        PlantedEdges pe;
        const std::uint32_t count = r.u32("edge count");
        r.need(8ull * count, "edge list");
        for (std::uint32_t e = 0; e < count; ++e) {
            const std::uint32_t a = r.u32("edge");
            const std::uint32_t b = r.u32("edge");
            pe.edges.emplace_back(a, b);
        }
        pe.regions = r.u32("region count");
        for (const auto& [a, b] : pe.edges) {
            if (a >= pe.regions || b >= pe.regions) throw FormatError("edge region id out of range", r.offset());
        }
        ds.planted = std::move(pe);
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after dataset", r.offset());
    for (double v : ds.voxels.data()) {
        if (!std::isfinite(v)) throw FormatError("non-finite voxel value", kHeaderBytes);
    }
    check_unit_rows(ds.embeddings, 1e-6, embed_offset);
    return ds;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
    detail::write_file(path, encode_dataset(d));
}

Dataset read_dataset(const std::filesystem::path& path) { return decode_dataset(detail::read_file(path)); }

void write_embeddings(const Matrix& embeddings, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.raw("QEMB");
    w.u32(kEmbeddingVersion);
    w.u32(static_cast<std::uint32_t>(embeddings.rows()));
    w.u32(static_cast<std::uint32_t>(embeddings.cols()));
    for (double v : embeddings.data()) w.f32(static_cast<float>(v));
    detail::write_file(path, w.bytes());
}

Matrix read_embeddings(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    detail::ByteReader r(bytes);
    const std::string magic = r.raw(4, "magic");
    if (magic != "QEMB") throw FormatError("bad magic '" + magic + "', expected 'QEMB'", 0);
    const std::uint32_t version = r.u32("version");
    if (version != kEmbeddingVersion) throw FormatError("unsupported embedding version " + std::to_string(version), 4);
    const std::uint32_t n = r.u32("record count");
    const std::uint32_t d = r.u32("embedding dimension");
    r.need(4ull * n * d, "embedding block");
    Matrix m(n, d);
    for (double& v : m.data()) v = r.f32("embeddings");
    if (r.remaining() != 0) throw FormatError("trailing bytes after embeddings", r.offset());
    return m;
}

Matrix read_voxel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t count = 0;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            while (p < end && *p == ' ') ++p;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) {
                throw DataError(path.string() + ": bad number on line " + std::to_string(rows + 1));
            }
            values.push_back(v);
            ++count;
            p = next;
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            if (*p != ',') throw DataError(path.string() + ": expected ',' on line " + std::to_string(rows + 1));
            ++p;
        }
        if (rows == 0) cols = count;
        if (count != cols) throw DataError(path.string() + ": ragged row " + std::to_string(rows + 1));
        ++rows;
    }
    return Matrix(rows, cols, std::move(values));
}

void write_voxel_csv(const Matrix& voxels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << std::setprecision(9);
    for (std::size_t i = 0; i < voxels.rows(); ++i) {
        const auto row = voxels.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
        out << '\n';
    }
    if (!out) throw IoError("error writing " + path.string());
}

Dataset ingest_embeddings(const std::filesystem::path& voxel_csv, const std::filesystem::path& embedding_file) {
    Matrix voxels = read_voxel_csv(voxel_csv);
    Matrix emb = read_embeddings(embedding_file);
    if (voxels.rows() != emb.rows()) {
        throw DataError("voxel CSV has " + std::to_string(voxels.rows()) + " rows but embedding file has " +
                        std::to_string(emb.rows()) + " records");
    }
    for (double& v : voxels.data()) v = as_float(v);
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        auto row = emb.row(i);
        const double n = norm2(row);
        if (std::abs(n - 1.0) > 1e-3) {
            throw InvariantError("embedding record " + std::to_string(i) + " has norm " + std::to_string(n));
        }
        for (double& v : row) v = as_float(v / n);
    }
    return {std::move(voxels), std::move(emb), std::nullopt};
}

}  // namespace qbrain
