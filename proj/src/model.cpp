#include "qbrain/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qbrain/errors.hpp"

namespace qbrain {

namespace {

// Streams reserved for parameter initialisation; data streams use small indices.
constexpr std::uint64_t kInitStream = 0x1000'0000'0000ULL;
constexpr std::uint64_t kAttentionStream = 0x2000'0000'0000ULL;

bool inside_clamp(double v) { return v >= kVoxelEpsilon && v <= 1.0 - kVoxelEpsilon; }

void require_finite(std::span<const double> v, const std::string& where) {
    if (!all_finite(v)) throw NumericalError("encode: non-finite values " + where);
}

}  // namespace

EncoderParams EncoderParams::initial(std::size_t blocks, std::size_t embed_dim, Vector input_mean,
                                     Vector input_std, std::uint64_t seed) {
    const std::size_t c = input_mean.size();
    EncoderParams p;
    for (std::size_t b = 0; b < blocks; ++b) p.blocks.push_back(BlockParams::initial(c));
    p.proj_weight = Matrix(embed_dim, c);
    Rng rng(seed, kInitStream);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));
    for (double& w : p.proj_weight.data()) w = scale * rng.normal();
    const Vector half(c, 0.5);
    p.proj_bias = matvec(p.proj_weight, half);
    for (double& b : p.proj_bias) b = -b;
    p.input_mean = std::move(input_mean);
    p.input_std = std::move(input_std);
    p.validate();
    return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& p) {
    EncoderParams z;
    for (const auto& b : p.blocks) z.blocks.push_back(BlockParams::zeros_like(b));
    z.proj_weight = Matrix(p.proj_weight.rows(), p.proj_weight.cols());
    z.proj_bias = Vector(p.proj_bias.size(), 0.0);
    z.input_mean = Vector(p.input_mean.size(), 0.0);
    z.input_std = Vector(p.input_std.size(), 0.0);
    return z;
}

void EncoderParams::validate() const {
    const std::size_t c = voxels();
    if (blocks.empty()) throw ConfigError("EncoderParams: at least one block is required");
    if (input_std.size() != c) throw DimensionError("EncoderParams: input_std length mismatch");
    if (proj_weight.cols() != c || proj_weight.rows() != proj_bias.size()) {
        throw DimensionError("EncoderParams: projection shape mismatch");
    }
    for (const auto& b : blocks) {
        b.validate();
        if (b.voxels() != c) throw DimensionError("EncoderParams: block voxel count mismatch");
    }
    for (double s : input_std) {
        if (!(s > 0.0)) throw InvariantError("EncoderParams: input_std entries must be positive");
    }
    if (!all_finite(flatten(*this))) throw NumericalError("EncoderParams: non-finite parameter");
}

void for_each_tensor(EncoderParams& p, const std::function<void(const TensorView&)>& fn) {
    const auto n = static_cast<std::uint32_t>(p.voxels());
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        auto& blk = p.blocks[b];
        const std::string prefix = "block" + std::to_string(b) + ".";
        fn({prefix + "theta0", {n}, blk.theta0, false, true});
        fn({prefix + "theta1", {n}, blk.theta1, false, true});
        fn({prefix + "w_prime", {n, n}, blk.w_prime.data(), true, true});
        fn({prefix + "w_dprime", {n, n}, blk.w_dprime.data(), true, true});
    }
    const auto d = static_cast<std::uint32_t>(p.embed_dim());
    fn({"proj_weight", {d, n}, p.proj_weight.data(), true, true});
    fn({"proj_bias", {d}, p.proj_bias, false, true});
    fn({"input_mean", {n}, p.input_mean, false, false});
    fn({"input_std", {n}, p.input_std, false, false});
}

std::vector<double> flatten(const EncoderParams& p) {
    std::vector<double> out;
    for_each_tensor(const_cast<EncoderParams&>(p),
                    [&](const TensorView& t) { out.insert(out.end(), t.values.begin(), t.values.end()); });
    return out;
}

void unflatten(EncoderParams& p, std::span<const double> values) {
    std::size_t offset = 0;
    for_each_tensor(p, [&](const TensorView& t) {
        if (offset + t.values.size() > values.size()) throw DimensionError("unflatten: too few values");
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), t.values.size(), t.values.begin());
        offset += t.values.size();
    });
    if (offset != values.size()) throw DimensionError("unflatten: too many values");
}

InputStats fit_input_stats(std::span<const Vector> samples) {
    if (samples.size() < 2) throw DataError("fit_input_stats: need at least 2 samples");
    const std::size_t c = samples.front().size();
    InputStats s{Vector(c, 0.0), Vector(c, 0.0)};
    for (const auto& v : samples) {
        if (v.size() != c) throw DimensionError("fit_input_stats: ragged samples");
        for (std::size_t i = 0; i < c; ++i) s.mean[i] += v[i];
    }
    const double n = static_cast<double>(samples.size());
    for (double& m : s.mean) m /= n;
    for (const auto& v : samples) {
        for (std::size_t i = 0; i < c; ++i) {
            const double d = v[i] - s.mean[i];
            s.std[i] += d * d;
        }
    }
    for (double& sd : s.std) sd = std::max(std::sqrt(sd / n), 1e-8);
    return s;
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

EncodeTrace encode_traced(std::span<const double> raw, const EncoderParams& params,
                          const AblationFlags& flags) {
    const std::size_t c = params.voxels();
    if (raw.size() != c) {
        throw DimensionError("encode: input has " + std::to_string(raw.size()) + " voxels, model expects " +
                             std::to_string(c));
    }
    require_finite(raw, "in raw input");

    EncodeTrace t;
    t.z.resize(c);
    t.squashed.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        t.z[i] = (raw[i] - params.input_mean[i]) / params.input_std[i];
        t.squashed[i] = logistic(t.z[i]);
    }
    require_finite(t.squashed, "after standardisation");

    VoxelVector x = VoxelVector::clamped(t.squashed);
    const LayerTerms terms = flags.layer_terms();
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        LayerCache cache;
        Vector h = layer_forward(x, params.blocks[b], terms, &cache);
        t.caches.push_back(std::move(cache));
        require_finite(h, "in block " + std::to_string(b));
        t.inputs.push_back(std::move(x));
        x = VoxelVector::clamped(h);
        t.outputs.push_back(std::move(h));
    }
    t.final_x = x;

    t.projected = matvec(params.proj_weight, x);
    for (std::size_t d = 0; d < t.projected.size(); ++d) t.projected[d] += params.proj_bias[d];
    require_finite(t.projected, "in projection");
    t.projected_norm = norm2(t.projected);
    if (!(t.projected_norm > 0.0)) throw NumericalError("encode: projected embedding has zero norm");
    t.embedding = t.projected;
    for (double& v : t.embedding) v /= t.projected_norm;
    return t;
}

Vector encode(std::span<const double> raw, const EncoderParams& params, const AblationFlags& flags) {
    return encode_traced(raw, params, flags).embedding;
}

EncoderGradFactors encode_backward_factors(const EncodeTrace& trace, const EncoderParams& params,
                                           const AblationFlags& flags, std::span<const double> upstream) {
    const std::size_t dim = params.embed_dim();
    if (upstream.size() != dim) throw DimensionError("encode_backward: upstream length mismatch");
    if (trace.caches.size() != params.blocks.size()) throw DimensionError("encode_backward: trace/block mismatch");
    EncoderGradFactors f;

    // Normalisation: d(q/|q|) = (I - p p^T) / |q|.
    const double along = dot(trace.embedding, upstream);
    f.dq.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        f.dq[d] = (upstream[d] - trace.embedding[d] * along) / trace.projected_norm;
    }
    Vector gx = matvec_transposed(params.proj_weight, f.dq);

    const LayerTerms terms = flags.layer_terms();
    f.blocks.resize(params.blocks.size());
    for (std::size_t b = params.blocks.size(); b-- > 0;) {
        const Vector& h = trace.outputs[b];
        for (std::size_t j = 0; j < gx.size(); ++j) {
            if (!inside_clamp(h[j])) gx[j] = 0.0;
        }
        f.blocks[b] = layer_backward_factors(trace.inputs[b], params.blocks[b], gx, terms, trace.caches[b]);
        gx = f.blocks[b].grad_x;
    }

    const std::size_t c = params.voxels();
    f.grad_mean.resize(c);
    f.grad_std.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        const double s = trace.squashed[i];
        const double gs = inside_clamp(s) ? gx[i] : 0.0;
        const double gz = gs * s * (1.0 - s);
        f.grad_mean[i] = -gz / params.input_std[i];
        f.grad_std[i] = -gz * trace.z[i] / params.input_std[i];
    }
    return f;
}

void EncoderGradFactors::accumulate_into(EncoderParams& grads, const EncodeTrace& trace) const {
    for (std::size_t b = 0; b < blocks.size(); ++b) blocks[b].accumulate_into(grads.blocks[b], trace.inputs[b]);
    const auto& x = trace.final_x;
    for (std::size_t d = 0; d < dq.size(); ++d) {
        auto row = grads.proj_weight.row(d);
        const double dd = dq[d];
        for (std::size_t k = 0; k < x.size(); ++k) row[k] += dd * x[k];
        grads.proj_bias[d] += dd;
    }
    for (std::size_t i = 0; i < grad_mean.size(); ++i) {
        grads.input_mean[i] += grad_mean[i];
        grads.input_std[i] += grad_std[i];
    }
}

EncoderParams encode_backward(const EncodeTrace& trace, const EncoderParams& params,
                              const AblationFlags& flags, std::span<const double> upstream) {
    EncoderParams g = EncoderParams::zeros_like(params);
    encode_backward_factors(trace, params, flags, upstream).accumulate_into(g, trace);
    return g;
}

EncoderParams encode_backward(std::span<const double> raw, const EncoderParams& params,
                              const AblationFlags& flags, std::span<const double> upstream) {
    return encode_backward(encode_traced(raw, params, flags), params, flags, upstream);
}

Matrix attention_baseline_map(const VoxelVector& x, const Matrix& embeddings) {
    const std::size_t c = x.size();
    if (embeddings.rows() != c) throw DimensionError("attention_baseline_map: one embedding per voxel required");
    const std::size_t e = embeddings.cols();
    Matrix tokens(c, e);
    for (std::size_t k = 0; k < c; ++k)
        for (std::size_t d = 0; d < e; ++d) tokens(k, d) = x[k] * embeddings(k, d);
    const double scale = e > 0 ? 1.0 / std::sqrt(static_cast<double>(e)) : 0.0;
    Matrix logits(c, c);
    for (std::size_t j = 0; j < c; ++j)
        for (std::size_t k = 0; k < c; ++k) logits(j, k) = scale * dot(tokens.row(j), tokens.row(k));
    return softmax_rows(logits);
}

Matrix attention_baseline_map(const VoxelVector& x, std::size_t embed_dim, std::uint64_t seed) {
    Matrix emb(x.size(), embed_dim);
    Rng rng(seed, kAttentionStream);
    for (double& v : emb.data()) v = rng.normal();
    return attention_baseline_map(x, emb);
}

}  // namespace qbrain
