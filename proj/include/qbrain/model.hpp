#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qbrain/numerics.hpp"
#include "qbrain/qlayer.hpp"

namespace qbrain {

struct AblationFlags {
    bool phase_shifting = true;
    bool voxel_controlling = true;
    bool measurement_projection = true;

    LayerTerms layer_terms() const { return {voxel_controlling, measurement_projection, phase_shifting}; }
    bool operator==(const AblationFlags&) const = default;
};

struct EncoderParams {
    std::vector<BlockParams> blocks;
    Matrix proj_weight;  // D x C
    Vector proj_bias;    // D
    Vector input_mean;   // C
    Vector input_std;    // C

    std::size_t voxels() const noexcept { return input_mean.size(); }
    std::size_t embed_dim() const noexcept { return proj_bias.size(); }

    // Identity blocks, Gaussian projection scaled by 1/sqrt(C) and a bias that
    // centres the projection at x = 0.5 (the mean of logistic(z)).
    static EncoderParams initial(std::size_t blocks, std::size_t embed_dim, Vector input_mean,
                                 Vector input_std, std::uint64_t seed);
    static EncoderParams zeros_like(const EncoderParams& p);

    // Throws on inconsistent shapes, B < 1, non-positive std or non-finite values.
    void validate() const;
};

// One named view over a parameter tensor. `decay` marks tensors subject to
// decoupled weight decay; `trainable` is false for the frozen input statistics.
struct TensorView {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::span<double> values;
    bool decay;
    bool trainable;
};

// Visits tensors in a fixed order: blocks (theta0, theta1, w_prime, w_dprime),
// proj_weight, proj_bias, input_mean, input_std.
void for_each_tensor(EncoderParams& p, const std::function<void(const TensorView&)>& fn);
std::vector<double> flatten(const EncoderParams& p);
void unflatten(EncoderParams& p, std::span<const double> values);

struct InputStats {
    Vector mean;
    Vector std;
};

// Population mean/std per voxel, std floored at 1e-8. Needs >= 2 samples.
InputStats fit_input_stats(std::span<const Vector> samples);

double logistic(double z);

// Intermediates retained for the backward pass.
struct EncodeTrace {
    Vector z;                        // standardised input
    Vector squashed;                 // logistic(z) before clamping
    std::vector<VoxelVector> inputs;  // input to each block (clamped)
    std::vector<Vector> outputs;      // raw block outputs before clamping
    std::vector<LayerCache> caches;   // per-block forward intermediates
    VoxelVector final_x;
    Vector projected;                // W x + b
    double projected_norm = 0.0;
    Vector embedding;                 // unit norm
};

EncodeTrace encode_traced(std::span<const double> raw, const EncoderParams& params,
                          const AblationFlags& flags);

// Standardise, squash, run the block stack with clamping between blocks,
// project and L2-normalise. Throws NumericalError naming the block on
// non-finite intermediates.
Vector encode(std::span<const double> raw, const EncoderParams& params, const AblationFlags& flags);

// Per-sample gradient in factored form: rank-one factors per block plus the
// projection's dq (dW = dq x_final^T). Summing many samples through
// accumulate_into avoids building a full gradient per sample.
struct EncoderGradFactors {
    std::vector<LayerFactors> blocks;
    Vector dq;
    Vector grad_mean;
    Vector grad_std;

    // grads += this sample's gradient; `trace` must be the one it came from.
    void accumulate_into(EncoderParams& grads, const EncodeTrace& trace) const;
};

EncoderGradFactors encode_backward_factors(const EncodeTrace& trace, const EncoderParams& params,
                                           const AblationFlags& flags, std::span<const double> upstream);

// Gradient of upstream . encode(raw) with respect to every EncoderParams field.
EncoderParams encode_backward(const EncodeTrace& trace, const EncoderParams& params,
                              const AblationFlags& flags, std::span<const double> upstream);
EncoderParams encode_backward(std::span<const double> raw, const EncoderParams& params,
                              const AblationFlags& flags, std::span<const double> upstream);

// Self-attention map over voxel tokens: token_k = x_k * e_k with seeded
// Gaussian embeddings e_k, logits q_j . q_k / sqrt(embed_dim), row softmax.
Matrix attention_baseline_map(const VoxelVector& x, std::size_t embed_dim, std::uint64_t seed);
// Same with explicit per-voxel embeddings (rows of `embeddings`).
Matrix attention_baseline_map(const VoxelVector& x, const Matrix& embeddings);

}  // namespace qbrain
