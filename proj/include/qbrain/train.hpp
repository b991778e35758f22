#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "qbrain/data.hpp"
#include "qbrain/model.hpp"

namespace qbrain {

struct TrainConfig {
    double lr_max = 3e-4;
    double lr_min = 0.0;
    std::uint32_t epochs = 240;
    std::uint32_t batch_size = 32;
    double tau = 4e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    std::uint64_t seed = 1;
    std::uint32_t blocks = 4;
    AblationFlags flags;
    // Execution only; never affects results.
    std::uint32_t threads = 1;

    // Throws ConfigError on invalid settings.
    void validate() const;
};

struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    static OptimizerState for_params(const EncoderParams& p);
};

// lr_min + 0.5 (lr_max - lr_min)(1 + cos(pi step / total)). RangeError unless
// 0 <= step <= total and total >= 1.
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_max, double lr_min);

// One AdamW update on a flat tensor: decoupled decay first, then the
// bias-corrected adaptive step. `step` is the 1-based step index.
void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::uint64_t step, double lr, const TrainConfig& cfg, bool decay);

// Updates every trainable tensor; decay applies to W', W'' and the projection
// weights only. Throws NumericalError naming the tensor on non-finite gradients.
void adamw_step(EncoderParams& params, const EncoderParams& grads, OptimizerState& state, double lr,
                const TrainConfig& cfg);

struct TraceRow {
    std::uint32_t epoch;
    std::uint64_t step;
    double lr;
    double loss;
};

struct TrainResult {
    EncoderParams params;
    std::vector<TraceRow> trace;
};

struct BatchResult {
    double loss;
    EncoderParams grads;
    Matrix embeddings;
};

// Forward, contrastive loss and summed gradients for the listed samples.
// Samples are processed across `threads` workers; per-sample gradients are
// reduced in ascending sample order so the result does not depend on threads.
BatchResult batch_gradients(const Dataset& data, std::span<const std::size_t> indices, const EncoderParams& params,
                            const AblationFlags& flags, double tau, std::uint32_t threads);

// Embeds every sample of `data`.
Matrix embed_all(const Dataset& data, const EncoderParams& params, const AblationFlags& flags,
                 std::uint32_t threads = 1);

using StepCallback = std::function<void(const TraceRow&)>;

// Fits input statistics on the data (unless `stats` is given), initialises the
// encoder and runs AdamW with a cosine schedule. The sample order for epoch e
// is a Fisher-Yates shuffle driven by RNG stream e.
TrainResult train_loop(const Dataset& data, const TrainConfig& config, const StepCallback& on_step = {},
                       const InputStats* stats = nullptr);

EncoderParams initial_encoder(const Dataset& data, const TrainConfig& config, const InputStats* stats = nullptr);

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);
std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace qbrain
