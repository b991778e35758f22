#include "qbrain/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <thread>

#include "qbrain/errors.hpp"
#include "qbrain/objective.hpp"

namespace qbrain {

namespace {

// Runs fn(i) for i in [0, n) over `threads` workers with a strided split.
template <typename Fn>
void parallel_for(std::size_t n, std::uint32_t threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max<std::uint32_t>(threads, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr_max >= lr_min && lr_min >= 0.0)) throw ConfigError("learning rates must satisfy lr_max >= lr_min >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (blocks < 1) throw ConfigError("blocks must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
    if (!(eps_adam > 0.0)) throw ConfigError("eps_adam must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

OptimizerState OptimizerState::for_params(const EncoderParams& p) {
    const std::size_t n = flatten(p).size();
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0};
}

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr_max, double lr_min) {
    if (total_steps < 1 || step > total_steps) {
        throw RangeError("cosine_lr: step " + std::to_string(step) + " outside [0, " + std::to_string(total_steps) + "]");
    }
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::uint64_t step, double lr, const TrainConfig& cfg, bool decay) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (decay) params[i] -= lr * cfg.weight_decay * params[i];
        const double g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps_adam);
    }
}

void adamw_step(EncoderParams& params, const EncoderParams& grads, OptimizerState& state, double lr,
                const TrainConfig& cfg) {
    std::vector<std::span<const double>> g;
    for_each_tensor(const_cast<EncoderParams&>(grads), [&](const TensorView& t) { g.push_back(t.values); });
    if (state.m.empty()) state = OptimizerState::for_params(params);
    ++state.step;
    std::size_t idx = 0, offset = 0;
    for_each_tensor(params, [&](const TensorView& t) {
        const auto grad = g.at(idx++);
        if (grad.size() != t.values.size()) throw DimensionError("adamw_step: gradient shape mismatch for " + t.name);
        if (offset + grad.size() > state.m.size()) throw DimensionError("adamw_step: optimizer state too small");
        if (t.trainable) {
            if (!all_finite(grad)) throw NumericalError("adamw_step: non-finite gradient in " + t.name);
            adamw_update(t.values, grad, std::span(state.m).subspan(offset, grad.size()),
                         std::span(state.v).subspan(offset, grad.size()), state.step, lr, cfg, t.decay);
        }
        offset += grad.size();
    });
}

BatchResult batch_gradients(const Dataset& data, std::span<const std::size_t> indices, const EncoderParams& params,
                            const AblationFlags& flags, double tau, std::uint32_t threads) {
    const std::size_t n = indices.size();
    const std::size_t dim = params.embed_dim();
    std::vector<EncodeTrace> traces(n);
    parallel_for(n, threads, [&](std::size_t i) {
        traces[i] = encode_traced(data.voxels.row(indices[i]), params, flags);
    });

    EmbeddingBatch batch{Matrix(n, dim), Matrix(n, dim), tau};
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(traces[i].embedding.begin(), traces[i].embedding.end(), batch.p.row(i).begin());
        // Stored targets are float32; restore unit norm in double precision.
        const auto t = data.embeddings.row(indices[i]);
        const double tn = norm2(t);
        auto dst = batch.t.row(i);
        for (std::size_t k = 0; k < dim; ++k) dst[k] = t[k] / tn;
    }
    ContrastiveResult loss = contrastive_loss(batch);

    std::vector<EncoderGradFactors> per_sample(n);
    parallel_for(n, threads, [&](std::size_t i) {
        per_sample[i] = encode_backward_factors(traces[i], params, flags, loss.grad_p.row(i));
    });
    // Reduced in ascending sample order so the sum is independent of `threads`.
    BatchResult out{loss.loss, EncoderParams::zeros_like(params), std::move(batch.p)};
    for (std::size_t i = 0; i < n; ++i) per_sample[i].accumulate_into(out.grads, traces[i]);
    return out;
}

Matrix embed_all(const Dataset& data, const EncoderParams& params, const AblationFlags& flags,
                 std::uint32_t threads) {
    Matrix out(data.samples(), params.embed_dim());
    parallel_for(data.samples(), threads, [&](std::size_t i) {
        const Vector e = encode(data.voxels.row(i), params, flags);
        std::copy(e.begin(), e.end(), out.row(i).begin());
    });
    return out;
}

EncoderParams initial_encoder(const Dataset& data, const TrainConfig& config, const InputStats* stats) {
    InputStats fitted;
    if (!stats) {
        const auto rows = data.voxel_rows();
        fitted = fit_input_stats(rows);
        stats = &fitted;
    }
    return EncoderParams::initial(config.blocks, data.embed_dim(), stats->mean, stats->std, config.seed);
}

TrainResult train_loop(const Dataset& data, const TrainConfig& config, const StepCallback& on_step,
                       const InputStats* stats) {
    config.validate();
    if (data.samples() == 0) throw DataError("train_loop: dataset is empty");

    TrainResult result{initial_encoder(data, config, stats), {}};
    EncoderParams& params = result.params;
    OptimizerState state = OptimizerState::for_params(params);

    const std::size_t n = data.samples();
    const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::uint64_t total_steps = static_cast<std::uint64_t>(steps_per_epoch) * config.epochs;

    std::vector<std::size_t> order(n);
    std::uint64_t step = 0;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(config.seed, epoch);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t len = std::min<std::size_t>(config.batch_size, n - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            const double lr = cosine_lr(step, total_steps, config.lr_max, config.lr_min);
            BatchResult br = batch_gradients(data, batch, params, config.flags, config.tau, config.threads);
            if (!std::isfinite(br.loss)) throw NumericalError("train_loop: non-finite loss at step " + std::to_string(step));
            adamw_step(params, br.grads, state, lr, config);
            const TraceRow row{epoch, step, lr, br.loss};
            result.trace.push_back(row);
            if (on_step) on_step(row);
            ++step;
        }
    }
    return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "epoch,step,lr,loss\n";
    char buf[128];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%u,%llu,%.17g,%.17g\n", r.epoch, static_cast<unsigned long long>(r.step),
                      r.lr, r.loss);
        out += buf;
    }
    return out;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << trace_csv(trace);
    if (!out) throw IoError("error writing " + path.string());
}

}  // namespace qbrain
