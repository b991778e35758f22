#include "qbrain/checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "qbrain/data.hpp"
#include "qbrain/hilbert.hpp"
#include "qbrain/model.hpp"
#include "qbrain/objective.hpp"
#include "qbrain/qlayer.hpp"
#include "qbrain/train.hpp"

namespace qbrain {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double random_angle(Rng& rng) { return rng.uniform(0.0, 2.0 * std::numbers::pi); }

Matrix random_matrix(std::size_t r, std::size_t c, double scale, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.uniform(-scale, scale);
    return m;
}

BlockParams random_block(std::size_t c, double scale, Rng& rng) {
    BlockParams b{Vector(c), Vector(c), random_matrix(c, c, scale, rng), random_matrix(c, c, scale, rng)};
    for (double& t : b.theta0) t = random_angle(rng);
    for (double& t : b.theta1) t = random_angle(rng);
    return b;
}

EncoderParams random_encoder(std::size_t c, std::size_t d, std::size_t blocks, Rng& rng) {
    EncoderParams p;
    for (std::size_t b = 0; b < blocks; ++b) p.blocks.push_back(random_block(c, 0.1, rng));
    p.proj_weight = Matrix(d, c);
    for (double& w : p.proj_weight.data()) w = rng.normal() / std::sqrt(static_cast<double>(c));
    p.proj_bias = Vector(d);
    for (double& b : p.proj_bias) b = rng.uniform(-0.2, 0.2);
    p.input_mean = Vector(c);
    p.input_std = Vector(c);
    for (double& m : p.input_mean) m = rng.uniform(0.2, 0.8);
    for (double& s : p.input_std) s = rng.uniform(0.5, 1.5);
    return p;
}

// Raw input whose standardised value keeps |z| in [0.3, 2].
Vector random_raw(const EncoderParams& p, Rng& rng) {
    Vector raw(p.voxels());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double z = rng.uniform(0.3, 2.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        raw[i] = p.input_mean[i] + p.input_std[i] * z;
    }
    return raw;
}

Vector random_normal_vector(std::size_t n, Rng& rng) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

Matrix random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = m.row(i);
        for (double& v : row) v = rng.normal();
        const double s = norm2(row);
        for (double& v : row) v /= s;
    }
    return m;
}

// Finite-difference check restricted to flat[offset, offset + len).
FiniteDiffReport check_slice(const std::function<double(std::span<const double>)>& full, std::vector<double> flat,
                             std::span<const double> grad, std::size_t offset, std::size_t len, double step,
                             double tol) {
    auto sub = [&](std::span<const double> x) {
        std::copy(x.begin(), x.end(), flat.begin() + static_cast<std::ptrdiff_t>(offset));
        return full(flat);
    };
    const std::vector<double> at(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                                 flat.begin() + static_cast<std::ptrdiff_t>(offset + len));
    return finite_diff_check(sub, grad.subspan(offset, len), at, step, tol);
}

void merge(CheckCase& into, const FiniteDiffReport& r) {
    if (r.max_rel_error >= into.max_error && !r.analytic.empty()) {
        into.worst_analytic = r.analytic[r.worst_index];
        into.worst_numeric = r.numeric[r.worst_index];
    }
    into.max_error = std::max(into.max_error, r.max_rel_error);
    into.pass = into.pass && r.pass;
}

// Checks every tensor of an EncoderParams-shaped gradient separately.
void check_encoder_tensors(const std::string& prefix, const std::function<double(const EncoderParams&)>& objective,
                           const EncoderParams& params, const EncoderParams& grads, const GradCheckOptions& opt,
                           CheckReport& report) {
    EncoderParams scratch = params;
    const std::vector<double> flat = flatten(params);
    const std::vector<double> flat_grad = flatten(grads);
    auto full = [&](std::span<const double> x) {
        unflatten(scratch, x);
        return objective(scratch);
    };
    std::size_t offset = 0;
    for_each_tensor(scratch, [&](const TensorView& t) {
        const std::size_t len = t.values.size();
        report.cases.push_back({prefix + t.name, 0.0, opt.tolerance, true});
        merge(report.cases.back(), check_slice(full, flat, flat_grad, offset, len, opt.step, opt.tolerance));
        offset += len;
    });
}

}  // namespace

bool CheckReport::pass() const {
    for (const auto& c : cases)
        if (!c.pass) return false;
    return true;
}

double CheckReport::max_error() const {
    double m = 0.0;
    for (const auto& c : cases) m = std::max(m, c.max_error);
    return m;
}

std::string CheckReport::summary() const {
    std::string out;
    char buf[256];
    for (const auto& c : cases) {
        std::snprintf(buf, sizeof buf, "%-4s %-32s max_err=%.3e tol=%.1e", c.pass ? "ok" : "FAIL", c.name.c_str(),
                      c.max_error, c.tolerance);
        out += buf;
        if (!c.pass && (c.worst_analytic != 0.0 || c.worst_numeric != 0.0)) {
            std::snprintf(buf, sizeof buf, " (analytic %.6e, numeric %.6e)", c.worst_analytic, c.worst_numeric);
            out += buf;
        }
        out += '\n';
    }
    std::snprintf(buf, sizeof buf, "%s: %zu cases, max error %.3e, %.3f s\n", pass() ? "PASS" : "FAIL", cases.size(),
                  max_error(), seconds);
    out += buf;
    return out;
}

CheckReport check_oracle(std::size_t trials, std::uint64_t seed, double tolerance) {
    const auto start = Clock::now();
    Rng rng(seed, 0);
    CheckCase c{"closed_form_vs_two_qubit", 0.0, tolerance, true};
    for (std::size_t i = 0; i < trials; ++i) {
        const double xj = rng.uniform(), xk = rng.uniform();
        const double t0k = random_angle(rng), t1k = random_angle(rng);
        const double t0j = random_angle(rng), t1j = random_angle(rng);
        const double w = rng.uniform(-3.0, 3.0);
        const double closed = pair_connectivity(xj, xk, w, t0k - t1k);
        const double simulated = hilbert::pair_connectivity_oracle(xj, xk, t0k, t1k, t0j, t1j, w);
        c.max_error = std::max(c.max_error, std::abs(closed - simulated));
    }
    c.pass = c.max_error <= tolerance;
    CheckReport report{{c}, seconds_since(start)};
    return report;
}

CheckReport check_aggregation(std::size_t configs, std::size_t max_voxels, std::uint64_t seed, double tolerance) {
    const auto start = Clock::now();
    Rng rng(seed, 1);
    CheckCase c{"loop_vs_vectorised", 0.0, tolerance, true};
    for (std::size_t cfg = 0; cfg < configs; ++cfg) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.below(max_voxels));
        ConstrainedParams p{Matrix(n, n), random_matrix(n, n, 2.0, rng), Vector(n), Vector(n)};
        for (std::size_t j = 0; j < n; ++j) {
            auto row = p.c.row(j);
            double total = 0.0;
            for (double& v : row) total += (v = rng.uniform());
            for (double& v : row) v /= total;
        }
        for (double& t : p.theta0) t = random_angle(rng);
        for (double& t : p.theta1) t = random_angle(rng);
        Vector xv(n);
        for (double& x : xv) x = rng.uniform(kVoxelEpsilon, 1.0 - kVoxelEpsilon);
        const VoxelVector x(xv);
        const Vector loop = aggregate_forward(x, p);
        const Vector vec = layer_forward(x, constrain_to_free(p));
        for (std::size_t j = 0; j < n; ++j) c.max_error = std::max(c.max_error, std::abs(loop[j] - vec[j]));
    }
    c.pass = c.max_error <= tolerance;
    return {{c}, seconds_since(start)};
}

CheckReport check_gradients(const GradCheckOptions& opt) {
    const auto start = Clock::now();
    CheckReport report;
    Rng rng(opt.seed, 2);

    // Single layer: input and all block parameters.
    {
        CheckCase cx{"layer.grad_x", 0.0, opt.tolerance, true};
        CheckCase cp{"layer.params", 0.0, opt.tolerance, true};
        const std::size_t n = opt.layer_voxels;
        for (std::size_t trial = 0; trial < opt.layer_trials; ++trial) {
            BlockParams p = random_block(n, 0.5, rng);
            Vector xv(n);
            for (double& x : xv) x = rng.uniform(0.05, 0.95);
            const Vector up = random_normal_vector(n, rng);
            const VoxelVector x(xv);
            const LayerGradients g = layer_backward(x, p, up);

            auto fx = [&](std::span<const double> v) {
                return dot(up, layer_forward(VoxelVector(Vector(v.begin(), v.end())), p));
            };
            merge(cx, finite_diff_check(fx, g.grad_x, xv, opt.step, opt.tolerance));

            auto pack = [](const BlockParams& b) {
                std::vector<double> v(b.theta0);
                v.insert(v.end(), b.theta1.begin(), b.theta1.end());
                v.insert(v.end(), b.w_prime.data().begin(), b.w_prime.data().end());
                v.insert(v.end(), b.w_dprime.data().begin(), b.w_dprime.data().end());
                return v;
            };
            auto unpack = [n](std::span<const double> v) {
                BlockParams b{Vector(v.begin(), v.begin() + n), Vector(v.begin() + n, v.begin() + 2 * n),
                              Matrix(n, n, Vector(v.begin() + 2 * n, v.begin() + 2 * n + n * n)),
                              Matrix(n, n, Vector(v.begin() + 2 * n + n * n, v.end()))};
                return b;
            };
            auto fp = [&](std::span<const double> v) { return dot(up, layer_forward(x, unpack(v))); };
            merge(cp, finite_diff_check(fp, pack(g.grad_params), pack(p), opt.step, opt.tolerance));
        }
        report.cases.push_back(cx);
        report.cases.push_back(cp);
    }

    // Full encoder: r . encode(raw) for a random cotangent r.
    {
        const EncoderParams params = random_encoder(opt.voxels, opt.embed_dim, opt.blocks, rng);
        const Vector raw = random_raw(params, rng);
        const Vector up = random_normal_vector(opt.embed_dim, rng);
        const AblationFlags flags;
        const EncoderParams grads = encode_backward(raw, params, flags, up);
        check_encoder_tensors(
            "encoder.", [&](const EncoderParams& p) { return dot(up, encode(raw, p, flags)); }, params, grads, opt,
            report);
    }

    // Contrastive loss with respect to predictions.
    {
        const Matrix p = random_unit_rows(opt.loss_batch, opt.loss_dim, rng);
        const Matrix t = random_unit_rows(opt.loss_batch, opt.loss_dim, rng);
        const double tau = 0.1;
        const ContrastiveResult r = contrastive_loss(EmbeddingBatch{p, t, tau});
        auto f = [&](std::span<const double> v) {
            return contrastive_loss_unchecked(Matrix(p.rows(), p.cols(), Vector(v.begin(), v.end())), t, tau).loss;
        };
        CheckCase c{"loss.grad_p", 0.0, opt.tolerance, true};
        merge(c, finite_diff_check(f, r.grad_p.data(), p.data(), opt.step, opt.tolerance));
        report.cases.push_back(c);
    }

    // One training batch end to end: contrastive loss of encoded samples.
    {
        const std::size_t n = 4;
        const EncoderParams params = random_encoder(opt.voxels, opt.embed_dim, opt.blocks, rng);
        Dataset data{Matrix(n, opt.voxels), random_unit_rows(n, opt.embed_dim, rng), std::nullopt};
        for (std::size_t i = 0; i < n; ++i) {
            const Vector raw = random_raw(params, rng);
            std::copy(raw.begin(), raw.end(), data.voxels.row(i).begin());
        }
        const std::vector<std::size_t> idx{0, 1, 2, 3};
        const double tau = 0.1;
        const AblationFlags flags;
        const BatchResult br = batch_gradients(data, idx, params, flags, tau, 1);
        check_encoder_tensors(
            "batch.",
            [&](const EncoderParams& p) {
                Matrix emb(n, opt.embed_dim);
                for (std::size_t i = 0; i < n; ++i) {
                    const Vector e = encode(data.voxels.row(i), p, flags);
                    std::copy(e.begin(), e.end(), emb.row(i).begin());
                }
                return contrastive_loss_unchecked(emb, data.embeddings, tau).loss;
            },
            params, br.grads, opt, report);
    }

    report.seconds = seconds_since(start);
    return report;
}

}  // namespace qbrain
