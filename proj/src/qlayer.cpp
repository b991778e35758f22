#include "qbrain/qlayer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "qbrain/errors.hpp"

namespace qbrain {

namespace {

void require_voxel_domain(double x, const char* who) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError(std::string(who) + ": voxel value " + std::to_string(x) +
                          " outside [0, 1]");
    }
}

// cos(theta0 - theta1) per voxel, or exact zeros when the phase term is pinned.
Vector phase_cosines(const BlockParams& p, bool phase) {
    Vector c(p.voxels(), 0.0);
    if (!phase) return c;
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = std::cos(p.theta0[k] - p.theta1[k]);
    return c;
}

Vector amplitudes(const VoxelVector& x) {
    Vector a(x.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::sqrt((1.0 - x[k]) * x[k]);
    return a;
}

void require_shape(const VoxelVector& x, const BlockParams& p) {
    p.validate();
    if (x.size() != p.voxels()) {
        throw DimensionError("layer: input has " + std::to_string(x.size()) +
                             " voxels, block expects " + std::to_string(p.voxels()));
    }
}

}  // namespace

VoxelVector::VoxelVector(Vector x) : x_(std::move(x)) {
    for (std::size_t i = 0; i < x_.size(); ++i) {
        if (!(x_[i] >= kVoxelEpsilon && x_[i] <= 1.0 - kVoxelEpsilon)) {
            throw DomainError("VoxelVector: entry " + std::to_string(i) + " = " +
                              std::to_string(x_[i]) + " outside [1e-6, 1 - 1e-6]");
        }
    }
}

VoxelVector VoxelVector::clamped(std::span<const double> raw) {
    Vector x(raw.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(raw[i])) throw NumericalError("VoxelVector::clamped: NaN at entry " + std::to_string(i));
        x[i] = std::clamp(raw[i], kVoxelEpsilon, 1.0 - kVoxelEpsilon);
    }
    return VoxelVector(std::move(x), Unchecked{});
}

BlockParams BlockParams::initial(std::size_t voxels) {
    return {Vector(voxels, 0.0), Vector(voxels, std::numbers::pi / 4.0), Matrix(voxels, voxels),
            Matrix(voxels, voxels)};
}

BlockParams BlockParams::zeros_like(const BlockParams& p) {
    return {Vector(p.theta0.size(), 0.0), Vector(p.theta1.size(), 0.0),
            Matrix(p.w_prime.rows(), p.w_prime.cols()), Matrix(p.w_dprime.rows(), p.w_dprime.cols())};
}

void BlockParams::validate() const {
    const std::size_t c = theta0.size();
    if (theta1.size() != c || w_prime.rows() != c || w_prime.cols() != c || w_dprime.rows() != c ||
        w_dprime.cols() != c) {
        throw DimensionError("BlockParams: inconsistent shapes for " + std::to_string(c) + " voxels");
    }
}

void ConstrainedParams::validate_simplex(double tol) const {
    const std::size_t n = voxels();
    if (theta1.size() != n || c.rows() != n || c.cols() != n || w.rows() != n || w.cols() != n) {
        throw DimensionError("ConstrainedParams: inconsistent shapes");
    }
    for (std::size_t j = 0; j < n; ++j) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (c(j, k) < 0.0) {
                throw InvariantError("ConstrainedParams: negative simplex weight in row " + std::to_string(j));
            }
            total += c(j, k);
        }
        if (std::abs(total - 1.0) > tol) {
            throw InvariantError("ConstrainedParams: row " + std::to_string(j) + " sums to " +
                                 std::to_string(total));
        }
    }
}

double pair_connectivity(double x_j, double x_k, double w, double dtheta_k) {
    require_voxel_domain(x_j, "pair_connectivity");
    require_voxel_domain(x_k, "pair_connectivity");
    const double a_k = std::sqrt((1.0 - x_k) * x_k);
    return x_j + x_j * x_k * (w * w - 1.0) + x_j * a_k * 2.0 * w * std::cos(dtheta_k);
}

Vector aggregate_forward(const VoxelVector& x, const ConstrainedParams& p) {
    p.validate_simplex();
    if (x.size() != p.voxels()) throw DimensionError("aggregate_forward: voxel count mismatch");
    const std::size_t n = x.size();
    Vector out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += p.c(j, k) * pair_connectivity(x[j], x[k], p.w(j, k), p.theta0[k] - p.theta1[k]);
        }
        out[j] = acc;
    }
    return out;
}

BlockParams constrain_to_free(const ConstrainedParams& p) {
    p.validate_simplex();
    const std::size_t n = p.voxels();
    BlockParams out{p.theta0, p.theta1, Matrix(n, n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            const double c = p.c(j, k);
            const double w = p.w(j, k);
            out.w_prime(j, k) = c * (w * w - 1.0);
            out.w_dprime(j, k) = 2.0 * c * w;
        }
    }
    return out;
}

Vector layer_forward(const VoxelVector& x, const BlockParams& p, const LayerTerms& terms, LayerCache* cache) {
    require_shape(x, p);
    const std::size_t n = x.size();
    LayerCache local;
    LayerCache& c = cache ? *cache : local;
    c = {};
    Vector out(x.values());
    if (terms.controlling) {
        c.wx = matvec(p.w_prime, x);
        for (std::size_t j = 0; j < n; ++j) out[j] += x[j] * c.wx[j];
    }
    if (terms.projection) {
        c.cosines = phase_cosines(p, terms.phase);
        c.a = amplitudes(x);
        c.g.resize(n);
        for (std::size_t k = 0; k < n; ++k) c.g[k] = c.a[k] * c.cosines[k];
        c.wg = matvec(p.w_dprime, c.g);
        for (std::size_t j = 0; j < n; ++j) out[j] += x[j] * c.wg[j];
    }
    return out;
}

LayerFactors layer_backward_factors(const VoxelVector& x, const BlockParams& p, std::span<const double> upstream,
                                    const LayerTerms& terms, const LayerCache& cache) {
    const std::size_t n = x.size();
    if (upstream.size() != n) throw DimensionError("layer_backward: upstream length mismatch");
    LayerFactors f;
    f.terms = terms;
    f.grad_x.assign(upstream.begin(), upstream.end());
    f.s.resize(n);
    for (std::size_t j = 0; j < n; ++j) f.s[j] = upstream[j] * x[j];

    if (terms.controlling) {
        const Vector back = matvec_transposed(p.w_prime, f.s);
        for (std::size_t j = 0; j < n; ++j) f.grad_x[j] += upstream[j] * cache.wx[j] + back[j];
    }
    if (terms.projection) {
        const Vector back = matvec_transposed(p.w_dprime, f.s);  // d/dg
        for (std::size_t k = 0; k < n; ++k) {
            const double da_dx = (1.0 - 2.0 * x[k]) / (2.0 * cache.a[k]);
            f.grad_x[k] += upstream[k] * cache.wg[k] + back[k] * cache.cosines[k] * da_dx;
        }
        f.g = cache.g;
        if (terms.phase) {
            f.grad_theta0.resize(n);
            f.grad_theta1.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double d = -back[k] * cache.a[k] * std::sin(p.theta0[k] - p.theta1[k]);
                f.grad_theta0[k] = d;
                f.grad_theta1[k] = -d;
            }
        }
    }
    return f;
}

void LayerFactors::accumulate_into(BlockParams& grads, const VoxelVector& x) const {
    const std::size_t n = s.size();
    if (grads.voxels() != n || x.size() != n) throw DimensionError("LayerFactors: shape mismatch");
    if (terms.controlling) {
        for (std::size_t j = 0; j < n; ++j) {
            auto row = grads.w_prime.row(j);
            const double sj = s[j];
            for (std::size_t k = 0; k < n; ++k) row[k] += sj * x[k];
        }
    }
    if (terms.projection) {
        for (std::size_t j = 0; j < n; ++j) {
            auto row = grads.w_dprime.row(j);
            const double sj = s[j];
            for (std::size_t k = 0; k < n; ++k) row[k] += sj * g[k];
        }
        for (std::size_t k = 0; k < grad_theta0.size(); ++k) {
            grads.theta0[k] += grad_theta0[k];
            grads.theta1[k] += grad_theta1[k];
        }
    }
}

LayerGradients layer_backward(const VoxelVector& x, const BlockParams& p,
                              std::span<const double> upstream, const LayerTerms& terms) {
    LayerCache cache;
    layer_forward(x, p, terms, &cache);
    LayerFactors f = layer_backward_factors(x, p, upstream, terms, cache);
    LayerGradients out{std::move(f.grad_x), BlockParams::zeros_like(p)};
    f.accumulate_into(out.grad_params, x);
    return out;
}

}  // namespace qbrain
