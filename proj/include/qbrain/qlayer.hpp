#pragma once

#include <cstddef>
#include <span>

#include "qbrain/numerics.hpp"

namespace qbrain {

inline constexpr double kVoxelEpsilon = 1e-6;

// Voxel activations restricted to [eps, 1 - eps] so that a = sqrt((1 - x) x)
// stays real with a finite derivative.
class VoxelVector {
public:
    VoxelVector() = default;
    // Throws DomainError if any entry lies outside [eps, 1 - eps].
    explicit VoxelVector(Vector x);
    // Clamps every entry into the domain.
    static VoxelVector clamped(std::span<const double> raw);

    std::size_t size() const noexcept { return x_.size(); }
    double operator[](std::size_t i) const { return x_[i]; }
    const Vector& values() const noexcept { return x_; }
    operator std::span<const double>() const noexcept { return x_; }

private:
    struct Unchecked {};
    VoxelVector(Vector x, Unchecked) : x_(std::move(x)) {}
    Vector x_;
};

// Learnables of one connectivity block in free (unconstrained) form.
struct BlockParams {
    Vector theta0;
    Vector theta1;
    Matrix w_prime;
    Matrix w_dprime;

    // W' = W'' = 0, theta0 = 0, theta1 = pi/4.
    static BlockParams initial(std::size_t voxels);
    static BlockParams zeros_like(const BlockParams& p);
    std::size_t voxels() const noexcept { return theta0.size(); }
    // Throws DimensionError on inconsistent shapes.
    void validate() const;
};

// Simplex-coupled form: out_j = sum_k c_{jk} f(x_j, x_k; w_{jk}, dtheta_k).
struct ConstrainedParams {
    Matrix c;
    Matrix w;
    Vector theta0;
    Vector theta1;

    std::size_t voxels() const noexcept { return theta0.size(); }
    // Throws InvariantError unless every row of c lies on the simplex.
    void validate_simplex(double tol = 1e-12) const;
};

// Which additive terms of the block are active. Phase off pins
// cos(theta0 - theta1) to its value at pi/2, exactly zero.
struct LayerTerms {
    bool controlling = true;
    bool projection = true;
    bool phase = true;
};

// Closed form of the two-qubit projection:
//   f = x_j + x_j x_k (w^2 - 1) + 2 w x_j a_k cos(dtheta_k),  a_k = sqrt((1 - x_k) x_k)
// Throws DomainError outside [0, 1].
double pair_connectivity(double x_j, double x_k, double w, double dtheta_k);

// Reference double loop over the simplex-weighted pairwise terms.
Vector aggregate_forward(const VoxelVector& x, const ConstrainedParams& p);

// W'_{jk} = c_{jk} (w_{jk}^2 - 1), W''_{jk} = 2 c_{jk} w_{jk}.
BlockParams constrain_to_free(const ConstrainedParams& p);

// Forward intermediates reused by the backward pass. Vectors belonging to a
// disabled term are left empty.
struct LayerCache {
    Vector wx;        // W' x
    Vector a;         // sqrt((1 - x) x)
    Vector cosines;   // cos(theta0 - theta1), zeros when the phase is pinned
    Vector g;         // a * cosines
    Vector wg;        // W'' g
};

// f(x) = x + x * (W' x) + x * (W'' (a * cos(theta0 - theta1))), elementwise products.
Vector layer_forward(const VoxelVector& x, const BlockParams& p, const LayerTerms& terms = {},
                     LayerCache* cache = nullptr);

struct LayerGradients {
    Vector grad_x;
    BlockParams grad_params;
};

// Gradients of sum_j upstream_j f_j(x) with respect to the input and every
// parameter, including the dependence of a on x.
LayerGradients layer_backward(const VoxelVector& x, const BlockParams& p,
                              std::span<const double> upstream, const LayerTerms& terms = {});

// Rank-one form of the same gradients: dW' = s x^T and dW'' = s g^T with
// s = upstream * x. Lets callers sum many samples without materialising
// per-sample matrices.
struct LayerFactors {
    Vector grad_x;
    Vector s;
    Vector g;
    Vector grad_theta0;
    Vector grad_theta1;
    LayerTerms terms;

    // grads += this sample's contribution; x is the block input.
    void accumulate_into(BlockParams& grads, const VoxelVector& x) const;
};

LayerFactors layer_backward_factors(const VoxelVector& x, const BlockParams& p, std::span<const double> upstream,
                                    const LayerTerms& terms, const LayerCache& cache);

}  // namespace qbrain
