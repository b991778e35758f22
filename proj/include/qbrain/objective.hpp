#pragma once

#include "qbrain/numerics.hpp"

namespace qbrain {

// Predictions p and targets t (N x D, unit-norm rows) with temperature tau.
struct EmbeddingBatch {
    Matrix p;
    Matrix t;
    double tau = 4e-3;

    // Throws InvariantError if a row is off the unit sphere by more than
    // 1e-9, tau <= 0, N == 0 or the shapes differ.
    void validate() const;
};

struct ContrastiveResult {
    double loss;
    Matrix grad_p;
};

// Symmetric InfoNCE over logits L = p t^T / tau:
//   loss = -(1 / 2N) [ sum_i log softmax_row(L)_ii + sum_i log softmax_col(L)_ii ]
// Targets are constants; grad_p is d loss / d p.
ContrastiveResult contrastive_loss(const EmbeddingBatch& batch);

// Same objective without the unit-norm and shape checks; for finite-difference
// probes that step off the sphere.
ContrastiveResult contrastive_loss_unchecked(const Matrix& p, const Matrix& t, double tau);

}  // namespace qbrain
