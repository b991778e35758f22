#include "qbrain/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qbrain/errors.hpp"

namespace qbrain {

void EmbeddingBatch::validate() const {
    if (p.rows() == 0) throw InvariantError("EmbeddingBatch: empty batch");
    if (p.rows() != t.rows() || p.cols() != t.cols()) throw InvariantError("EmbeddingBatch: p/t shape mismatch");
    if (!(tau > 0.0)) throw InvariantError("EmbeddingBatch: temperature must be positive");
    for (std::size_t i = 0; i < p.rows(); ++i) {
        if (std::abs(norm2(p.row(i)) - 1.0) > 1e-9) {
            throw InvariantError("EmbeddingBatch: prediction row " + std::to_string(i) + " is not unit norm");
        }
        if (std::abs(norm2(t.row(i)) - 1.0) > 1e-9) {
            throw InvariantError("EmbeddingBatch: target row " + std::to_string(i) + " is not unit norm");
        }
    }
}

ContrastiveResult contrastive_loss(const EmbeddingBatch& batch) {
    batch.validate();
    return contrastive_loss_unchecked(batch.p, batch.t, batch.tau);
}

ContrastiveResult contrastive_loss_unchecked(const Matrix& p, const Matrix& t, double tau) {
    const std::size_t n = p.rows();
    const std::size_t d = p.cols();
    const EmbeddingBatch batch{p, t, tau};

    Matrix logits(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) logits(i, j) = dot(batch.p.row(i), batch.t.row(j)) / batch.tau;

    // Row direction: predictions query targets.
    const Matrix row_soft = softmax_rows(logits);
    // Column direction: targets query predictions.
    const Matrix col_soft = softmax_rows(logits.transposed()).transposed();

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.row(i);
        const double rmax = *std::max_element(row.begin(), row.end());
        double rsum = 0.0;
        for (double v : row) rsum += std::exp(v - rmax);
        total += (rmax - logits(i, i)) + std::log(rsum);

        double cmax = logits(0, i);
        for (std::size_t k = 1; k < n; ++k) cmax = std::max(cmax, logits(k, i));
        double csum = 0.0;
        for (std::size_t k = 0; k < n; ++k) csum += std::exp(logits(k, i) - cmax);
        total += (cmax - logits(i, i)) + std::log(csum);
    }
    const double scale = 1.0 / (2.0 * static_cast<double>(n));

    // d loss / d L = scale * (row_soft + col_soft - 2 I); d L / d p_i = t_j / tau.
    ContrastiveResult out{total * scale, Matrix(n, d)};
    for (std::size_t i = 0; i < n; ++i) {
        auto g = out.grad_p.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            double dl = row_soft(i, j) + col_soft(i, j);
            if (i == j) dl -= 2.0;
            const double coeff = scale * dl / batch.tau;
            const auto t = batch.t.row(j);
            for (std::size_t k = 0; k < d; ++k) g[k] += coeff * t[k];
        }
    }
    return out;
}

}  // namespace qbrain
