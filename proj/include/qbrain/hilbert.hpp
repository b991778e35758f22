#pragma once

#include <array>

#include "qbrain/numerics.hpp"

// Exact state-vector simulation of the one- and two-qubit formalism behind the
// connectivity layer. Used as the reference the closed-form layer is checked
// against; nothing here is on the training path.
namespace qbrain::hilbert {

struct QubitState {
    Complex amp0;
    Complex amp1;

    double norm_squared() const { return std::norm(amp0) + std::norm(amp1); }
};

// Amplitudes ordered |00>, |01>, |10>, |11> with the first bit the control
// voxel and the second the target voxel, i.e. index 2*control + target.
struct TwoQubitState {
    std::array<Complex, 4> amps{};

    double norm_squared() const;
    ComplexVector as_vector() const { return {amps.begin(), amps.end()}; }
};

struct ControlledOperator {
    // 2x2 block applied to the target when the control bit is 1, row-major.
    std::array<Complex, 4> u{Complex{1.0}, Complex{0.0}, Complex{0.0}, Complex{1.0}};

    static ControlledOperator identity() { return {}; }
    bool is_unitary(double tol = 1e-12) const;
};

struct ProjectionBasis {
    double w = 1.0;

    // (0, 1, 0, w): selects the target-active components only.
    ComplexVector as_vector() const { return {Complex{0.0}, Complex{1.0}, Complex{0.0}, Complex{w}}; }
};

// sqrt(1 - x) e^{i theta0} |0> + sqrt(x) e^{i theta1} |1>. Throws DomainError
// unless 0 <= x <= 1.
QubitState make_qubit(double x, double theta0, double theta1);

TwoQubitState tensor_product(const QubitState& control, const QubitState& target);

TwoQubitState apply_controlled(const ControlledOperator& op, const TwoQubitState& s);

// |<basis|state>|^2.
double born_probability(const ComplexVector& state, const ComplexVector& basis);

// |<phi|psi>|^2 with phi = (0, 1, 0, w). phi is not normalised, so the result
// can exceed 1; it is returned unclamped.
double mpm_project(const TwoQubitState& s, const ProjectionBasis& basis);

// Builds both qubits, entangles with the control = k ordering and U = I, then
// projects onto (0, 1, 0, w).
double pair_connectivity_oracle(double x_j, double x_k, double theta0_k, double theta1_k,
                                double theta0_j, double theta1_j, double w);

}  // namespace qbrain::hilbert
