#include "qbrain/hilbert.hpp"

#include <cmath>
#include <string>

#include "qbrain/errors.hpp"

namespace qbrain::hilbert {

double TwoQubitState::norm_squared() const {
    double total = 0.0;
    for (const auto& a : amps) total += std::norm(a);
    return total;
}

bool ControlledOperator::is_unitary(double tol) const {
    // (U^dagger U)_{rc} = sum_k conj(U_{kr}) U_{kc}
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            Complex acc{0.0};
            for (int k = 0; k < 2; ++k) acc += std::conj(u[2 * k + r]) * u[2 * k + c];
            const Complex expected = (r == c) ? Complex{1.0} : Complex{0.0};
            if (std::abs(acc - expected) > tol) return false;
        }
    }
    return true;
}

QubitState make_qubit(double x, double theta0, double theta1) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("make_qubit: voxel value " + std::to_string(x) + " outside [0, 1]");
    }
    return {std::polar(std::sqrt(1.0 - x), theta0), std::polar(std::sqrt(x), theta1)};
}

TwoQubitState tensor_product(const QubitState& control, const QubitState& target) {
    const std::array<Complex, 2> c{control.amp0, control.amp1};
    const std::array<Complex, 2> t{target.amp0, target.amp1};
    TwoQubitState s;
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) s.amps[2 * k + j] = c[k] * t[j];
    return s;
}

TwoQubitState apply_controlled(const ControlledOperator& op, const TwoQubitState& s) {
    TwoQubitState out = s;
    out.amps[2] = op.u[0] * s.amps[2] + op.u[1] * s.amps[3];
    out.amps[3] = op.u[2] * s.amps[2] + op.u[3] * s.amps[3];
    return out;
}

double born_probability(const ComplexVector& state, const ComplexVector& basis) {
    if (state.size() != basis.size()) {
        throw DimensionError("born_probability: state dim " + std::to_string(state.size()) +
                             " != basis dim " + std::to_string(basis.size()));
    }
    Complex overlap{0.0};
    for (std::size_t n = 0; n < state.size(); ++n) overlap += std::conj(basis[n]) * state[n];
    return std::norm(overlap);
}

double mpm_project(const TwoQubitState& s, const ProjectionBasis& basis) {
    return born_probability(s.as_vector(), basis.as_vector());
}

double pair_connectivity_oracle(double x_j, double x_k, double theta0_k, double theta1_k,
                                double theta0_j, double theta1_j, double w) {
    const QubitState control = make_qubit(x_k, theta0_k, theta1_k);
    const QubitState target = make_qubit(x_j, theta0_j, theta1_j);
    const TwoQubitState entangled =
        apply_controlled(ControlledOperator::identity(), tensor_product(control, target));
    return mpm_project(entangled, ProjectionBasis{w});
}

}  // namespace qbrain::hilbert
