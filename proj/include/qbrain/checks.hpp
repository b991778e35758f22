#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qbrain {

struct CheckCase {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    // Gradient checks: the coordinate behind max_error.
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

struct CheckReport {
    std::vector<CheckCase> cases;
    double seconds = 0.0;

    bool pass() const;
    double max_error() const;
    std::string summary() const;
};

// Closed-form pair connectivity against the two-qubit simulation over random
// tuples x in [0,1], theta in [0, 2 pi), w in [-3, 3]; absolute tolerance 1e-10.
CheckReport check_oracle(std::size_t trials, std::uint64_t seed, double tolerance = 1e-10);

// Loop aggregation against the vectorised layer via constrain_to_free, random
// voxel counts up to `max_voxels`; absolute tolerance 1e-12.
CheckReport check_aggregation(std::size_t configs, std::size_t max_voxels, std::uint64_t seed,
                              double tolerance = 1e-12);

struct GradCheckOptions {
    std::size_t voxels = 16;
    std::size_t embed_dim = 8;
    std::size_t blocks = 2;
    std::size_t loss_batch = 8;
    std::size_t loss_dim = 16;
    std::size_t layer_voxels = 8;
    std::size_t layer_trials = 20;
    double step = 1e-6;
    double tolerance = 1e-4;
    std::uint64_t seed = 1;
};

// Central-difference checks of the layer, the full encoder (every parameter
// tensor reported separately), the contrastive loss and one batch of training.
CheckReport check_gradients(const GradCheckOptions& options);

}  // namespace qbrain
