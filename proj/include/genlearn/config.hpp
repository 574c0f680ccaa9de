#pragma once

#include <cstdint>
#include <string>

namespace genlearn {

/// Shared trainer knobs. The seed is the determinism root for every trainer;
/// callers must set it explicitly (the CLI refuses to default it).
struct ExperimentConfig {
    std::uint64_t seed = 0;
    double learning_rate = 0.01;
    std::size_t max_steps = 1000;
    std::size_t batch_size = 32;
    std::size_t mc_samples = 1;
    std::string out_dir;
    bool backtracking = true;  // halve the step on objective regression
};

}  // namespace genlearn
