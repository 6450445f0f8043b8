#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>

#include "recov/dataset.hpp"

namespace recov {

// Class-conditional label noise. Either the uniform-flip shorthand (stay with
// probability 1-eps, move to each other class with probability eps/(m-1)) or a
// full m x m row-stochastic transition matrix with p(observed=i | true=j) at
// row j, column i.
struct NoiseModel {
    bool uniform = true;
    double eps = 0.0;
    Eigen::MatrixXd transition;  // used when !uniform

    static NoiseModel uniform_flip(double eps);
    static NoiseModel from_transition(Eigen::MatrixXd t);

    // Checks row sums, diagonal >= 0.5, and dimension against the class count.
    void validate(int n_classes) const;

    // Probability that a sample of true class j keeps its label.
    double keep_probability(int j, int n_classes) const;
};

// Applies the noise process to a classification dataset. With exact_count, a
// banker's-rounded eps*N samples are flipped, chosen uniformly; otherwise each
// sample flips independently per its transition row. The mask marks exactly
// the samples whose observed label changed.
std::pair<Dataset, NoiseMask> inject_noise(const Dataset& data, const NoiseModel& model,
                                           bool exact_count, std::uint64_t seed);

}  // namespace recov
