#include "recov/noise.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "recov/errors.hpp"
#include "recov/numeric.hpp"
#include "recov/rng.hpp"

namespace recov {

NoiseModel NoiseModel::uniform_flip(double eps) {
    if (!(eps >= 0.0) || eps >= 0.5)
        throw ValidationError("noise ratio must lie in [0, 0.5)");
    NoiseModel m;
    m.uniform = true;
    m.eps = eps;
    return m;
}

NoiseModel NoiseModel::from_transition(Eigen::MatrixXd t) {
    NoiseModel m;
    m.uniform = false;
    m.transition = std::move(t);
    if (m.transition.rows() != m.transition.cols())
        throw ValidationError("transition matrix must be square");
    m.validate(static_cast<int>(m.transition.rows()));
    return m;
}

void NoiseModel::validate(int n_classes) const {
    if (n_classes < 2) throw ValidationError("noise model needs at least 2 classes");
    if (uniform) {
        if (!(eps >= 0.0) || eps >= 0.5)
            throw ValidationError("noise ratio must lie in [0, 0.5)");
        return;
    }
    if (transition.rows() != n_classes || transition.cols() != n_classes)
        throw ValidationError("transition matrix dimension does not match class count");
    for (int j = 0; j < n_classes; ++j) {
        const double row_sum = transition.row(j).sum();
        if (std::abs(row_sum - 1.0) > 1e-12)
            throw ValidationError("transition matrix row " + std::to_string(j) +
                                  " does not sum to 1");
        if (transition.row(j).minCoeff() < 0.0)
            throw ValidationError("transition matrix has negative entries");
        if (transition(j, j) < 0.5)
            throw ValidationError("transition diagonal must be >= 0.5 (noise ratio below 0.5)");
    }
}

double NoiseModel::keep_probability(int j, int n_classes) const {
    (void)n_classes;
    return uniform ? 1.0 - eps : transition(j, j);
}

namespace {

// Draws the replacement class for a flipped sample of true class y.
int draw_flip_target(Rng& rng, const NoiseModel& model, int y, int m) {
    if (model.uniform) {
        auto k = static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
        return k >= y ? k + 1 : k;
    }
    // Off-diagonal row, renormalized: the sample must actually change class.
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i != y) total += model.transition(y, i);
    }
    if (total <= 0.0) throw NumericError("transition row has no off-diagonal mass to flip to");
    double u = rng.uniform01() * total;
    for (int i = 0; i < m; ++i) {
        if (i == y) continue;
        u -= model.transition(y, i);
        if (u <= 0.0) return i;
    }
    // Rounding can leave u marginally positive; return the last off-diagonal class.
    return y == m - 1 ? m - 2 : m - 1;
}

}  // namespace

std::pair<Dataset, NoiseMask> inject_noise(const Dataset& data, const NoiseModel& model,
                                           bool exact_count, std::uint64_t seed) {
    if (data.labels.kind != LabelKind::classification)
        throw ValidationError("inject_noise requires classification labels");
    const int m = data.labels.n_classes();
    if (m < 2) throw ValidationError("inject_noise: degenerate single-class label set");
    model.validate(m);

    const std::size_t N = data.n();
    Dataset noisy = data;
    NoiseMask mask;
    mask.source = NoiseMask::Source::ground_truth;
    mask.flags.assign(N, 0);
    Rng rng(seed);

    if (exact_count) {
        double expected_flips = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            expected_flips += 1.0 - model.keep_probability(data.labels.class_index[i], m);
        const std::int64_t count = round_half_even(expected_flips);
        if (count == 0) return {std::move(noisy), std::move(mask)};
        if (expected_flips < 1.0)
            throw ValidationError("exact_count requires eps*N >= 1");

        // Uniform choice of `count` flip positions: partial Fisher-Yates.
        std::vector<std::int64_t> order(N);
        std::iota(order.begin(), order.end(), 0);
        for (std::int64_t i = 0; i < count; ++i) {
            const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N - i)));
            std::swap(order[i], order[j]);
        }
        for (std::int64_t i = 0; i < count; ++i) {
            const auto s = order[i];
            const int y = noisy.labels.class_index[s];
            noisy.labels.class_index[s] = draw_flip_target(rng, model, y, m);
            mask.flags[s] = 1;
        }
    } else {
        for (std::size_t s = 0; s < N; ++s) {
            const int y = noisy.labels.class_index[s];
            const double keep = model.keep_probability(y, m);
            if (rng.uniform01() < keep) continue;
            noisy.labels.class_index[s] = draw_flip_target(rng, model, y, m);
            mask.flags[s] = 1;
        }
    }
    return {std::move(noisy), std::move(mask)};
}

}  // namespace recov
