#pragma once

// Seeded dataset generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "recov/csv.hpp"
#include "recov/dataset.hpp"
#include "recov/rng.hpp"

namespace synthetic {

// Two Gaussian blobs at +-offset per dimension, balanced classes, shuffled row
// order. Mahalanobis separation is 2 * offset * sqrt(dim).
inline recov::Dataset blobs(std::size_t n, std::size_t dim, double offset, std::uint64_t seed,
                            const std::string& id_prefix = "") {
    recov::Rng rng(seed);
    recov::Dataset data;
    data.name = "blobs";
    data.labels.kind = recov::LabelKind::classification;
    data.labels.class_names = {"a", "b"};
    data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::vector<int> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = static_cast<int>(i % 2);
    rng.shuffle(ys);
    for (std::size_t i = 0; i < n; ++i) {
        data.ids.push_back(id_prefix + std::to_string(i));
        data.labels.class_index.push_back(ys[i]);
        const double mu = ys[i] == 0 ? -offset : offset;
        for (std::size_t j = 0; j < dim; ++j)
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                mu + rng.normal();
    }
    for (std::size_t j = 0; j < dim; ++j) data.feature_names.push_back("f" + std::to_string(j));
    data.validate();
    return data;
}

struct SurvivalOptions {
    std::size_t n = 500;
    std::size_t dim = 5;
    double beta_scale = 1.0;    // coefficients beta_j = beta_scale * (dim - j) / dim
    double censor_rate = 0.35;  // approximate fraction censored
    double censor_tilt = 0.0;   // log censor-hazard coefficient on the last covariate
    std::uint64_t seed = 1;
};

// Exponential survival times with linear log-hazard beta'x. Censoring is
// exponential; censor_tilt makes loss to follow-up depend on the last (weakest)
// covariate, the conditionally-independent censoring pattern of real cohorts.
inline recov::Dataset survival(const SurvivalOptions& opt) {
    recov::Rng rng(opt.seed);
    recov::Dataset data;
    data.name = "synthetic-survival";
    data.labels.kind = recov::LabelKind::survival;
    data.features.resize(static_cast<Eigen::Index>(opt.n), static_cast<Eigen::Index>(opt.dim));
    std::vector<double> beta(opt.dim);
    for (std::size_t j = 0; j < opt.dim; ++j)
        beta[j] = opt.beta_scale * static_cast<double>(opt.dim - j) / static_cast<double>(opt.dim);
    // Censoring rate c under hazard ratio r: censored with probability r/(1+r)
    // for a unit-rate subject; tune the censor hazard to the target on average.
    const double censor_hazard = opt.censor_rate / std::max(1e-9, 1.0 - opt.censor_rate);
    for (std::size_t i = 0; i < opt.n; ++i) {
        data.ids.push_back(std::to_string(i));
        double eta = 0.0;
        double x_last = 0.0;
        for (std::size_t j = 0; j < opt.dim; ++j) {
            const double x = rng.normal();
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
            eta += beta[j] * x;
            if (j + 1 == opt.dim) x_last = x;
        }
        const double t_event = rng.exponential(std::exp(eta));
        const double t_censor = rng.exponential(censor_hazard * std::exp(opt.censor_tilt * x_last));
        data.labels.time.push_back(std::min(t_event, t_censor) + 1e-9);
        data.labels.event.push_back(t_event <= t_censor ? 1 : 0);
    }
    for (std::size_t j = 0; j < opt.dim; ++j) data.feature_names.push_back("x" + std::to_string(j));
    data.validate();
    return data;
}

// Flips the event indicator of exactly `count` uniformly chosen samples.
// Returns the corrupted dataset and the ground-truth mask.
inline std::pair<recov::Dataset, recov::NoiseMask> flip_events(const recov::Dataset& data,
                                                               std::size_t count,
                                                               std::uint64_t seed) {
    recov::Rng rng(seed);
    recov::Dataset noisy = data;
    recov::NoiseMask mask;
    mask.source = recov::NoiseMask::Source::ground_truth;
    mask.flags.assign(data.n(), 0);
    std::vector<std::size_t> order(data.n());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
    }
    for (std::size_t i = 0; i < count; ++i) {
        noisy.labels.event[order[i]] ^= 1;
        mask.flags[order[i]] = 1;
    }
    return {std::move(noisy), std::move(mask)};
}

// Ordinal grades from a linear score plus noise, clamped to [0, grade_max].
inline recov::Dataset ordinal(std::size_t n, std::size_t dim, int grade_max, double noise_sd,
                              std::uint64_t seed) {
    recov::Rng rng(seed);
    recov::Dataset data;
    data.name = "synthetic-ordinal";
    data.labels.kind = recov::LabelKind::ordinal;
    data.labels.grade_min = 0;
    data.labels.grade_max = grade_max;
    data.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        data.ids.push_back(std::to_string(i));
        double score = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double x = rng.normal();
            data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
            score += x / std::sqrt(static_cast<double>(dim));
        }
        const double scaled =
            (score / 2.0 + 0.5) * grade_max + noise_sd * rng.normal();
        data.labels.grade.push_back(static_cast<int>(std::clamp(
            std::round(scaled), 0.0, static_cast<double>(grade_max))));
    }
    for (std::size_t j = 0; j < dim; ++j) data.feature_names.push_back("x" + std::to_string(j));
    data.validate();
    return data;
}

// Mushroom-shaped categorical benchmark: 22 categorical features whose level
// counts sum to 117, a margin-separated integer scoring rule for the binary
// label, written as a raw CSV for the encode step. Rows inside the margin band
// are resampled, so the classes are separated by a wide margin in the one-hot
// representation and stay learnable under heavy label noise.
inline void write_mushroom_like_csv(const std::string& path, std::size_t n, std::uint64_t seed) {
    const std::vector<int> levels = {6, 4, 10, 2, 9, 2, 2, 2, 12, 2, 5,
                                     4, 4, 9, 9, 2, 4, 3, 5, 9, 6, 6};  // sums to 117
    recov::Rng rng(seed);
    std::vector<std::vector<int>> weight(levels.size());
    for (std::size_t f = 0; f < levels.size(); ++f) {
        weight[f].resize(static_cast<std::size_t>(levels[f]));
        for (auto& w : weight[f]) w = static_cast<int>(rng.below(7)) - 3;
    }
    std::vector<std::vector<int>> cat(n, std::vector<int>(levels.size()));
    std::vector<int> score(n, 0);
    auto draw_row = [&](std::size_t i) {
        score[i] = 0;
        for (std::size_t f = 0; f < levels.size(); ++f) {
            const int c = static_cast<int>(rng.below(static_cast<std::uint64_t>(levels[f])));
            cat[i][f] = c;
            score[i] += weight[f][static_cast<std::size_t>(c)];
        }
    };
    for (std::size_t i = 0; i < n; ++i) draw_row(i);
    std::vector<int> sorted_scores = score;
    std::nth_element(sorted_scores.begin(), sorted_scores.begin() + static_cast<std::ptrdiff_t>(n / 2),
                     sorted_scores.end());
    const int cut = sorted_scores[n / 2];  // label = score >= cut
    const int margin = 5;
    for (std::size_t i = 0; i < n; ++i) {
        for (int attempt = 0; attempt < 1000 && std::abs(score[i] - cut) < margin; ++attempt)
            draw_row(i);
    }

    std::vector<std::string> columns{"class"};
    for (std::size_t f = 0; f < levels.size(); ++f) {
        char name[8];
        std::snprintf(name, sizeof(name), "f%02zu", f);
        columns.emplace_back(name);
    }
    std::vector<std::vector<std::string>> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row{score[i] >= cut ? "p" : "e"};
        for (std::size_t f = 0; f < levels.size(); ++f)
            row.push_back(std::string(1, static_cast<char>('a' + cat[i][f])));
        rows.push_back(std::move(row));
    }
    recov::write_csv(path, columns, rows);
}

inline double detection_f1(const recov::NoiseMask& detected, const recov::NoiseMask& truth) {
    double tp = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (detected.flags[i] && truth.flags[i]) tp += 1.0;
        else if (detected.flags[i]) fp += 1.0;
        else if (truth.flags[i]) fn += 1.0;
    }
    if (tp == 0.0) return 0.0;
    const double precision = tp / (tp + fp);
    const double recall = tp / (tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace synthetic
