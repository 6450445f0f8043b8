#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recov/dataset.hpp"

namespace recov {

// Fold-level metric. Higher is better for all three kinds.
enum class MetricKind { accuracy, concordance_index, quadratic_weighted_kappa };

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& s);
MetricKind default_metric_for(LabelKind task);

// Per-sample ranking metric, oriented so higher = more plausibly clean.
enum class SampleMetricKind { true_class_probability, sample_concordance, regression_closeness };

std::string to_string(SampleMetricKind kind);
SampleMetricKind sample_metric_for(LabelKind task);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// Harrell's concordance index. Pair (i, j) is comparable iff the times differ
// and the earlier time is an event; concordant iff the earlier-event sample has
// strictly higher risk; tied risks count 0.5. Throws NumericError when no pair
// is comparable.
double concordance_index(std::span<const double> risk, std::span<const double> time,
                         std::span<const std::uint8_t> event);

// 1 - sum(w*O) / sum(w*E) with quadratic weights over [grade_min, grade_max].
double quadratic_weighted_kappa(std::span<const int> predicted, std::span<const int> truth,
                                int grade_min, int grade_max);

// Fraction of comparable pairs involving `index` that are concordant (risk ties
// count 0.5). nullopt when the sample has no comparable pair.
std::optional<double> sample_concordance(std::size_t index, std::span<const double> risk,
                                         std::span<const double> time,
                                         std::span<const std::uint8_t> event);

// sample_concordance for every sample in one O(N^2) pass.
std::vector<std::optional<double>> all_sample_concordance(std::span<const double> risk,
                                                          std::span<const double> time,
                                                          std::span<const std::uint8_t> event);

// 1 - |clamped prediction - truth| / (range width); 1 = exact, 0 = maximal error.
double regression_closeness(double predicted, double truth, int grade_min, int grade_max);

// Two-component 1-D Gaussian mixture fitted by EM.
struct Gmm1d {
    double mean[2];    // ordered ascending
    double var[2];
    double weight[2];
    double threshold;  // equal-responsibility point between the means
    int iterations = 0;
    bool converged = false;
    bool variance_floored = false;
    std::vector<double> log_likelihood_trace;
};

// EM from 25th/75th-percentile means, equal weights. Deterministic given
// values and seed (the seed only reseeds a collapsed component).
Gmm1d fit_gmm_1d(std::span<const double> values, std::uint64_t seed);

}  // namespace recov
