#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace recov {

// log P(X = x) for X ~ Hypergeometric(N, K, n): x successes in n draws without
// replacement from a population of N with K successes. -inf outside support.
double hypergeometric_log_pmf(std::int64_t N, std::int64_t K, std::int64_t n, std::int64_t x);
double hypergeometric_pmf(std::int64_t N, std::int64_t K, std::int64_t n, std::int64_t x);

// Mode of the distribution: floor((n+1)(K+1)/(N+2)).
std::int64_t hypergeometric_mode(std::int64_t N, std::int64_t K, std::int64_t n);

struct MonteCarloEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::int64_t trials = 0;
};

// E(n_most): expected count of noisy markers in the fold holding the most of
// them, under exact multivariate-hypergeometric allocation of round(eps*N)
// markers into k near-equal folds. Monte Carlo; the mode-based shortcut is
// hypergeometric_mode and is reported separately by the model builder.
MonteCarloEstimate expected_most_noisy(std::int64_t N, double eps, int k, std::int64_t trials,
                                       std::uint64_t seed, int jobs = 1);

struct OccurrenceModel {
    std::int64_t N = 0;
    double eps = 0.0;
    int k = 0;
    double n_fold = 0.0;         // N/k
    double e_n_mean = 0.0;       // eps*N/k
    double e_n_most = 0.0;       // Monte Carlo estimate
    double e_n_most_se = 0.0;
    double e_n_most_mode = 0.0;  // mode-of-the-PMF reading, for comparison
    double e_n_diff = 0.0;       // e_n_most - e_n_mean
    double p_noisy = 0.0;        // e_n_most / (N/k)
    double p_clean = 0.0;        // 1 - p_noisy
};

OccurrenceModel build_occurrence_model(std::int64_t N, double eps, int k, std::int64_t trials,
                                       std::uint64_t seed, int jobs = 1);

// Run-count plan: per-run worst-fold membership probabilities for noisy and
// clean samples, the smallest run count R with mean gap >= c * (sigma_noisy +
// sigma_clean) under the Binomial(R, q) occurrence model, and the count
// threshold at the crossing point of the two binomial PMFs.
struct OccurrencePlan {
    double q_noisy = 0.0;
    double q_clean = 0.0;
    double sigma_target = 0.0;
    std::int64_t n_runs = 0;
    double threshold = 0.0;
};

OccurrencePlan plan_runs(const OccurrenceModel& model, double sigma_multiple);

// Re-plans the threshold for an externally chosen run count.
double plan_threshold(const OccurrencePlan& plan, std::int64_t n_runs);

// Pure sampling simulation of the candidate pool: each run uniformly splits N
// samples (of which round(eps*N) carry noisy markers) into k folds, picks the
// fold with the most markers (ties -> lowest fold index) and increments the
// occurrence count of its members. No model training involved.
struct SimulatedOccurrences {
    std::vector<std::int64_t> counts;  // per sample
    std::vector<std::uint8_t> noisy;   // marker assignment (first round(eps*N) samples)
    std::int64_t n_runs = 0;
    std::int64_t total_occurrences = 0;  // sum of selected fold sizes
};

SimulatedOccurrences simulate_occurrences(std::int64_t N, double eps, int k, std::int64_t n_runs,
                                          std::uint64_t seed, int jobs = 1);

// Equal-width histograms over a shared integer grid, for comparing occurrence
// distributions.
struct BinnedHistogram {
    double lo = 0.0;
    double width = 1.0;
    std::vector<double> freq;  // normalized to sum 1 (empty input -> all zero)
};

struct BinGrid {
    double lo = 0.0;
    double width = 1.0;
    std::size_t bins = 0;
};

// Shared grid covering both value sets with ~target_bins equal-width integer bins.
BinGrid common_bin_grid(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                        std::size_t target_bins);

BinnedHistogram binned_histogram(std::span<const std::int64_t> values, const BinGrid& grid);

// 0.5 * sum |p - q| over a shared grid.
double total_variation(const BinnedHistogram& a, const BinnedHistogram& b);

// sum min(p, q): empirical overlap of the two distributions.
double overlap_coefficient(const BinnedHistogram& a, const BinnedHistogram& b);

}  // namespace recov
