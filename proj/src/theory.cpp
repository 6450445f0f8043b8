#include "recov/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "recov/cv.hpp"
#include "recov/errors.hpp"
#include "recov/numeric.hpp"
#include "recov/parallel.hpp"
#include "recov/rng.hpp"

namespace recov {

namespace {

// long double keeps the normalization error of large-N PMFs near 1e-13.
long double lchoose(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return -std::numeric_limits<long double>::infinity();
    return std::lgammal(static_cast<long double>(n) + 1.0L) -
           std::lgammal(static_cast<long double>(k) + 1.0L) -
           std::lgammal(static_cast<long double>(n - k) + 1.0L);
}

void check_hypergeometric_domain(std::int64_t N, std::int64_t K, std::int64_t n) {
    if (N < 0 || K < 0 || K > N || n < 0 || n > N)
        throw ValidationError("hypergeometric: need 0 <= K <= N and 0 <= n <= N");
}

}  // namespace

double hypergeometric_log_pmf(std::int64_t N, std::int64_t K, std::int64_t n, std::int64_t x) {
    check_hypergeometric_domain(N, K, n);
    if (x < std::max<std::int64_t>(0, n + K - N) || x > std::min(K, n))
        return -std::numeric_limits<double>::infinity();
    return static_cast<double>(lchoose(K, x) + lchoose(N - K, n - x) - lchoose(N, n));
}

double hypergeometric_pmf(std::int64_t N, std::int64_t K, std::int64_t n, std::int64_t x) {
    check_hypergeometric_domain(N, K, n);
    if (x < std::max<std::int64_t>(0, n + K - N) || x > std::min(K, n)) return 0.0;
    return static_cast<double>(expl(lchoose(K, x) + lchoose(N - K, n - x) - lchoose(N, n)));
}

std::int64_t hypergeometric_mode(std::int64_t N, std::int64_t K, std::int64_t n) {
    check_hypergeometric_domain(N, K, n);
    const std::int64_t lo = std::max<std::int64_t>(0, n + K - N);
    const std::int64_t hi = std::min(K, n);
    const double m = static_cast<double>(n + 1) * static_cast<double>(K + 1) /
                     static_cast<double>(N + 2);
    auto mode = std::clamp(static_cast<std::int64_t>(std::floor(m)), lo, hi);
    if (mode > lo) {
        // P(mode) == P(mode-1) when (n+1)(K+1)/(N+2) is an exact integer;
        // resolve the tie toward the smaller value.
        const unsigned __int128 up = static_cast<unsigned __int128>(K - mode + 1) *
                                     static_cast<unsigned __int128>(n - mode + 1);
        const unsigned __int128 down = static_cast<unsigned __int128>(mode) *
                                       static_cast<unsigned __int128>(N - K - n + mode);
        if (up == down) --mode;
    }
    return mode;
}

MonteCarloEstimate expected_most_noisy(std::int64_t N, double eps, int k, std::int64_t trials,
                                       std::uint64_t seed, int jobs) {
    if (N < 1 || k < 1 || trials < 1) throw ValidationError("expected_most_noisy: bad domain");
    if (!(eps >= 0.0) || eps >= 0.5) throw ValidationError("expected_most_noisy: eps in [0, 0.5)");
    const std::int64_t K = round_half_even(eps * static_cast<double>(N));
    if (K > N) throw ValidationError("expected_most_noisy: eps*N exceeds N");

    if (k == 1) return {static_cast<double>(K), 0.0, trials};  // single fold holds everything

    const auto sizes = fold_sizes(static_cast<std::size_t>(N), k);

    // Integer accumulators keep the estimate independent of trial order.
    std::mutex mu;
    std::int64_t sum = 0, sum_sq = 0;
    const int workers = std::max(1, jobs);
    const std::int64_t chunk = (trials + workers - 1) / workers;
    parallel_for(workers, workers, [&](std::int64_t w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min(trials, lo + chunk);
        std::int64_t local_sum = 0, local_sq = 0;
        std::vector<std::int64_t> slots(sizes.size());
        for (std::int64_t t = lo; t < hi; ++t) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
            // Allocate K markers into folds with probability proportional to
            // the remaining slots: exact multivariate hypergeometric.
            for (std::size_t f = 0; f < sizes.size(); ++f)
                slots[f] = static_cast<std::int64_t>(sizes[f]);
            std::int64_t remaining = N;
            std::vector<std::int64_t> counts(sizes.size(), 0);
            for (std::int64_t m = 0; m < K; ++m) {
                auto pick = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(remaining)));
                for (std::size_t f = 0; f < slots.size(); ++f) {
                    if (pick < slots[f]) {
                        ++counts[f];
                        --slots[f];
                        break;
                    }
                    pick -= slots[f];
                }
                --remaining;
            }
            const std::int64_t most = *std::max_element(counts.begin(), counts.end());
            local_sum += most;
            local_sq += most * most;
        }
        std::lock_guard<std::mutex> lock(mu);
        sum += local_sum;
        sum_sq += local_sq;
    });

    MonteCarloEstimate est;
    est.trials = trials;
    est.mean = static_cast<double>(sum) / static_cast<double>(trials);
    if (trials > 1) {
        const double var =
            (static_cast<double>(sum_sq) - static_cast<double>(trials) * est.mean * est.mean) /
            static_cast<double>(trials - 1);
        est.standard_error = std::sqrt(std::max(0.0, var) / static_cast<double>(trials));
    }
    return est;
}

OccurrenceModel build_occurrence_model(std::int64_t N, double eps, int k, std::int64_t trials,
                                       std::uint64_t seed, int jobs) {
    if (k < 1) throw ValidationError("build_occurrence_model: k >= 1");
    OccurrenceModel m;
    m.N = N;
    m.eps = eps;
    m.k = k;
    m.n_fold = static_cast<double>(N) / k;
    m.e_n_mean = eps * static_cast<double>(N) / k;
    const auto est = expected_most_noisy(N, eps, k, trials, seed, jobs);
    m.e_n_most = est.mean;
    m.e_n_most_se = est.standard_error;
    const std::int64_t K = round_half_even(eps * static_cast<double>(N));
    const auto sizes = k > 1 ? fold_sizes(static_cast<std::size_t>(N), k)
                             : std::vector<std::size_t>{static_cast<std::size_t>(N)};
    m.e_n_most_mode = static_cast<double>(
        hypergeometric_mode(N, K, static_cast<std::int64_t>(sizes.front())));
    m.e_n_diff = m.e_n_most - m.e_n_mean;
    m.p_noisy = m.e_n_most / m.n_fold;
    m.p_clean = 1.0 - m.p_noisy;
    return m;
}

namespace {

// Crossing point of Binomial(R, q_clean) and Binomial(R, q_noisy) PMFs. The
// binomial coefficients cancel, leaving a linear equation in x.
double binomial_crossing(std::int64_t R, double q_clean, double q_noisy) {
    const double num = std::log((1.0 - q_clean) / (1.0 - q_noisy));
    const double den = std::log(q_noisy / q_clean) + num;
    return static_cast<double>(R) * num / den;
}

}  // namespace

OccurrencePlan plan_runs(const OccurrenceModel& model, double sigma_multiple) {
    if (!(sigma_multiple > 0.0)) throw ValidationError("plan_runs: sigma multiple must be > 0");
    if (!(model.eps > 0.0)) throw NumericError("plan_runs: eps = 0 leaves nothing to detect");
    OccurrencePlan plan;
    plan.sigma_target = sigma_multiple;
    const double eps_n = model.eps * static_cast<double>(model.N);
    plan.q_noisy = model.e_n_most / eps_n;
    plan.q_clean = (model.n_fold - model.e_n_most) / ((1.0 - model.eps) * static_cast<double>(model.N));
    if (!(plan.q_noisy > plan.q_clean))
        throw NumericError("plan_runs: occurrence model is degenerate (q_noisy <= q_clean); "
                           "noise is not separable at this N, eps, k");
    const double gap = plan.q_noisy - plan.q_clean;
    const double sigma_sum = std::sqrt(plan.q_noisy * (1.0 - plan.q_noisy)) +
                             std::sqrt(plan.q_clean * (1.0 - plan.q_clean));
    const double root = sigma_multiple * sigma_sum / gap;
    plan.n_runs = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(root * root)));
    plan.threshold = plan_threshold(plan, plan.n_runs);
    return plan;
}

double plan_threshold(const OccurrencePlan& plan, std::int64_t n_runs) {
    const double mean_clean = static_cast<double>(n_runs) * plan.q_clean;
    const double mean_noisy = static_cast<double>(n_runs) * plan.q_noisy;
    double threshold = binomial_crossing(n_runs, plan.q_clean, plan.q_noisy);
    if (!(threshold > mean_clean && threshold < mean_noisy))
        threshold = 0.5 * (mean_clean + mean_noisy);  // PMFs did not cross between the means
    return threshold;
}

SimulatedOccurrences simulate_occurrences(std::int64_t N, double eps, int k, std::int64_t n_runs,
                                          std::uint64_t seed, int jobs) {
    if (N < 1 || k < 2 || n_runs < 1) throw ValidationError("simulate_occurrences: bad domain");
    if (!(eps >= 0.0) || eps >= 0.5) throw ValidationError("simulate_occurrences: eps in [0, 0.5)");
    const std::int64_t K = round_half_even(eps * static_cast<double>(N));

    SimulatedOccurrences sim;
    sim.n_runs = n_runs;
    sim.counts.assign(static_cast<std::size_t>(N), 0);
    sim.noisy.assign(static_cast<std::size_t>(N), 0);
    for (std::int64_t i = 0; i < K; ++i) sim.noisy[static_cast<std::size_t>(i)] = 1;

    const int workers = std::max(1, jobs);
    const std::int64_t chunk = (n_runs + workers - 1) / workers;
    std::mutex mu;
    parallel_for(workers, workers, [&](std::int64_t w) {
        const std::int64_t lo = w * chunk;
        const std::int64_t hi = std::min(n_runs, lo + chunk);
        if (lo >= hi) return;
        std::vector<std::int64_t> local_counts(static_cast<std::size_t>(N), 0);
        std::int64_t local_total = 0;
        for (std::int64_t run = lo; run < hi; ++run) {
            const auto split = uniform_split(static_cast<std::size_t>(N), k,
                                             derive_seed(seed, static_cast<std::uint64_t>(run) *
                                                                   kSeedStride + kStreamSplit));
            std::size_t best = 0;
            std::int64_t best_count = -1;
            for (std::size_t f = 0; f < split.folds.size(); ++f) {
                std::int64_t c = 0;
                for (const auto r : split.folds[f]) c += (r < K);
                if (c > best_count) {  // ties resolve to the lowest fold index
                    best_count = c;
                    best = f;
                }
            }
            for (const auto r : split.folds[best]) ++local_counts[static_cast<std::size_t>(r)];
            local_total += static_cast<std::int64_t>(split.folds[best].size());
        }
        std::lock_guard<std::mutex> lock(mu);
        for (std::size_t i = 0; i < local_counts.size(); ++i) sim.counts[i] += local_counts[i];
        sim.total_occurrences += local_total;
    });
    return sim;
}

BinGrid common_bin_grid(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                        std::size_t target_bins) {
    if (target_bins == 0) throw ValidationError("common_bin_grid: need at least one bin");
    if (a.empty() && b.empty()) return {0.0, 1.0, 1};
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    std::int64_t hi = std::numeric_limits<std::int64_t>::min();
    for (const auto v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const auto v : b) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const std::int64_t span_count = hi - lo + 1;
    const auto width = static_cast<std::int64_t>(
        (span_count + static_cast<std::int64_t>(target_bins) - 1) /
        static_cast<std::int64_t>(target_bins));
    BinGrid grid;
    grid.lo = static_cast<double>(lo);
    grid.width = static_cast<double>(std::max<std::int64_t>(1, width));
    grid.bins = static_cast<std::size_t>((span_count + width - 1) / std::max<std::int64_t>(1, width));
    return grid;
}

BinnedHistogram binned_histogram(std::span<const std::int64_t> values, const BinGrid& grid) {
    BinnedHistogram h;
    h.lo = grid.lo;
    h.width = grid.width;
    h.freq.assign(grid.bins, 0.0);
    if (values.empty() || grid.bins == 0) return h;
    for (const auto v : values) {
        auto b = static_cast<std::int64_t>(std::floor((static_cast<double>(v) - grid.lo) / grid.width));
        b = std::clamp<std::int64_t>(b, 0, static_cast<std::int64_t>(grid.bins) - 1);
        h.freq[static_cast<std::size_t>(b)] += 1.0;
    }
    for (auto& f : h.freq) f /= static_cast<double>(values.size());
    return h;
}

double total_variation(const BinnedHistogram& a, const BinnedHistogram& b) {
    if (a.freq.size() != b.freq.size() || a.lo != b.lo || a.width != b.width)
        throw ValidationError("total_variation: histograms use different grids");
    double tv = 0.0;
    for (std::size_t i = 0; i < a.freq.size(); ++i) tv += std::abs(a.freq[i] - b.freq[i]);
    return 0.5 * tv;
}

double overlap_coefficient(const BinnedHistogram& a, const BinnedHistogram& b) {
    if (a.freq.size() != b.freq.size() || a.lo != b.lo || a.width != b.width)
        throw ValidationError("overlap_coefficient: histograms use different grids");
    double ov = 0.0;
    for (std::size_t i = 0; i < a.freq.size(); ++i) ov += std::min(a.freq[i], b.freq[i]);
    return ov;
}

}  // namespace recov
