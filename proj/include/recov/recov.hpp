#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "recov/cv.hpp"
#include "recov/dataset.hpp"
#include "recov/learners.hpp"
#include "recov/metrics.hpp"

namespace recov {

// Occurrence counts accumulated over repeated runs: how often each sample
// landed in the worst-performing validation fold.
struct CandidatePool {
    std::vector<std::string> ids;
    std::vector<std::int64_t> counts;
    std::int64_t runs = 0;
    std::int64_t total_occurrences = 0;  // sum of worst-fold sizes across runs

    void validate() const;
};

// Index of the minimum metric; ties break to the lowest fold index.
std::size_t worst_fold(std::span<const double> fold_metrics);

struct RunTrace {
    std::int64_t run = 0;
    std::uint64_t split_seed = 0;
    std::vector<double> fold_metrics;
    std::int32_t worst_fold = -1;
    std::int64_t n_dropped = 0;
};

struct RecovResult {
    CandidatePool pool;
    std::vector<RunTrace> trace;
    bool interrupted = false;
};

struct RecovOptions {
    int k = 5;
    std::int64_t n_runs = 0;
    std::uint64_t master_seed = 0;
    int jobs = 1;
    std::int64_t checkpoint_interval = 100;
    MetricKind metric = MetricKind::accuracy;
    LearnerSpec learner;
    // Fit once on the full dataset and hand the coefficients to every fold fit
    // as the Newton starting point. Cuts iterations several-fold at identical
    // optima (the penalized objectives are strictly convex).
    bool warm_start = true;
    // Called after every completed block of checkpoint_interval runs with a
    // consistent snapshot, and once more before an abort propagates.
    std::function<void(const RecovResult&)> on_checkpoint;
    // Called roughly every 50 completed runs (unordered under parallelism).
    std::function<void(std::int64_t done, std::int64_t total)> on_progress;
    const std::atomic<bool>* interrupt = nullptr;
};

// Algorithm: for each run, uniform k-fold split -> cross-validate -> append the
// worst fold's members to the pool. Runs execute in a worker pool; per-run
// seeds derive from (master_seed, run index) so any job count produces the
// identical pool. Pass `resume` to continue a checkpointed result.
RecovResult recov_run_loop(const Dataset& data, const RecovOptions& options,
                           const RecovResult* resume = nullptr);

// Samples with count strictly above the threshold are flagged noisy.
NoiseMask separate(const CandidatePool& pool, double threshold);

// Trains on the rows not flagged by `detected` and scores the held-out set.
double clean_retrain(const Dataset& train, const NoiseMask& detected, const LearnerSpec& learner,
                     const Dataset& heldout, MetricKind metric, std::uint64_t seed);

// Shared scoring helper: fit on `train_rows` of `train`, evaluate `metric` on
// the full held-out dataset.
double evaluate_holdout(const Dataset& train, std::span<const std::int32_t> train_rows,
                        const LearnerSpec& learner, const Dataset& heldout, MetricKind metric,
                        std::uint64_t seed);

}  // namespace recov
