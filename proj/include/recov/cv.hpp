#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "recov/dataset.hpp"
#include "recov/learners.hpp"
#include "recov/metrics.hpp"

namespace recov {

enum class SplitMode { uniform, weighted };

// k disjoint folds covering rows 0..n-1, kept in draw order. When k does not
// divide n, the first (n mod k) folds carry one extra row.
struct FoldSplit {
    std::vector<std::vector<std::int32_t>> folds;
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::uniform;

    int k() const { return static_cast<int>(folds.size()); }
    // Partition check: disjoint, exhaustive, sizes differing by at most 1.
    void validate(std::size_t n) const;
};

std::vector<std::size_t> fold_sizes(std::size_t n, int k);

// Seeded uniform shuffle, then contiguous chunking.
FoldSplit uniform_split(std::size_t n, int k, std::uint64_t seed);

// Sequential weighted draws without replacement (Efraimidis-Spirakis keys),
// chunked in draw order: low-probability rows concentrate in the last fold.
FoldSplit weighted_split(std::span<const double> probabilities, int k, std::uint64_t seed);

std::vector<std::vector<std::string>> fold_ids(const FoldSplit& split,
                                               std::span<const std::string> ids);

// One cross-validation pass: per-fold metric plus one validation-time
// per-sample metric for every row. sample_metrics uses NaN for rows whose
// metric is undefined this run (survival rows with no comparable pair).
struct RunOutcome {
    std::vector<double> fold_metrics;
    std::vector<double> sample_metrics;
    std::vector<std::int32_t> fold_of_sample;
    std::uint64_t split_seed = 0;
    bool learner_warning = false;
};

// Trains one learner per fold on the out-of-fold rows minus drop_rows and
// scores the fold. Dropped rows stay in their validation fold so they are
// still scored every run. Fold failures are rethrown with the fold id.
RunOutcome run_cv(const Dataset& data, const FoldSplit& split, const LearnerSpec& learner,
                  MetricKind metric, std::span<const std::int32_t> drop_rows,
                  std::uint64_t learner_seed, int fold_jobs = 1);

}  // namespace recov
