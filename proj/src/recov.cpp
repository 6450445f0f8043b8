#include "recov/recov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>

#include "recov/errors.hpp"
#include "recov/numeric.hpp"
#include "recov/parallel.hpp"
#include "recov/rng.hpp"

namespace recov {

void CandidatePool::validate() const {
    if (ids.size() != counts.size()) throw ValidationError("candidate pool: id/count mismatch");
    std::int64_t total = 0;
    for (const auto c : counts) {
        if (c < 0 || c > runs) throw ValidationError("candidate pool: count outside [0, runs]");
        total += c;
    }
    if (total != total_occurrences)
        throw ValidationError("candidate pool: counts do not sum to the recorded occurrences");
}

std::size_t worst_fold(std::span<const double> fold_metrics) {
    if (fold_metrics.size() < 2) throw ValidationError("worst_fold: need at least 2 fold metrics");
    std::size_t best = 0;
    for (std::size_t f = 0; f < fold_metrics.size(); ++f) {
        if (std::isnan(fold_metrics[f])) throw NumericError("worst_fold: NaN fold metric");
        if (fold_metrics[f] < fold_metrics[best]) best = f;
    }
    return best;
}

namespace {

LearnerSpec with_warm_start(const Dataset& data, const RecovOptions& options) {
    LearnerSpec spec = options.learner;
    if (!options.warm_start || spec.kind == LearnerSpec::Kind::subprocess) return spec;
    std::vector<std::int32_t> all_rows(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) all_rows[i] = static_cast<std::int32_t>(i);
    auto model = make_learner(spec);
    model->fit(data, all_rows, derive_seed(options.master_seed, kStreamWarmStart));
    const Eigen::VectorXd coef = model->coefficients();
    if (coef.size() > 0) spec.config.initial_coefficients = coef;
    return spec;
}

}  // namespace

RecovResult recov_run_loop(const Dataset& data, const RecovOptions& options,
                           const RecovResult* resume) {
    data.validate();
    if (options.n_runs < 1) throw ValidationError("recov: n_runs must be >= 1");
    if (options.k < 2) throw ValidationError("recov: k must be >= 2");
    const std::size_t n = data.n();

    RecovResult result;
    if (resume) {
        result = *resume;
        if (result.pool.ids != data.ids)
            throw ValidationError("recov resume: checkpoint ids do not match the dataset");
        if (result.pool.runs >= options.n_runs)
            throw ValidationError("recov resume: checkpoint already has all requested runs");
        result.trace.resize(static_cast<std::size_t>(result.pool.runs));
    } else {
        result.pool.ids = data.ids;
        result.pool.counts.assign(n, 0);
    }
    result.interrupted = false;

    const LearnerSpec spec = with_warm_start(data, options);
    const std::int64_t block_size = std::max<std::int64_t>(1, options.checkpoint_interval);
    std::atomic<std::int64_t> completed{result.pool.runs};
    std::mutex progress_mu;

    std::int64_t done = result.pool.runs;
    result.trace.resize(static_cast<std::size_t>(options.n_runs));
    while (done < options.n_runs) {
        if (options.interrupt && options.interrupt->load()) {
            result.interrupted = true;
            break;
        }
        const std::int64_t block_end = std::min(options.n_runs, done + block_size);
        // Worst-fold membership per run, applied serially after the block so
        // the pool is independent of worker scheduling.
        std::vector<std::vector<std::int32_t>> worst_rows(
            static_cast<std::size_t>(block_end - done));
        try {
            parallel_for(block_end - done, options.jobs, [&](std::int64_t offset) {
                const std::int64_t run = done + offset;
                const auto stream = static_cast<std::uint64_t>(run) * kSeedStride;
                const std::uint64_t split_seed =
                    derive_seed(options.master_seed, stream + kStreamSplit);
                const FoldSplit split = uniform_split(n, options.k, split_seed);
                const RunOutcome outcome =
                    run_cv(data, split, spec, options.metric, {},
                           derive_seed(options.master_seed, stream + kStreamLearner));
                const std::size_t wf = worst_fold(outcome.fold_metrics);
                worst_rows[static_cast<std::size_t>(offset)] = split.folds[wf];
                RunTrace& tr = result.trace[static_cast<std::size_t>(run)];
                tr.run = run;
                tr.split_seed = split_seed;
                tr.fold_metrics = outcome.fold_metrics;
                tr.worst_fold = static_cast<std::int32_t>(wf);
                const std::int64_t c = completed.fetch_add(1) + 1;
                if (options.on_progress && c % 50 == 0) {
                    std::lock_guard<std::mutex> lock(progress_mu);
                    options.on_progress(c, options.n_runs);
                }
            });
        } catch (...) {
            // Persist the last consistent snapshot, then propagate.
            result.trace.resize(static_cast<std::size_t>(done));
            result.pool.runs = done;
            if (options.on_checkpoint) options.on_checkpoint(result);
            throw;
        }
        for (const auto& rows : worst_rows) {
            for (const auto r : rows) ++result.pool.counts[static_cast<std::size_t>(r)];
            result.pool.total_occurrences += static_cast<std::int64_t>(rows.size());
        }
        done = block_end;
        result.pool.runs = done;
        if (options.on_checkpoint && (done < options.n_runs)) options.on_checkpoint(result);
    }
    result.trace.resize(static_cast<std::size_t>(done));
    result.pool.validate();
    if (options.on_checkpoint) options.on_checkpoint(result);
    return result;
}

NoiseMask separate(const CandidatePool& pool, double threshold) {
    if (pool.runs <= 0) throw ValidationError("separate: pool has no recorded runs");
    pool.validate();
    NoiseMask mask;
    mask.source = NoiseMask::Source::detected;
    mask.flags.reserve(pool.counts.size());
    for (const auto c : pool.counts)
        mask.flags.push_back(static_cast<double>(c) > threshold ? 1 : 0);
    return mask;
}

double evaluate_holdout(const Dataset& train, std::span<const std::int32_t> train_rows,
                        const LearnerSpec& learner, const Dataset& heldout, MetricKind metric,
                        std::uint64_t seed) {
    auto model = make_learner(learner);
    model->fit(train, train_rows, seed);
    std::vector<std::int32_t> all(heldout.n());
    for (std::size_t i = 0; i < heldout.n(); ++i) all[i] = static_cast<std::int32_t>(i);
    const Eigen::MatrixXd pred = model->predict(heldout, all);

    switch (metric) {
        case MetricKind::accuracy: {
            std::vector<int> pred_class(heldout.n()), truth(heldout.n());
            for (std::size_t i = 0; i < heldout.n(); ++i) {
                Eigen::Index best = 0;
                pred.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
                pred_class[i] = static_cast<int>(best);
                truth[i] = heldout.labels.class_index[i];
            }
            return accuracy(pred_class, truth);
        }
        case MetricKind::concordance_index: {
            std::vector<double> risk(heldout.n());
            for (std::size_t i = 0; i < heldout.n(); ++i)
                risk[i] = pred(static_cast<Eigen::Index>(i), 0);
            return concordance_index(risk, heldout.labels.time, heldout.labels.event);
        }
        case MetricKind::quadratic_weighted_kappa: {
            const int lo = heldout.labels.grade_min, hi = heldout.labels.grade_max;
            std::vector<int> pred_grade(heldout.n()), truth(heldout.n());
            for (std::size_t i = 0; i < heldout.n(); ++i) {
                pred_grade[i] = static_cast<int>(std::clamp<std::int64_t>(
                    round_half_even(pred(static_cast<Eigen::Index>(i), 0)), lo, hi));
                truth[i] = heldout.labels.grade[i];
            }
            return quadratic_weighted_kappa(pred_grade, truth, lo, hi);
        }
    }
    throw ValidationError("evaluate_holdout: unknown metric");
}

double clean_retrain(const Dataset& train, const NoiseMask& detected, const LearnerSpec& learner,
                     const Dataset& heldout, MetricKind metric, std::uint64_t seed) {
    if (detected.size() != train.n())
        throw ValidationError("clean_retrain: mask length does not match dataset");
    std::set<std::string> train_ids(train.ids.begin(), train.ids.end());
    for (const auto& id : heldout.ids) {
        if (train_ids.count(id))
            throw ValidationError("clean_retrain: heldout id '" + id + "' appears in training data");
    }
    std::vector<std::int32_t> keep;
    keep.reserve(train.n());
    for (std::size_t i = 0; i < train.n(); ++i) {
        if (!detected.flags[i]) keep.push_back(static_cast<std::int32_t>(i));
    }
    if (keep.empty()) throw ValidationError("clean_retrain: cleaned training set is empty");
    return evaluate_holdout(train, keep, learner, heldout, metric, seed);
}

}  // namespace recov
