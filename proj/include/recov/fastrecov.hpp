#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "recov/dataset.hpp"
#include "recov/learners.hpp"
#include "recov/metrics.hpp"
#include "recov/recov.hpp"

namespace recov {

struct ThresholdSpec {
    enum class Mode { absolute, percentile, gmm };
    Mode mode = Mode::absolute;
    double value = 0.3;  // absolute cut or percentile in (0, 100); unused for gmm

    void validate() const;
};

// Accepts "abs:<v>", "pct:<v>" and "gmm".
ThresholdSpec parse_threshold(const std::string& text);
std::string to_string(const ThresholdSpec& spec);

struct FastRecovConfig {
    std::int64_t n_runs = 10;
    int k = 5;
    double tau = 0.1;    // softmax temperature for sampling probabilities
    double alpha = 0.3;  // EMA weight on the previous memory
    double beta = 0.8;   // fraction of identified samples dropped from training
    ThresholdSpec threshold;
    std::uint64_t master_seed = 0;
    int fold_jobs = 1;
    std::function<void(const struct FastRecovResult&)> on_checkpoint;
    std::function<void(std::int64_t done, std::int64_t total)> on_progress;
    const std::atomic<bool>* interrupt = nullptr;

    void validate() const;
};

// Task defaults: classification tau 0.1 / beta 0.8 / abs 0.3 / 10 runs,
// survival tau 0.5 / beta 0.1 / 4th percentile / 50 runs,
// ordinal tau 1.0 / beta 0.5 / 10th percentile / 15 runs; alpha 0.3 throughout.
FastRecovConfig fastrecov_defaults(LabelKind task);

// Per-sample EMA scores; lower memory = more likely noisy.
struct MemoryBank {
    std::vector<double> values;
    std::int64_t updates = 0;
};

// memory <- alpha * memory + (1 - alpha) * metric, elementwise. NaN metrics
// (undefined this run) leave the previous memory untouched.
void ema_update(MemoryBank& memory, std::span<const double> sample_metrics, double alpha);

// Softmax(memory / tau): strictly positive, sums to 1.
std::vector<double> sampling_probabilities(std::span<const double> memory, double tau);

// Row indices flagged noisy under the threshold spec, ascending. Percentile
// mode flags the lowest round(pct/100 * N) memories, ties broken by id.
std::vector<std::int32_t> identify(const MemoryBank& memory, const ThresholdSpec& threshold,
                                   std::span<const std::string> ids, std::uint64_t gmm_seed);

// Uniform floor(beta * |identified|) subset to exclude from training this run.
std::vector<std::int32_t> select_drops(std::span<const std::int32_t> identified, double beta,
                                       std::uint64_t seed);

struct FastRecovResult {
    MemoryBank memory;
    std::vector<std::int32_t> detected;  // last iteration's identify()
    std::vector<RunTrace> trace;
    std::int64_t runs_completed = 0;
    bool interrupted = false;
};

// Memory starts at zero (everything maximally suspect), sampling uniform.
// Each run: weighted split -> drop a random beta-fraction of the identified
// set from training -> cross-validate -> EMA the per-sample metrics ->
// re-identify -> recompute sampling probabilities. Runs are sequential by
// construction; only the fold fits within a run parallelize.
FastRecovResult fastrecov_loop(const Dataset& data, const FastRecovConfig& config,
                               const LearnerSpec& learner,
                               const FastRecovResult* resume = nullptr);

}  // namespace recov
