#include "recov/fastrecov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "recov/cv.hpp"
#include "recov/errors.hpp"
#include "recov/numeric.hpp"
#include "recov/rng.hpp"

namespace recov {

void ThresholdSpec::validate() const {
    if (mode == Mode::percentile && !(value > 0.0 && value < 100.0))
        throw ValidationError("percentile threshold must lie in (0, 100)");
    if (mode == Mode::absolute && !std::isfinite(value))
        throw ValidationError("absolute threshold must be finite");
}

ThresholdSpec parse_threshold(const std::string& text) {
    ThresholdSpec spec;
    if (text == "gmm") {
        spec.mode = ThresholdSpec::Mode::gmm;
        spec.value = 0.0;
        return spec;
    }
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ValidationError("threshold must be abs:<value>, pct:<value> or gmm, got '" + text + "'");
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (end != tail.c_str() + tail.size() || tail.empty())
        throw ValidationError("bad threshold value: '" + tail + "'");
    if (head == "abs") spec.mode = ThresholdSpec::Mode::absolute;
    else if (head == "pct") spec.mode = ThresholdSpec::Mode::percentile;
    else throw ValidationError("threshold must be abs:<value>, pct:<value> or gmm, got '" + text + "'");
    spec.value = v;
    spec.validate();
    return spec;
}

std::string to_string(const ThresholdSpec& spec) {
    std::ostringstream out;
    switch (spec.mode) {
        case ThresholdSpec::Mode::absolute: out << "abs:" << spec.value; break;
        case ThresholdSpec::Mode::percentile: out << "pct:" << spec.value; break;
        case ThresholdSpec::Mode::gmm: out << "gmm"; break;
    }
    return out.str();
}

void FastRecovConfig::validate() const {
    if (n_runs < 1) throw ValidationError("fastrecov: n_runs must be >= 1");
    if (k < 2) throw ValidationError("fastrecov: k must be >= 2");
    if (!(tau > 0.0)) throw ValidationError("fastrecov: tau must be > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("fastrecov: alpha must be in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("fastrecov: beta must be in [0, 1]");
    threshold.validate();
}

FastRecovConfig fastrecov_defaults(LabelKind task) {
    FastRecovConfig cfg;
    cfg.alpha = 0.3;
    cfg.k = 5;
    switch (task) {
        case LabelKind::classification:
            cfg.n_runs = 10;
            cfg.tau = 0.1;
            cfg.beta = 0.8;
            cfg.threshold = {ThresholdSpec::Mode::absolute, 0.3};
            break;
        case LabelKind::survival:
            cfg.n_runs = 50;
            cfg.tau = 0.5;
            cfg.beta = 0.1;
            cfg.threshold = {ThresholdSpec::Mode::percentile, 4.0};
            break;
        case LabelKind::ordinal:
            cfg.n_runs = 15;
            cfg.tau = 1.0;
            cfg.beta = 0.5;
            cfg.threshold = {ThresholdSpec::Mode::percentile, 10.0};
            break;
    }
    return cfg;
}

void ema_update(MemoryBank& memory, std::span<const double> sample_metrics, double alpha) {
    if (memory.values.size() != sample_metrics.size())
        throw ValidationError("ema_update: length mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("ema_update: alpha in [0, 1]");
    for (std::size_t i = 0; i < memory.values.size(); ++i) {
        const double s = sample_metrics[i];
        if (std::isnan(s)) continue;  // undefined this run: carry previous memory
        memory.values[i] = alpha * memory.values[i] + (1.0 - alpha) * s;
    }
    ++memory.updates;
}

std::vector<double> sampling_probabilities(std::span<const double> memory, double tau) {
    if (!(tau > 0.0)) throw ValidationError("sampling_probabilities: tau must be > 0");
    if (memory.empty()) throw ValidationError("sampling_probabilities: empty memory");
    double mx = memory[0];
    for (const double v : memory) mx = std::max(mx, v);
    std::vector<double> p(memory.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < memory.size(); ++i) {
        p[i] = std::exp((memory[i] - mx) / tau);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

std::vector<std::int32_t> identify(const MemoryBank& memory, const ThresholdSpec& threshold,
                                   std::span<const std::string> ids, std::uint64_t gmm_seed) {
    if (memory.updates < 1) throw ValidationError("identify: memory has no updates yet");
    if (memory.values.size() != ids.size()) throw ValidationError("identify: id/memory mismatch");
    threshold.validate();
    const std::size_t n = memory.values.size();
    std::vector<std::int32_t> out;

    switch (threshold.mode) {
        case ThresholdSpec::Mode::absolute: {
            for (std::size_t i = 0; i < n; ++i) {
                if (memory.values[i] < threshold.value) out.push_back(static_cast<std::int32_t>(i));
            }
            break;
        }
        case ThresholdSpec::Mode::percentile: {
            const auto want = static_cast<std::size_t>(std::clamp<std::int64_t>(
                round_half_even(threshold.value / 100.0 * static_cast<double>(n)), 0,
                static_cast<std::int64_t>(n)));
            if (want == 0) break;
            std::vector<std::int32_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
                const double ma = memory.values[static_cast<std::size_t>(a)];
                const double mb = memory.values[static_cast<std::size_t>(b)];
                if (ma != mb) return ma < mb;
                return ids[static_cast<std::size_t>(a)] < ids[static_cast<std::size_t>(b)];
            });
            out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want));
            std::sort(out.begin(), out.end());
            break;
        }
        case ThresholdSpec::Mode::gmm: {
            const Gmm1d g = fit_gmm_1d(memory.values, gmm_seed);
            for (std::size_t i = 0; i < n; ++i) {
                if (memory.values[i] < g.threshold) out.push_back(static_cast<std::int32_t>(i));
            }
            break;
        }
    }
    return out;
}

std::vector<std::int32_t> select_drops(std::span<const std::int32_t> identified, double beta,
                                       std::uint64_t seed) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("select_drops: beta in [0, 1]");
    std::vector<std::int32_t> pool(identified.begin(), identified.end());
    std::sort(pool.begin(), pool.end());
    const auto want = static_cast<std::size_t>(
        std::floor(beta * static_cast<double>(pool.size())));
    if (want == 0) return {};
    Rng rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::int32_t> drops(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
    std::sort(drops.begin(), drops.end());
    return drops;
}

FastRecovResult fastrecov_loop(const Dataset& data, const FastRecovConfig& config,
                               const LearnerSpec& learner, const FastRecovResult* resume) {
    data.validate();
    config.validate();
    const std::size_t n = data.n();
    const MetricKind metric = default_metric_for(data.labels.kind);

    FastRecovResult result;
    if (resume) {
        result = *resume;
        if (result.memory.values.size() != n)
            throw ValidationError("fastrecov resume: memory does not match the dataset");
        if (result.runs_completed >= config.n_runs)
            throw ValidationError("fastrecov resume: checkpoint already has all requested runs");
    } else {
        result.memory.values.assign(n, 0.0);  // start maximally suspicious
        result.memory.updates = 0;
        result.detected.clear();
    }
    result.interrupted = false;
    result.trace.resize(static_cast<std::size_t>(config.n_runs));

    std::vector<double> probabilities =
        result.memory.updates > 0 ? sampling_probabilities(result.memory.values, config.tau)
                                  : std::vector<double>(n, 1.0 / static_cast<double>(n));

    for (std::int64_t run = result.runs_completed; run < config.n_runs; ++run) {
        if (config.interrupt && config.interrupt->load()) {
            result.interrupted = true;
            break;
        }
        const auto stream = static_cast<std::uint64_t>(run) * kSeedStride;
        const std::uint64_t split_seed = derive_seed(config.master_seed, stream + kStreamSplit);
        const FoldSplit split = weighted_split(probabilities, config.k, split_seed);
        const auto drops = select_drops(result.detected, config.beta,
                                        derive_seed(config.master_seed, stream + kStreamDrop));
        const RunOutcome outcome =
            run_cv(data, split, learner, metric, drops,
                   derive_seed(config.master_seed, stream + kStreamLearner), config.fold_jobs);

        ema_update(result.memory, outcome.sample_metrics, config.alpha);
        result.detected = identify(result.memory, config.threshold, data.ids,
                                   derive_seed(config.master_seed, stream + kStreamGmm));
        probabilities = sampling_probabilities(result.memory.values, config.tau);

        RunTrace& tr = result.trace[static_cast<std::size_t>(run)];
        tr.run = run;
        tr.split_seed = split_seed;
        tr.fold_metrics = outcome.fold_metrics;
        tr.worst_fold = static_cast<std::int32_t>(worst_fold(outcome.fold_metrics));
        tr.n_dropped = static_cast<std::int64_t>(drops.size());

        result.runs_completed = run + 1;
        if (config.on_progress) config.on_progress(run + 1, config.n_runs);
        if (config.on_checkpoint && result.runs_completed < config.n_runs)
            config.on_checkpoint(result);
    }
    result.trace.resize(static_cast<std::size_t>(result.runs_completed));
    if (config.on_checkpoint) config.on_checkpoint(result);
    return result;
}

}  // namespace recov
