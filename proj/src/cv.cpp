#include "recov/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "recov/errors.hpp"
#include "recov/numeric.hpp"
#include "recov/parallel.hpp"
#include "recov/rng.hpp"

namespace recov {

void FoldSplit::validate(std::size_t n) const {
    if (folds.size() < 2) throw ValidationError("fold split needs k >= 2");
    std::vector<std::uint8_t> seen(n, 0);
    std::size_t total = 0, min_size = n, max_size = 0;
    for (const auto& fold : folds) {
        min_size = std::min(min_size, fold.size());
        max_size = std::max(max_size, fold.size());
        for (const auto r : fold) {
            if (r < 0 || static_cast<std::size_t>(r) >= n)
                throw ValidationError("fold split references row out of range");
            if (seen[static_cast<std::size_t>(r)]++)
                throw ValidationError("fold split repeats a row");
            ++total;
        }
    }
    if (total != n) throw ValidationError("fold split does not cover all rows");
    if (max_size - min_size > 1) throw ValidationError("fold sizes differ by more than 1");
}

std::vector<std::size_t> fold_sizes(std::size_t n, int k) {
    if (k < 2) throw ValidationError("need k >= 2 folds");
    if (static_cast<std::size_t>(k) > n) throw ValidationError("k exceeds the number of samples");
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), n / static_cast<std::size_t>(k));
    for (std::size_t f = 0; f < n % static_cast<std::size_t>(k); ++f) ++sizes[f];
    return sizes;
}

namespace {

FoldSplit chunk_order(std::vector<std::int32_t> order, int k, std::uint64_t seed, SplitMode mode) {
    FoldSplit split;
    split.seed = seed;
    split.mode = mode;
    const auto sizes = fold_sizes(order.size(), k);
    std::size_t at = 0;
    for (const auto sz : sizes) {
        split.folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                                 order.begin() + static_cast<std::ptrdiff_t>(at + sz));
        at += sz;
    }
    return split;
}

}  // namespace

FoldSplit uniform_split(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("uniform_split: need k >= 2");
    if (static_cast<std::size_t>(k) > n)
        throw ValidationError("uniform_split: k exceeds the number of samples");
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    return chunk_order(std::move(order), k, seed, SplitMode::uniform);
}

FoldSplit weighted_split(std::span<const double> probabilities, int k, std::uint64_t seed) {
    const std::size_t n = probabilities.size();
    if (k < 2) throw ValidationError("weighted_split: need k >= 2");
    if (static_cast<std::size_t>(k) > n)
        throw ValidationError("weighted_split: k exceeds the number of samples");
    double sum = 0.0;
    for (const double p : probabilities) {
        if (!(p > 0.0)) throw ValidationError("weighted_split: probabilities must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("weighted_split: probabilities must sum to 1");

    // Efraimidis-Spirakis: key_i = log(u_i) / w_i, draw order = descending key.
    Rng rng(seed);
    std::vector<std::pair<double, std::int32_t>> keyed(n);
    for (std::size_t i = 0; i < n; ++i)
        keyed[i] = {std::log(rng.uniform_open01()) / probabilities[i], static_cast<std::int32_t>(i)};
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::int32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = keyed[i].second;
    return chunk_order(std::move(order), k, seed, SplitMode::weighted);
}

std::vector<std::vector<std::string>> fold_ids(const FoldSplit& split,
                                               std::span<const std::string> ids) {
    std::vector<std::vector<std::string>> out;
    out.reserve(split.folds.size());
    for (const auto& fold : split.folds) {
        std::vector<std::string> names;
        names.reserve(fold.size());
        for (const auto r : fold) names.push_back(ids[static_cast<std::size_t>(r)]);
        out.push_back(std::move(names));
    }
    return out;
}

RunOutcome run_cv(const Dataset& data, const FoldSplit& split, const LearnerSpec& learner,
                  MetricKind metric, std::span<const std::int32_t> drop_rows,
                  std::uint64_t learner_seed, int fold_jobs) {
    const std::size_t n = data.n();
    split.validate(n);
    if (metric != default_metric_for(data.labels.kind))
        throw ValidationError("run_cv: metric '" + to_string(metric) +
                              "' does not apply to " + to_string(data.labels.kind) + " labels");
    std::vector<std::uint8_t> dropped(n, 0);
    for (const auto r : drop_rows) {
        if (r < 0 || static_cast<std::size_t>(r) >= n)
            throw ValidationError("run_cv: drop row out of range");
        dropped[static_cast<std::size_t>(r)] = 1;
    }

    const int k = split.k();
    RunOutcome out;
    out.split_seed = split.seed;
    out.fold_metrics.assign(static_cast<std::size_t>(k), 0.0);
    out.sample_metrics.assign(n, std::numeric_limits<double>::quiet_NaN());
    out.fold_of_sample.assign(n, -1);
    for (int f = 0; f < k; ++f)
        for (const auto r : split.folds[static_cast<std::size_t>(f)])
            out.fold_of_sample[static_cast<std::size_t>(r)] = f;

    const bool survival = data.labels.kind == LabelKind::survival;
    std::vector<double> pooled_risk;  // validation-time risk for every row
    if (survival) pooled_risk.assign(n, 0.0);
    std::atomic<bool> warned{false};

    parallel_for(k, fold_jobs, [&](std::int64_t fi) {
        const int f = static_cast<int>(fi);
        try {
            const auto& val_rows = split.folds[static_cast<std::size_t>(f)];
            std::vector<std::uint8_t> in_val(n, 0);
            for (const auto r : val_rows) in_val[static_cast<std::size_t>(r)] = 1;
            std::vector<std::int32_t> train_rows;
            train_rows.reserve(n - val_rows.size());
            for (std::size_t r = 0; r < n; ++r) {
                if (!in_val[r] && !dropped[r]) train_rows.push_back(static_cast<std::int32_t>(r));
            }
            if (train_rows.empty()) throw ValidationError("empty effective training set");

            auto model = make_learner(learner);
            model->fit(data, train_rows, derive_seed(learner_seed, static_cast<std::uint64_t>(f)));
            if (!model->converged() || !model->warning().empty()) warned.store(true);
            const Eigen::MatrixXd pred = model->predict(data, val_rows);

            switch (data.labels.kind) {
                case LabelKind::classification: {
                    std::vector<int> pred_class(val_rows.size()), truth(val_rows.size());
                    for (std::size_t i = 0; i < val_rows.size(); ++i) {
                        Eigen::Index best = 0;
                        pred.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
                        pred_class[i] = static_cast<int>(best);
                        const int y = data.labels.class_index[val_rows[i]];
                        truth[i] = y;
                        out.sample_metrics[static_cast<std::size_t>(val_rows[i])] =
                            pred(static_cast<Eigen::Index>(i), y);
                    }
                    out.fold_metrics[static_cast<std::size_t>(f)] = accuracy(pred_class, truth);
                    break;
                }
                case LabelKind::ordinal: {
                    const int lo = data.labels.grade_min, hi = data.labels.grade_max;
                    std::vector<int> pred_grade(val_rows.size()), truth(val_rows.size());
                    for (std::size_t i = 0; i < val_rows.size(); ++i) {
                        const double raw = pred(static_cast<Eigen::Index>(i), 0);
                        const int rounded = static_cast<int>(std::clamp<std::int64_t>(
                            round_half_even(raw), lo, hi));
                        pred_grade[i] = rounded;
                        truth[i] = data.labels.grade[val_rows[i]];
                        out.sample_metrics[static_cast<std::size_t>(val_rows[i])] =
                            regression_closeness(raw, truth[i], lo, hi);
                    }
                    out.fold_metrics[static_cast<std::size_t>(f)] =
                        quadratic_weighted_kappa(pred_grade, truth, lo, hi);
                    break;
                }
                case LabelKind::survival: {
                    std::vector<double> risk(val_rows.size()), time(val_rows.size());
                    std::vector<std::uint8_t> event(val_rows.size());
                    for (std::size_t i = 0; i < val_rows.size(); ++i) {
                        risk[i] = pred(static_cast<Eigen::Index>(i), 0);
                        time[i] = data.labels.time[val_rows[i]];
                        event[i] = data.labels.event[val_rows[i]];
                        pooled_risk[static_cast<std::size_t>(val_rows[i])] = risk[i];
                    }
                    out.fold_metrics[static_cast<std::size_t>(f)] =
                        concordance_index(risk, time, event);
                    break;
                }
            }
        } catch (const std::exception& e) {
            throw Error("fold " + std::to_string(f) + ": " + e.what());
        }
    });
    out.learner_warning = warned.load();

    if (survival) {
        // Per-sample concordance over all comparable pairs in the dataset,
        // using each sample's validation-time risk.
        const auto sc = all_sample_concordance(pooled_risk, data.labels.time, data.labels.event);
        for (std::size_t r = 0; r < n; ++r) {
            if (sc[r]) out.sample_metrics[r] = *sc[r];
        }
    }
    return out;
}

}  // namespace recov
