#include "recov/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recov/errors.hpp"
#include "recov/rng.hpp"

namespace recov {

std::string to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::concordance_index: return "concordance_index";
        case MetricKind::quadratic_weighted_kappa: return "quadratic_weighted_kappa";
    }
    return "?";
}

MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "accuracy") return MetricKind::accuracy;
    if (s == "concordance_index" || s == "cindex") return MetricKind::concordance_index;
    if (s == "quadratic_weighted_kappa" || s == "qwk") return MetricKind::quadratic_weighted_kappa;
    throw ValidationError("unknown metric kind: '" + s + "'");
}

MetricKind default_metric_for(LabelKind task) {
    switch (task) {
        case LabelKind::classification: return MetricKind::accuracy;
        case LabelKind::survival: return MetricKind::concordance_index;
        case LabelKind::ordinal: return MetricKind::quadratic_weighted_kappa;
    }
    return MetricKind::accuracy;
}

std::string to_string(SampleMetricKind kind) {
    switch (kind) {
        case SampleMetricKind::true_class_probability: return "true_class_probability";
        case SampleMetricKind::sample_concordance: return "sample_concordance";
        case SampleMetricKind::regression_closeness: return "regression_closeness";
    }
    return "?";
}

SampleMetricKind sample_metric_for(LabelKind task) {
    switch (task) {
        case LabelKind::classification: return SampleMetricKind::true_class_probability;
        case LabelKind::survival: return SampleMetricKind::sample_concordance;
        case LabelKind::ordinal: return SampleMetricKind::regression_closeness;
    }
    return SampleMetricKind::true_class_probability;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size())
        throw ValidationError("accuracy: length mismatch");
    if (predicted.empty()) throw ValidationError("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += (predicted[i] == truth[i]);
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {

// Comparability and concordance contribution of one ordered-by-time pair.
// Returns (comparable, concordance in {0, 0.5, 1}).
inline bool pair_terms(double risk_i, double t_i, std::uint8_t e_i, double risk_j, double t_j,
                       std::uint8_t e_j, double& concordance) {
    if (t_i == t_j) return false;
    const bool i_earlier = t_i < t_j;
    const std::uint8_t e_early = i_earlier ? e_i : e_j;
    if (!e_early) return false;
    const double r_early = i_earlier ? risk_i : risk_j;
    const double r_late = i_earlier ? risk_j : risk_i;
    if (r_early > r_late) concordance = 1.0;
    else if (r_early == r_late) concordance = 0.5;
    else concordance = 0.0;
    return true;
}

}  // namespace

double concordance_index(std::span<const double> risk, std::span<const double> time,
                         std::span<const std::uint8_t> event) {
    if (risk.size() != time.size() || time.size() != event.size())
        throw ValidationError("concordance_index: length mismatch");
    const std::size_t n = risk.size();
    double comparable = 0.0, score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double c;
            if (pair_terms(risk[i], time[i], event[i], risk[j], time[j], event[j], c)) {
                comparable += 1.0;
                score += c;
            }
        }
    }
    if (comparable == 0.0) throw NumericError("concordance_index: no comparable pairs");
    return score / comparable;
}

double quadratic_weighted_kappa(std::span<const int> predicted, std::span<const int> truth,
                                int grade_min, int grade_max) {
    if (predicted.size() != truth.size())
        throw ValidationError("quadratic_weighted_kappa: length mismatch");
    const std::size_t n = predicted.size();
    if (n < 2) throw ValidationError("quadratic_weighted_kappa: need at least 2 samples");
    const int R = grade_max - grade_min + 1;
    if (R < 2) throw ValidationError("quadratic_weighted_kappa: degenerate grade range");

    std::vector<double> observed(static_cast<std::size_t>(R) * R, 0.0);
    std::vector<double> marg_pred(R, 0.0), marg_truth(R, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const int p = predicted[s] - grade_min;
        const int t = truth[s] - grade_min;
        if (p < 0 || p >= R || t < 0 || t >= R)
            throw ValidationError("quadratic_weighted_kappa: grade outside declared range");
        observed[static_cast<std::size_t>(p) * R + t] += 1.0;
        marg_pred[p] += 1.0;
        marg_truth[t] += 1.0;
    }
    const double denom_scale = static_cast<double>(n);  // E scaled to the same total as O
    const double w_norm = static_cast<double>(R - 1) * (R - 1);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < R; ++j) {
            const double w = static_cast<double>(i - j) * (i - j) / w_norm;
            num += w * observed[static_cast<std::size_t>(i) * R + j];
            den += w * marg_pred[i] * marg_truth[j] / denom_scale;
        }
    }
    if (den == 0.0) {
        if (num == 0.0) return 1.0;  // constant identical ratings
        throw NumericError("quadratic_weighted_kappa: zero expected disagreement");
    }
    return 1.0 - num / den;
}

std::optional<double> sample_concordance(std::size_t index, std::span<const double> risk,
                                         std::span<const double> time,
                                         std::span<const std::uint8_t> event) {
    if (risk.size() != time.size() || time.size() != event.size())
        throw ValidationError("sample_concordance: length mismatch");
    if (index >= risk.size()) throw ValidationError("sample_concordance: index out of range");
    double comparable = 0.0, score = 0.0;
    for (std::size_t j = 0; j < risk.size(); ++j) {
        if (j == index) continue;
        double c;
        if (pair_terms(risk[index], time[index], event[index], risk[j], time[j], event[j], c)) {
            comparable += 1.0;
            score += c;
        }
    }
    if (comparable == 0.0) return std::nullopt;
    return score / comparable;
}

std::vector<std::optional<double>> all_sample_concordance(std::span<const double> risk,
                                                          std::span<const double> time,
                                                          std::span<const std::uint8_t> event) {
    if (risk.size() != time.size() || time.size() != event.size())
        throw ValidationError("all_sample_concordance: length mismatch");
    const std::size_t n = risk.size();
    std::vector<double> comparable(n, 0.0), score(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double c;
            if (pair_terms(risk[i], time[i], event[i], risk[j], time[j], event[j], c)) {
                comparable[i] += 1.0;
                score[i] += c;
                comparable[j] += 1.0;
                score[j] += c;
            }
        }
    }
    std::vector<std::optional<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (comparable[i] > 0.0) out[i] = score[i] / comparable[i];
    }
    return out;
}

double regression_closeness(double predicted, double truth, int grade_min, int grade_max) {
    const double width = static_cast<double>(grade_max) - grade_min;
    if (width <= 0.0) throw ValidationError("regression_closeness: degenerate grade range");
    const double clamped = std::clamp(predicted, static_cast<double>(grade_min),
                                      static_cast<double>(grade_max));
    return 1.0 - std::abs(clamped - truth) / width;
}

namespace {

constexpr double kVarianceFloor = 1e-12;
constexpr double kLogTwoPi = 1.8378770664093453;

inline double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

// Equal-responsibility point between the two component means. Solves the
// log-density equality (a quadratic in x); falls back to the midpoint when no
// root lands strictly between the means.
double crossover_threshold(const Gmm1d& g) {
    const double m1 = g.mean[0], m2 = g.mean[1];
    const double v1 = g.var[0], v2 = g.var[1];
    const double midpoint = 0.5 * (m1 + m2);
    if (!(m2 > m1)) return midpoint;
    const double c_rhs = std::log(g.weight[1] / g.weight[0]) + 0.5 * std::log(v1 / v2);
    const double a = 0.5 / v1 - 0.5 / v2;
    const double b = m2 / v2 - m1 / v1;
    const double c = 0.5 * m1 * m1 / v1 - 0.5 * m2 * m2 / v2 - c_rhs;
    if (std::abs(a) < 1e-300) {
        if (std::abs(b) < 1e-300) return midpoint;
        const double x = -c / b;
        return (x > m1 && x < m2) ? x : midpoint;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return midpoint;
    const double sq = std::sqrt(disc);
    const double r1 = (-b + sq) / (2.0 * a);
    const double r2 = (-b - sq) / (2.0 * a);
    if (r1 > m1 && r1 < m2) return r1;
    if (r2 > m1 && r2 < m2) return r2;
    return midpoint;
}

}  // namespace

Gmm1d fit_gmm_1d(std::span<const double> values, std::uint64_t seed) {
    const std::size_t n = values.size();
    if (n < 4) throw ValidationError("fit_gmm_1d: need at least 4 values");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw NumericError("fit_gmm_1d: all values identical");

    Gmm1d g{};
    // Nearest-rank percentile init; min/max fallback when the quartiles collide.
    g.mean[0] = sorted[(n - 1) / 4];
    g.mean[1] = sorted[(3 * (n - 1)) / 4];
    if (g.mean[0] == g.mean[1]) {
        g.mean[0] = sorted.front();
        g.mean[1] = sorted.back();
    }
    double mean_all = 0.0;
    for (double v : sorted) mean_all += v;
    mean_all /= static_cast<double>(n);
    double var_all = 0.0;
    for (double v : sorted) var_all += (v - mean_all) * (v - mean_all);
    var_all = std::max(var_all / static_cast<double>(n), kVarianceFloor);
    g.var[0] = g.var[1] = var_all;
    g.weight[0] = g.weight[1] = 0.5;

    Rng rng(seed);
    std::vector<double> resp(n);
    double prev_ll = -std::numeric_limits<double>::infinity();
    const int max_iterations = 500;
    for (int it = 0; it < max_iterations; ++it) {
        // E-step in log space.
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = std::log(g.weight[0]) + log_normal_pdf(sorted[i], g.mean[0], g.var[0]);
            const double l1 = std::log(g.weight[1]) + log_normal_pdf(sorted[i], g.mean[1], g.var[1]);
            const double m = std::max(l0, l1);
            const double z = std::exp(l0 - m) + std::exp(l1 - m);
            ll += m + std::log(z);
            resp[i] = std::exp(l1 - m) / z;  // responsibility of component 1
        }
        g.log_likelihood_trace.push_back(ll);
        g.iterations = it + 1;
        if (std::abs(ll - prev_ll) < 1e-9) {
            g.converged = true;
            break;
        }
        prev_ll = ll;

        // M-step.
        double n1 = 0.0, s1 = 0.0, n0 = 0.0, s0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            n1 += resp[i];
            s1 += resp[i] * sorted[i];
            n0 += 1.0 - resp[i];
            s0 += (1.0 - resp[i]) * sorted[i];
        }
        if (n0 < 1e-12 || n1 < 1e-12) {
            // Collapsed component: reseed its mean at a random data point.
            const std::size_t pick = static_cast<std::size_t>(rng.below(n));
            if (n0 < 1e-12) g.mean[0] = sorted[pick];
            else g.mean[1] = sorted[pick];
            g.var[0] = g.var[1] = var_all;
            g.weight[0] = g.weight[1] = 0.5;
            prev_ll = -std::numeric_limits<double>::infinity();
            continue;
        }
        g.mean[0] = s0 / n0;
        g.mean[1] = s1 / n1;
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = sorted[i] - g.mean[0];
            const double d1 = sorted[i] - g.mean[1];
            v0 += (1.0 - resp[i]) * d0 * d0;
            v1 += resp[i] * d1 * d1;
        }
        g.var[0] = v0 / n0;
        g.var[1] = v1 / n1;
        if (g.var[0] < kVarianceFloor) {
            g.var[0] = kVarianceFloor;
            g.variance_floored = true;
        }
        if (g.var[1] < kVarianceFloor) {
            g.var[1] = kVarianceFloor;
            g.variance_floored = true;
        }
        g.weight[0] = n0 / static_cast<double>(n);
        g.weight[1] = n1 / static_cast<double>(n);
    }

    if (g.mean[0] > g.mean[1]) {
        std::swap(g.mean[0], g.mean[1]);
        std::swap(g.var[0], g.var[1]);
        std::swap(g.weight[0], g.weight[1]);
    }
    g.threshold = crossover_threshold(g);
    return g;
}

}  // namespace recov
