#include "recov/learners.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "recov/csv.hpp"
#include "recov/errors.hpp"

namespace recov {

std::string to_string(LearnerSpec::Kind kind) {
    switch (kind) {
        case LearnerSpec::Kind::logistic: return "logistic";
        case LearnerSpec::Kind::ridge: return "ridge";
        case LearnerSpec::Kind::cox: return "cox";
        case LearnerSpec::Kind::subprocess: return "subprocess";
    }
    return "?";
}

LearnerSpec::Kind learner_kind_from_string(const std::string& s) {
    if (s == "logistic" || s == "logreg") return LearnerSpec::Kind::logistic;
    if (s == "ridge" || s == "linear") return LearnerSpec::Kind::ridge;
    if (s == "cox") return LearnerSpec::Kind::cox;
    if (s == "subprocess") return LearnerSpec::Kind::subprocess;
    throw ValidationError("unknown learner kind: '" + s + "'");
}

LearnerSpec::Kind default_learner_for(LabelKind task) {
    switch (task) {
        case LabelKind::classification: return LearnerSpec::Kind::logistic;
        case LabelKind::survival: return LearnerSpec::Kind::cox;
        case LabelKind::ordinal: return LearnerSpec::Kind::ridge;
    }
    return LearnerSpec::Kind::logistic;
}

namespace {

inline double softplus(double z) {
    // log(1 + e^z) without overflow.
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Compressed-row copy of the selected feature rows; exact zeros are dropped.
struct SparseRows {
    std::vector<std::int64_t> offsets;
    std::vector<int> cols;
    std::vector<double> vals;
    int n = 0, d = 0;

    double density() const {
        return n == 0 || d == 0 ? 1.0
                                : static_cast<double>(vals.size()) / (static_cast<double>(n) * d);
    }
};

SparseRows gather_sparse(const Eigen::MatrixXd& features, std::span<const std::int32_t> rows) {
    SparseRows s;
    s.n = static_cast<int>(rows.size());
    s.d = static_cast<int>(features.cols());
    s.offsets.reserve(rows.size() + 1);
    s.offsets.push_back(0);
    for (const auto r : rows) {
        for (int c = 0; c < s.d; ++c) {
            const double v = features(r, c);
            if (v != 0.0) {
                s.cols.push_back(c);
                s.vals.push_back(v);
            }
        }
        s.offsets.push_back(static_cast<std::int64_t>(s.cols.size()));
    }
    return s;
}

Eigen::MatrixXd gather_dense(const Eigen::MatrixXd& features, std::span<const std::int32_t> rows) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        X.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    return X;
}

}  // namespace

double logistic_objective(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                          double l2, const Eigen::VectorXd& theta, Eigen::VectorXd* grad) {
    const auto n = X.rows();
    const auto d = X.cols();
    if (static_cast<std::size_t>(n) != y.size())
        throw ValidationError("logistic_objective: X/y length mismatch");
    if (n_classes == 2) {
        if (theta.size() != d + 1) throw ValidationError("logistic_objective: bad theta size");
        const Eigen::VectorXd w = theta.head(d);
        const double b = theta(d);
        Eigen::VectorXd eta = X * w;
        eta.array() += b;
        double J = 0.5 * l2 * w.squaredNorm();
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            J += softplus(eta(i)) - (y[static_cast<std::size_t>(i)] == 1 ? eta(i) : 0.0);
            r(i) = sigmoid(eta(i)) - (y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0);
        }
        if (grad) {
            grad->resize(d + 1);
            grad->head(d) = X.transpose() * r + l2 * w;
            (*grad)(d) = r.sum();
        }
        return J;
    }
    const Eigen::Index block = d + 1;
    if (theta.size() != block * n_classes)
        throw ValidationError("logistic_objective: bad theta size");
    Eigen::MatrixXd scores(n, n_classes);
    for (int c = 0; c < n_classes; ++c) {
        scores.col(c) = X * theta.segment(block * c, d);
        scores.col(c).array() += theta(block * c + d);
    }
    double J = 0.0;
    Eigen::MatrixXd resid(n, n_classes);  // p - onehot(y)
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = scores.row(i).maxCoeff();
        double z = 0.0;
        for (int c = 0; c < n_classes; ++c) z += std::exp(scores(i, c) - mx);
        const double logz = mx + std::log(z);
        const int yi = y[static_cast<std::size_t>(i)];
        J += logz - scores(i, yi);
        for (int c = 0; c < n_classes; ++c)
            resid(i, c) = std::exp(scores(i, c) - logz) - (c == yi ? 1.0 : 0.0);
    }
    for (int c = 0; c < n_classes; ++c)
        J += 0.5 * l2 * theta.segment(block * c, d).squaredNorm();
    if (grad) {
        grad->resize(block * n_classes);
        for (int c = 0; c < n_classes; ++c) {
            grad->segment(block * c, d) =
                X.transpose() * resid.col(c) + l2 * theta.segment(block * c, d);
            (*grad)(block * c + d) = resid.col(c).sum();
        }
    }
    return J;
}

namespace {

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

class LogisticLearner final : public Learner {
  public:
    explicit LogisticLearner(FitConfig config) : config_(std::move(config)) {}

    void fit(const Dataset& data, std::span<const std::int32_t> rows, std::uint64_t seed) override;
    Eigen::MatrixXd predict(const Dataset& data, std::span<const std::int32_t> rows) const override;
    Eigen::VectorXd coefficients() const override { return theta_; }

  private:
    void fit_binary_sparse(const SparseRows& X, const std::vector<int>& y);
    void fit_dense(const Eigen::MatrixXd& X, const std::vector<int>& y);

    FitConfig config_;
    int n_classes_ = 0;
    Eigen::VectorXd theta_;
};

void LogisticLearner::fit(const Dataset& data, std::span<const std::int32_t> rows,
                          std::uint64_t seed) {
    (void)seed;  // full-batch deterministic optimization; no randomness needed
    if (data.labels.kind != LabelKind::classification)
        throw ValidationError("logistic learner requires classification labels");
    if (rows.empty()) throw ValidationError("logistic fit: empty training set");
    n_classes_ = data.labels.n_classes();

    std::vector<int> y(rows.size());
    std::vector<int> present(n_classes_, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        y[i] = data.labels.class_index[rows[i]];
        present[y[i]] = 1;
    }
    if (std::accumulate(present.begin(), present.end(), 0) < 2)
        throw ValidationError("logistic fit: training fold contains a single class");

    converged_ = true;
    warning_.clear();
    if (n_classes_ == 2) {
        const SparseRows sparse = gather_sparse(data.features, rows);
        if (sparse.density() <= 0.35) {
            fit_binary_sparse(sparse, y);
            return;
        }
    }
    fit_dense(gather_dense(data.features, rows), y);
}

// Newton with backtracking on the CSR representation. The Hessian costs
// sum(nnz_i^2) instead of n*D^2, which is what makes one-hot inputs cheap.
void LogisticLearner::fit_binary_sparse(const SparseRows& X, const std::vector<int>& y) {
    const int d = X.d;
    const Eigen::Index dim = d + 1;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    if (config_.initial_coefficients.size() == dim) theta = config_.initial_coefficients;

    const double l2 = config_.l2_penalty;
    auto eta_of = [&](const Eigen::VectorXd& th, Eigen::VectorXd& eta) {
        for (int i = 0; i < X.n; ++i) {
            double s = th(d);
            for (auto k = X.offsets[i]; k < X.offsets[i + 1]; ++k)
                s += X.vals[static_cast<std::size_t>(k)] * th(X.cols[static_cast<std::size_t>(k)]);
            eta(i) = s;
        }
    };
    auto objective_of = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& eta) {
        double J = 0.5 * l2 * th.head(d).squaredNorm();
        for (int i = 0; i < X.n; ++i) J += softplus(eta(i)) - (y[i] ? eta(i) : 0.0);
        return J;
    };

    Eigen::VectorXd eta(X.n), dir_eta(X.n), grad(dim), direction(dim);
    Eigen::MatrixXd hess(dim, dim);
    eta_of(theta, eta);
    double J = objective_of(theta, eta);

    bool done = false;
    int it = 0;
    for (; it < config_.max_iterations && !done; ++it) {
        grad.setZero();
        grad.head(d) = l2 * theta.head(d);
        hess.setZero();
        for (int i = 0; i < d; ++i) hess(i, i) = l2;
        for (int i = 0; i < X.n; ++i) {
            const double p = sigmoid(eta(i));
            const double r = p - (y[i] ? 1.0 : 0.0);
            const double q = std::max(p * (1.0 - p), 1e-12);
            const auto lo = X.offsets[i], hi = X.offsets[i + 1];
            for (auto ka = lo; ka < hi; ++ka) {
                const int ca = X.cols[static_cast<std::size_t>(ka)];
                const double va = X.vals[static_cast<std::size_t>(ka)];
                grad(ca) += r * va;
                const double qa = q * va;
                for (auto kb = lo; kb <= ka; ++kb)
                    hess(ca, X.cols[static_cast<std::size_t>(kb)]) +=
                        qa * X.vals[static_cast<std::size_t>(kb)];
                hess(d, ca) += qa;
            }
            grad(d) += r;
            hess(d, d) += q;
        }
        // Only the lower triangle was filled (cols are ascending within a row).
        for (Eigen::Index a = 0; a < dim; ++a)
            for (Eigen::Index b = a + 1; b < dim; ++b) hess(a, b) = hess(b, a);

        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= config_.tolerance * (1.0 + std::abs(J))) {
            done = true;
            break;
        }
        direction = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(-grad);
        if (!direction.allFinite() || grad.dot(direction) >= 0.0)
            direction = -grad;  // fall back to steepest descent

        // eta is affine in theta, so the per-step delta is eta_of(direction).
        eta_of(direction, dir_eta);
        const double slope = grad.dot(direction);
        double t = 1.0;
        double J_new = J;
        Eigen::VectorXd theta_new;
        for (int ls = 0; ls < 40; ++ls) {
            theta_new = theta + t * direction;
            const Eigen::VectorXd eta_new = eta + t * dir_eta;
            J_new = objective_of(theta_new, eta_new);
            if (J_new <= J + 1e-4 * t * slope) {
                eta = eta_new;
                break;
            }
            t *= 0.5;
        }
        if (!(J_new < J)) {
            done = true;  // no further progress possible at machine precision
            break;
        }
        const double dJ = J - J_new;
        theta = theta_new;
        J = J_new;
        if (t == 1.0 && dJ <= config_.tolerance * (1.0 + std::abs(J))) {
            done = true;
            break;
        }
    }
    if (!done) {
        converged_ = false;
        warning_ = "logistic fit did not converge in " + std::to_string(config_.max_iterations) +
                   " iterations; returning best iterate";
    }
    theta_ = theta;
}

void LogisticLearner::fit_dense(const Eigen::MatrixXd& X, const std::vector<int>& y) {
    const Eigen::Index d = X.cols();
    const Eigen::Index dim = n_classes_ == 2 ? d + 1 : (d + 1) * n_classes_;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    if (config_.initial_coefficients.size() == dim) theta = config_.initial_coefficients;
    const std::span<const int> y_span(y);
    const double l2 = config_.l2_penalty;

    const bool newton_feasible = dim <= 1500;
    Eigen::VectorXd grad(dim), direction(dim);
    double J = logistic_objective(X, y_span, n_classes_, l2, theta, &grad);

    bool done = false;
    for (int it = 0; it < config_.max_iterations && !done; ++it) {
        const double gnorm = grad.lpNorm<Eigen::Infinity>();
        if (gnorm <= config_.tolerance * (1.0 + std::abs(J))) {
            done = true;
            break;
        }
        if (newton_feasible) {
            Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
            if (n_classes_ == 2) {
                Eigen::VectorXd eta = X * theta.head(d);
                eta.array() += theta(d);
                Eigen::VectorXd q(X.rows());
                for (Eigen::Index i = 0; i < X.rows(); ++i) {
                    const double p = sigmoid(eta(i));
                    q(i) = std::max(p * (1.0 - p), 1e-12);
                }
                const Eigen::MatrixXd Xq = X.array().colwise() * q.array();
                hess.topLeftCorner(d, d).noalias() = X.transpose() * Xq;
                hess.topLeftCorner(d, d).diagonal().array() += l2;
                hess.block(0, d, d, 1) = Xq.colwise().sum().transpose();
                hess.block(d, 0, 1, d) = hess.block(0, d, d, 1).transpose();
                hess(d, d) = q.sum();
            } else {
                const Eigen::Index block = d + 1;
                Eigen::MatrixXd scores(X.rows(), n_classes_);
                for (int c = 0; c < n_classes_; ++c) {
                    scores.col(c) = X * theta.segment(block * c, d);
                    scores.col(c).array() += theta(block * c + d);
                }
                Eigen::VectorXd xa(d + 1);
                for (Eigen::Index i = 0; i < X.rows(); ++i) {
                    const double mx = scores.row(i).maxCoeff();
                    Eigen::VectorXd p(n_classes_);
                    double z = 0.0;
                    for (int c = 0; c < n_classes_; ++c) {
                        p(c) = std::exp(scores(i, c) - mx);
                        z += p(c);
                    }
                    p /= z;
                    xa.head(d) = X.row(i).transpose();
                    xa(d) = 1.0;
                    for (int a = 0; a < n_classes_; ++a) {
                        for (int b = 0; b <= a; ++b) {
                            const double coef = p(a) * ((a == b ? 1.0 : 0.0) - p(b));
                            if (coef == 0.0) continue;
                            hess.block(block * a, block * b, block, block).noalias() +=
                                coef * xa * xa.transpose();
                        }
                    }
                }
                for (int a = 0; a < n_classes_; ++a)
                    for (int b = 0; b < a; ++b)
                        hess.block(block * b, block * a, block, block) =
                            hess.block(block * a, block * b, block, block).transpose();
                for (int c = 0; c < n_classes_; ++c)
                    hess.block(block * c, block * c, d, d).diagonal().array() += l2;
                hess.diagonal().array() += 1e-12;
            }
            direction = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(-grad);
            if (!direction.allFinite() || grad.dot(direction) >= 0.0) direction = -grad;
        } else {
            direction = -config_.learning_rate * grad;
        }

        const double slope = grad.dot(direction);
        double t = 1.0, J_new = J;
        Eigen::VectorXd theta_new, grad_new(dim);
        for (int ls = 0; ls < 40; ++ls) {
            theta_new = theta + t * direction;
            J_new = logistic_objective(X, y_span, n_classes_, l2, theta_new, &grad_new);
            if (J_new <= J + 1e-4 * t * slope) break;
            t *= 0.5;
        }
        if (!(J_new < J)) {
            done = true;
            break;
        }
        const double dJ = J - J_new;
        theta = theta_new;
        grad = grad_new;
        J = J_new;
        if (newton_feasible && t == 1.0 && dJ <= config_.tolerance * (1.0 + std::abs(J))) {
            done = true;
            break;
        }
    }
    if (!done) {
        converged_ = false;
        warning_ = "logistic fit did not converge in " + std::to_string(config_.max_iterations) +
                   " iterations; returning best iterate";
    }
    theta_ = theta;
}

Eigen::MatrixXd LogisticLearner::predict(const Dataset& data,
                                         std::span<const std::int32_t> rows) const {
    if (theta_.size() == 0) throw ValidationError("predict before fit");
    const Eigen::Index d = data.features.cols();
    Eigen::MatrixXd probs(static_cast<Eigen::Index>(rows.size()), n_classes_);
    if (n_classes_ == 2) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double eta = data.features.row(rows[i]) * theta_.head(d) + theta_(d);
            const double p = sigmoid(eta);
            probs(static_cast<Eigen::Index>(i), 0) = 1.0 - p;
            probs(static_cast<Eigen::Index>(i), 1) = p;
        }
        return probs;
    }
    const Eigen::Index block = d + 1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::VectorXd scores(n_classes_);
        for (int c = 0; c < n_classes_; ++c)
            scores(c) = data.features.row(rows[i]) * theta_.segment(block * c, d) +
                        theta_(block * c + d);
        const double mx = scores.maxCoeff();
        double z = 0.0;
        for (int c = 0; c < n_classes_; ++c) {
            scores(c) = std::exp(scores(c) - mx);
            z += scores(c);
        }
        probs.row(static_cast<Eigen::Index>(i)) = (scores / z).transpose();
    }
    return probs;
}

// ---------------------------------------------------------------------------
// Ridge regression
// ---------------------------------------------------------------------------

class RidgeLearner final : public Learner {
  public:
    explicit RidgeLearner(FitConfig config) : config_(std::move(config)) {}

    void fit(const Dataset& data, std::span<const std::int32_t> rows, std::uint64_t seed) override {
        (void)seed;
        if (rows.empty()) throw ValidationError("ridge fit: empty training set");
        std::vector<double> y(rows.size());
        switch (data.labels.kind) {
            case LabelKind::ordinal:
                for (std::size_t i = 0; i < rows.size(); ++i)
                    y[i] = static_cast<double>(data.labels.grade[rows[i]]);
                break;
            case LabelKind::classification:
                throw ValidationError("ridge learner requires ordinal labels");
            case LabelKind::survival:
                throw ValidationError("ridge learner requires ordinal labels");
        }
        const Eigen::MatrixXd X = gather_dense(data.features, rows);
        solve(X, Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())));
    }

    Eigen::MatrixXd predict(const Dataset& data, std::span<const std::int32_t> rows) const override {
        if (w_.size() == 0 && !fitted_) throw ValidationError("predict before fit");
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), 1);
        for (std::size_t i = 0; i < rows.size(); ++i)
            out(static_cast<Eigen::Index>(i), 0) = data.features.row(rows[i]) * w_ + b_;
        return out;
    }

    Eigen::VectorXd coefficients() const override {
        Eigen::VectorXd theta(w_.size() + 1);
        theta.head(w_.size()) = w_;
        theta(w_.size()) = b_;
        return theta;
    }

  private:
    void solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
        const auto n = X.rows();
        const auto d = X.cols();
        Eigen::MatrixXd A(d + 1, d + 1);
        A.topLeftCorner(d, d).noalias() = X.transpose() * X;
        A.block(0, d, d, 1) = X.colwise().sum().transpose();
        A.block(d, 0, 1, d) = A.block(0, d, d, 1).transpose();
        A(d, d) = static_cast<double>(n);
        Eigen::VectorXd rhs(d + 1);
        rhs.head(d) = X.transpose() * y;
        rhs(d) = y.sum();

        double l2 = config_.l2_penalty;
        for (int attempt = 0; attempt < 2; ++attempt) {
            Eigen::MatrixXd Areg = A;
            Areg.topLeftCorner(d, d).diagonal().array() += l2;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(Areg);
            Eigen::VectorXd theta = ldlt.solve(rhs);
            const double resid = (Areg * theta - rhs).norm();
            const double scale = rhs.norm() + 1.0;
            if (ldlt.info() == Eigen::Success && theta.allFinite() && resid <= 1e-6 * scale) {
                w_ = theta.head(d);
                b_ = theta(d);
                fitted_ = true;
                return;
            }
            // Rank-deficient without penalty: retry at the forced minimum.
            l2 = std::max(l2, 1e-8);
            warning_ = "rank-deficient system; solved with minimum penalty 1e-8";
        }
        w_ = Eigen::VectorXd::Zero(d);
        b_ = y.mean();
        fitted_ = true;
        converged_ = false;
        if (warning_.empty()) warning_ = "ridge solve failed; returning intercept-only model";
    }

    FitConfig config_;
    Eigen::VectorXd w_;
    double b_ = 0.0;
    bool fitted_ = false;
};

// ---------------------------------------------------------------------------
// Cox proportional hazards (Breslow partial likelihood)
// ---------------------------------------------------------------------------

// One pass over the risk sets: objective, gradient and (optionally) Hessian of
// the penalized negative log partial likelihood.
double cox_pass(const Eigen::MatrixXd& X, std::span<const double> time,
                std::span<const std::uint8_t> event, double l2, const Eigen::VectorXd& beta,
                Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const auto n = X.rows();
    const auto d = X.cols();
    if (static_cast<std::size_t>(n) != time.size() || time.size() != event.size())
        throw ValidationError("cox: length mismatch");
    if (beta.size() != d) throw ValidationError("cox: bad beta size");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return time[static_cast<std::size_t>(a)] > time[static_cast<std::size_t>(b)];
    });

    Eigen::VectorXd eta = X * beta;
    const double mx = eta.size() ? eta.maxCoeff() : 0.0;  // scale guard for exp()

    double J = 0.5 * l2 * beta.squaredNorm();
    if (grad) {
        grad->resize(d);
        *grad = l2 * beta;
    }
    if (hess) {
        hess->resize(d, d);
        hess->setZero();
        hess->diagonal().array() = l2;
    }

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd s2;
    if (hess) s2 = Eigen::MatrixXd::Zero(d, d);

    std::size_t i = 0;
    bool any_event = false;
    while (i < order.size()) {
        // Tie group: samples sharing this time enter the risk set together.
        std::size_t j = i;
        const double t = time[static_cast<std::size_t>(order[i])];
        while (j < order.size() && time[static_cast<std::size_t>(order[j])] == t) {
            const auto idx = order[j];
            const double w = std::exp(eta(idx) - mx);
            s0 += w;
            s1 += w * X.row(idx).transpose();
            if (hess) s2.noalias() += w * X.row(idx).transpose() * X.row(idx);
            ++j;
        }
        for (std::size_t k = i; k < j; ++k) {
            const auto idx = order[k];
            if (!event[static_cast<std::size_t>(idx)]) continue;
            any_event = true;
            J += -(eta(idx) - mx) + std::log(s0);
            if (grad) *grad += s1 / s0 - X.row(idx).transpose();
            if (hess) hess->noalias() += s2 / s0 - (s1 / s0) * (s1 / s0).transpose();
        }
        i = j;
    }
    if (!any_event) throw NumericError("cox: no events in training data");
    return J;
}

class CoxLearner final : public Learner {
  public:
    explicit CoxLearner(FitConfig config) : config_(std::move(config)) {}

    void fit(const Dataset& data, std::span<const std::int32_t> rows, std::uint64_t seed) override {
        (void)seed;
        if (data.labels.kind != LabelKind::survival)
            throw ValidationError("cox learner requires survival labels");
        if (rows.empty()) throw ValidationError("cox fit: empty training set");
        std::vector<double> time(rows.size());
        std::vector<std::uint8_t> event(rows.size());
        int n_events = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            time[i] = data.labels.time[rows[i]];
            event[i] = data.labels.event[rows[i]];
            n_events += event[i];
        }
        if (n_events == 0) throw NumericError("cox fit: all samples censored");
        if (n_events < 2) throw ValidationError("cox fit: need at least 2 events");

        Eigen::MatrixXd X = gather_dense(data.features, rows);
        center_ = X.colwise().mean();
        X.rowwise() -= center_;

        const Eigen::Index d = X.cols();
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
        if (config_.initial_coefficients.size() == d) beta = config_.initial_coefficients;

        Eigen::VectorXd grad(d), direction(d);
        Eigen::MatrixXd hess(d, d);
        double J = cox_pass(X, time, event, config_.l2_penalty, beta, &grad, &hess);
        constexpr double kNormCap = 100.0;

        bool done = false;
        for (int it = 0; it < config_.max_iterations && !done; ++it) {
            if (grad.lpNorm<Eigen::Infinity>() <= config_.tolerance * (1.0 + std::abs(J))) {
                done = true;
                break;
            }
            direction = Eigen::LDLT<Eigen::MatrixXd>(hess).solve(-grad);
            if (!direction.allFinite() || grad.dot(direction) >= 0.0) direction = -grad;
            const double slope = grad.dot(direction);
            double t = 1.0, J_new = J;
            Eigen::VectorXd beta_new;
            for (int ls = 0; ls < 40; ++ls) {
                beta_new = beta + t * direction;
                J_new = cox_pass(X, time, event, config_.l2_penalty, beta_new, nullptr, nullptr);
                if (J_new <= J + 1e-4 * t * slope) break;
                t *= 0.5;
            }
            if (!(J_new < J)) {
                done = true;
                break;
            }
            const double dJ = J - J_new;
            beta = beta_new;
            if (beta.lpNorm<Eigen::Infinity>() > kNormCap) {
                // Monotone likelihood: coefficients diverge. Cap and stop.
                beta *= kNormCap / beta.lpNorm<Eigen::Infinity>();
                warning_ = "cox fit: coefficient norm exploded (monotone likelihood?); capped";
                done = true;
                break;
            }
            J = cox_pass(X, time, event, config_.l2_penalty, beta, &grad, &hess);
            if (t == 1.0 && dJ <= config_.tolerance * (1.0 + std::abs(J))) {
                done = true;
                break;
            }
        }
        if (!done) {
            converged_ = false;
            warning_ = "cox fit did not converge in " + std::to_string(config_.max_iterations) +
                       " iterations; returning best iterate";
        }
        beta_ = beta;
    }

    Eigen::MatrixXd predict(const Dataset& data, std::span<const std::int32_t> rows) const override {
        if (beta_.size() == 0) throw ValidationError("predict before fit");
        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), 1);
        for (std::size_t i = 0; i < rows.size(); ++i)
            out(static_cast<Eigen::Index>(i), 0) =
                (data.features.row(rows[i]) - center_) * beta_;
        return out;
    }

    Eigen::VectorXd coefficients() const override { return beta_; }

  private:
    FitConfig config_;
    Eigen::VectorXd beta_;
    Eigen::RowVectorXd center_;
};

// ---------------------------------------------------------------------------
// Subprocess adapter
// ---------------------------------------------------------------------------

// Runs an external command per evaluation:
//   command <train.csv> <test.csv> <out.csv> <seed>
// train.csv is the full labeled training subset in save_dataset() layout;
// test.csv carries id + features only. The command writes out.csv with header
// id,prob_<class>... (classification, class order as in the dataset) or
// id,prediction (survival risk / ordinal grade).
class SubprocessLearner final : public Learner {
  public:
    SubprocessLearner(std::string command, FitConfig config)
        : command_(std::move(command)), config_(std::move(config)) {
        if (command_.empty()) throw ValidationError("subprocess learner: empty command");
    }

    void fit(const Dataset& data, std::span<const std::int32_t> rows, std::uint64_t seed) override {
        train_ = data.subset(std::vector<std::int32_t>(rows.begin(), rows.end()));
        seed_ = seed;
        fitted_ = true;
    }

    Eigen::MatrixXd predict(const Dataset& data, std::span<const std::int32_t> rows) const override {
        if (!fitted_) throw ValidationError("predict before fit");
        namespace fs = std::filesystem;
        char tmpl[] = "/tmp/recov-learner-XXXXXX";
        const char* dir = mkdtemp(tmpl);
        if (!dir) throw IoError("cannot create temp directory for subprocess learner");
        const fs::path base(dir);
        struct Cleanup {
            fs::path p;
            ~Cleanup() {
                std::error_code ec;
                fs::remove_all(p, ec);
            }
        } cleanup{base};

        const std::string train_path = (base / "train.csv").string();
        const std::string test_path = (base / "test.csv").string();
        const std::string out_path = (base / "out.csv").string();
        save_dataset(train_, train_path);
        write_features_only(data, rows, test_path);

        std::ostringstream cmd;
        cmd << command_ << " '" << train_path << "' '" << test_path << "' '" << out_path << "' "
            << seed_;
        const int rc = std::system(cmd.str().c_str());
        if (rc != 0)
            throw Error("subprocess learner command failed with status " + std::to_string(rc));

        return read_predictions(data, rows, out_path);
    }

  private:
    void write_features_only(const Dataset& data, std::span<const std::int32_t> rows,
                             const std::string& path) const {
        std::vector<std::string> columns{"id"};
        for (std::size_t j = 0; j < data.dim(); ++j)
            columns.push_back(data.feature_names.empty() ? "f" + std::to_string(j)
                                                         : data.feature_names[j]);
        std::vector<std::vector<std::string>> out_rows;
        out_rows.reserve(rows.size());
        for (const auto r : rows) {
            std::vector<std::string> row{data.ids[r]};
            for (std::size_t j = 0; j < data.dim(); ++j) {
                std::ostringstream v;
                v.precision(17);
                v << data.features(r, static_cast<Eigen::Index>(j));
                row.push_back(v.str());
            }
            out_rows.push_back(std::move(row));
        }
        write_csv(path, columns, out_rows);
    }

    Eigen::MatrixXd read_predictions(const Dataset& data, std::span<const std::int32_t> rows,
                                     const std::string& path) const {
        const CsvTable table = read_csv(path);
        const std::size_t id_col = table.col("id");
        const bool classification = data.labels.kind == LabelKind::classification;
        const int m = classification ? data.labels.n_classes() : 1;

        std::vector<std::size_t> value_cols;
        if (classification) {
            for (int c = 0; c < m; ++c)
                value_cols.push_back(table.col("prob_" + data.labels.class_names[c]));
        } else {
            value_cols.push_back(table.col("prediction"));
        }

        std::unordered_map<std::string, std::size_t> by_id;
        for (std::size_t r = 0; r < table.n_rows(); ++r) by_id[table.rows[r][id_col]] = r;

        Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto it = by_id.find(data.ids[rows[i]]);
            if (it == by_id.end())
                throw ValidationError("subprocess learner output missing id '" +
                                      data.ids[rows[i]] + "'");
            double sum = 0.0;
            for (int c = 0; c < m; ++c) {
                const auto v = parse_double(table.rows[it->second][value_cols[c]]);
                if (!v || !std::isfinite(*v))
                    throw ValidationError("subprocess learner output has non-numeric prediction");
                out(static_cast<Eigen::Index>(i), c) = *v;
                sum += *v;
            }
            if (classification) {
                if (std::abs(sum - 1.0) > 1e-6)
                    throw ValidationError("subprocess learner probabilities do not sum to 1");
                out.row(static_cast<Eigen::Index>(i)) /= sum;
            }
        }
        return out;
    }

    std::string command_;
    FitConfig config_;
    Dataset train_;
    std::uint64_t seed_ = 0;
    bool fitted_ = false;
};

}  // namespace

double cox_objective(const Eigen::MatrixXd& X, std::span<const double> time,
                     std::span<const std::uint8_t> event, double l2,
                     const Eigen::VectorXd& beta, Eigen::VectorXd* grad) {
    return cox_pass(X, time, event, l2, beta, grad, nullptr);
}

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec) {
    switch (spec.kind) {
        case LearnerSpec::Kind::logistic: return std::make_unique<LogisticLearner>(spec.config);
        case LearnerSpec::Kind::ridge: return std::make_unique<RidgeLearner>(spec.config);
        case LearnerSpec::Kind::cox: return std::make_unique<CoxLearner>(spec.config);
        case LearnerSpec::Kind::subprocess:
            return std::make_unique<SubprocessLearner>(spec.command, spec.config);
    }
    throw ValidationError("unknown learner kind");
}

std::unique_ptr<Learner> fit_logistic(const Dataset& data, std::span<const std::int32_t> rows,
                                      const FitConfig& config, std::uint64_t seed) {
    auto learner = std::make_unique<LogisticLearner>(config);
    learner->fit(data, rows, seed);
    return learner;
}

std::unique_ptr<Learner> fit_linear(const Dataset& data, std::span<const std::int32_t> rows,
                                    const FitConfig& config, std::uint64_t seed) {
    auto learner = std::make_unique<RidgeLearner>(config);
    learner->fit(data, rows, seed);
    return learner;
}

std::unique_ptr<Learner> fit_cox(const Dataset& data, std::span<const std::int32_t> rows,
                                 const FitConfig& config, std::uint64_t seed) {
    auto learner = std::make_unique<CoxLearner>(config);
    learner->fit(data, rows, seed);
    return learner;
}

}  // namespace recov
