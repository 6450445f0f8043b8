#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "recov/dataset.hpp"

namespace recov {

struct FitConfig {
    double l2_penalty = 1e-4;
    int max_iterations = 500;
    double tolerance = 1e-8;
    double learning_rate = 1.0;  // initial step scale for gradient fallback paths
    // Optional warm start; used when its size matches the model's parameter count.
    Eigen::VectorXd initial_coefficients;
};

struct LearnerSpec {
    enum class Kind { logistic, ridge, cox, subprocess };
    Kind kind = Kind::logistic;
    std::string command;  // subprocess only; invoked as: command train.csv test.csv out.csv seed
    FitConfig config;
};

std::string to_string(LearnerSpec::Kind kind);
LearnerSpec::Kind learner_kind_from_string(const std::string& s);
LearnerSpec::Kind default_learner_for(LabelKind task);

// Base-learner contract. fit() is deterministic given (data, rows, config, seed);
// predict() is deterministic given the fitted state. Classification predict()
// returns an n x m probability matrix (rows sum to 1); survival returns an
// n x 1 risk score; ordinal/regression returns an n x 1 real prediction.
class Learner {
  public:
    virtual ~Learner() = default;
    virtual void fit(const Dataset& data, std::span<const std::int32_t> rows,
                     std::uint64_t seed) = 0;
    virtual Eigen::MatrixXd predict(const Dataset& data,
                                    std::span<const std::int32_t> rows) const = 0;
    // Flat parameter vector for warm starts; empty when the learner has none.
    virtual Eigen::VectorXd coefficients() const { return {}; }

    bool converged() const { return converged_; }
    const std::string& warning() const { return warning_; }

  protected:
    bool converged_ = true;
    std::string warning_;
};

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec);

// Convenience constructors: build, fit, return.
std::unique_ptr<Learner> fit_logistic(const Dataset& data, std::span<const std::int32_t> rows,
                                      const FitConfig& config, std::uint64_t seed);
std::unique_ptr<Learner> fit_linear(const Dataset& data, std::span<const std::int32_t> rows,
                                    const FitConfig& config, std::uint64_t seed);
std::unique_ptr<Learner> fit_cox(const Dataset& data, std::span<const std::int32_t> rows,
                                 const FitConfig& config, std::uint64_t seed);

// Penalized objectives with analytic gradients, shared by the Newton solvers
// and the finite-difference checks.
//
// Logistic cross-entropy. For m == 2 theta is [w(D); b]; for m > 2 theta is
// per-class blocks [w_c(D); b_c] stacked, c = 0..m-1. y holds 0-based class
// indices. Returns the objective value; fills grad when non-null.
double logistic_objective(const Eigen::MatrixXd& X, std::span<const int> y, int n_classes,
                          double l2, const Eigen::VectorXd& theta, Eigen::VectorXd* grad);

// Negative Breslow log partial likelihood with L2 penalty; beta has size D.
double cox_objective(const Eigen::MatrixXd& X, std::span<const double> time,
                     std::span<const std::uint8_t> event, double l2,
                     const Eigen::VectorXd& beta, Eigen::VectorXd* grad);

}  // namespace recov
