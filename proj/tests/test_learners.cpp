#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "recov/errors.hpp"
#include "recov/learners.hpp"
#include "recov/metrics.hpp"
#include "recov/rng.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

using namespace recov;

namespace {

std::vector<std::int32_t> all_rows(const Dataset& d) {
    std::vector<std::int32_t> rows(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) rows[i] = static_cast<std::int32_t>(i);
    return rows;
}

Dataset from_matrix(const Eigen::MatrixXd& X, const std::vector<int>& y, int m) {
    Dataset d;
    d.name = "inline";
    d.labels.kind = LabelKind::classification;
    for (int c = 0; c < m; ++c) d.labels.class_names.push_back(std::string(1, static_cast<char>('a' + c)));
    d.features = X;
    for (std::size_t i = 0; i < y.size(); ++i) {
        d.ids.push_back(std::to_string(i));
        d.labels.class_index.push_back(y[i]);
    }
    d.validate();
    return d;
}

}  // namespace

TEST_CASE("logistic: linearly separable 2-point set fits to accuracy 1") {
    Eigen::MatrixXd X(2, 1);
    X << -1.0, 1.0;
    const Dataset d = from_matrix(X, {0, 1}, 2);
    const auto model = fit_logistic(d, all_rows(d), FitConfig{}, 1);
    const Eigen::MatrixXd p = model->predict(d, all_rows(d));
    CHECK(p(0, 0) > 0.5);
    CHECK(p(1, 1) > 0.5);
}

TEST_CASE("logistic: uninformative features give the class prior") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(10, 2, 3.0);
    std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    const Dataset d = from_matrix(X, y, 2);
    const auto model = fit_logistic(d, all_rows(d), FitConfig{}, 1);
    const Eigen::MatrixXd p = model->predict(d, all_rows(d));
    CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(p(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("logistic: well-separated blobs reach 0.95 held-out accuracy") {
    const Dataset train = synthetic::blobs(200, 2, 1.5, 21);
    const Dataset heldout = synthetic::blobs(400, 2, 1.5, 22);
    const auto model = fit_logistic(train, all_rows(train), FitConfig{}, 1);
    const Eigen::MatrixXd p = model->predict(heldout, all_rows(heldout));
    std::vector<int> pred(heldout.n()), truth(heldout.n());
    for (std::size_t i = 0; i < heldout.n(); ++i) {
        pred[i] = p(static_cast<Eigen::Index>(i), 1) > 0.5 ? 1 : 0;
        truth[i] = heldout.labels.class_index[i];
    }
    CHECK(accuracy(pred, truth) >= 0.95);
}

TEST_CASE("logistic: probability rows sum to one (binary and multiclass)") {
    Rng rng(31);
    for (int m : {2, 4}) {
        Eigen::MatrixXd X(60, 3);
        std::vector<int> y(60);
        for (int i = 0; i < 60; ++i) {
            for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
            y[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        }
        const Dataset d = from_matrix(X, y, m);
        const auto model = fit_logistic(d, all_rows(d), FitConfig{}, 1);
        const Eigen::MatrixXd p = model->predict(d, all_rows(d));
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("logistic: sparse and dense paths agree") {
    Rng rng(37);
    // one-hot style features trigger the sparse path
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(80, 12);
    std::vector<int> y(80);
    for (int i = 0; i < 80; ++i) {
        for (int g = 0; g < 3; ++g) X(i, 4 * g + static_cast<int>(rng.below(4))) = 1.0;
        y[static_cast<std::size_t>(i)] = X(i, 0) == 1.0 ? 1 : static_cast<int>(rng.below(2));
    }
    const Dataset sparse_data = from_matrix(X, y, 2);
    const auto sparse_model = fit_logistic(sparse_data, all_rows(sparse_data), FitConfig{}, 1);

    // densify by adding a constant 0.5 to every entry; refit on shifted data is
    // a different problem, so instead force the dense path with a dense stub
    // column pattern that keeps the same objective: append nothing, instead
    // compare against logistic_objective's optimum reached through the dense code
    // by fitting a dataset whose zero entries are replaced with tiny nonzeros.
    Eigen::MatrixXd Xd = X;
    for (Eigen::Index i = 0; i < Xd.rows(); ++i)
        for (Eigen::Index j = 0; j < Xd.cols(); ++j)
            if (Xd(i, j) == 0.0) Xd(i, j) = 1e-300;  // numerically zero, structurally dense
    const Dataset dense_data = from_matrix(Xd, y, 2);
    const auto dense_model = fit_logistic(dense_data, all_rows(dense_data), FitConfig{}, 1);

    const Eigen::VectorXd a = sparse_model->coefficients();
    const Eigen::VectorXd b = dense_model->coefficients();
    REQUIRE(a.size() == b.size());
    CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("logistic: deterministic and permutation-invariant") {
    const Dataset d = synthetic::blobs(150, 3, 0.8, 41);
    const auto rows = all_rows(d);
    const auto m1 = fit_logistic(d, rows, FitConfig{}, 9);
    const auto m2 = fit_logistic(d, rows, FitConfig{}, 9);
    CHECK(m1->coefficients() == m2->coefficients());  // bit-identical

    std::vector<std::int32_t> shuffled = rows;
    Rng rng(5);
    rng.shuffle(shuffled);
    const auto m3 = fit_logistic(d, shuffled, FitConfig{}, 9);
    CHECK((m1->coefficients() - m3->coefficients()).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("logistic: single-class training fold is an error") {
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    const Dataset d = from_matrix(X, {1, 1, 1}, 2);
    CHECK_THROWS_AS(fit_logistic(d, all_rows(d), FitConfig{}, 1), ValidationError);
}

TEST_CASE("logistic gradients match central finite differences") {
    Rng rng(47);
    int checked = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const int m = rep % 2 == 0 ? 2 : 3;
        const int n = 8 + static_cast<int>(rng.below(8));
        const int dim = 2 + static_cast<int>(rng.below(3));
        Eigen::MatrixXd X(n, dim);
        std::vector<int> y(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) X(i, j) = rng.normal();
            y[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        }
        const Eigen::Index p = m == 2 ? dim + 1 : (dim + 1) * m;
        Eigen::VectorXd theta(p);
        for (Eigen::Index i = 0; i < p; ++i) theta(i) = rng.normal() * 0.5;
        Eigen::VectorXd grad;
        logistic_objective(X, y, m, 1e-3, theta, &grad);
        auto f = [&](std::span<const double> th) {
            const Eigen::Map<const Eigen::VectorXd> v(th.data(), static_cast<Eigen::Index>(th.size()));
            return logistic_objective(X, y, m, 1e-3, v, nullptr);
        };
        const std::vector<double> theta_vec(theta.data(), theta.data() + theta.size());
        for (Eigen::Index i = 0; i < p; ++i) {
            const double fd = oracle::central_difference(f, theta_vec, static_cast<std::size_t>(i), 1e-5);
            CHECK(std::abs(grad(i) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
            ++checked;
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("ridge: interpolates 2 points exactly with zero penalty") {
    Dataset d;
    d.labels.kind = LabelKind::ordinal;
    d.labels.grade_min = 0;
    d.labels.grade_max = 5;
    d.features.resize(2, 1);
    d.features << 1.0, 3.0;
    d.ids = {"a", "b"};
    d.labels.grade = {1, 5};
    d.validate();
    FitConfig cfg;
    cfg.l2_penalty = 0.0;
    const auto model = fit_linear(d, std::vector<std::int32_t>{0, 1}, cfg, 1);
    const Eigen::MatrixXd pred = model->predict(d, std::vector<std::int32_t>{0, 1});
    CHECK(std::abs(pred(0, 0) - 1.0) < 1e-9);
    CHECK(std::abs(pred(1, 0) - 5.0) < 1e-9);
}

TEST_CASE("ridge: zero-variance target predicts the mean") {
    Rng rng(53);
    Dataset d;
    d.labels.kind = LabelKind::ordinal;
    d.labels.grade_min = 0;
    d.labels.grade_max = 6;
    d.features.resize(20, 3);
    for (Eigen::Index i = 0; i < 20; ++i) {
        d.ids.push_back(std::to_string(i));
        d.labels.grade.push_back(3);
        for (Eigen::Index j = 0; j < 3; ++j) d.features(i, j) = rng.normal();
    }
    d.validate();
    const auto model = fit_linear(d, all_rows(d), FitConfig{}, 1);
    const Eigen::MatrixXd pred = model->predict(d, all_rows(d));
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
        CHECK(pred(i, 0) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("ridge: coefficients match an independent normal-equation solve") {
    Rng rng(59);
    Eigen::MatrixXd X(50, 5);
    Eigen::VectorXd y(50);
    for (Eigen::Index i = 0; i < 50; ++i) {
        for (Eigen::Index j = 0; j < 5; ++j) X(i, j) = rng.normal();
        y(i) = std::round(3.0 + rng.normal());
    }
    Dataset d;
    d.labels.kind = LabelKind::ordinal;
    d.labels.grade_min = -10;
    d.labels.grade_max = 10;
    d.features = X;
    for (Eigen::Index i = 0; i < 50; ++i) {
        d.ids.push_back(std::to_string(i));
        d.labels.grade.push_back(static_cast<int>(y(i)));
    }
    d.validate();
    FitConfig cfg;
    cfg.l2_penalty = 0.37;
    const auto model = fit_linear(d, all_rows(d), cfg, 1);

    // brute-force augmented normal equations via a different decomposition
    Eigen::MatrixXd A(50, 6);
    A.leftCols(5) = X;
    A.col(5).setOnes();
    Eigen::MatrixXd lhs = A.transpose() * A;
    lhs.topLeftCorner(5, 5) += 0.37 * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::VectorXd rhs = A.transpose() * y;
    const Eigen::VectorXd expected = Eigen::FullPivLU<Eigen::MatrixXd>(lhs).solve(rhs);

    const Eigen::VectorXd got = model->coefficients();
    CHECK((got - expected).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("cox: a single perfectly-ordering covariate reaches train c-index 1") {
    Dataset d;
    d.labels.kind = LabelKind::survival;
    d.features.resize(8, 1);
    for (Eigen::Index i = 0; i < 8; ++i) {
        d.ids.push_back(std::to_string(i));
        d.features(i, 0) = static_cast<double>(8 - i);  // higher covariate = earlier event
        d.labels.time.push_back(static_cast<double>(i + 1));
        d.labels.event.push_back(1);
    }
    d.validate();
    const auto model = fit_cox(d, all_rows(d), FitConfig{}, 1);
    const Eigen::MatrixXd risk = model->predict(d, all_rows(d));
    std::vector<double> r(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) r[i] = risk(static_cast<Eigen::Index>(i), 0);
    CHECK(concordance_index(r, d.labels.time, d.labels.event) == doctest::Approx(1.0));
}

TEST_CASE("cox: zero-variance covariate keeps a zero coefficient") {
    Dataset d;
    d.labels.kind = LabelKind::survival;
    d.features = Eigen::MatrixXd::Constant(10, 1, 2.5);
    for (Eigen::Index i = 0; i < 10; ++i) {
        d.ids.push_back(std::to_string(i));
        d.labels.time.push_back(static_cast<double>(i + 1));
        d.labels.event.push_back(i % 2 == 0 ? 1 : 0);
    }
    d.validate();
    const auto model = fit_cox(d, all_rows(d), FitConfig{}, 1);
    CHECK(model->coefficients()(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cox: 3-sample gradient matches finite differences at beta = 0") {
    Eigen::MatrixXd X(3, 2);
    X << 0.5, -1.0, 1.5, 0.25, -0.75, 2.0;
    const std::vector<double> time{2.0, 1.0, 3.0};
    const std::vector<std::uint8_t> event{1, 1, 0};
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd grad;
    cox_objective(X, time, event, 0.0, beta, &grad);
    auto f = [&](std::span<const double> th) {
        const Eigen::Map<const Eigen::VectorXd> v(th.data(), 2);
        return cox_objective(X, time, event, 0.0, v, nullptr);
    };
    const std::vector<double> theta{0.0, 0.0};
    for (std::size_t i = 0; i < 2; ++i) {
        const double fd = oracle::central_difference(f, theta, i, 1e-6);
        CHECK(std::abs(grad(static_cast<Eigen::Index>(i)) - fd) < 1e-6);
    }
}

TEST_CASE("cox gradients match finite differences on random instances (with ties)") {
    Rng rng(61);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 6 + static_cast<int>(rng.below(8));
        const int dim = 1 + static_cast<int>(rng.below(3));
        Eigen::MatrixXd X(n, dim);
        std::vector<double> time(static_cast<std::size_t>(n));
        std::vector<std::uint8_t> event(static_cast<std::size_t>(n));
        int events = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < dim; ++j) X(i, j) = rng.normal();
            time[static_cast<std::size_t>(i)] = 1.0 + std::floor(rng.uniform01() * 4.0);  // ties likely
            event[static_cast<std::size_t>(i)] = rng.uniform01() < 0.7 ? 1 : 0;
            events += event[static_cast<std::size_t>(i)];
        }
        if (events < 2) continue;
        Eigen::VectorXd beta(dim);
        for (int j = 0; j < dim; ++j) beta(j) = 0.5 * rng.normal();
        Eigen::VectorXd grad;
        cox_objective(X, time, event, 1e-4, beta, &grad);
        auto f = [&](std::span<const double> th) {
            const Eigen::Map<const Eigen::VectorXd> v(th.data(), dim);
            return cox_objective(X, time, event, 1e-4, v, nullptr);
        };
        const std::vector<double> theta(beta.data(), beta.data() + dim);
        for (int j = 0; j < dim; ++j) {
            const double fd = oracle::central_difference(f, theta, static_cast<std::size_t>(j), 1e-5);
            CHECK(std::abs(grad(j) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("cox: all-censored data is an error") {
    Dataset d;
    d.labels.kind = LabelKind::survival;
    d.features.resize(4, 1);
    d.features << 1, 2, 3, 4;
    for (Eigen::Index i = 0; i < 4; ++i) {
        d.ids.push_back(std::to_string(i));
        d.labels.time.push_back(static_cast<double>(i + 1));
        d.labels.event.push_back(0);
    }
    d.validate();
    CHECK_THROWS_AS(fit_cox(d, all_rows(d), FitConfig{}, 1), NumericError);
}

TEST_CASE("subprocess learner round-trips through the documented protocol") {
    testutil::TempDir tmp;
    const std::string script = tmp.file("mock.py");
    testutil::write_text(script,
                         "import csv, sys\n"
                         "train, test, out, seed = sys.argv[1:5]\n"
                         "rows = list(csv.DictReader(open(test)))\n"
                         "with open(out, 'w') as f:\n"
                         "    f.write('id,prob_a,prob_b\\n')\n"
                         "    for r in rows:\n"
                         "        f.write(f\"{r['id']},0.25,0.75\\n\")\n");
    const Dataset d = synthetic::blobs(12, 2, 1.0, 71);
    LearnerSpec spec;
    spec.kind = LearnerSpec::Kind::subprocess;
    spec.command = "python3 " + script;
    auto model = make_learner(spec);
    model->fit(d, std::vector<std::int32_t>{0, 1, 2, 3, 4, 5}, 42);
    const Eigen::MatrixXd p = model->predict(d, std::vector<std::int32_t>{6, 7, 8});
    REQUIRE(p.rows() == 3);
    REQUIRE(p.cols() == 2);
    CHECK(p(0, 0) == doctest::Approx(0.25));
    CHECK(p(2, 1) == doctest::Approx(0.75));
}

TEST_CASE("learner kind plumbing") {
    CHECK(learner_kind_from_string("logreg") == LearnerSpec::Kind::logistic);
    CHECK(default_learner_for(LabelKind::survival) == LearnerSpec::Kind::cox);
    CHECK(to_string(LearnerSpec::Kind::ridge) == "ridge");
    CHECK_THROWS_AS(learner_kind_from_string("zap"), ValidationError);
}
