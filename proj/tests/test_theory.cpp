#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "recov/errors.hpp"
#include "recov/rng.hpp"
#include "recov/theory.hpp"

using namespace recov;

TEST_CASE("hypergeometric pmf hand cases") {
    CHECK(hypergeometric_pmf(10, 0, 4, 0) == doctest::Approx(1.0));
    CHECK(hypergeometric_pmf(10, 0, 4, 1) == 0.0);
    CHECK(hypergeometric_pmf(10, 5, 5, 5) == doctest::Approx(1.0 / 252.0).epsilon(1e-12));
    CHECK_THROWS_AS(hypergeometric_pmf(10, 11, 4, 0), ValidationError);
    CHECK_THROWS_AS(hypergeometric_pmf(10, 5, 11, 0), ValidationError);
}

TEST_CASE("hypergeometric pmf normalizes at mushroom scale") {
    double total = 0.0;
    for (std::int64_t x = 0; x <= 1625; ++x) total += hypergeometric_pmf(8124, 812, 1625, x);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hypergeometric pmf matches the exact small-N oracle") {
    Rng rng(41);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::int64_t N = 1 + static_cast<std::int64_t>(rng.below(12));
        const std::int64_t K = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N + 1)));
        const std::int64_t n = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N + 1)));
        const std::int64_t x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n + 1)));
        CHECK(hypergeometric_pmf(N, K, n, x) ==
              doctest::Approx(oracle::hypergeometric_pmf(N, K, n, x)).epsilon(1e-9));
    }
}

TEST_CASE("hypergeometric mode is the pmf argmax") {
    Rng rng(43);
    for (int rep = 0; rep < 300; ++rep) {
        const std::int64_t N = 2 + static_cast<std::int64_t>(rng.below(40));
        const std::int64_t K = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N + 1)));
        const std::int64_t n = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N + 1)));
        double best = -1.0;
        std::int64_t argmax = 0;
        for (std::int64_t x = 0; x <= n; ++x) {
            const double p = hypergeometric_pmf(N, K, n, x);
            if (p > best) {
                best = p;
                argmax = x;
            }
        }
        CHECK(hypergeometric_mode(N, K, n) == argmax);
    }
}

TEST_CASE("expected_most_noisy: single fold and enumeration oracle") {
    const auto single = expected_most_noisy(100, 0.2, 1, 10, 1);
    CHECK(single.mean == doctest::Approx(20.0));
    CHECK(single.standard_error == 0.0);

    // N=10, eps=0.2, k=2: two markers over folds of 5. Enumerating all C(10,2)
    // placements: max = 2 with probability 20/45, else 1 -> E = 65/45.
    const auto est = expected_most_noisy(10, 0.2, 2, 1000000, 7);
    const double exact = 65.0 / 45.0;
    CHECK(std::abs(est.mean - exact) <= 3.0 * est.standard_error);
    CHECK(est.mean >= 0.2 * 10.0 / 2.0);  // max >= mean
}

TEST_CASE("expected_most_noisy is independent of the job count") {
    const auto a = expected_most_noisy(200, 0.1, 5, 2000, 11, 1);
    const auto b = expected_most_noisy(200, 0.1, 5, 2000, 11, 4);
    CHECK(a.mean == b.mean);
    CHECK(a.standard_error == b.standard_error);
}

TEST_CASE("occurrence model fields at mushroom scale") {
    const OccurrenceModel m = build_occurrence_model(8124, 0.1, 5, 20000, 3);
    CHECK(m.e_n_mean == doctest::Approx(162.48));
    CHECK(m.n_fold == doctest::Approx(1624.8));
    CHECK(m.e_n_diff >= 0.0);
    CHECK(m.p_noisy == doctest::Approx(m.e_n_most / 1624.8));
    CHECK(m.p_clean == doctest::Approx(1.0 - m.p_noisy));
    CHECK(m.p_noisy > 0.0);
    CHECK(m.p_noisy < 1.0);
    // the mode-based reading sits near the Monte Carlo answer but is distinct
    CHECK(m.e_n_most_mode == doctest::Approx(162.0).epsilon(0.01));
}

TEST_CASE("eps -> 0 drives p_noisy to zero") {
    const OccurrenceModel m = build_occurrence_model(1000, 1e-4, 5, 100, 5);
    CHECK(m.e_n_most == 0.0);  // round(0.1) = 0 markers
    CHECK(m.p_noisy == 0.0);
    CHECK_THROWS_AS(plan_runs(m, 2.0), NumericError);
}

TEST_CASE("plan_runs picks the smallest feasible run count") {
    const OccurrenceModel m = build_occurrence_model(1000, 0.1, 5, 50000, 9);
    const OccurrencePlan plan = plan_runs(m, 2.0);
    CHECK(plan.q_noisy > plan.q_clean);
    auto separation = [&](std::int64_t R) {
        const double gap = static_cast<double>(R) * (plan.q_noisy - plan.q_clean);
        const double sigma = std::sqrt(static_cast<double>(R) * plan.q_noisy * (1 - plan.q_noisy)) +
                             std::sqrt(static_cast<double>(R) * plan.q_clean * (1 - plan.q_clean));
        return gap - 2.0 * sigma;
    };
    CHECK(separation(plan.n_runs) >= 0.0);
    CHECK(separation(plan.n_runs - 1) < 0.0);
    // threshold strictly between the two means
    CHECK(plan.threshold > static_cast<double>(plan.n_runs) * plan.q_clean);
    CHECK(plan.threshold < static_cast<double>(plan.n_runs) * plan.q_noisy);
}

TEST_CASE("plan monotonicity in the separation target and eps") {
    const OccurrenceModel m = build_occurrence_model(2000, 0.1, 5, 50000, 13);
    const OccurrencePlan two = plan_runs(m, 2.0);
    const OccurrencePlan three = plan_runs(m, 3.0);
    CHECK(three.n_runs >= two.n_runs);

    const OccurrenceModel m2 = build_occurrence_model(2000, 0.2, 5, 50000, 13);
    const OccurrencePlan p2 = plan_runs(m2, 2.0);
    CHECK(p2.q_noisy <= two.q_noisy + 3.0 * 0.01);  // q_noisy shrinks toward q_clean
    CHECK(p2.q_noisy - p2.q_clean < two.q_noisy - two.q_clean);
}

TEST_CASE("degenerate model is rejected") {
    OccurrenceModel flat;
    flat.N = 1000;
    flat.eps = 0.1;
    flat.k = 5;
    flat.n_fold = 200.0;
    flat.e_n_mean = 20.0;
    flat.e_n_most = 20.0;  // no excess in the worst fold
    CHECK_THROWS_AS(plan_runs(flat, 2.0), NumericError);
}

TEST_CASE("simulate_occurrences accounting identities") {
    // eps*N = 1: the single marker's fold always wins, so its count equals n_runs.
    const SimulatedOccurrences sim = simulate_occurrences(100, 0.01, 5, 200, 21);
    CHECK(sim.noisy[0] == 1);
    CHECK(sim.counts[0] == 200);
    CHECK(sim.total_occurrences == 200 * 20);
    std::int64_t total = 0;
    for (const auto c : sim.counts) total += c;
    CHECK(total == sim.total_occurrences);
}

TEST_CASE("simulated occurrence rates converge to the planned probabilities") {
    const std::int64_t N = 1000;
    const double eps = 0.1;
    const int k = 5;
    const OccurrenceModel model = build_occurrence_model(N, eps, k, 100000, 23);
    const OccurrencePlan plan = plan_runs(model, 2.0);
    const std::int64_t runs = 10000;
    const SimulatedOccurrences sim = simulate_occurrences(N, eps, k, runs, 29);
    double noisy_mean = 0.0, clean_mean = 0.0;
    std::int64_t n_noisy = 0, n_clean = 0;
    for (std::size_t i = 0; i < sim.counts.size(); ++i) {
        if (sim.noisy[i]) {
            noisy_mean += static_cast<double>(sim.counts[i]);
            ++n_noisy;
        } else {
            clean_mean += static_cast<double>(sim.counts[i]);
            ++n_clean;
        }
    }
    noisy_mean /= static_cast<double>(n_noisy) * static_cast<double>(runs);
    clean_mean /= static_cast<double>(n_clean) * static_cast<double>(runs);
    CHECK(noisy_mean == doctest::Approx(plan.q_noisy).epsilon(0.05));
    CHECK(clean_mean == doctest::Approx(plan.q_clean).epsilon(0.05));
    CHECK(noisy_mean > clean_mean);
}

TEST_CASE("simulate_occurrences is independent of the job count") {
    const SimulatedOccurrences a = simulate_occurrences(500, 0.1, 5, 500, 31, 1);
    const SimulatedOccurrences b = simulate_occurrences(500, 0.1, 5, 500, 31, 4);
    CHECK(a.counts == b.counts);
    CHECK(a.total_occurrences == b.total_occurrences);
}

TEST_CASE("histogram grid, total variation and overlap") {
    const std::vector<std::int64_t> a{0, 1, 2, 3, 4, 5, 6, 7};
    const std::vector<std::int64_t> b{8, 9, 10, 11, 12, 13, 14, 15};
    const BinGrid grid = common_bin_grid(a, b, 8);
    const BinnedHistogram ha = binned_histogram(a, grid);
    const BinnedHistogram hb = binned_histogram(b, grid);
    CHECK(total_variation(ha, ha) == doctest::Approx(0.0));
    CHECK(total_variation(ha, hb) == doctest::Approx(1.0));
    CHECK(overlap_coefficient(ha, hb) == doctest::Approx(0.0));
    CHECK(overlap_coefficient(ha, ha) == doctest::Approx(1.0));

    const std::vector<std::int64_t> half{0, 1, 2, 3, 8, 9, 10, 11};
    const BinnedHistogram hh = binned_histogram(half, grid);
    CHECK(overlap_coefficient(ha, hh) == doctest::Approx(0.5).epsilon(0.01));
}
