#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "atbag/dpp.hpp"
#include "atbag/rng.hpp"

using namespace atbag;

namespace {

// Independent root-finding oracle: plain bisection on the expected-size
// equation.
double bisect_scale(const std::vector<double>& eigvals, double k) {
    auto f = [&](double a) {
        double s = 0.0;
        for (double l : eigvals) {
            if (l > 0.0) s += a * l / (1.0 + a * l);
        }
        return s - k;
    };
    double lo = 1e-12, hi = 1e12;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);  // geometric bisection
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

DualLEnsemble identity_ensemble(int n) {
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n);
    return build_l_ensemble(phi, std::vector<double>(n, 1.0), 1.0);
}

// All k-subsets of {0..n-1}.
void enumerate_subsets(int n, int k, std::vector<std::vector<int>>& out) {
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == k) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i <= n - (k - static_cast<int>(cur.size())); ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
}

double subset_det(const Eigen::MatrixXd& L, const std::vector<int>& s) {
    Eigen::MatrixXd minor(s.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) minor(i, j) = L(s[i], s[j]);
    }
    return minor.determinant();
}

DualLEnsemble random_low_rank_ensemble(int n, int rank, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd phi(n, rank);
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
        for (Eigen::Index j = 0; j < phi.cols(); ++j) phi(i, j) = rng.normal();
    }
    std::vector<double> q(n);
    for (auto& v : q) v = rng.uniform(0.2, 2.0);
    return build_l_ensemble(phi, q, 1.0);
}

}  // namespace

TEST_CASE("build_l_ensemble: beta = 0 gives the pure diversity ensemble") {
    Rng rng(1);
    Eigen::MatrixXd phi(5, 3);
    for (int i = 0; i < phi.size(); ++i) phi(i / 3, i % 3) = rng.normal();
    const DualLEnsemble le = build_l_ensemble(phi, {0.0, 1.0, 5.0, 0.1, 2.0}, 0.0);
    for (int i = 0; i < 5; ++i) CHECK(le.qualities(i) == 1.0);
}

TEST_CASE("build_l_ensemble: orthonormal pair has unit eigenvalues") {
    Eigen::MatrixXd phi(2, 4);
    phi.setZero();
    phi(0, 0) = 1.0;
    phi(1, 2) = 1.0;
    const DualLEnsemble le = build_l_ensemble(phi, {1.0, 1.0}, 1.0);
    CHECK(le.eigvals(0) == doctest::Approx(1.0));
    CHECK(le.eigvals(1) == doctest::Approx(1.0));
    CHECK(le.n_positive_eigvals() == 2);
}

TEST_CASE("build_l_ensemble: quality normalization is scale invariant") {
    Rng rng(2);
    Eigen::MatrixXd phi(4, 3);
    for (int i = 0; i < phi.size(); ++i) phi(i / 3, i % 3) = rng.normal();
    const std::vector<double> q{0.5, 2.0, 0.0, 1.5};
    std::vector<double> q_scaled;
    for (double v : q) q_scaled.push_back(7.0 * v);
    const DualLEnsemble a = build_l_ensemble(phi, q, 1.7);
    const DualLEnsemble b = build_l_ensemble(phi, q_scaled, 1.7);
    CHECK((a.qualities - b.qualities).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("build_l_ensemble: all-zero qualities are rejected") {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(build_l_ensemble(phi, {0.0, 0.0, 0.0}, 1.0), std::invalid_argument);
}

TEST_CASE("solve_scale: equal eigenvalues have the closed form k / (N - k)") {
    const Eigen::VectorXd eig = Eigen::VectorXd::Ones(10);
    const double a = solve_scale(eig, 5);
    CHECK(std::abs(a - 1.0) < 1e-12);
    CHECK(std::abs(dpp_expected_size(eig, a) - 5.0) < 1e-8);
}

TEST_CASE("solve_scale: two-eigenvalue case matches the bisection oracle") {
    Eigen::VectorXd eig(2);
    eig << 4.0, 1.0;
    const double a = solve_scale(eig, 1);
    const double oracle = bisect_scale({4.0, 1.0}, 1.0);
    CHECK(std::abs(a - oracle) < 1e-9);
    // 4a(1+a) + a(1+4a) = (1+4a)(1+a)  =>  4a^2 = 1  =>  a = 1/2.
    CHECK(a == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_scale: k at the rank limit is rejected") {
    Eigen::VectorXd eig(4);
    eig << 2.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(solve_scale(eig, 2), std::invalid_argument);
    CHECK_THROWS_AS(solve_scale(eig, 3), std::invalid_argument);
    CHECK_NOTHROW(solve_scale(eig, 1));
}

TEST_CASE("solve_scale: random spectra satisfy the expectation to 1e-8, monotone in k") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 6 + static_cast<int>(rng.uniform_int(20));
        Eigen::VectorXd eig(n);
        for (int i = 0; i < n; ++i) eig(i) = std::exp(rng.uniform(-6, 4));
        double prev = 0.0;
        for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
            const double a = solve_scale(eig, k);
            CHECK(std::abs(dpp_expected_size(eig, a) - static_cast<double>(k)) < 1e-8);
            CHECK(a > prev);
            prev = a;
        }
    }
}

TEST_CASE("exact_subset_probability: identity cases") {
    const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(2, 2);
    CHECK(exact_subset_probability(L, {0}) == doctest::Approx(0.25));
    CHECK(exact_subset_probability(L, {}) == doctest::Approx(0.25));
    CHECK(exact_subset_probability(L, {0, 1}) == doctest::Approx(0.25));
}

TEST_CASE("normalization oracle: subset determinants sum to det(L + I)") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const int n = 8;
        const DualLEnsemble le = random_low_rank_ensemble(n, 4, seed);
        const Eigen::MatrixXd L = l_matrix(le);
        double total = 0.0;
        for (int mask = 0; mask < (1 << n); ++mask) {
            std::vector<int> s;
            for (int i = 0; i < n; ++i) {
                if (mask & (1 << i)) s.push_back(i);
            }
            total += exact_subset_probability(L, s);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("sample_k: identity L gives uniform pairs") {
    const DualLEnsemble le = identity_ensemble(4);
    Rng rng(99);
    std::map<std::pair<int, int>, int> counts;
    const int draws = 20000;
    for (int i = 0; i < draws; ++i) {
        const SubsetSample s = sample_k(le, 2, rng);
        REQUIRE(s.row_ids.size() == 2);
        auto [a, b] = std::minmax(s.row_ids[0], s.row_ids[1]);
        ++counts[{static_cast<int>(a), static_cast<int>(b)}];
    }
    CHECK(counts.size() == 6);
    const double expected = draws / 6.0;
    const double sigma = std::sqrt(expected * (1.0 - 1.0 / 6.0));
    for (const auto& [pair, c] : counts) {
        CHECK(std::abs(c - expected) < 3.0 * sigma);
    }
}

TEST_CASE("sample_k: duplicate points are never drawn together") {
    Rng rng(5);
    Eigen::MatrixXd phi(4, 6);
    for (Eigen::Index j = 0; j < 6; ++j) {
        phi(0, j) = rng.normal();
        phi(2, j) = rng.normal();
        phi(3, j) = rng.normal();
    }
    phi.row(1) = phi.row(0);  // rows 0 and 1 identical
    const DualLEnsemble le = build_l_ensemble(phi, {1, 1, 1, 1}, 1.0);
    REQUIRE(le.n_positive_eigvals() == 3);
    Rng draw_rng(77);
    for (int i = 0; i < 20000; ++i) {
        const SubsetSample s = sample_k(le, 2, draw_rng);
        const bool both = std::find(s.row_ids.begin(), s.row_ids.end(), 0) != s.row_ids.end() &&
                          std::find(s.row_ids.begin(), s.row_ids.end(), 1) != s.row_ids.end();
        CHECK_FALSE(both);
    }
}

TEST_CASE("sample_k: k = 1 marginals match brute-force determinant ratios") {
    const int n = 6;
    const DualLEnsemble le = random_low_rank_ensemble(n, 4, 21);
    const Eigen::MatrixXd L = l_matrix(le);
    // Conditional k-DPP marginals: P({i}) proportional to L_ii.
    std::vector<double> expected(n);
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += L(i, i);
    for (int i = 0; i < n; ++i) expected[i] = L(i, i) / z;

    Rng rng(31);
    std::vector<int> counts(n, 0);
    const int draws = 20000;
    for (int d = 0; d < draws; ++d) {
        const SubsetSample s = sample_k(le, 1, rng);
        REQUIRE(s.row_ids.size() == 1);
        ++counts[static_cast<int>(s.row_ids[0])];
    }
    for (int i = 0; i < n; ++i) {
        const double se = std::sqrt(expected[i] * (1 - expected[i]) * draws);
        CHECK(std::abs(counts[i] - expected[i] * draws) < 3.0 * se + 1e-9);
    }
}

TEST_CASE("sample_k: conditional size-k distribution is close to the exact k-DPP") {
    const int n = 7, rank = 4, k = 2;
    const DualLEnsemble le = random_low_rank_ensemble(n, rank, 8);
    const Eigen::MatrixXd L = l_matrix(le);

    std::vector<std::vector<int>> subsets;
    enumerate_subsets(n, k, subsets);
    std::vector<double> exact(subsets.size());
    double z = 0.0;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        exact[i] = std::max(0.0, subset_det(L, subsets[i]));
        z += exact[i];
    }
    for (auto& p : exact) p /= z;

    std::map<std::vector<int>, int> counts;
    Rng rng(12);
    const int draws = 30000;
    for (int d = 0; d < draws; ++d) {
        SubsetSample s = sample_k(le, k, rng);
        std::vector<int> key;
        for (auto id : s.row_ids) key.push_back(static_cast<int>(id));
        std::sort(key.begin(), key.end());
        ++counts[key];
    }
    double tv = 0.0;
    for (std::size_t i = 0; i < subsets.size(); ++i) {
        const double emp = counts.count(subsets[i])
                               ? static_cast<double>(counts[subsets[i]]) / draws
                               : 0.0;
        tv += std::abs(emp - exact[i]);
    }
    tv *= 0.5;
    CHECK(tv < 0.02);
}

TEST_CASE("sample_k: fallback fills to the requested size under a tiny budget") {
    const DualLEnsemble le = random_low_rank_ensemble(12, 8, 3);
    Rng rng(1);
    const SubsetSample s = sample_k(le, 4, rng, 1, true);
    CHECK(s.row_ids.size() == 4);
    std::vector<std::int64_t> sorted = s.row_ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(s.attempts == 1);

    // With fallback disabled, either the one draw hit size 4 or it throws.
    Rng rng2(1);
    try {
        const SubsetSample strict = sample_k(le, 4, rng2, 1, false);
        CHECK(strict.row_ids.size() == 4);
    } catch (const std::runtime_error&) {
        // exhausted budget, as allowed
    }
}

TEST_CASE("sample_k: attempts stay within budget and scale is recorded") {
    const DualLEnsemble le = identity_ensemble(8);
    Rng rng(2);
    const SubsetSample s = sample_k(le, 3, rng, 1000);
    CHECK(s.attempts >= 1);
    CHECK(s.attempts <= 1000);
    // a = k / (N - k) for flat spectra
    CHECK(s.scale == doctest::Approx(3.0 / 5.0).epsilon(1e-10));
}
