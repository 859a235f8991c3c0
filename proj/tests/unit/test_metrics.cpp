#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "atbag/metrics.hpp"
#include "atbag/rng.hpp"
#include "atbag/special.hpp"

using namespace atbag;

namespace {

// Independent oracle for the regularized incomplete beta: adaptive Simpson
// quadrature of the beta density, inverted by bisection.
double simpson(const std::function<double(double)>& f, double a, double b, int depth,
               double fa, double fb, double fm, double whole) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 1e-12) return left + right;
    return simpson(f, a, m, depth - 1, fa, fm, flm, left) +
           simpson(f, m, b, depth - 1, fm, fb, frm, right);
}

double beta_cdf_quadrature(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const auto pdf = [&](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return std::exp(log_norm + (a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t));
    };
    // Clip the a < 1 endpoint singularity at 0 and replace it with the
    // power-law series integral of t^(a-1) on [0, eps].
    const double eps = 1e-9;
    double head = 0.0;
    double lo = 0.0;
    const double hi = x;
    if (a < 1.0) {
        head = std::exp(log_norm) * std::pow(eps, a) / a;
        lo = eps;
    }
    if (hi <= lo) return head;
    const double fa = pdf(lo), fb = pdf(hi), fm = pdf(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    return head + simpson(pdf, lo, hi, 40, fa, fb, fm, whole);
}

double beta_quantile_oracle(double a, double b, double p) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (beta_cdf_quadrature(a, b, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

TrialRecord rec(const std::string& method, int trial, std::size_t n_train, double r2,
                double acc = 0.0) {
    TrialRecord r;
    r.dataset = "d";
    r.method = method;
    r.n_seed = 10;
    r.trial = trial;
    r.n_train = n_train;
    r.r2 = r2;
    r.accuracy = acc;
    return r;
}

}  // namespace

TEST_CASE("r_squared: perfect, mean and constant predictors") {
    const std::vector<double> y{1.0, 2.0, 3.0, 4.0};
    CHECK(r_squared(y, y) == doctest::Approx(1.0));
    const std::vector<double> mean_pred(4, 2.5);
    CHECK(r_squared(mean_pred, y) == doctest::Approx(0.0));
    const std::vector<double> off(4, 9.0);
    CHECK(r_squared(off, y) <= 0.0 + 1e-12);
}

TEST_CASE("normalize_accuracy: per-dataset max scaling") {
    TrialTable t;
    t.records = {rec("a", 0, 10, 0.6), rec("a", 0, 30, 0.3), rec("b", 0, 10, 0.0),
                 rec("b", 0, 30, -0.2)};
    const TrialTable out = normalize_accuracy(t);
    CHECK(out.records[0].accuracy == doctest::Approx(1.0));
    CHECK(out.records[1].accuracy == doctest::Approx(0.5));
    CHECK(out.records[2].accuracy == doctest::Approx(0.0));
    CHECK(out.records[3].accuracy == doctest::Approx(-1.0 / 3.0));
    // argmax trial unchanged (order preserving)
    const auto best = std::max_element(out.records.begin(), out.records.end(),
                                       [](const auto& x, const auto& y) { return x.r2 < y.r2; });
    CHECK(best->accuracy == doctest::Approx(1.0));
}

TEST_CASE("normalize_accuracy: unlearnable dataset is an error") {
    TrialTable t;
    t.records = {rec("a", 0, 10, -0.5), rec("a", 0, 30, 0.0)};
    CHECK_THROWS_AS(normalize_accuracy(t), std::runtime_error);
}

TEST_CASE("naulc: exact trapezoid identities") {
    CHECK(naulc({{10, 1.0}, {50, 1.0}, {90, 1.0}}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(naulc({{0, 0.0}, {1, 0.5}, {2, 1.0}}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(naulc({{10, 0.4}, {30, 0.8}}) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK_THROWS_AS(naulc({{10, 1.0}}), std::invalid_argument);
}

TEST_CASE("naulc: bounded by the curve's accuracy range") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::pair<double, double>> curve;
        double x = 10;
        for (int i = 0; i < 8; ++i) {
            curve.push_back({x, rng.uniform(-0.5, 1.0)});
            x += 1.0 + rng.uniform_int(20);
        }
        const double v = naulc(curve);
        double lo = 1e9, hi = -1e9;
        for (auto [_, a] : curve) {
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
    }
}

TEST_CASE("incomplete beta agrees with the quadrature oracle") {
    for (double a : {0.5, 1.0, 2.5, 10.5}) {
        for (double b : {0.5, 1.0, 3.0}) {
            for (double x : {0.01, 0.2, 0.5, 0.8, 0.99}) {
                CHECK(reg_inc_beta(a, b, x) ==
                      doctest::Approx(beta_cdf_quadrature(a, b, x)).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("pairwise: Jeffreys prior with no data gives the textbook interval") {
    TrialTable t;
    // 4 paired trials, all exact ties: wins = losses = 0.
    for (int trial = 0; trial < 4; ++trial) {
        t.records.push_back(rec("a", trial, 10, 0.5, 0.5));
        t.records.push_back(rec("b", trial, 10, 0.5, 0.5));
    }
    const auto pts = pairwise_beta_binomial(t, "d", "a", "b", 0.90);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].wins == 0);
    CHECK(pts[0].ties == 4);
    CHECK(pts[0].losses == 0);
    CHECK(pts[0].lower == doctest::Approx(beta_quantile_oracle(0.5, 0.5, 0.05)).epsilon(1e-6));
    CHECK(pts[0].upper == doctest::Approx(beta_quantile_oracle(0.5, 0.5, 0.95)).epsilon(1e-6));
    // reference values ~ [0.0062, 0.9938]
    CHECK(pts[0].lower == doctest::Approx(0.00615583).epsilon(1e-3));
    CHECK(pts[0].upper == doctest::Approx(0.99384417).epsilon(1e-3));
}

TEST_CASE("pairwise: ten straight wins push the lower bound past 0.7") {
    TrialTable t;
    for (int trial = 0; trial < 10; ++trial) {
        t.records.push_back(rec("a", trial, 10, 0.9, 0.9));
        t.records.push_back(rec("b", trial, 10, 0.1, 0.1));
    }
    const auto pts = pairwise_beta_binomial(t, "d", "a", "b", 0.90);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].wins == 10);
    CHECK(pts[0].losses == 0);
    CHECK(pts[0].lower > 0.7);
    CHECK(pts[0].lower ==
          doctest::Approx(beta_quantile_oracle(10.5, 0.5, 0.05)).epsilon(1e-6));
}

TEST_CASE("pairwise: balanced record has posterior mean exactly one half") {
    TrialTable t;
    for (int trial = 0; trial < 10; ++trial) {
        const double a = trial < 5 ? 1.0 : 0.0;
        t.records.push_back(rec("a", trial, 10, a, a));
        t.records.push_back(rec("b", trial, 10, 0.5, 0.5));
    }
    const auto pts = pairwise_beta_binomial(t, "d", "a", "b", 0.90);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].wins == 5);
    CHECK(pts[0].losses == 5);
    CHECK(pts[0].posterior_mean == 0.5);
    CHECK(pts[0].lower < 0.5);
    CHECK(pts[0].upper > 0.5);
}

TEST_CASE("pairwise: unpaired trials are ignored") {
    TrialTable t;
    t.records.push_back(rec("a", 0, 10, 0.9, 0.9));
    t.records.push_back(rec("b", 0, 10, 0.1, 0.1));
    t.records.push_back(rec("a", 1, 10, 0.9, 0.9));  // no matching b trial
    const auto pts = pairwise_beta_binomial(t, "d", "a", "b");
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].wins + pts[0].ties + pts[0].losses == 1);
}

TEST_CASE("hdi_band: identical values collapse to zero width") {
    const auto [lo, hi] = hdi_band({2.0, 2.0, 2.0}, 0.9);
    CHECK(lo == 2.0);
    CHECK(hi == 2.0);
}

TEST_CASE("hdi_band: 1..10 at mass 0.9 keeps nine values from the lowest start") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto [lo, hi] = hdi_band(v, 0.9);
    CHECK(lo == 1.0);
    CHECK(hi == 9.0);
}

TEST_CASE("hdi_band: always contains the median") {
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.uniform_int(40);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.normal() * rng.uniform(0.1, 5.0);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[(n - 1) / 2];
        const auto [lo, hi] = hdi_band(v, 0.9);
        CHECK(lo <= median);
        CHECK(hi >= median);
    }
}

TEST_CASE("posterior mean lies strictly inside the interval") {
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
        TrialTable table;
        const int n = 3 + static_cast<int>(rng.uniform_int(12));
        for (int trial = 0; trial < n; ++trial) {
            const double a = rng.uniform(0, 1), b = rng.uniform(0, 1);
            table.records.push_back(rec("a", trial, 10, a, a));
            table.records.push_back(rec("b", trial, 10, b, b));
        }
        const auto pts = pairwise_beta_binomial(table, "d", "a", "b");
        for (const auto& p : pts) {
            CHECK(p.posterior_mean > p.lower);
            CHECK(p.posterior_mean < p.upper);
        }
    }
}
