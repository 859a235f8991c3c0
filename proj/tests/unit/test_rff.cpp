#include <doctest.h>

#include <cmath>
#include <vector>

#include "atbag/rff.hpp"
#include "atbag/rng.hpp"

using namespace atbag;

namespace {

Eigen::MatrixXd random_points(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
    }
    return x;
}

}  // namespace

TEST_CASE("feature map: shapes, phase range, determinism") {
    const Eigen::MatrixXd x = random_points(20, 2, 1);
    LengthscalePolicy fixed{LengthscalePolicy::Kind::Fixed, 1.0};
    const FeatureMap fm = fit_feature_map(x, 4, fixed, 7);
    CHECK(fm.omegas.rows() == 4);
    CHECK(fm.omegas.cols() == 2);
    CHECK(fm.phases.size() == 4);
    for (int r = 0; r < 4; ++r) {
        CHECK(fm.phases(r) >= 0.0);
        CHECK(fm.phases(r) < 2.0 * 3.14159265358979323846);
    }
    const FeatureMap fm2 = fit_feature_map(x, 4, fixed, 7);
    CHECK((fm.omegas - fm2.omegas).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fm.phases - fm2.phases).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(fit_feature_map(x, 4, {LengthscalePolicy::Kind::Fixed, -1.0}, 7),
                    std::invalid_argument);
}

TEST_CASE("feature map: frequency variance is 1/lengthscale") {
    const Eigen::MatrixXd x = random_points(10, 10, 2);
    const double ell = 2.5;
    const FeatureMap fm = fit_feature_map(x, 10000, {LengthscalePolicy::Kind::Fixed, ell}, 3);
    const double var = fm.omegas.array().square().mean();
    CHECK(std::abs(var - 1.0 / ell) < 0.05 / ell);
}

TEST_CASE("embed: norm bounds and concentration at one") {
    const Eigen::MatrixXd x = random_points(50, 3, 4);
    const FeatureMap fm = fit_feature_map(x, 4096, {LengthscalePolicy::Kind::Fixed, 1.0}, 5);
    const Eigen::MatrixXd phi = embed(fm, x);
    double mean_norm = 0.0;
    for (Eigen::Index i = 0; i < phi.rows(); ++i) {
        const double sq = phi.row(i).squaredNorm();
        CHECK(sq >= 0.0);
        CHECK(sq <= 2.0);
        CHECK(std::abs(sq - 1.0) < 0.05);  // phi(x)'phi(x) -> k(0) = 1
        mean_norm += sq;
    }
    CHECK(std::abs(mean_norm / phi.rows() - 1.0) < 0.01);
    CHECK_THROWS_AS(embed(fm, random_points(3, 2, 1)), std::invalid_argument);
}

TEST_CASE("embed: inner product matches the induced kernel at the half-decay distance") {
    const double ell = 1.7;
    // ||x - y||^2 = 2 * ell * ln 2  ->  exp(-d2 / (2 ell)) = 0.5
    const double d = std::sqrt(2.0 * ell * std::log(2.0));
    Eigen::MatrixXd pts(2, 3);
    pts.setZero();
    pts(1, 0) = d;
    const FeatureMap fm = fit_feature_map(pts, 4096, {LengthscalePolicy::Kind::Fixed, ell}, 11);
    const Eigen::MatrixXd phi = embed(fm, pts);
    CHECK(std::abs(phi.row(0).dot(phi.row(1)) - 0.5) < 0.05);
}

TEST_CASE("embed: map-averaged inner products are unbiased for the induced kernel") {
    const double ell = 1.0;
    const int n_maps = 200;
    const int R = 512;
    Eigen::MatrixXd pts(2, 2);
    for (int g = 1; g <= 6; ++g) {
        const double dist = 0.35 * g;
        pts.setZero();
        pts(1, 1) = dist;
        const double expected = std::exp(-dist * dist / (2.0 * ell));
        double sum = 0.0, sumsq = 0.0;
        for (int m = 0; m < n_maps; ++m) {
            const FeatureMap fm =
                fit_feature_map(pts, R, {LengthscalePolicy::Kind::Fixed, ell}, 1000 + m);
            const Eigen::MatrixXd phi = embed(fm, pts);
            const double v = phi.row(0).dot(phi.row(1));
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / n_maps;
        const double se = std::sqrt((sumsq / n_maps - mean * mean) / n_maps);
        CHECK(std::abs(mean - expected) < 3.0 * se + 1e-6);
    }
}

TEST_CASE("embed: inner-product statistics are shift invariant") {
    const double ell = 1.3;
    const int n_maps = 200;
    Eigen::MatrixXd a(2, 2), b(2, 2);
    a << 0.0, 0.0, 0.8, -0.4;
    b = a;
    b.rowwise() += Eigen::RowVector2d(5.0, -3.0);
    double mean_a = 0.0, mean_b = 0.0, var_a = 0.0, var_b = 0.0;
    for (int m = 0; m < n_maps; ++m) {
        const FeatureMap fm =
            fit_feature_map(a, 512, {LengthscalePolicy::Kind::Fixed, ell}, 500 + m);
        const double va = embed(fm, a).row(0).dot(embed(fm, a).row(1));
        const double vb = embed(fm, b).row(0).dot(embed(fm, b).row(1));
        mean_a += va;
        mean_b += vb;
        var_a += va * va;
        var_b += vb * vb;
    }
    mean_a /= n_maps;
    mean_b /= n_maps;
    var_a = var_a / n_maps - mean_a * mean_a;
    var_b = var_b / n_maps - mean_b * mean_b;
    const double se = std::sqrt((var_a + var_b) / n_maps);
    CHECK(std::abs(mean_a - mean_b) < 3.0 * se + 1e-6);
}

TEST_CASE("median heuristic: degenerate inputs fall back safely") {
    Eigen::MatrixXd same(5, 2);
    same.setOnes();
    CHECK(median_sq_distance(same, 1) == 1.0);

    Eigen::MatrixXd mixed(4, 1);
    mixed << 0, 0, 0, 3;  // median pair distance 0, positive mean fallback
    const double v = median_sq_distance(mixed, 1);
    CHECK(v == doctest::Approx(9.0));
}
