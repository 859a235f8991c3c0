#include <doctest.h>

#include <cmath>
#include <vector>

#include "atbag/rng.hpp"
#include "atbag/transfer.hpp"

using namespace atbag;

namespace {

TabularDataset numeric_points(const std::vector<std::vector<double>>& rows) {
    std::vector<ColumnSchema> schema;
    for (std::size_t j = 0; j < rows[0].size(); ++j) {
        schema.push_back({"x" + std::to_string(j), ColumnKind::Numeric, {}});
    }
    TabularDataset d(schema, rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) d.set_numeric(i, j, rows[i][j]);
    }
    return d;
}

}  // namespace

TEST_CASE("mahalanobis: identity covariance reduces to Euclidean") {
    const double s = std::sqrt(2.0);
    const TabularDataset d = numeric_points({{s, 0}, {-s, 0}, {0, s}, {0, -s}});
    const DistanceMetric m = DistanceMetric::fit(d);
    CHECK(m.kind() == DistanceMetric::Kind::Mahalanobis);
    const double euclid = (Eigen::Vector2d(s, 0) - Eigen::Vector2d(0, s)).norm();
    CHECK(m.distance(d, 0, d, 2) == doctest::Approx(euclid).epsilon(1e-5));
}

TEST_CASE("mahalanobis: one column with std 2 gives |x - y| / 2") {
    const TabularDataset d = numeric_points({{-2}, {2}});
    const DistanceMetric m = DistanceMetric::fit(d);
    CHECK(m.distance(d, 0, d, 1) == doctest::Approx(4.0 / 2.0).epsilon(1e-5));
}

TEST_CASE("mahalanobis: invariant under affine re-parameterization") {
    Rng rng(6);
    const std::size_t n = 200, dims = 3;
    std::vector<std::vector<double>> rows(n, std::vector<double>(dims));
    for (auto& r : rows) {
        for (auto& v : r) v = rng.normal();
    }
    const TabularDataset d = numeric_points(rows);
    const DistanceMetric m = DistanceMetric::fit(d);

    // Mild diagonal scaling, a rotation, and a translation.
    Eigen::Matrix3d rot;
    const double th = 0.7;
    rot << std::cos(th), -std::sin(th), 0, std::sin(th), std::cos(th), 0, 0, 0, 1;
    const Eigen::Vector3d scale(1.1, 0.9, 1.05);
    const Eigen::Vector3d shift(4.0, -2.0, 0.5);
    std::vector<std::vector<double>> t_rows(n, std::vector<double>(dims));
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector3d x(rows[i][0], rows[i][1], rows[i][2]);
        const Eigen::Vector3d y = rot * scale.asDiagonal() * x + shift;
        for (std::size_t j = 0; j < dims; ++j) t_rows[i][j] = y(static_cast<Eigen::Index>(j));
    }
    const TabularDataset td = numeric_points(t_rows);
    const DistanceMetric tm = DistanceMetric::fit(td);

    for (int pair = 0; pair < 50; ++pair) {
        const std::size_t a = rng.uniform_int(n), b = rng.uniform_int(n);
        const double da = m.distance(d, a, d, b);
        const double db = tm.distance(td, a, td, b);
        CHECK(std::abs(da - db) <= 1e-6 * std::max(1.0, da));
    }
}

TEST_CASE("k-prototypes: all-categorical data counts mismatches at the fallback gamma") {
    std::vector<ColumnSchema> schema{{"c1", ColumnKind::Categorical, {"a", "b"}},
                                     {"c2", ColumnKind::Categorical, {"u", "v"}}};
    TabularDataset d(schema, 2);
    d.set_code(0, 0, 0);
    d.set_code(0, 1, 0);
    d.set_code(1, 0, 1);
    d.set_code(1, 1, 1);
    const DistanceMetric m = DistanceMetric::fit(d, 1.0);
    CHECK(m.kind() == DistanceMetric::Kind::KPrototypes);
    CHECK(m.gamma() == 1.0);
    CHECK(m.distance(d, 0, d, 1) == doctest::Approx(2.0));
    CHECK(m.distance(d, 0, d, 0) == doctest::Approx(0.0));
}

TEST_CASE("k-prototypes: mixed distance is squared numeric plus gamma mismatches") {
    std::vector<ColumnSchema> schema{{"x", ColumnKind::Numeric, {}},
                                     {"c", ColumnKind::Categorical, {"a", "b"}}};
    TabularDataset d(schema, 4);
    const std::vector<double> xs{0.0, 2.0, 4.0, 6.0};  // population std sqrt(5)
    for (std::size_t i = 0; i < 4; ++i) {
        d.set_numeric(i, 0, xs[i]);
        d.set_code(i, 1, static_cast<std::int32_t>(i % 2));
    }
    const DistanceMetric m = DistanceMetric::fit(d);
    const double gamma = 0.5 * std::sqrt(5.0);
    CHECK(m.gamma() == doctest::Approx(gamma));
    CHECK(m.distance(d, 0, d, 1) == doctest::Approx(4.0 + gamma));
    CHECK(m.distance(d, 0, d, 2) == doctest::Approx(16.0));
}

TEST_CASE("match_selection: exact copies in the pool are recovered") {
    const TabularDataset source = numeric_points({{1, 1}, {5, 5}});
    const TabularDataset pool = numeric_points({{9, 9}, {1, 1}, {5, 5}, {-3, 0}});
    const DistanceMetric m = DistanceMetric::fit(pool);
    const auto matched = match_selection(source, {0, 1}, pool, m);
    CHECK(matched == std::vector<std::int64_t>{1, 2});
}

TEST_CASE("match_selection: duplicates match without replacement") {
    const TabularDataset source = numeric_points({{1.0}, {1.0}});
    const TabularDataset pool = numeric_points({{1.0}, {1.4}, {9.0}});
    const DistanceMetric m = DistanceMetric::fit(pool);
    const auto matched = match_selection(source, {0, 1}, pool, m);
    REQUIRE(matched.size() == 2);
    CHECK(matched[0] == 0);  // exact copy
    CHECK(matched[1] == 1);  // next nearest, copy already taken
}

TEST_CASE("match_selection: ties break to the lowest pool row id") {
    const TabularDataset source = numeric_points({{0.0}});
    const TabularDataset pool = numeric_points({{1.0}, {-1.0}, {1.0}});
    const DistanceMetric m = DistanceMetric::fit(pool);
    // rows 0 and 1 are equidistant from 0; row 0 has the lower id
    const auto matched = match_selection(source, {0}, pool, m);
    CHECK(matched[0] == 0);
}

TEST_CASE("match_selection: size and validation contracts") {
    const TabularDataset source = numeric_points({{0}, {1}, {2}});
    const TabularDataset pool = numeric_points({{0}, {1}});
    const DistanceMetric m = DistanceMetric::fit(pool);
    CHECK_THROWS_AS(match_selection(source, {0, 1, 2}, pool, m), std::invalid_argument);
    CHECK_THROWS_AS(match_selection(source, {}, pool, m), std::invalid_argument);
    const auto two = match_selection(source, {0, 2}, pool, m);
    CHECK(two.size() == 2);
    CHECK(two[0] != two[1]);
}
