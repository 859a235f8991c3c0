#include "atbag/rff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "atbag/rng.hpp"

namespace atbag {

double median_sq_distance(const Eigen::MatrixXd& X, std::uint64_t seed, std::size_t max_points) {
    const std::size_t n = static_cast<std::size_t>(X.rows());
    if (n < 2) return 1.0;
    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t m = std::min(max_points, n);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + rng.uniform_int(n - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<double> d2;
    d2.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            d2.push_back((X.row(idx[i]) - X.row(idx[j])).squaredNorm());
        }
    }
    std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
    const double med = d2[d2.size() / 2];
    if (med > 0.0) return med;
    double sum = 0.0;
    std::size_t cnt = 0;
    for (double v : d2) {
        if (v > 0.0) {
            sum += v;
            ++cnt;
        }
    }
    return cnt > 0 ? sum / static_cast<double>(cnt) : 1.0;
}

FeatureMap fit_feature_map(const Eigen::MatrixXd& X, int n_features,
                           const LengthscalePolicy& policy, std::uint64_t seed) {
    if (n_features < 1) throw std::invalid_argument("fit_feature_map: need n_features >= 1");
    if (X.cols() < 1) throw std::invalid_argument("fit_feature_map: need at least one column");

    double lengthscale;
    if (policy.kind == LengthscalePolicy::Kind::Fixed) {
        lengthscale = policy.value;
    } else {
        lengthscale = median_sq_distance(X, derive_seed(seed, 0));
    }
    if (!(lengthscale > 0.0)) throw std::invalid_argument("fit_feature_map: lengthscale must be > 0");

    FeatureMap fm;
    fm.lengthscale = lengthscale;
    fm.n_features = n_features;
    fm.omegas.resize(n_features, X.cols());
    fm.phases.resize(n_features);
    Rng rng(derive_seed(seed, 1));
    const double omega_std = 1.0 / std::sqrt(lengthscale);
    for (int r = 0; r < n_features; ++r) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            fm.omegas(r, j) = omega_std * rng.normal();
        }
        fm.phases(r) = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    }
    return fm;
}

Eigen::MatrixXd embed(const FeatureMap& fm, const Eigen::MatrixXd& X) {
    if (X.cols() != fm.omegas.cols()) {
        throw std::invalid_argument("embed: feature dimension mismatch");
    }
    Eigen::MatrixXd proj = X * fm.omegas.transpose();  // N x R
    proj.rowwise() += fm.phases.transpose();
    const double scale = std::sqrt(2.0 / static_cast<double>(fm.n_features));
    return scale * proj.array().cos().matrix();
}

}  // namespace atbag
