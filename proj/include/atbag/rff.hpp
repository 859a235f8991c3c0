#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace atbag {

/// Random Fourier feature map for the squared-exponential kernel family:
/// phi(x)[r] = sqrt(2/R) * cos(omega_r' x + b_r) with omega_r ~ N(0, (1/l) I)
/// and b_r ~ Uniform[0, 2pi). Under this frequency law the expected inner
/// product is exp(-||x - y||^2 / (2l)).
struct FeatureMap {
    Eigen::MatrixXd omegas;  // R x d
    Eigen::VectorXd phases;  // R, in [0, 2pi)
    double lengthscale = 1.0;
    int n_features = 0;      // R
};

struct LengthscalePolicy {
    enum class Kind { Median, Fixed };
    Kind kind = Kind::Median;
    double value = 1.0;  // used when Fixed
};

/// Median heuristic: median pairwise squared distance over a subsample of up
/// to `max_points` rows. Falls back to the mean positive squared distance,
/// then 1.0, when the median degenerates to zero.
double median_sq_distance(const Eigen::MatrixXd& X, std::uint64_t seed,
                          std::size_t max_points = 1000);

FeatureMap fit_feature_map(const Eigen::MatrixXd& X, int n_features,
                           const LengthscalePolicy& policy, std::uint64_t seed);

/// N x R embedding of the rows of X.
Eigen::MatrixXd embed(const FeatureMap& fm, const Eigen::MatrixXd& X);

}  // namespace atbag
