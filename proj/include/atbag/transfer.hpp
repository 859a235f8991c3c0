#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "atbag/dataset.hpp"

namespace atbag {

/// Feature-space distance fitted to a pool: Mahalanobis (ridge-regularized
/// pool covariance) when every column is numeric, otherwise a k-prototypes
/// distance (squared Euclidean on numeric columns plus gamma per categorical
/// mismatch, gamma defaulting to half the mean numeric standard deviation).
class DistanceMetric {
public:
    enum class Kind { Mahalanobis, KPrototypes };

    static DistanceMetric fit(const TabularDataset& pool, double gamma_fallback = 1.0);

    Kind kind() const { return kind_; }
    double gamma() const { return gamma_; }

    double distance(const TabularDataset& a, std::size_t row_a, const TabularDataset& b,
                    std::size_t row_b) const;

private:
    Kind kind_ = Kind::Mahalanobis;
    Eigen::MatrixXd whitener_;  // L^-1 of the Cholesky factor of Cov + ridge
    double gamma_ = 1.0;
    std::vector<std::size_t> numeric_cols_;
    std::vector<std::size_t> categorical_cols_;
};

/// Greedy nearest-neighbor matching without replacement: source selections in
/// order, each matched to its closest unmatched pool row (ties broken by the
/// lowest pool row id). Result has distinct ids, one per selected point.
std::vector<std::int64_t> match_selection(const TabularDataset& source,
                                          const std::vector<std::int64_t>& selected_ids,
                                          const TabularDataset& pool,
                                          const DistanceMetric& metric);

}  // namespace atbag
