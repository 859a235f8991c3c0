#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "atbag/dataset.hpp"
#include "atbag/ensemble.hpp"

namespace atbag {

struct SelectionResult {
    std::vector<std::int64_t> row_ids;  // ordered, distinct, size k
    std::string method;
    std::string config_summary;
    std::vector<std::string> notes;
};

/// Uniform sampling without replacement.
SelectionResult select_random(const TabularDataset& d, std::size_t k, std::uint64_t seed);

struct PcaGridParams {
    int n_components = 0;   // 0 = min(5, encoded width)
    int bins_per_axis = 4;
};

/// Principal-component voxel grid over the standardized (one-hot encoded)
/// features; equal-width bins per axis spanning the observed range; one
/// uniform draw per voxel visit, round-robin over non-empty voxels in a
/// shuffled fixed order until k points are collected.
SelectionResult select_pca_grid(const TabularDataset& d, std::size_t k, const PcaGridParams& p,
                                std::uint64_t seed);

/// Importance sampling without replacement with weights equal to each row's
/// squared out-of-bag residual. All-zero weights fall back to uniform.
SelectionResult select_loss_coreset(const TabularDataset& d, const BaggedEnsemble& e,
                                    std::size_t k, std::uint64_t seed);

/// Exposed pieces of the PCA grid (reused by tests to audit voxel traversal):
/// projection onto the top principal axes of the column-covariance.
Eigen::MatrixXd pca_project(const Eigen::MatrixXd& x, int n_components);
/// Flat voxel key per row for an equal-width grid on each column's range.
std::vector<std::int64_t> assign_voxels(const Eigen::MatrixXd& projected, int bins_per_axis);

}  // namespace atbag
