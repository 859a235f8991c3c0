#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "atbag/rng.hpp"

namespace atbag {

/// Quality-diversity L-ensemble in factored (dual) form: L_ij = q_i phi_i'
/// phi_j q_j is represented by B (R x N, column i = q_i phi_i) and the
/// eigendecomposition of the R x R dual kernel C = B B'. The N x N L matrix
/// is never materialized outside the small-scale test oracle.
struct DualLEnsemble {
    Eigen::MatrixXd B;          // R x N
    Eigen::VectorXd qualities;  // normalized q_i, >= 0
    Eigen::VectorXd eigvals;    // of C, descending, clamped at 0
    Eigen::MatrixXd eigvecs;    // R x R, columns aligned with eigvals
    std::vector<std::int64_t> row_ids;  // candidate ids, one per column of B

    std::size_t n_points() const { return static_cast<std::size_t>(B.cols()); }
    std::size_t n_positive_eigvals() const;
};

struct SubsetSample {
    std::vector<std::int64_t> row_ids;  // distinct; size k on success
    int attempts = 0;
    double scale = 0.0;        // effective a
    bool used_fallback = false;
};

/// Build the factored ensemble from an N x R embedding and per-point quality
/// scores. Qualities are mean-normalized over their positive entries and
/// raised to `beta` (beta = 0 gives the pure-diversity ensemble). Throws if
/// every quality is zero. Eigenvalues below 1e-10 x max are clamped to zero.
DualLEnsemble build_l_ensemble(const Eigen::MatrixXd& phi, const std::vector<double>& qualities,
                               double beta, std::vector<std::int64_t> row_ids = {});

/// Expected sample size of the ensemble scaled by a: sum a l_i / (1 + a l_i).
double dpp_expected_size(const Eigen::VectorXd& eigvals, double a);

/// Scale a > 0 with expected sample size k_target, to |E[|S|] - k| < 1e-8,
/// by bracketed Brent root finding. Requires strictly more than k_target
/// positive eigenvalues (the expectation approaches the rank only as
/// a -> infinity).
double solve_scale(const Eigen::VectorXd& eigvals, std::size_t k_target);

/// Sample a size-k subset: eigenvectors enter independently with probability
/// a l_i / (1 + a l_i), then the induced projection process is sampled in
/// dual space. Whole draws retry until the size hits k; on exhaustion the
/// draw closest to k is trimmed (dropping lowest-quality points) or padded
/// (adding highest-quality unselected points) when fallback is allowed.
SubsetSample sample_k(const DualLEnsemble& le, std::size_t k, Rng& rng, int max_attempts = 1000,
                      bool allow_fallback = true);

/// Dense N x N L for oracle-scale checks.
Eigen::MatrixXd l_matrix(const DualLEnsemble& le);

/// Test oracle: P(S) = det(L_S) / det(L + I) by direct dense determinants.
/// det of the empty minor is 1. Intended for N <= 15.
double exact_subset_probability(const Eigen::MatrixXd& L, const std::vector<int>& subset);

}  // namespace atbag
