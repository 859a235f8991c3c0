#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "atbag/dataset.hpp"
#include "atbag/ensemble.hpp"

namespace atbag {

/// Moment-matched Gaussian over predictions at a probe set: the mixture of
/// per-tree predictive Gaussians collapsed to mean vector + covariance
/// (observation noise on the diagonal plus the population covariance of the
/// tree predictions). Positive definite whenever noise_var > 0.
struct GaussianMoments {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;       // full covariance (empty in diagonal mode)
    Eigen::VectorXd sigma_diag;  // diagonal mode only
    double noise_var = 0.0;
    bool diagonal = false;

    Eigen::Index n() const { return mu.size(); }
};

/// Moments from an m x n_star block of tree predictions. Requires m >= 2
/// and noise_var > 0. Covariance uses the population convention (divide
/// by m). Diagonal mode keeps only per-probe variances.
GaussianMoments moments_from_predictions(const Eigen::MatrixXd& preds, double noise_var,
                                         bool diagonal = false);

/// KL(ib || oob) for Gaussians with positive definite covariances:
///   1/2 [ tr(S_oob^-1 S_ib) + d' S_oob^-1 d - n + ln det S_oob - ln det S_ib ]
/// computed via Cholesky factors, never an explicit inverse. Exact zero for
/// identical inputs; roundoff negatives clamp to 0.
double gaussian_kl(const GaussianMoments& ib, const GaussianMoments& oob);

struct NoiseVarPolicy {
    enum class Kind { OobMse, Fixed };
    Kind kind = Kind::OobMse;
    double fixed_value = 0.0;
};

struct InfoGainScores {
    std::vector<std::int64_t> row_ids;       // training rows, in training order
    std::vector<double> ig;                  // >= 0, aligned with row_ids
    std::vector<std::int64_t> probe_ids;     // rows of X_star used
    std::vector<std::int64_t> imputed_rows;  // rows given the median score
    double noise_var = 0.0;                  // value actually used
};

struct ScoreOptions {
    NoiseVarPolicy noise;
    bool diagonal_covariance = false;  // approximation for very large probe sets
    int n_workers = 1;
};

/// Per-point information gain: for every training row, split the shared
/// prediction matrix into in-bag and out-of-bag halves, moment-match both,
/// and take their KL divergence. Rows where either side has fewer than two
/// trees receive the median of the well-defined scores.
InfoGainScores score_all(const BaggedEnsemble& e, const TabularDataset& d,
                         const TabularDataset& X_star, const ScoreOptions& opts = {});

/// Uniform without-replacement subsample of min(cap, pool size) rows.
TabularDataset choose_probe_set(const TabularDataset& pool, std::size_t cap, std::uint64_t seed);

/// Default observation-noise estimate: mean squared out-of-bag residual,
/// floored at 1e-6 x target variance (and an absolute floor of 1e-12).
double estimate_noise_var(const BaggedEnsemble& e, const TabularDataset& d, int n_workers = 1);

}  // namespace atbag
