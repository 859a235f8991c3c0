#pragma once

#include <cstdint>

#include "atbag/baselines.hpp"
#include "atbag/dataset.hpp"
#include "atbag/dpp.hpp"
#include "atbag/ensemble.hpp"
#include "atbag/infogain.hpp"
#include "atbag/rff.hpp"

namespace atbag {

/// Knobs of the full selection pipeline: ensemble fit, information-gain
/// scoring, feature embedding and DPP sampling.
struct AtbaggingParams {
    std::size_t m_trees = 100;
    TreeLimits limits;
    NoiseVarPolicy noise;
    bool diagonal_covariance = false;
    std::size_t probe_cap = 256;
    int rff_features = 512;
    LengthscalePolicy lengthscale;
    double quality_beta = 1.0;
    int dpp_max_attempts = 1000;
    int n_workers = 1;
};

struct AtbaggingSelection {
    SelectionResult selection;
    InfoGainScores scores;
    double dpp_scale = 0.0;
    int dpp_attempts = 0;
    bool dpp_fallback = false;
};

/// The full pipeline: fit a bagged ensemble on the labeled source, score
/// every source row by in-bag/out-of-bag information gain against a probe
/// subsample of the pool features, embed the standardized source features
/// with random Fourier features, and draw k rows from the quality-diversity
/// ensemble. `probe_pool` supplies the inputs the scores are evaluated on
/// (typically the transfer pool; pass the source itself when there is none).
AtbaggingSelection select_atbagging(const TabularDataset& source, const TabularDataset& probe_pool,
                                    std::size_t k, const AtbaggingParams& params,
                                    std::uint64_t seed);

}  // namespace atbag
