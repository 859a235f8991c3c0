#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atbag/atbagging.hpp"
#include "atbag/dataset.hpp"
#include "atbag/ensemble.hpp"
#include "atbag/rng.hpp"

namespace atbag {

enum class Acquisition { QbcTopK, BlendedDpp };
enum class SeedMethod { Atbagging, Random, PcaGrid, LossCoreset };

std::string to_string(SeedMethod m);
SeedMethod seed_method_from_string(const std::string& name);
Acquisition acquisition_from_string(const std::string& name);

struct ALConfig {
    std::size_t n_seed = 10;
    std::size_t m_collect = 20;
    std::size_t n_rounds = 14;
    Acquisition acquisition = Acquisition::BlendedDpp;
    AtbaggingParams params;      // ensemble limits + scoring/embedding/DPP knobs
    PcaGridParams pca;           // for the PCA seed baseline
    double eval_fraction = 0.2;  // transfer rows held out for evaluation
    double gamma_fallback = 1.0; // all-categorical k-prototypes weight
};

struct LearningCurvePoint {
    std::size_t n_train = 0;
    double r2 = 0.0;
};

struct LearningCurve {
    std::vector<LearningCurvePoint> points;  // n_train strictly increasing
    int trial = 0;
    std::string method;
};

/// Committee disagreement: population variance of the per-tree predictions
/// at each pool row.
std::vector<double> committee_disagreement(const BaggedEnsemble& e, const TabularDataset& pool);

/// One acquisition batch from the unlabeled pool. QbcTopK takes the
/// m_collect highest-disagreement rows (ties to the lowest row id);
/// BlendedDpp samples a size-m_collect subset from the quality-diversity
/// ensemble with disagreement as quality, falling back to top-k when the
/// ensemble cannot support the batch size (rank, or all-zero scores).
std::vector<std::int64_t> acquire_batch(const BaggedEnsemble& e, const TabularDataset& pool_unlabeled,
                                        const ALConfig& cfg, Rng& rng);

/// One transfer-active-learning trial: hold out an evaluation split of the
/// pool, seed with `seed_method` applied to the source (mapped through
/// nearest-neighbor matching when the selected ids do not exist in the
/// pool), then alternate ensemble fits, evaluation and acquisition. The
/// curve has n_rounds + 1 points; the pool's targets act as the oracle and
/// are only ever read for acquired rows.
LearningCurve run_al_trial(const TabularDataset& source, const TabularDataset& transfer_pool,
                           SeedMethod seed_method, const ALConfig& cfg, std::uint64_t env_seed,
                           std::uint64_t method_seed);

}  // namespace atbag
