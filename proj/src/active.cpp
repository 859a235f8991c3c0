#include "atbag/active.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "atbag/metrics.hpp"
#include "atbag/transfer.hpp"

namespace atbag {

std::string to_string(SeedMethod m) {
    switch (m) {
        case SeedMethod::Atbagging: return "atbagging";
        case SeedMethod::Random: return "random";
        case SeedMethod::PcaGrid: return "pca";
        case SeedMethod::LossCoreset: return "loss_coreset";
    }
    return "unknown";
}

SeedMethod seed_method_from_string(const std::string& name) {
    if (name == "atbagging") return SeedMethod::Atbagging;
    if (name == "random") return SeedMethod::Random;
    if (name == "pca") return SeedMethod::PcaGrid;
    if (name == "loss_coreset") return SeedMethod::LossCoreset;
    throw std::invalid_argument("unknown selection method: " + name);
}

Acquisition acquisition_from_string(const std::string& name) {
    if (name == "qbc_topk") return Acquisition::QbcTopK;
    if (name == "blended_dpp") return Acquisition::BlendedDpp;
    throw std::invalid_argument("unknown acquisition mode: " + name);
}

std::vector<double> committee_disagreement(const BaggedEnsemble& e, const TabularDataset& pool) {
    const Eigen::MatrixXd preds = e.predict_matrix(pool);
    const double m = static_cast<double>(preds.rows());
    std::vector<double> out(pool.n_rows());
    for (Eigen::Index j = 0; j < preds.cols(); ++j) {
        const double mean = preds.col(j).mean();
        out[static_cast<std::size_t>(j)] =
            (preds.col(j).array() - mean).square().sum() / m;
    }
    return out;
}

namespace {

std::vector<std::int64_t> top_k_by_score(const TabularDataset& pool,
                                         const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> idx(pool.n_rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return pool.row_ids()[a] < pool.row_ids()[b];
    });
    std::vector<std::int64_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool.row_ids()[idx[i]]);
    return out;
}

}  // namespace

std::vector<std::int64_t> acquire_batch(const BaggedEnsemble& e, const TabularDataset& pool_unlabeled,
                                        const ALConfig& cfg, Rng& rng) {
    const std::size_t m = cfg.m_collect;
    if (pool_unlabeled.n_rows() < m) throw std::runtime_error("acquire_batch: pool exhausted");
    if (pool_unlabeled.n_rows() == m) return pool_unlabeled.row_ids();

    const std::vector<double> scores = committee_disagreement(e, pool_unlabeled);
    if (cfg.acquisition == Acquisition::QbcTopK) {
        return top_k_by_score(pool_unlabeled, scores, m);
    }

    const bool any_positive = std::any_of(scores.begin(), scores.end(),
                                          [](double s) { return s > 0.0; });
    if (!any_positive) {
        // Zero disagreement everywhere carries no quality signal.
        return top_k_by_score(pool_unlabeled, scores, m);
    }

    auto [standardized, stats] = standardize_fit_transform(pool_unlabeled);
    const Eigen::MatrixXd encoded = standardized.one_hot_matrix();
    const FeatureMap fm = fit_feature_map(encoded, cfg.params.rff_features, cfg.params.lengthscale,
                                          rng.next_u64());
    const Eigen::MatrixXd phi = embed(fm, encoded);
    const DualLEnsemble le =
        build_l_ensemble(phi, scores, cfg.params.quality_beta, pool_unlabeled.row_ids());
    if (le.n_positive_eigvals() <= m) {
        return top_k_by_score(pool_unlabeled, scores, m);
    }
    return sample_k(le, m, rng, cfg.params.dpp_max_attempts).row_ids;
}

namespace {

std::vector<std::int64_t> select_seed(const TabularDataset& source, const TabularDataset& pool,
                                      SeedMethod method, const ALConfig& cfg,
                                      std::uint64_t method_seed) {
    switch (method) {
        case SeedMethod::Random:
            return select_random(source, cfg.n_seed, derive_seed(method_seed, 10)).row_ids;
        case SeedMethod::PcaGrid:
            return select_pca_grid(source, cfg.n_seed, cfg.pca, derive_seed(method_seed, 10))
                .row_ids;
        case SeedMethod::LossCoreset: {
            const BaggedEnsemble e =
                BaggedEnsemble::fit(source, cfg.params.m_trees, cfg.params.limits,
                                    derive_seed(method_seed, 11), cfg.params.n_workers);
            return select_loss_coreset(source, e, cfg.n_seed, derive_seed(method_seed, 10)).row_ids;
        }
        case SeedMethod::Atbagging:
            return select_atbagging(source, pool, cfg.n_seed, cfg.params,
                                    derive_seed(method_seed, 10))
                .selection.row_ids;
    }
    throw std::logic_error("unreachable");
}

}  // namespace

LearningCurve run_al_trial(const TabularDataset& source, const TabularDataset& transfer_pool,
                           SeedMethod seed_method, const ALConfig& cfg, std::uint64_t env_seed,
                           std::uint64_t method_seed) {
    if (!transfer_pool.has_target()) {
        throw std::invalid_argument("run_al_trial: transfer pool must carry oracle labels");
    }
    if (cfg.n_seed < 1 || cfg.m_collect < 1) {
        throw std::invalid_argument("run_al_trial: n_seed and m_collect must be >= 1");
    }

    // Fixed evaluation split, held out before any selection.
    const std::size_t n_pool = transfer_pool.n_rows();
    std::size_t n_eval = static_cast<std::size_t>(cfg.eval_fraction * static_cast<double>(n_pool) + 0.5);
    n_eval = std::min(n_eval, n_pool > 1 ? n_pool - 1 : 0);
    std::vector<std::size_t> order(n_pool);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng env_rng(derive_seed(env_seed, 1));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::size_t j = i + env_rng.uniform_int(order.size() - i);
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> eval_pos(order.begin(), order.begin() + n_eval);
    std::vector<std::size_t> pool_pos(order.begin() + n_eval, order.end());
    std::sort(eval_pos.begin(), eval_pos.end());
    std::sort(pool_pos.begin(), pool_pos.end());
    const TabularDataset eval_set = transfer_pool.subset_rows(eval_pos);
    const TabularDataset acq_pool = transfer_pool.subset_rows(pool_pos);

    if (cfg.n_seed + cfg.n_rounds * cfg.m_collect > acq_pool.n_rows()) {
        throw std::invalid_argument("run_al_trial: schedule exceeds the acquirable pool size");
    }

    // Seed on the source, then land the seed in the pool: directly when the
    // ids exist there, otherwise through nearest-neighbor matching.
    const std::vector<std::int64_t> selected =
        select_seed(source, acq_pool.without_target(), seed_method, cfg, method_seed);
    bool ids_in_pool = true;
    for (std::int64_t id : selected) {
        if (!acq_pool.position_of(id)) {
            ids_in_pool = false;
            break;
        }
    }
    std::vector<std::int64_t> labeled_ids;
    if (ids_in_pool) {
        labeled_ids = selected;
    } else {
        const DistanceMetric metric = DistanceMetric::fit(acq_pool.without_target(),
                                                          cfg.gamma_fallback);
        labeled_ids = match_selection(source, selected, acq_pool.without_target(), metric);
    }

    std::vector<char> is_labeled(acq_pool.n_rows(), 0);
    for (std::int64_t id : labeled_ids) is_labeled[*acq_pool.position_of(id)] = 1;

    LearningCurve curve;
    curve.method = to_string(seed_method);
    Rng acq_rng(derive_seed(method_seed, 20));
    const auto& eval_y = eval_set.target();

    for (std::size_t round = 0; round <= cfg.n_rounds; ++round) {
        const TabularDataset labeled = acq_pool.subset_by_ids(labeled_ids);
        const BaggedEnsemble model =
            BaggedEnsemble::fit(labeled, cfg.params.m_trees, cfg.params.limits,
                                derive_seed(method_seed, 1000 + round), cfg.params.n_workers);
        const Eigen::VectorXd pred = model.predict_mean(eval_set, cfg.params.n_workers);
        const double r2 = r_squared({pred.data(), static_cast<std::size_t>(pred.size())},
                                    {eval_y.data(), eval_y.size()});
        curve.points.push_back({labeled_ids.size(), r2});

        if (round == cfg.n_rounds) break;
        std::vector<std::size_t> unlabeled_pos;
        for (std::size_t i = 0; i < acq_pool.n_rows(); ++i) {
            if (!is_labeled[i]) unlabeled_pos.push_back(i);
        }
        const TabularDataset unlabeled = acq_pool.subset_rows(unlabeled_pos).without_target();
        const std::vector<std::int64_t> batch = acquire_batch(model, unlabeled, cfg, acq_rng);
        for (std::int64_t id : batch) {
            is_labeled[*acq_pool.position_of(id)] = 1;
            labeled_ids.push_back(id);
        }
    }
    return curve;
}

}  // namespace atbag
