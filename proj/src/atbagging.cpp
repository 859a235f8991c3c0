#include "atbag/atbagging.hpp"

#include <stdexcept>

#include "atbag/rng.hpp"

namespace atbag {

AtbaggingSelection select_atbagging(const TabularDataset& source, const TabularDataset& probe_pool,
                                    std::size_t k, const AtbaggingParams& params,
                                    std::uint64_t seed) {
    if (k > source.n_rows()) throw std::invalid_argument("select_atbagging: k exceeds dataset size");

    AtbaggingSelection out;
    out.selection.method = "atbagging";

    const BaggedEnsemble ensemble = BaggedEnsemble::fit(source, params.m_trees, params.limits,
                                                        derive_seed(seed, 1), params.n_workers);
    const TabularDataset probes =
        choose_probe_set(probe_pool, params.probe_cap, derive_seed(seed, 2));
    ScoreOptions score_opts;
    score_opts.noise = params.noise;
    score_opts.diagonal_covariance = params.diagonal_covariance;
    score_opts.n_workers = params.n_workers;
    out.scores = score_all(ensemble, source, probes, score_opts);

    if (k == source.n_rows()) {
        out.selection.row_ids = source.row_ids();
        out.selection.notes.push_back("k equals dataset size; selection is exhaustive");
        return out;
    }

    auto [standardized, stats] = standardize_fit_transform(source);
    const Eigen::MatrixXd encoded = standardized.one_hot_matrix();
    const FeatureMap fm =
        fit_feature_map(encoded, params.rff_features, params.lengthscale, derive_seed(seed, 3));
    const Eigen::MatrixXd phi = embed(fm, encoded);

    const DualLEnsemble le =
        build_l_ensemble(phi, out.scores.ig, params.quality_beta, source.row_ids());
    Rng rng(derive_seed(seed, 4));
    const SubsetSample sample = sample_k(le, k, rng, params.dpp_max_attempts);

    out.selection.row_ids = sample.row_ids;
    out.selection.config_summary =
        "m_trees=" + std::to_string(params.m_trees) +
        " rff_features=" + std::to_string(params.rff_features) +
        " beta=" + std::to_string(params.quality_beta) +
        " lengthscale=" + std::to_string(fm.lengthscale);
    out.dpp_scale = sample.scale;
    out.dpp_attempts = sample.attempts;
    out.dpp_fallback = sample.used_fallback;
    if (sample.used_fallback) {
        out.selection.notes.push_back("dpp retry budget exhausted; size adjusted by quality");
    }
    if (!out.scores.imputed_rows.empty()) {
        out.selection.notes.push_back(std::to_string(out.scores.imputed_rows.size()) +
                                      " rows had a degenerate bootstrap partition; scores imputed "
                                      "with the median");
    }
    return out;
}

}  // namespace atbag
