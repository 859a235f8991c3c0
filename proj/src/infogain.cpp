#include "atbag/infogain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "atbag/parallel.hpp"
#include "atbag/rng.hpp"

namespace atbag {

GaussianMoments moments_from_predictions(const Eigen::MatrixXd& preds, double noise_var,
                                         bool diagonal) {
    if (preds.rows() < 2) {
        throw std::invalid_argument("moments_from_predictions: need at least 2 prediction rows");
    }
    if (!(noise_var > 0.0)) {
        throw std::invalid_argument("moments_from_predictions: noise_var must be > 0");
    }
    const double m = static_cast<double>(preds.rows());
    GaussianMoments g;
    g.noise_var = noise_var;
    g.diagonal = diagonal;
    g.mu = preds.colwise().mean();
    const Eigen::MatrixXd centered = preds.rowwise() - g.mu.transpose();
    if (diagonal) {
        g.sigma_diag = centered.array().square().colwise().sum() / m + noise_var;
    } else {
        g.sigma = (centered.transpose() * centered) / m;
        g.sigma.diagonal().array() += noise_var;
    }
    return g;
}

namespace {

double kl_diagonal(const GaussianMoments& ib, const GaussianMoments& oob) {
    const Eigen::ArrayXd v_ib = ib.sigma_diag.array();
    const Eigen::ArrayXd v_oob = oob.sigma_diag.array();
    if ((v_ib <= 0.0).any() || (v_oob <= 0.0).any()) {
        throw std::runtime_error("gaussian_kl: non-positive variance");
    }
    const Eigen::ArrayXd dmu = (oob.mu - ib.mu).array();
    const double trace_term = (v_ib / v_oob).sum();
    const double quad = (dmu.square() / v_oob).sum();
    const double logdet = (v_oob.log() - v_ib.log()).sum();
    return 0.5 * (trace_term + quad - static_cast<double>(ib.n()) + logdet);
}

double kl_full(const GaussianMoments& ib, const GaussianMoments& oob) {
    const Eigen::LLT<Eigen::MatrixXd> llt_oob(oob.sigma);
    if (llt_oob.info() != Eigen::Success) {
        throw std::runtime_error("gaussian_kl: out-of-bag covariance is not positive definite");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt_ib(ib.sigma);
    if (llt_ib.info() != Eigen::Success) {
        throw std::runtime_error("gaussian_kl: in-bag covariance is not positive definite");
    }
    const Eigen::MatrixXd l_oob = llt_oob.matrixL();
    const Eigen::MatrixXd l_ib = llt_ib.matrixL();

    // tr(S_oob^-1 S_ib) = ||L_oob^-1 L_ib||_F^2
    const Eigen::MatrixXd w =
        l_oob.triangularView<Eigen::Lower>().solve(l_ib);
    const double trace_term = w.squaredNorm();

    const Eigen::VectorXd z =
        l_oob.triangularView<Eigen::Lower>().solve(oob.mu - ib.mu);
    const double quad = z.squaredNorm();

    const double logdet = 2.0 * (l_oob.diagonal().array().log().sum() -
                                 l_ib.diagonal().array().log().sum());
    return 0.5 * (trace_term + quad - static_cast<double>(ib.n()) + logdet);
}

}  // namespace

double gaussian_kl(const GaussianMoments& ib, const GaussianMoments& oob) {
    if (ib.n() != oob.n()) throw std::invalid_argument("gaussian_kl: dimension mismatch");
    if (ib.diagonal != oob.diagonal) {
        throw std::invalid_argument("gaussian_kl: mixed diagonal/full moments");
    }
    const double kl = ib.diagonal ? kl_diagonal(ib, oob) : kl_full(ib, oob);
    return kl > 0.0 ? kl : 0.0;
}

double estimate_noise_var(const BaggedEnsemble& e, const TabularDataset& d, int n_workers) {
    const auto oob = e.oob_predictions(d, n_workers);
    const auto& y = d.target();
    double sse = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < oob.size(); ++i) {
        if (!oob[i]) continue;
        const double r = y[i] - *oob[i];
        sse += r * r;
        ++n;
    }
    const double mse = n > 0 ? sse / static_cast<double>(n) : 0.0;
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size());
    return std::max({mse, 1e-6 * var, 1e-12});
}

InfoGainScores score_all(const BaggedEnsemble& e, const TabularDataset& d,
                         const TabularDataset& X_star, const ScoreOptions& opts) {
    if (X_star.n_rows() == 0) throw std::invalid_argument("score_all: empty probe set");
    if (d.row_ids() != e.training_ids()) {
        throw std::invalid_argument("score_all: dataset does not match the ensemble's training rows");
    }

    double noise_var;
    if (opts.noise.kind == NoiseVarPolicy::Kind::Fixed) {
        if (!(opts.noise.fixed_value > 0.0)) {
            throw std::invalid_argument("score_all: fixed noise_var must be > 0");
        }
        noise_var = opts.noise.fixed_value;
    } else {
        noise_var = estimate_noise_var(e, d, opts.n_workers);
    }

    Eigen::MatrixXd preds = e.predict_matrix(X_star, opts.n_workers);
    // Shift each probe column to zero mean across trees. KL depends only on
    // mean differences and spreads, and centering keeps the moment-form
    // covariance accumulation well conditioned for targets with large offsets.
    preds.rowwise() -= preds.colwise().mean().eval();
    const std::size_t n_rows = d.n_rows();

    // Shared whole-ensemble accumulators; per-row in-bag moments come from
    // subtracting the (smaller) out-of-bag side.
    const Eigen::VectorXd sum_all = preds.colwise().sum();
    const Eigen::MatrixXd outer_all = preds.transpose() * preds;

    std::vector<std::optional<double>> raw(n_rows);
    parallel_for(n_rows, opts.n_workers, [&](std::size_t i) {
        const auto [ib, oob] = e.partition_membership(d.row_ids()[i]);
        if (ib.size() < 2 || oob.size() < 2) return;

        Eigen::MatrixXd p_oob(oob.size(), preds.cols());
        for (std::size_t t = 0; t < oob.size(); ++t) p_oob.row(t) = preds.row(oob[t]);
        const double m_ib = static_cast<double>(ib.size());
        const double m_oob = static_cast<double>(oob.size());

        const Eigen::VectorXd sum_oob = p_oob.colwise().sum();
        const Eigen::VectorXd mu_oob = sum_oob / m_oob;
        const Eigen::VectorXd mu_ib = (sum_all - sum_oob) / m_ib;

        GaussianMoments g_ib, g_oob;
        g_ib.mu = mu_ib;
        g_oob.mu = mu_oob;
        g_ib.noise_var = g_oob.noise_var = noise_var;
        g_ib.diagonal = g_oob.diagonal = opts.diagonal_covariance;

        const Eigen::MatrixXd outer_oob = p_oob.transpose() * p_oob;
        if (opts.diagonal_covariance) {
            const Eigen::ArrayXd diag_oob =
                outer_oob.diagonal().array() / m_oob - mu_oob.array().square();
            const Eigen::ArrayXd diag_ib =
                (outer_all.diagonal() - outer_oob.diagonal()).array() / m_ib -
                mu_ib.array().square();
            g_oob.sigma_diag = diag_oob.max(0.0) + noise_var;
            g_ib.sigma_diag = diag_ib.max(0.0) + noise_var;
        } else {
            g_oob.sigma = outer_oob / m_oob - mu_oob * mu_oob.transpose();
            g_oob.sigma.diagonal().array() += noise_var;
            g_ib.sigma = (outer_all - outer_oob) / m_ib - mu_ib * mu_ib.transpose();
            g_ib.sigma.diagonal().array() += noise_var;
        }
        raw[i] = gaussian_kl(g_ib, g_oob);
    });

    // Median-impute rows with a degenerate in-bag/out-of-bag partition.
    std::vector<double> defined;
    defined.reserve(n_rows);
    for (const auto& v : raw) {
        if (v) defined.push_back(*v);
    }
    if (defined.empty()) {
        throw std::runtime_error("score_all: no training row has both in-bag and out-of-bag trees");
    }
    std::sort(defined.begin(), defined.end());
    const double median = defined.size() % 2 == 1
                              ? defined[defined.size() / 2]
                              : 0.5 * (defined[defined.size() / 2 - 1] + defined[defined.size() / 2]);

    InfoGainScores out;
    out.row_ids = d.row_ids();
    out.probe_ids = X_star.row_ids();
    out.noise_var = noise_var;
    out.ig.resize(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (raw[i]) {
            out.ig[i] = *raw[i];
        } else {
            out.ig[i] = median;
            out.imputed_rows.push_back(d.row_ids()[i]);
        }
    }
    return out;
}

TabularDataset choose_probe_set(const TabularDataset& pool, std::size_t cap, std::uint64_t seed) {
    if (pool.n_rows() == 0) throw std::invalid_argument("choose_probe_set: empty pool");
    const std::size_t n = pool.n_rows();
    const std::size_t k = std::min(cap, n);
    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_int(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return pool.subset_rows(idx).without_target();
}

}  // namespace atbag
