#include "atbag/transfer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace atbag {

DistanceMetric DistanceMetric::fit(const TabularDataset& pool, double gamma_fallback) {
    if (pool.n_rows() == 0) throw std::invalid_argument("fit_metric: empty pool");
    DistanceMetric m;
    for (std::size_t j = 0; j < pool.n_cols(); ++j) {
        (pool.column(j).kind == ColumnKind::Numeric ? m.numeric_cols_ : m.categorical_cols_)
            .push_back(j);
    }

    if (m.categorical_cols_.empty()) {
        m.kind_ = Kind::Mahalanobis;
        const Eigen::MatrixXd x = pool.numeric_matrix();
        const Eigen::RowVectorXd mean = x.colwise().mean();
        const Eigen::MatrixXd centered = x.rowwise() - mean;
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
        const double ridge = 1e-6 * cov.trace() / static_cast<double>(cov.rows());
        cov.diagonal().array() += ridge > 0.0 ? ridge : 1e-12;
        const Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("fit_metric: covariance factorization failed");
        }
        m.whitener_ = Eigen::MatrixXd(llt.matrixL())
                          .triangularView<Eigen::Lower>()
                          .solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
        return m;
    }

    m.kind_ = Kind::KPrototypes;
    if (m.numeric_cols_.empty()) {
        m.gamma_ = gamma_fallback;
        return m;
    }
    double std_sum = 0.0;
    const double n = static_cast<double>(pool.n_rows());
    for (std::size_t j : m.numeric_cols_) {
        double mean = 0.0;
        for (std::size_t i = 0; i < pool.n_rows(); ++i) mean += pool.numeric_at(i, j);
        mean /= n;
        double ss = 0.0;
        for (std::size_t i = 0; i < pool.n_rows(); ++i) {
            const double c = pool.numeric_at(i, j) - mean;
            ss += c * c;
        }
        std_sum += std::sqrt(ss / n);
    }
    m.gamma_ = 0.5 * std_sum / static_cast<double>(m.numeric_cols_.size());
    return m;
}

double DistanceMetric::distance(const TabularDataset& a, std::size_t row_a,
                                const TabularDataset& b, std::size_t row_b) const {
    if (kind_ == Kind::Mahalanobis) {
        Eigen::VectorXd delta(numeric_cols_.size());
        for (std::size_t j = 0; j < numeric_cols_.size(); ++j) {
            delta(static_cast<Eigen::Index>(j)) =
                a.numeric_at(row_a, numeric_cols_[j]) - b.numeric_at(row_b, numeric_cols_[j]);
        }
        return (whitener_ * delta).norm();
    }
    double d = 0.0;
    for (std::size_t j : numeric_cols_) {
        const double diff = a.numeric_at(row_a, j) - b.numeric_at(row_b, j);
        d += diff * diff;
    }
    for (std::size_t j : categorical_cols_) {
        if (a.code_at(row_a, j) != b.code_at(row_b, j)) d += gamma_;
    }
    return d;
}

std::vector<std::int64_t> match_selection(const TabularDataset& source,
                                          const std::vector<std::int64_t>& selected_ids,
                                          const TabularDataset& pool,
                                          const DistanceMetric& metric) {
    if (selected_ids.empty()) throw std::invalid_argument("match_selection: empty selection");
    if (pool.n_rows() < selected_ids.size()) {
        throw std::invalid_argument("match_selection: pool smaller than the selection");
    }
    std::vector<char> taken(pool.n_rows(), 0);
    std::vector<std::int64_t> matched;
    matched.reserve(selected_ids.size());
    for (std::int64_t id : selected_ids) {
        const auto pos = source.position_of(id);
        if (!pos) throw std::out_of_range("match_selection: unknown source row_id");
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_row = pool.n_rows();
        for (std::size_t p = 0; p < pool.n_rows(); ++p) {
            if (taken[p]) continue;
            const double d = metric.distance(source, *pos, pool, p);
            if (d < best || (d == best && best_row < pool.n_rows() &&
                             pool.row_ids()[p] < pool.row_ids()[best_row])) {
                best = d;
                best_row = p;
            }
        }
        taken[best_row] = 1;
        matched.push_back(pool.row_ids()[best_row]);
    }
    return matched;
}

}  // namespace atbag
