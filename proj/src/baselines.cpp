#include "atbag/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "atbag/rng.hpp"

namespace atbag {

namespace {

std::vector<std::size_t> uniform_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.uniform_int(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace

SelectionResult select_random(const TabularDataset& d, std::size_t k, std::uint64_t seed) {
    if (k > d.n_rows()) throw std::invalid_argument("select_random: k exceeds dataset size");
    Rng rng(seed);
    SelectionResult out;
    out.method = "random";
    out.config_summary = "uniform without replacement";
    for (std::size_t p : uniform_without_replacement(d.n_rows(), k, rng)) {
        out.row_ids.push_back(d.row_ids()[p]);
    }
    return out;
}

Eigen::MatrixXd pca_project(const Eigen::MatrixXd& x, int n_components) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("pca_project: eigensolver failed");
    const Eigen::Index d = cov.rows();
    const Eigen::Index m = std::min<Eigen::Index>(n_components, d);
    Eigen::MatrixXd axes(d, m);
    for (Eigen::Index j = 0; j < m; ++j) axes.col(j) = solver.eigenvectors().col(d - 1 - j);
    return centered * axes;
}

std::vector<std::int64_t> assign_voxels(const Eigen::MatrixXd& projected, int bins_per_axis) {
    if (bins_per_axis < 1) throw std::invalid_argument("bins_per_axis must be >= 1");
    const Eigen::RowVectorXd lo = projected.colwise().minCoeff();
    const Eigen::RowVectorXd hi = projected.colwise().maxCoeff();
    std::vector<std::int64_t> keys(projected.rows());
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        std::int64_t key = 0;
        for (Eigen::Index j = 0; j < projected.cols(); ++j) {
            const double span = hi(j) - lo(j);
            int bin = 0;
            if (span > 0.0) {
                bin = static_cast<int>((projected(i, j) - lo(j)) / span * bins_per_axis);
                bin = std::min(bin, bins_per_axis - 1);  // the max lands in the last bin
            }
            key = key * bins_per_axis + bin;
        }
        keys[i] = key;
    }
    return keys;
}

SelectionResult select_pca_grid(const TabularDataset& d, std::size_t k, const PcaGridParams& p,
                                std::uint64_t seed) {
    if (k > d.n_rows()) throw std::invalid_argument("select_pca_grid: k exceeds dataset size");
    SelectionResult out;
    out.method = "pca";
    if (k == 0) return out;

    auto [standardized, stats] = standardize_fit_transform(d);
    const Eigen::MatrixXd enc = standardized.one_hot_matrix();
    const int n_comp = p.n_components > 0
                           ? p.n_components
                           : static_cast<int>(std::min<Eigen::Index>(5, enc.cols()));
    const Eigen::MatrixXd proj = pca_project(enc, n_comp);
    const std::vector<std::int64_t> keys = assign_voxels(proj, p.bins_per_axis);
    out.config_summary = "components=" + std::to_string(n_comp) +
                         " bins=" + std::to_string(p.bins_per_axis);

    // Bucket rows by voxel; deterministic bucket order, then shuffled once.
    std::map<std::int64_t, std::vector<std::size_t>> voxels;
    for (std::size_t i = 0; i < keys.size(); ++i) voxels[keys[i]].push_back(i);
    std::vector<std::vector<std::size_t>> buckets;
    buckets.reserve(voxels.size());
    for (auto& [key, rows] : voxels) buckets.push_back(std::move(rows));

    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < buckets.size(); ++i) {
        const std::size_t j = i + rng.uniform_int(buckets.size() - i);
        std::swap(buckets[i], buckets[j]);
    }

    while (out.row_ids.size() < k) {
        for (auto& bucket : buckets) {
            if (out.row_ids.size() == k) break;
            if (bucket.empty()) continue;
            const std::size_t pick = rng.uniform_int(bucket.size());
            out.row_ids.push_back(d.row_ids()[bucket[pick]]);
            bucket[pick] = bucket.back();
            bucket.pop_back();
        }
    }
    return out;
}

SelectionResult select_loss_coreset(const TabularDataset& d, const BaggedEnsemble& e,
                                    std::size_t k, std::uint64_t seed) {
    if (k > d.n_rows()) throw std::invalid_argument("select_loss_coreset: k exceeds dataset size");
    SelectionResult out;
    out.method = "loss_coreset";
    out.config_summary = "weight=squared_oob_residual";
    if (k == 0) return out;

    const auto oob = e.oob_predictions(d);
    const auto& y = d.target();
    std::vector<double> w(d.n_rows(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (oob[i]) {
            const double r = y[i] - *oob[i];
            w[i] = r * r;
            total += w[i];
        }
    }

    Rng rng(seed);
    if (total <= 0.0) {
        out.notes.push_back("all importance weights zero; fell back to uniform sampling");
        for (std::size_t p : uniform_without_replacement(d.n_rows(), k, rng)) {
            out.row_ids.push_back(d.row_ids()[p]);
        }
        return out;
    }

    // Sequential weighted draws without replacement.
    std::vector<std::size_t> alive(d.n_rows());
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    for (std::size_t draw = 0; draw < k; ++draw) {
        double r = rng.uniform() * total;
        std::size_t pick = alive.size() - 1;
        for (std::size_t i = 0; i < alive.size(); ++i) {
            r -= w[alive[i]];
            if (r <= 0.0) {
                pick = i;
                break;
            }
        }
        // When every remaining weight is zero, fall back to a uniform pick.
        if (total <= 0.0) pick = static_cast<std::size_t>(rng.uniform_int(alive.size()));
        const std::size_t row = alive[pick];
        out.row_ids.push_back(d.row_ids()[row]);
        total -= w[row];
        if (total < 0.0) total = 0.0;
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

}  // namespace atbag
