#include "atbag/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "atbag/parallel.hpp"
#include "atbag/rng.hpp"

namespace atbag {

namespace {

struct NodeStats {
    double sum = 0.0;
    double sumsq = 0.0;
    std::size_t n = 0;

    double mean() const { return sum / static_cast<double>(n); }
    double sse() const { return sumsq - sum * mean(); }
};

struct SplitChoice {
    bool found = false;
    std::size_t column = 0;
    double threshold = 0.0;
    std::int32_t category = -1;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const TabularDataset& d, const TreeLimits& limits, std::uint64_t rng_seed)
        : data_(d), limits_(limits), rng_(rng_seed) {
        const std::size_t d_cols = d.n_cols();
        max_features_ = limits.max_features > 0
                            ? std::min<std::size_t>(limits.max_features, d_cols)
                            : std::max<std::size_t>(1, d_cols / 3);
        scratch_cols_.resize(d_cols);
        std::iota(scratch_cols_.begin(), scratch_cols_.end(), std::size_t{0});
    }

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        nodes_.clear();
        build_node(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    NodeStats stats_of(const std::vector<std::size_t>& rows) const {
        NodeStats s;
        const auto& y = data_.target();
        for (std::size_t r : rows) {
            s.sum += y[r];
            s.sumsq += y[r] * y[r];
        }
        s.n = rows.size();
        return s;
    }

    // Candidate columns for this split: a fresh uniform draw without
    // replacement, iterated in ascending index order for tie stability.
    std::vector<std::size_t> sample_columns() {
        const std::size_t d_cols = data_.n_cols();
        if (max_features_ >= d_cols) return scratch_cols_;
        std::vector<std::size_t> pool = scratch_cols_;
        std::vector<std::size_t> picked(max_features_);
        for (std::size_t i = 0; i < max_features_; ++i) {
            const std::size_t j = i + rng_.uniform_int(d_cols - i);
            std::swap(pool[i], pool[j]);
            picked[i] = pool[i];
        }
        std::sort(picked.begin(), picked.end());
        return picked;
    }

    SplitChoice best_numeric_split(std::size_t col, const std::vector<std::size_t>& rows,
                                   const NodeStats& parent) const {
        const auto& y = data_.target();
        std::vector<std::pair<double, double>> vt(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            vt[i] = {data_.numeric_at(rows[i], col), y[rows[i]]};
        }
        std::sort(vt.begin(), vt.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        SplitChoice best;
        const std::size_t min_leaf = static_cast<std::size_t>(limits_.min_samples_leaf);
        double left_sum = 0.0;
        for (std::size_t i = 1; i < vt.size(); ++i) {
            left_sum += vt[i - 1].second;
            if (vt[i].first <= vt[i - 1].first) continue;  // not a boundary
            if (i < min_leaf || vt.size() - i < min_leaf) continue;
            const double right_sum = parent.sum - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(i) +
                                right_sum * right_sum / static_cast<double>(vt.size() - i) -
                                parent.sum * parent.mean();
            if (gain > best.gain) {
                double mid = vt[i - 1].first + 0.5 * (vt[i].first - vt[i - 1].first);
                if (!(mid < vt[i].first)) mid = vt[i - 1].first;  // rounding hit the upper value
                best.found = true;
                best.column = col;
                best.threshold = mid;
                best.category = -1;
                best.gain = gain;
            }
        }
        return best;
    }

    SplitChoice best_categorical_split(std::size_t col, const std::vector<std::size_t>& rows,
                                       const NodeStats& parent) const {
        const auto& y = data_.target();
        const std::size_t n_cats = data_.column(col).categories.size();
        std::vector<double> cat_sum(n_cats, 0.0);
        std::vector<std::size_t> cat_n(n_cats, 0);
        for (std::size_t r : rows) {
            const auto c = static_cast<std::size_t>(data_.code_at(r, col));
            cat_sum[c] += y[r];
            ++cat_n[c];
        }
        SplitChoice best;
        const std::size_t min_leaf = static_cast<std::size_t>(limits_.min_samples_leaf);
        for (std::size_t c = 0; c < n_cats; ++c) {
            if (cat_n[c] < min_leaf || rows.size() - cat_n[c] < min_leaf) continue;
            if (cat_n[c] == 0 || cat_n[c] == rows.size()) continue;
            const double rest_sum = parent.sum - cat_sum[c];
            const double gain = cat_sum[c] * cat_sum[c] / static_cast<double>(cat_n[c]) +
                                rest_sum * rest_sum / static_cast<double>(rows.size() - cat_n[c]) -
                                parent.sum * parent.mean();
            if (gain > best.gain) {
                best.found = true;
                best.column = col;
                best.category = static_cast<std::int32_t>(c);
                best.gain = gain;
            }
        }
        return best;
    }

    std::int32_t build_node(std::vector<std::size_t> rows, int depth) {
        const NodeStats stats = stats_of(rows);
        const std::int32_t index = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[index].prediction = stats.mean();

        const double variance_floor = 1e-12 * std::max(1.0, stats.sumsq);
        const bool depth_ok = limits_.max_depth < 0 || depth < limits_.max_depth;
        if (!depth_ok || rows.size() < 2 * static_cast<std::size_t>(limits_.min_samples_leaf) ||
            rows.size() < 2 || stats.sse() <= variance_floor) {
            return index;
        }

        SplitChoice best;
        for (std::size_t col : sample_columns()) {
            SplitChoice cand = data_.column(col).kind == ColumnKind::Numeric
                                   ? best_numeric_split(col, rows, stats)
                                   : best_categorical_split(col, rows, stats);
            if (cand.found && cand.gain > best.gain) best = cand;
        }
        if (!best.found || best.gain <= variance_floor) return index;

        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(rows.size());
        right_rows.reserve(rows.size());
        for (std::size_t r : rows) {
            bool go_left;
            if (best.category >= 0) {
                go_left = data_.code_at(r, best.column) == best.category;
            } else {
                go_left = data_.numeric_at(r, best.column) <= best.threshold;
            }
            (go_left ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        nodes_[index].column = static_cast<std::int32_t>(best.column);
        nodes_[index].threshold = best.threshold;
        nodes_[index].category = best.category;
        const std::int32_t left = build_node(std::move(left_rows), depth + 1);
        const std::int32_t right = build_node(std::move(right_rows), depth + 1);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    const TabularDataset& data_;
    TreeLimits limits_;
    Rng rng_;
    std::size_t max_features_;
    std::vector<std::size_t> scratch_cols_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree RegressionTree::fit(const TabularDataset& d, const std::vector<std::size_t>& rows,
                                   const TreeLimits& limits, std::uint64_t rng_seed) {
    if (!d.has_target()) throw std::invalid_argument("fit_tree: dataset lacks a target");
    if (rows.empty()) throw std::invalid_argument("fit_tree: empty row subset");
    if (limits.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    TreeBuilder builder(d, limits, rng_seed);
    RegressionTree t;
    t.nodes_ = builder.build(rows);
    return t;
}

RegressionTree RegressionTree::from_nodes(std::vector<TreeNode> nodes) {
    RegressionTree t;
    t.nodes_ = std::move(nodes);
    return t;
}

double RegressionTree::predict_row(const TabularDataset& d, std::size_t row) const {
    std::int32_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const TreeNode& n = nodes_[i];
        bool go_left;
        if (n.category >= 0) {
            go_left = d.code_at(row, n.column) == n.category;
        } else {
            go_left = d.numeric_at(row, n.column) <= n.threshold;
        }
        i = go_left ? n.left : n.right;
    }
    return nodes_[i].prediction;
}

int RegressionTree::depth() const {
    // Iterative depth over the node array.
    std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
    int depth = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        depth = std::max(depth, d);
        if (!nodes_[i].is_leaf()) {
            stack.push_back({nodes_[i].left, d + 1});
            stack.push_back({nodes_[i].right, d + 1});
        }
    }
    return depth;
}

std::size_t RegressionTree::n_leaves() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) {
        if (node.is_leaf()) ++n;
    }
    return n;
}

BaggedEnsemble BaggedEnsemble::fit(const TabularDataset& d, std::size_t m_trees,
                                   const TreeLimits& limits, std::uint64_t seed, int n_workers) {
    if (m_trees < 1) throw std::invalid_argument("fit_ensemble: m_trees must be >= 1");
    if (d.n_rows() < 2) throw std::invalid_argument("fit_ensemble: need at least 2 rows");
    if (!d.has_target()) throw std::invalid_argument("fit_ensemble: dataset lacks a target");

    const std::size_t n = d.n_rows();
    BaggedEnsemble e;
    e.trees_.resize(m_trees);
    e.inbag_counts_.assign(m_trees, {});
    e.training_ids_ = d.row_ids();
    e.schema_ = d.schema();

    parallel_for(m_trees, n_workers, [&](std::size_t t) {
        Rng boot_rng(derive_seed(seed, 2 * t));
        std::vector<std::size_t> rows(n);
        std::vector<std::uint32_t> counts(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = static_cast<std::size_t>(boot_rng.uniform_int(n));
            rows[i] = r;
            ++counts[r];
        }
        e.trees_[t] = RegressionTree::fit(d, rows, limits, derive_seed(seed, 2 * t + 1));
        e.inbag_counts_[t] = std::move(counts);
    });
    e.build_id_index();
    return e;
}

void BaggedEnsemble::build_id_index() {
    id_index_.clear();
    id_index_.reserve(training_ids_.size());
    for (std::size_t i = 0; i < training_ids_.size(); ++i) id_index_.emplace(training_ids_[i], i);
}

BaggedEnsemble BaggedEnsemble::from_parts(std::vector<RegressionTree> trees,
                                          const std::vector<std::vector<std::size_t>>& inbag_positions,
                                          const TabularDataset& training_data) {
    if (trees.size() != inbag_positions.size()) {
        throw std::invalid_argument("from_parts: trees and inbag sets must align");
    }
    BaggedEnsemble e;
    e.trees_ = std::move(trees);
    e.training_ids_ = training_data.row_ids();
    e.schema_ = training_data.schema();
    e.inbag_counts_.assign(e.trees_.size(), std::vector<std::uint32_t>(training_data.n_rows(), 0));
    for (std::size_t t = 0; t < inbag_positions.size(); ++t) {
        for (std::size_t p : inbag_positions[t]) ++e.inbag_counts_[t][p];
    }
    e.build_id_index();
    return e;
}

Eigen::MatrixXd BaggedEnsemble::predict_matrix(const TabularDataset& X_star, int n_workers) const {
    if (X_star.schema().size() != schema_.size()) {
        throw std::invalid_argument("predict: schema mismatch");
    }
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (X_star.column(j).name != schema_[j].name || X_star.column(j).kind != schema_[j].kind ||
            X_star.column(j).categories != schema_[j].categories) {
            throw std::invalid_argument("predict: schema mismatch at column " + schema_[j].name);
        }
    }
    Eigen::MatrixXd out(trees_.size(), X_star.n_rows());
    parallel_for(trees_.size(), n_workers, [&](std::size_t t) {
        for (std::size_t i = 0; i < X_star.n_rows(); ++i) {
            out(t, i) = trees_[t].predict_row(X_star, i);
        }
    });
    return out;
}

Eigen::VectorXd BaggedEnsemble::predict_mean(const TabularDataset& X_star, int n_workers) const {
    return predict_matrix(X_star, n_workers).colwise().mean();
}

std::pair<std::vector<int>, std::vector<int>> BaggedEnsemble::partition_membership(
    std::int64_t row_id) const {
    const auto it = id_index_.find(row_id);
    if (it == id_index_.end()) {
        throw std::out_of_range("partition_membership: unknown row_id " + std::to_string(row_id));
    }
    const std::size_t pos = it->second;
    std::vector<int> ib, oob;
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        (inbag_counts_[t][pos] > 0 ? ib : oob).push_back(static_cast<int>(t));
    }
    return {std::move(ib), std::move(oob)};
}

std::size_t BaggedEnsemble::inbag_distinct(std::size_t tree) const {
    std::size_t n = 0;
    for (auto c : inbag_counts_[tree]) {
        if (c > 0) ++n;
    }
    return n;
}

std::size_t BaggedEnsemble::inbag_total(std::size_t tree) const {
    std::size_t n = 0;
    for (auto c : inbag_counts_[tree]) n += c;
    return n;
}

std::vector<std::optional<double>> BaggedEnsemble::oob_predictions(const TabularDataset& d,
                                                                   int n_workers) const {
    if (d.row_ids() != training_ids_) {
        throw std::invalid_argument("oob_predictions: dataset does not match training rows");
    }
    const Eigen::MatrixXd preds = predict_matrix(d, n_workers);
    std::vector<std::optional<double>> out(d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        double sum = 0.0;
        std::size_t n_oob = 0;
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            if (inbag_counts_[t][i] == 0) {
                sum += preds(t, i);
                ++n_oob;
            }
        }
        if (n_oob > 0) out[i] = sum / static_cast<double>(n_oob);
    }
    return out;
}

std::string BaggedEnsemble::to_json() const {
    nlohmann::json j;
    j["format"] = "atbag.ensemble";
    j["version"] = 1;
    nlohmann::json schema = nlohmann::json::array();
    for (const auto& c : schema_) {
        schema.push_back({{"name", c.name},
                          {"kind", c.kind == ColumnKind::Numeric ? "numeric" : "categorical"},
                          {"categories", c.categories}});
    }
    j["schema"] = std::move(schema);
    j["training_ids"] = training_ids_;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes()) {
            nodes.push_back({n.left, n.right, n.column, n.threshold, n.category, n.prediction});
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    j["inbag_counts"] = inbag_counts_;
    return j.dump();
}

BaggedEnsemble BaggedEnsemble::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("format") != "atbag.ensemble" || j.at("version") != 1) {
        throw std::runtime_error("unsupported ensemble file format");
    }
    BaggedEnsemble e;
    for (const auto& c : j.at("schema")) {
        ColumnSchema cs;
        cs.name = c.at("name").get<std::string>();
        cs.kind = c.at("kind") == "numeric" ? ColumnKind::Numeric : ColumnKind::Categorical;
        cs.categories = c.at("categories").get<std::vector<std::string>>();
        e.schema_.push_back(std::move(cs));
    }
    e.training_ids_ = j.at("training_ids").get<std::vector<std::int64_t>>();
    for (const auto& t : j.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& n : t) {
            TreeNode node;
            node.left = n.at(0).get<std::int32_t>();
            node.right = n.at(1).get<std::int32_t>();
            node.column = n.at(2).get<std::int32_t>();
            node.threshold = n.at(3).get<double>();
            node.category = n.at(4).get<std::int32_t>();
            node.prediction = n.at(5).get<double>();
            nodes.push_back(node);
        }
        e.trees_.push_back(RegressionTree::from_nodes(std::move(nodes)));
    }
    e.inbag_counts_ = j.at("inbag_counts").get<std::vector<std::vector<std::uint32_t>>>();
    e.build_id_index();
    return e;
}

void BaggedEnsemble::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << to_json() << '\n';
}

BaggedEnsemble BaggedEnsemble::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json(text);
}

double min_ensemble_size_check(std::size_t m_trees, std::size_t n_points) {
    if (n_points == 0) return 0.0;
    // P(single point has no oob model) = (1 - 1/e)^M; the no-in-bag term
    // (1/e)^M is dominated and covered by the same expression as M -> 0.
    const double log_p_single = static_cast<double>(m_trees) * std::log1p(-std::exp(-1.0));
    const double p_single = std::exp(log_p_single);  // (1 - 1/e)^M
    // 1 - (1 - p)^N, stable for tiny p and huge N.
    return -std::expm1(static_cast<double>(n_points) * std::log1p(-p_single));
}

}  // namespace atbag
