#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "atbag/dataset.hpp"

namespace atbag {

struct TreeLimits {
    int max_depth = -1;         // -1 = unlimited
    int min_samples_leaf = 1;
    int max_features = 0;       // candidate columns per split; 0 = max(1, n_cols/3)
};

/// One node of a CART regression tree. Internal nodes split on a numeric
/// threshold (x <= threshold goes left) or a single category code (code ==
/// category goes left); leaves store the mean of the routed targets.
struct TreeNode {
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int32_t column = -1;
    double threshold = 0.0;
    std::int32_t category = -1;  // >= 0 marks a categorical split
    double prediction = 0.0;

    bool is_leaf() const { return left < 0; }
};

/// Greedy variance-reduction CART regression tree.
class RegressionTree {
public:
    /// Fit on the multiset of row positions (repeats allowed, as produced by
    /// a bootstrap). Numeric candidate thresholds are midpoints between
    /// consecutive distinct values; categorical candidates are one-vs-rest
    /// per category. Equal-gain ties resolve to the lowest column index,
    /// then the lowest threshold / category code.
    static RegressionTree fit(const TabularDataset& d, const std::vector<std::size_t>& rows,
                              const TreeLimits& limits, std::uint64_t rng_seed);

    double predict_row(const TabularDataset& d, std::size_t row) const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    int depth() const;
    std::size_t n_leaves() const;

    static RegressionTree from_nodes(std::vector<TreeNode> nodes);

private:
    std::vector<TreeNode> nodes_;
};

/// Bagged ensemble of regression trees with recorded bootstrap membership,
/// so any training point can be split into the trees that saw it (in-bag)
/// and the trees that did not (out-of-bag). Immutable once fitted.
class BaggedEnsemble {
public:
    /// Each tree draws an independent N-sample bootstrap. Per-tree seeds are
    /// derived from (seed, tree index), so the result is identical for any
    /// worker count.
    static BaggedEnsemble fit(const TabularDataset& d, std::size_t m_trees,
                              const TreeLimits& limits, std::uint64_t seed, int n_workers = 1);

    /// Assemble from explicit parts (tests and deserialization).
    /// inbag_positions[t] lists training row positions with multiplicity.
    static BaggedEnsemble from_parts(std::vector<RegressionTree> trees,
                                     const std::vector<std::vector<std::size_t>>& inbag_positions,
                                     const TabularDataset& training_data);

    std::size_t n_trees() const { return trees_.size(); }
    std::size_t training_n() const { return training_ids_.size(); }
    const std::vector<std::int64_t>& training_ids() const { return training_ids_; }
    const RegressionTree& tree(std::size_t t) const { return trees_[t]; }

    /// M x n_star matrix of per-tree predictions; the ensemble prediction is
    /// the column mean. Throws on schema mismatch.
    Eigen::MatrixXd predict_matrix(const TabularDataset& X_star, int n_workers = 1) const;
    Eigen::VectorXd predict_mean(const TabularDataset& X_star, int n_workers = 1) const;

    /// (in-bag tree indices, out-of-bag tree indices) for a training row.
    /// The two lists are disjoint and cover all trees. Throws on unknown id.
    std::pair<std::vector<int>, std::vector<int>> partition_membership(std::int64_t row_id) const;

    /// Bootstrap multiplicity of a training position in tree t.
    std::uint32_t inbag_count(std::size_t tree, std::size_t position) const {
        return inbag_counts_[tree][position];
    }
    std::size_t inbag_distinct(std::size_t tree) const;
    std::size_t inbag_total(std::size_t tree) const;

    /// Mean prediction over each row's out-of-bag trees, evaluated on the
    /// training data (must carry the training row ids). Rows in every
    /// bootstrap yield nullopt.
    std::vector<std::optional<double>> oob_predictions(const TabularDataset& d,
                                                       int n_workers = 1) const;

    /// Versioned JSON serialization; predictions round-trip bit-exactly.
    std::string to_json() const;
    static BaggedEnsemble from_json(const std::string& text);
    void save(const std::string& path) const;
    static BaggedEnsemble load(const std::string& path);

    const std::vector<ColumnSchema>& training_schema() const { return schema_; }

private:
    void build_id_index();

    std::vector<RegressionTree> trees_;
    std::vector<std::vector<std::uint32_t>> inbag_counts_;  // per tree, per training position
    std::vector<std::int64_t> training_ids_;
    std::unordered_map<std::int64_t, std::size_t> id_index_;
    std::vector<ColumnSchema> schema_;
};

/// Probability that at least one of N training points lacks either an
/// in-bag or an out-of-bag model in an M-tree bagged ensemble:
/// 1 - (1 - (1 - 1/e)^M)^N, evaluated stably.
double min_ensemble_size_check(std::size_t m_trees, std::size_t n_points);

}  // namespace atbag
