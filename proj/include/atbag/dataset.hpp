#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace atbag {

enum class ColumnKind { Numeric, Categorical };

struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::vector<std::string> categories;  // categorical only; first-appearance order
};

/// Column-oriented table of mixed numeric/categorical features with an
/// optional regression target. Categorical cells are stored as integer codes
/// into the schema's category list. Row ids are stable across subsetting and
/// splits. Immutable in practice once built; safe to share across threads.
class TabularDataset {
public:
    TabularDataset() = default;
    TabularDataset(std::vector<ColumnSchema> schema, std::size_t n_rows);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return schema_.size(); }
    const std::vector<ColumnSchema>& schema() const { return schema_; }
    const ColumnSchema& column(std::size_t j) const { return schema_[j]; }

    double numeric_at(std::size_t row, std::size_t col) const { return num_cols_[col][row]; }
    std::int32_t code_at(std::size_t row, std::size_t col) const { return cat_cols_[col][row]; }
    void set_numeric(std::size_t row, std::size_t col, double v) { num_cols_[col][row] = v; }
    void set_code(std::size_t row, std::size_t col, std::int32_t code) { cat_cols_[col][row] = code; }

    bool has_target() const { return target_.has_value(); }
    const std::vector<double>& target() const;
    void set_target(std::vector<double> t, std::string name = "target");
    const std::string& target_name() const { return target_name_; }
    TabularDataset without_target() const;

    const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
    void set_row_ids(std::vector<std::int64_t> ids);
    std::optional<std::size_t> position_of(std::int64_t row_id) const;

    /// New dataset holding the given row positions, in order. Row ids and
    /// target values (when present) follow the rows.
    TabularDataset subset_rows(const std::vector<std::size_t>& positions) const;
    TabularDataset subset_by_ids(const std::vector<std::int64_t>& ids) const;

    bool same_schema_as(const TabularDataset& other) const;

    /// Numeric columns only, in schema order (N x n_numeric).
    Eigen::MatrixXd numeric_matrix() const;
    /// Numeric columns followed by 0/1 one-hot expansions of every
    /// categorical column (N x (n_numeric + total categories)).
    Eigen::MatrixXd one_hot_matrix() const;

    /// Re-express categorical codes against a compatible superset schema.
    /// Throws if a column's kind differs or a category label is missing.
    TabularDataset recoded_to(const std::vector<ColumnSchema>& schema) const;

private:
    std::vector<ColumnSchema> schema_;
    std::size_t n_rows_ = 0;
    std::vector<std::vector<double>> num_cols_;        // per column; empty when categorical
    std::vector<std::vector<std::int32_t>> cat_cols_;  // per column; empty when numeric
    std::optional<std::vector<double>> target_;
    std::string target_name_ = "target";
    std::vector<std::int64_t> row_ids_;
    std::unordered_map<std::int64_t, std::size_t> id_index_;
};

/// Per-numeric-column centering/scaling parameters. Population-std
/// convention (divide by N); zero-variance columns map to 0 and invert back
/// to their mean.
struct Standardizer {
    std::vector<double> mean;    // per schema column; unused entries for categoricals
    std::vector<double> stddev;  // population std; 0 marks a constant column
};

TabularDataset load_csv(const std::string& path,
                        const std::vector<ColumnSchema>* schema_hint = nullptr,
                        const std::optional<std::string>& target_column = std::nullopt);
void save_csv(const TabularDataset& d, const std::string& path);

std::pair<TabularDataset, Standardizer> standardize_fit_transform(const TabularDataset& d);
TabularDataset standardize_apply(const TabularDataset& d, const Standardizer& s);
TabularDataset standardize_invert(const TabularDataset& d, const Standardizer& s);

/// Partition by a predicate over row position: (rows where true, rows where false).
std::pair<TabularDataset, TabularDataset> split_domain(
    const TabularDataset& d, const std::function<bool(std::size_t)>& predicate);

/// Union of two compatible schemas: same column names and kinds, category
/// lists merged (first dataset's order first).
std::vector<ColumnSchema> union_schema(const std::vector<ColumnSchema>& a,
                                       const std::vector<ColumnSchema>& b);

/// Synthetic source/transfer task pair for harness runs. Source rows are a
/// standard normal cloud, transfer rows the same cloud with the first
/// coordinate offset by `shift`. Targets follow two fixed smooth functions
/// blended by `target_correlation`; noise std 0.1. Deterministic in `seed`.
std::pair<TabularDataset, TabularDataset> make_synthetic_transfer(
    std::size_t n_source, std::size_t n_transfer, std::size_t dims,
    double target_correlation, double shift, std::uint64_t seed);

}  // namespace atbag
