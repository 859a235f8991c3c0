#include "atbag/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "atbag/rng.hpp"

namespace atbag {

namespace {

bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    out = std::strtod(begin, &end);
    return end == begin + cell.size() && errno == 0;
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv_field(std::ostream& os, const std::string& field) {
    if (field.find_first_of(",\"\n\r") != std::string::npos) {
        os << '"';
        for (char c : field) {
            if (c == '"') os << '"';
            os << c;
        }
        os << '"';
    } else {
        os << field;
    }
}

// RFC-4180 record reader; handles quoted fields, escaped quotes and CRLF.
// Returns false at end of input.
bool read_csv_record(std::istream& is, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = is.get()) != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field.push_back('"');
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (is.peek() == '\n') is.get();
            fields.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(static_cast<char>(c));
        }
    }
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

TabularDataset::TabularDataset(std::vector<ColumnSchema> schema, std::size_t n_rows)
    : schema_(std::move(schema)), n_rows_(n_rows) {
    num_cols_.resize(schema_.size());
    cat_cols_.resize(schema_.size());
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].kind == ColumnKind::Numeric) {
            num_cols_[j].assign(n_rows, 0.0);
        } else {
            cat_cols_[j].assign(n_rows, 0);
        }
    }
    std::vector<std::int64_t> ids(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) ids[i] = static_cast<std::int64_t>(i);
    set_row_ids(std::move(ids));
}

const std::vector<double>& TabularDataset::target() const {
    if (!target_) throw std::logic_error("dataset has no target");
    return *target_;
}

void TabularDataset::set_target(std::vector<double> t, std::string name) {
    if (t.size() != n_rows_) throw std::invalid_argument("target length must equal row count");
    target_ = std::move(t);
    target_name_ = std::move(name);
}

TabularDataset TabularDataset::without_target() const {
    TabularDataset d = *this;
    d.target_.reset();
    return d;
}

void TabularDataset::set_row_ids(std::vector<std::int64_t> ids) {
    if (ids.size() != n_rows_) throw std::invalid_argument("row_ids length must equal row count");
    id_index_.clear();
    id_index_.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!id_index_.emplace(ids[i], i).second) {
            throw std::invalid_argument("row_ids must be unique");
        }
    }
    row_ids_ = std::move(ids);
}

std::optional<std::size_t> TabularDataset::position_of(std::int64_t row_id) const {
    auto it = id_index_.find(row_id);
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
}

TabularDataset TabularDataset::subset_rows(const std::vector<std::size_t>& positions) const {
    TabularDataset out(schema_, positions.size());
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].kind == ColumnKind::Numeric) {
            for (std::size_t i = 0; i < positions.size(); ++i) {
                out.num_cols_[j][i] = num_cols_[j][positions[i]];
            }
        } else {
            for (std::size_t i = 0; i < positions.size(); ++i) {
                out.cat_cols_[j][i] = cat_cols_[j][positions[i]];
            }
        }
    }
    std::vector<std::int64_t> ids(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) ids[i] = row_ids_[positions[i]];
    out.set_row_ids(std::move(ids));
    if (target_) {
        std::vector<double> t(positions.size());
        for (std::size_t i = 0; i < positions.size(); ++i) t[i] = (*target_)[positions[i]];
        out.set_target(std::move(t), target_name_);
    }
    return out;
}

TabularDataset TabularDataset::subset_by_ids(const std::vector<std::int64_t>& ids) const {
    std::vector<std::size_t> positions;
    positions.reserve(ids.size());
    for (std::int64_t id : ids) {
        auto pos = position_of(id);
        if (!pos) throw std::out_of_range("unknown row_id " + std::to_string(id));
        positions.push_back(*pos);
    }
    return subset_rows(positions);
}

bool TabularDataset::same_schema_as(const TabularDataset& other) const {
    if (schema_.size() != other.schema_.size()) return false;
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].name != other.schema_[j].name) return false;
        if (schema_[j].kind != other.schema_[j].kind) return false;
        if (schema_[j].categories != other.schema_[j].categories) return false;
    }
    return true;
}

Eigen::MatrixXd TabularDataset::numeric_matrix() const {
    std::size_t n_num = 0;
    for (const auto& c : schema_) {
        if (c.kind == ColumnKind::Numeric) ++n_num;
    }
    Eigen::MatrixXd out(n_rows_, n_num);
    std::size_t k = 0;
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].kind != ColumnKind::Numeric) continue;
        for (std::size_t i = 0; i < n_rows_; ++i) out(i, k) = num_cols_[j][i];
        ++k;
    }
    return out;
}

Eigen::MatrixXd TabularDataset::one_hot_matrix() const {
    std::size_t width = 0;
    for (const auto& c : schema_) {
        width += (c.kind == ColumnKind::Numeric) ? 1 : c.categories.size();
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_rows_, width);
    std::size_t k = 0;
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].kind == ColumnKind::Numeric) {
            for (std::size_t i = 0; i < n_rows_; ++i) out(i, k) = num_cols_[j][i];
            ++k;
        } else {
            for (std::size_t i = 0; i < n_rows_; ++i) {
                out(i, k + static_cast<std::size_t>(cat_cols_[j][i])) = 1.0;
            }
            k += schema_[j].categories.size();
        }
    }
    return out;
}

TabularDataset TabularDataset::recoded_to(const std::vector<ColumnSchema>& schema) const {
    if (schema.size() != schema_.size()) throw std::invalid_argument("schema width mismatch");
    TabularDataset out(schema, n_rows_);
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (schema[j].name != schema_[j].name || schema[j].kind != schema_[j].kind) {
            throw std::invalid_argument("incompatible schema for column " + schema_[j].name);
        }
        if (schema[j].kind == ColumnKind::Numeric) {
            out.num_cols_[j] = num_cols_[j];
            continue;
        }
        std::vector<std::int32_t> code_map(schema_[j].categories.size());
        for (std::size_t c = 0; c < schema_[j].categories.size(); ++c) {
            auto it = std::find(schema[j].categories.begin(), schema[j].categories.end(),
                                schema_[j].categories[c]);
            if (it == schema[j].categories.end()) {
                throw std::invalid_argument("category '" + schema_[j].categories[c] +
                                            "' missing from target schema of column " +
                                            schema_[j].name);
            }
            code_map[c] = static_cast<std::int32_t>(it - schema[j].categories.begin());
        }
        for (std::size_t i = 0; i < n_rows_; ++i) {
            out.cat_cols_[j][i] = code_map[static_cast<std::size_t>(cat_cols_[j][i])];
        }
    }
    out.set_row_ids(row_ids_);
    if (target_) out.set_target(*target_, target_name_);
    return out;
}

TabularDataset load_csv(const std::string& path, const std::vector<ColumnSchema>* schema_hint,
                        const std::optional<std::string>& target_column) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open file: " + path);

    std::vector<std::string> header;
    if (!read_csv_record(file, header) || header.empty()) {
        throw std::runtime_error(path + ": missing header row");
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> record;
    while (read_csv_record(file, record)) {
        if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
        if (record.size() != header.size()) {
            throw std::runtime_error(path + ": non-rectangular row " +
                                     std::to_string(rows.size()) + " (" +
                                     std::to_string(record.size()) + " fields, expected " +
                                     std::to_string(header.size()) + ")");
        }
        rows.push_back(record);
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty dataset");

    std::size_t target_idx = header.size();
    if (target_column) {
        auto it = std::find(header.begin(), header.end(), *target_column);
        if (it == header.end()) {
            throw std::runtime_error(path + ": target column '" + *target_column + "' absent");
        }
        target_idx = static_cast<std::size_t>(it - header.begin());
    }

    // Build the feature schema: honor hints by column name, infer the rest.
    std::vector<ColumnSchema> schema;
    std::vector<std::size_t> src_col;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == target_idx) continue;
        ColumnSchema cs;
        cs.name = header[j];
        bool hinted = false;
        if (schema_hint) {
            for (const auto& h : *schema_hint) {
                if (h.name == header[j]) {
                    cs = h;
                    hinted = true;
                    break;
                }
            }
        }
        if (!hinted) {
            cs.kind = ColumnKind::Numeric;
            for (const auto& r : rows) {
                double v;
                if (!parse_double(r[j], v) || !std::isfinite(v)) {
                    cs.kind = ColumnKind::Categorical;
                    break;
                }
            }
        }
        schema.push_back(std::move(cs));
        src_col.push_back(j);
    }

    TabularDataset d(schema, rows.size());
    auto mutable_schema = schema;
    for (std::size_t k = 0; k < src_col.size(); ++k) {
        const std::size_t j = src_col[k];
        if (mutable_schema[k].kind == ColumnKind::Numeric) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                double v;
                if (!parse_double(rows[i][j], v) || !std::isfinite(v)) {
                    throw std::runtime_error(path + ": column '" + mutable_schema[k].name +
                                             "' row " + std::to_string(i) +
                                             ": not a finite number: '" + rows[i][j] + "'");
                }
                d.set_numeric(i, k, v);
            }
        } else {
            auto& cats = mutable_schema[k].categories;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto it = std::find(cats.begin(), cats.end(), rows[i][j]);
                std::int32_t code;
                if (it == cats.end()) {
                    code = static_cast<std::int32_t>(cats.size());
                    cats.push_back(rows[i][j]);
                } else {
                    code = static_cast<std::int32_t>(it - cats.begin());
                }
                d.set_code(i, k, code);
            }
        }
    }
    // Rebuild with the final category lists.
    TabularDataset out(mutable_schema, rows.size());
    for (std::size_t k = 0; k < mutable_schema.size(); ++k) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (mutable_schema[k].kind == ColumnKind::Numeric) {
                out.set_numeric(i, k, d.numeric_at(i, k));
            } else {
                out.set_code(i, k, d.code_at(i, k));
            }
        }
    }

    if (target_column) {
        std::vector<double> t(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double v;
            if (!parse_double(rows[i][target_idx], v) || !std::isfinite(v)) {
                throw std::runtime_error(path + ": target column row " + std::to_string(i) +
                                         ": not a finite number: '" + rows[i][target_idx] + "'");
            }
            t[i] = v;
        }
        out.set_target(std::move(t), *target_column);
    }
    return out;
}

void save_csv(const TabularDataset& d, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write file: " + path);
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        if (j) file << ',';
        write_csv_field(file, d.column(j).name);
    }
    if (d.has_target()) {
        if (d.n_cols()) file << ',';
        write_csv_field(file, d.target_name());
    }
    file << '\n';
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        for (std::size_t j = 0; j < d.n_cols(); ++j) {
            if (j) file << ',';
            if (d.column(j).kind == ColumnKind::Numeric) {
                file << format_double(d.numeric_at(i, j));
            } else {
                write_csv_field(file, d.column(j).categories[static_cast<std::size_t>(d.code_at(i, j))]);
            }
        }
        if (d.has_target()) {
            if (d.n_cols()) file << ',';
            file << format_double(d.target()[i]);
        }
        file << '\n';
    }
}

std::pair<TabularDataset, Standardizer> standardize_fit_transform(const TabularDataset& d) {
    if (d.n_rows() == 0) throw std::invalid_argument("cannot standardize an empty dataset");
    Standardizer s;
    s.mean.assign(d.n_cols(), 0.0);
    s.stddev.assign(d.n_cols(), 0.0);
    const double n = static_cast<double>(d.n_rows());
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        if (d.column(j).kind != ColumnKind::Numeric) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < d.n_rows(); ++i) sum += d.numeric_at(i, j);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            const double c = d.numeric_at(i, j) - mean;
            ss += c * c;
        }
        s.mean[j] = mean;
        s.stddev[j] = std::sqrt(ss / n);
    }
    return {standardize_apply(d, s), s};
}

TabularDataset standardize_apply(const TabularDataset& d, const Standardizer& s) {
    TabularDataset out = d;
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        if (d.column(j).kind != ColumnKind::Numeric) continue;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            const double v = d.numeric_at(i, j);
            out.set_numeric(i, j, s.stddev[j] > 0.0 ? (v - s.mean[j]) / s.stddev[j] : 0.0);
        }
    }
    return out;
}

TabularDataset standardize_invert(const TabularDataset& d, const Standardizer& s) {
    TabularDataset out = d;
    for (std::size_t j = 0; j < d.n_cols(); ++j) {
        if (d.column(j).kind != ColumnKind::Numeric) continue;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            out.set_numeric(i, j, d.numeric_at(i, j) * s.stddev[j] + s.mean[j]);
        }
    }
    return out;
}

std::pair<TabularDataset, TabularDataset> split_domain(
    const TabularDataset& d, const std::function<bool(std::size_t)>& predicate) {
    std::vector<std::size_t> yes, no;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        (predicate(i) ? yes : no).push_back(i);
    }
    return {d.subset_rows(yes), d.subset_rows(no)};
}

std::vector<ColumnSchema> union_schema(const std::vector<ColumnSchema>& a,
                                       const std::vector<ColumnSchema>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("schema width mismatch");
    std::vector<ColumnSchema> out = a;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j].name != b[j].name || a[j].kind != b[j].kind) {
            throw std::invalid_argument("incompatible schemas at column " + a[j].name);
        }
        for (const auto& cat : b[j].categories) {
            if (std::find(out[j].categories.begin(), out[j].categories.end(), cat) ==
                out[j].categories.end()) {
                out[j].categories.push_back(cat);
            }
        }
    }
    return out;
}

namespace {

// Fixed smooth response surfaces for the synthetic task. Only the first two
// coordinates matter; extra dimensions act as distractors.
double synth_g(const std::vector<double>& x) {
    const double x2 = x.size() > 1 ? x[1] : 0.0;
    return std::sin(2.0 * x[0]) + x2 * x2;
}

double synth_h(const std::vector<double>& x) {
    const double x2 = x.size() > 1 ? x[1] : 0.0;
    return std::cos(2.0 * x[0]) - x2;
}

TabularDataset make_cloud(std::size_t n, std::size_t dims, double shift, double rho,
                          std::uint64_t feat_seed, std::uint64_t noise_seed,
                          std::int64_t id_offset) {
    std::vector<ColumnSchema> schema(dims);
    for (std::size_t j = 0; j < dims; ++j) {
        schema[j].name = "x" + std::to_string(j + 1);
        schema[j].kind = ColumnKind::Numeric;
    }
    TabularDataset d(schema, n);
    Rng feat_rng(feat_seed);
    Rng noise_rng(noise_seed);
    std::vector<double> target(n);
    std::vector<double> x(dims);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dims; ++j) {
            x[j] = feat_rng.normal() + (j == 0 ? shift : 0.0);
            d.set_numeric(i, j, x[j]);
        }
        const double signal = rho * synth_g(x) + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * synth_h(x);
        target[i] = signal + 0.1 * noise_rng.normal();
    }
    d.set_target(std::move(target), "y");
    std::vector<std::int64_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = id_offset + static_cast<std::int64_t>(i);
    d.set_row_ids(std::move(ids));
    return d;
}

}  // namespace

std::pair<TabularDataset, TabularDataset> make_synthetic_transfer(
    std::size_t n_source, std::size_t n_transfer, std::size_t dims,
    double target_correlation, double shift, std::uint64_t seed) {
    if (dims < 1) throw std::invalid_argument("dims must be >= 1");
    if (target_correlation < 0.0 || target_correlation > 1.0) {
        throw std::invalid_argument("target_correlation must be in [0, 1]");
    }
    if (shift < 0.0) throw std::invalid_argument("shift must be >= 0");
    // Both clouds consume the same feature stream, so row i of the transfer
    // pool is row i of the source offset by `shift`: the paired-target
    // setting when shift = 0, a feature-shifted copy otherwise. Label noise
    // streams are independent.
    TabularDataset source = make_cloud(n_source, dims, 0.0, 1.0, derive_seed(seed, 1),
                                       derive_seed(seed, 2), 0);
    TabularDataset transfer = make_cloud(n_transfer, dims, shift, target_correlation,
                                         derive_seed(seed, 1), derive_seed(seed, 4),
                                         static_cast<std::int64_t>(n_source));
    return {std::move(source), std::move(transfer)};
}

}  // namespace atbag
