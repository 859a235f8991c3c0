#include "atbag/dpp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "atbag/roots.hpp"

namespace atbag {

std::size_t DualLEnsemble::n_positive_eigvals() const {
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < eigvals.size(); ++i) {
        if (eigvals(i) > 0.0) ++n;
    }
    return n;
}

DualLEnsemble build_l_ensemble(const Eigen::MatrixXd& phi, const std::vector<double>& qualities,
                               double beta, std::vector<std::int64_t> row_ids) {
    const std::size_t n = static_cast<std::size_t>(phi.rows());
    if (qualities.size() != n) {
        throw std::invalid_argument("build_l_ensemble: qualities/embedding size mismatch");
    }
    double pos_sum = 0.0;
    std::size_t pos_count = 0;
    for (double q : qualities) {
        if (q < 0.0) throw std::invalid_argument("build_l_ensemble: qualities must be >= 0");
        if (q > 0.0) {
            pos_sum += q;
            ++pos_count;
        }
    }
    if (pos_count == 0) throw std::invalid_argument("build_l_ensemble: all qualities are zero");
    const double mean_pos = pos_sum / static_cast<double>(pos_count);

    DualLEnsemble le;
    le.qualities.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        le.qualities(i) = beta == 0.0 ? 1.0 : std::pow(qualities[i] / mean_pos, beta);
    }
    le.B = phi.transpose() * le.qualities.asDiagonal();

    const Eigen::MatrixXd c = le.B * le.B.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("build_l_ensemble: eigendecomposition failed");
    }
    // Eigen returns ascending order; store descending and clamp the noise floor.
    const Eigen::Index r = solver.eigenvalues().size();
    le.eigvals.resize(r);
    le.eigvecs.resize(c.rows(), r);
    const double lambda_max = solver.eigenvalues().maxCoeff();
    const double floor = 1e-10 * std::max(lambda_max, 0.0);
    for (Eigen::Index i = 0; i < r; ++i) {
        const double lambda = solver.eigenvalues()(r - 1 - i);
        le.eigvals(i) = lambda > floor ? lambda : 0.0;
        le.eigvecs.col(i) = solver.eigenvectors().col(r - 1 - i);
    }

    if (row_ids.empty()) {
        row_ids.resize(n);
        std::iota(row_ids.begin(), row_ids.end(), std::int64_t{0});
    } else if (row_ids.size() != n) {
        throw std::invalid_argument("build_l_ensemble: row_ids size mismatch");
    }
    le.row_ids = std::move(row_ids);
    return le;
}

namespace {

// a*l / (1 + a*l), stable for arbitrarily large a*l.
double inclusion_prob(double a, double lambda) {
    if (lambda <= 0.0) return 0.0;
    const double x = a * lambda;
    if (x > 1.0) return 1.0 / (1.0 + 1.0 / x);
    return x / (1.0 + x);
}

}  // namespace

double dpp_expected_size(const Eigen::VectorXd& eigvals, double a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eigvals.size(); ++i) s += inclusion_prob(a, eigvals(i));
    return s;
}

double solve_scale(const Eigen::VectorXd& eigvals, std::size_t k_target) {
    if (k_target < 1) throw std::invalid_argument("solve_scale: k_target must be >= 1");
    std::size_t positives = 0;
    double lambda_sum = 0.0;
    for (Eigen::Index i = 0; i < eigvals.size(); ++i) {
        if (eigvals(i) > 0.0) {
            ++positives;
            lambda_sum += eigvals(i);
        }
    }
    if (positives <= k_target) {
        throw std::invalid_argument(
            "solve_scale: insufficient rank (need more than k_target positive eigenvalues, have " +
            std::to_string(positives) + " for k=" + std::to_string(k_target) + ")");
    }

    const auto f = [&](double a) {
        return dpp_expected_size(eigvals, a) - static_cast<double>(k_target);
    };
    // Bracket around the small-a linearization a ~ k / sum(lambda).
    double lo = static_cast<double>(k_target) / lambda_sum;
    double hi = lo;
    for (int i = 0; i < 400 && f(lo) > 0.0; ++i) lo /= 16.0;
    for (int i = 0; i < 400 && f(hi) < 0.0; ++i) hi *= 16.0;
    const double a = brent_root(f, lo, hi, 1e-30);
    if (std::abs(f(a)) >= 1e-8) {
        throw std::runtime_error("solve_scale: root finding failed to converge");
    }
    return a;
}

namespace {

// Sample the projection process spanned by the selected dual eigenvectors.
// W starts as the orthonormal primal basis (columns B' v_i / sqrt(l_i));
// each step picks an item by leverage, conditions the basis on it and
// re-orthonormalizes. Returns one item per basis vector.
std::vector<std::size_t> sample_projection(const DualLEnsemble& le,
                                           const std::vector<Eigen::Index>& selected_eigvecs,
                                           Rng& rng) {
    const Eigen::Index n = le.B.cols();
    Eigen::MatrixXd w(n, static_cast<Eigen::Index>(selected_eigvecs.size()));
    for (std::size_t j = 0; j < selected_eigvecs.size(); ++j) {
        const Eigen::Index i = selected_eigvecs[j];
        w.col(static_cast<Eigen::Index>(j)) =
            le.B.transpose() * le.eigvecs.col(i) / std::sqrt(le.eigvals(i));
    }

    std::vector<std::size_t> picked;
    picked.reserve(selected_eigvecs.size());
    while (w.cols() > 0) {
        const Eigen::VectorXd mass = w.rowwise().squaredNorm();
        const double total = mass.sum();
        double r = rng.uniform() * total;
        Eigen::Index s = 0;
        for (; s + 1 < n; ++s) {
            r -= mass(s);
            if (r <= 0.0) break;
        }
        picked.push_back(static_cast<std::size_t>(s));
        if (w.cols() == 1) break;

        Eigen::Index pivot = 0;
        w.row(s).cwiseAbs().maxCoeff(&pivot);
        const double ws_pivot = w(s, pivot);
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            if (c == pivot) continue;
            w.col(c) -= (w(s, c) / ws_pivot) * w.col(pivot);
        }
        // Drop the pivot column, keeping order.
        Eigen::MatrixXd next(n, w.cols() - 1);
        Eigen::Index out = 0;
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            if (c != pivot) next.col(out++) = w.col(c);
        }
        next.row(s).setZero();  // conditioning makes this row exactly zero
        // Restore orthonormality of the conditioned basis.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(next);
        w = qr.householderQ() * Eigen::MatrixXd::Identity(n, next.cols());
        // The conditioned subspace is orthogonal to every picked coordinate;
        // scrub the roundoff the QR reintroduces there.
        for (std::size_t p : picked) w.row(static_cast<Eigen::Index>(p)).setZero();
    }
    return picked;
}

}  // namespace

SubsetSample sample_k(const DualLEnsemble& le, std::size_t k, Rng& rng, int max_attempts,
                      bool allow_fallback) {
    if (k < 1) throw std::invalid_argument("sample_k: k must be >= 1");
    const double a = solve_scale(le.eigvals, k);

    std::vector<Eigen::Index> positive;
    for (Eigen::Index i = 0; i < le.eigvals.size(); ++i) {
        if (le.eigvals(i) > 0.0) positive.push_back(i);
    }
    std::vector<double> probs(positive.size());
    for (std::size_t i = 0; i < positive.size(); ++i) {
        probs[i] = inclusion_prob(a, le.eigvals(positive[i]));
    }

    std::vector<Eigen::Index> chosen, best;
    std::size_t best_gap = static_cast<std::size_t>(-1);
    int attempts = 0;
    bool exact = false;
    while (attempts < max_attempts) {
        ++attempts;
        chosen.clear();
        for (std::size_t i = 0; i < positive.size(); ++i) {
            if (rng.uniform() < probs[i]) chosen.push_back(positive[i]);
        }
        const std::size_t gap = chosen.size() > k ? chosen.size() - k : k - chosen.size();
        if (gap < best_gap) {
            best_gap = gap;
            best = chosen;
        }
        if (gap == 0) {
            exact = true;
            break;
        }
    }
    if (!exact && !allow_fallback) {
        throw std::runtime_error("sample_k: exhausted " + std::to_string(max_attempts) +
                                 " attempts without a size-" + std::to_string(k) + " draw");
    }

    std::vector<std::size_t> picked =
        best.empty() ? std::vector<std::size_t>{} : sample_projection(le, exact ? chosen : best, rng);

    if (!exact) {
        if (picked.size() > k) {
            // Trim lowest-quality picks.
            std::sort(picked.begin(), picked.end(), [&](std::size_t x, std::size_t y) {
                if (le.qualities(x) != le.qualities(y)) return le.qualities(x) > le.qualities(y);
                return x < y;
            });
            picked.resize(k);
        } else {
            // Pad with the highest-quality unselected points.
            std::vector<char> in(le.n_points(), 0);
            for (std::size_t p : picked) in[p] = 1;
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < le.n_points(); ++i) {
                if (!in[i]) rest.push_back(i);
            }
            std::sort(rest.begin(), rest.end(), [&](std::size_t x, std::size_t y) {
                if (le.qualities(x) != le.qualities(y)) return le.qualities(x) > le.qualities(y);
                return x < y;
            });
            for (std::size_t i = 0; i < rest.size() && picked.size() < k; ++i) {
                picked.push_back(rest[i]);
            }
            if (picked.size() < k) {
                throw std::runtime_error("sample_k: fallback could not reach the requested size");
            }
        }
    }

    SubsetSample out;
    out.attempts = attempts;
    out.scale = a;
    out.used_fallback = !exact;
    out.row_ids.reserve(picked.size());
    for (std::size_t p : picked) out.row_ids.push_back(le.row_ids[p]);
    return out;
}

Eigen::MatrixXd l_matrix(const DualLEnsemble& le) { return le.B.transpose() * le.B; }

double exact_subset_probability(const Eigen::MatrixXd& L, const std::vector<int>& subset) {
    const Eigen::Index n = L.rows();
    const double denom =
        (L + Eigen::MatrixXd::Identity(n, n)).determinant();
    if (subset.empty()) return 1.0 / denom;
    Eigen::MatrixXd minor(subset.size(), subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = 0; j < subset.size(); ++j) {
            minor(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                L(subset[i], subset[j]);
        }
    }
    return minor.determinant() / denom;
}

}  // namespace atbag
