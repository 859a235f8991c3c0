#include "atbag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "atbag/special.hpp"

namespace atbag {

double r_squared(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || actual.empty()) {
        throw std::invalid_argument("r_squared: size mismatch or empty input");
    }
    double mean = 0.0;
    for (double v : actual) mean += v;
    mean /= static_cast<double>(actual.size());
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sse += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
        sst += (actual[i] - mean) * (actual[i] - mean);
    }
    if (sst <= 0.0) return sse <= 0.0 ? 1.0 : 0.0;  // degenerate evaluation targets
    return 1.0 - sse / sst;
}

TrialTable normalize_accuracy(const TrialTable& table) {
    std::map<std::string, double> max_r2;
    for (const auto& rec : table.records) {
        auto [it, inserted] = max_r2.try_emplace(rec.dataset, rec.r2);
        if (!inserted) it->second = std::max(it->second, rec.r2);
    }
    for (const auto& [name, best] : max_r2) {
        if (!(best > 0.0)) {
            throw std::runtime_error("normalize_accuracy: max r^2 for dataset '" + name +
                                     "' is not positive; nothing was learned");
        }
    }
    TrialTable out = table;
    for (auto& rec : out.records) rec.accuracy = rec.r2 / max_r2[rec.dataset];
    return out;
}

double naulc(const std::vector<std::pair<double, double>>& curve) {
    if (curve.size() < 2) throw std::invalid_argument("naulc: need at least 2 curve points");
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const double dx = curve[i].first - curve[i - 1].first;
        if (dx <= 0.0) throw std::invalid_argument("naulc: n_train must be strictly increasing");
        area += 0.5 * (curve[i].second + curve[i - 1].second) * dx;
    }
    return area / (curve.back().first - curve.front().first);
}

std::vector<PairwisePoint> pairwise_beta_binomial(const TrialTable& table,
                                                  const std::string& dataset,
                                                  const std::string& method_a,
                                                  const std::string& method_b, double mass) {
    // (n_train, trial) -> scores of each side.
    std::map<std::size_t, std::map<int, std::pair<double, double>>> grid;
    std::map<std::size_t, std::map<int, std::pair<bool, bool>>> seen;
    for (const auto& rec : table.records) {
        if (rec.dataset != dataset) continue;
        if (rec.method == method_a) {
            grid[rec.n_train][rec.trial].first = rec.accuracy;
            seen[rec.n_train][rec.trial].first = true;
        } else if (rec.method == method_b) {
            grid[rec.n_train][rec.trial].second = rec.accuracy;
            seen[rec.n_train][rec.trial].second = true;
        }
    }

    std::vector<PairwisePoint> out;
    const double tail = 0.5 * (1.0 - mass);
    for (const auto& [n_train, trials] : grid) {
        PairwisePoint pt;
        pt.n_train = n_train;
        for (const auto& [trial, scores] : trials) {
            const auto flags = seen[n_train][trial];
            if (!flags.first || !flags.second) continue;  // unpaired trial
            if (scores.first > scores.second) {
                ++pt.wins;
            } else if (scores.first < scores.second) {
                ++pt.losses;
            } else {
                ++pt.ties;
            }
        }
        if (pt.wins + pt.ties + pt.losses == 0) {
            throw std::runtime_error("pairwise_beta_binomial: no paired trials at n_train=" +
                                     std::to_string(n_train));
        }
        const double alpha = 0.5 + pt.wins;
        const double beta = 0.5 + pt.losses;
        pt.posterior_mean = alpha / (alpha + beta);
        pt.lower = inv_reg_inc_beta(alpha, beta, tail);
        pt.upper = inv_reg_inc_beta(alpha, beta, 1.0 - tail);
        out.push_back(pt);
    }
    return out;
}

std::pair<double, double> hdi_band(std::vector<double> values, double mass) {
    if (values.size() < 2) throw std::invalid_argument("hdi_band: need at least 2 values");
    if (!(mass > 0.0 && mass <= 1.0)) throw std::invalid_argument("hdi_band: mass must be in (0, 1]");
    std::sort(values.begin(), values.end());
    const std::size_t m =
        std::min<std::size_t>(values.size(),
                              static_cast<std::size_t>(std::ceil(mass * static_cast<double>(values.size()))));
    double best_width = std::numeric_limits<double>::infinity();
    std::size_t best_start = 0;
    for (std::size_t s = 0; s + m <= values.size(); ++s) {
        const double width = values[s + m - 1] - values[s];
        if (width < best_width) {
            best_width = width;
            best_start = s;
        }
    }
    return {values[best_start], values[best_start + m - 1]};
}

}  // namespace atbag
