#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace atbag {

struct TrialRecord {
    std::string dataset;
    std::string method;
    std::size_t n_seed = 0;  // seed-subset size of the run this point belongs to
    int trial = 0;
    std::size_t n_train = 0;
    double r2 = 0.0;
    double accuracy = 0.0;  // filled by normalize_accuracy
};

struct TrialTable {
    std::vector<TrialRecord> records;
};

/// r^2 = 1 - SSE/SST against the mean of `actual`. A constant predictor
/// scores at most 0.
double r_squared(std::span<const double> predicted, std::span<const double> actual);

/// accuracy = r^2 / max r^2 over all records sharing the dataset tag.
/// Negative r^2 stays negative. Throws if a dataset's max r^2 is <= 0.
TrialTable normalize_accuracy(const TrialTable& table);

/// Normalized area under the learning curve: trapezoidal integral of
/// accuracy over n_train divided by the n_train range. Needs >= 2 points,
/// strictly increasing in n_train.
double naulc(const std::vector<std::pair<double, double>>& curve);

struct PairwisePoint {
    std::size_t n_train = 0;
    int wins = 0;    // method A strictly above B
    int ties = 0;    // excluded from the posterior
    int losses = 0;
    double posterior_mean = 0.0;  // of Beta(0.5 + wins, 0.5 + losses)
    double lower = 0.0;           // equal-tailed credible interval
    double upper = 1.0;
};

/// Per-n_train win/loss record of method A against B over trials paired by
/// trial id, with a Jeffreys Beta(0.5, 0.5) prior on the win probability and
/// an equal-tailed credible interval of the given mass.
std::vector<PairwisePoint> pairwise_beta_binomial(const TrialTable& table,
                                                  const std::string& dataset,
                                                  const std::string& method_a,
                                                  const std::string& method_b,
                                                  double mass = 0.90);

/// Shortest contiguous window of the sorted values holding ceil(mass * n)
/// of them (ties resolve to the lowest start). Needs >= 2 values.
std::pair<double, double> hdi_band(std::vector<double> values, double mass);

}  // namespace atbag
