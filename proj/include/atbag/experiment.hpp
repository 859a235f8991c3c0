#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "atbag/active.hpp"
#include "atbag/dataset.hpp"
#include "atbag/metrics.hpp"

namespace atbag {

/// Full factorial run description: methods x seed sizes x replicates on one
/// source/transfer dataset pair (synthetic or loaded from CSV).
struct ExperimentConfig {
    // data
    bool use_synthetic = true;
    std::string dataset_tag = "synthetic";
    std::size_t synth_n_source = 2000;
    std::size_t synth_n_transfer = 2000;
    std::size_t synth_dims = 4;
    double synth_correlation = 0.9;
    double synth_shift = 0.0;
    std::string source_csv;
    std::string transfer_csv;
    std::string source_target = "y";
    std::string transfer_target = "y";

    // factorial
    std::vector<std::string> methods{"atbagging", "random", "pca", "loss_coreset"};
    std::vector<std::size_t> n_seeds{10};
    std::size_t replicates = 15;

    // per-trial schedule and knobs
    ALConfig al;
    std::string acquisition_atbagging = "blended_dpp";
    std::string acquisition_baselines = "qbc_topk";

    // run
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::string out_dir = "atbag_out";
};

struct ExperimentResult {
    TrialTable trials;           // with accuracy filled in
    bool complete = true;
    std::vector<std::string> assumptions;  // defaults in effect during the run
};

/// Canonical JSON snapshot of a config; identical configs give identical text.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

/// FNV-1a 64-bit-based artifact fingerprint, hex-encoded.
std::string config_hash_hex(const std::string& canonical_config);

/// Shortest round-trip decimal text of a double (locale-independent).
std::string fmt_g(double v);

/// Validate cross-field preconditions before any compute. Throws
/// std::invalid_argument with a message naming the failing field.
void validate_config(const ExperimentConfig& cfg);

/// Run the factorial. Trials are pure functions of derived seeds, so the
/// result is byte-identical for any worker count. When `interrupt` flips to
/// true, pending trials are skipped and the result is marked incomplete.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::atomic<bool>* interrupt = nullptr);

/// Write trials.csv, naulc.csv, naulc_summary.csv, pairwise.csv, bands.csv,
/// report.json, assumptions.json and config.json into out_dir. Every file
/// embeds the config hash. Incomplete runs additionally get an INCOMPLETE
/// marker file.
void write_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& out_dir);

/// Recompute the aggregate artifacts from an existing trials.csv.
TrialTable read_trials_csv(const std::string& path);
void write_aggregates(const TrialTable& trials, const std::string& config_hash,
                      const std::string& out_dir);

}  // namespace atbag
