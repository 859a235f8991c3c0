// Batch front end: score -> select -> experiment -> report.
// Exit codes: 0 ok, 2 configuration error, 3 numerical/runtime failure,
// 4 interrupted.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "atbag/active.hpp"
#include "atbag/atbagging.hpp"
#include "atbag/experiment.hpp"
#include "atbag/rng.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

void on_sigint(int) { g_interrupted.store(true); }

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> master_seed;
    std::optional<int> workers;
    std::optional<std::string> source_csv, transfer_csv, source_target, transfer_target;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--master-seed", args.master_seed, "override master seed");
    cmd->add_option("--workers", args.workers, "override worker count");
    cmd->add_option("--source", args.source_csv, "source dataset CSV");
    cmd->add_option("--transfer", args.transfer_csv, "transfer pool CSV");
    cmd->add_option("--source-target", args.source_target, "source target column");
    cmd->add_option("--transfer-target", args.transfer_target, "transfer target column");
}

atbag::ExperimentConfig resolve_config(const CommonArgs& args) {
    atbag::ExperimentConfig cfg;
    if (!args.config_path.empty()) {
        cfg = atbag::config_from_json(read_file(args.config_path));
    }
    if (args.master_seed) cfg.master_seed = *args.master_seed;
    if (args.workers) cfg.workers = *args.workers;
    if (args.source_csv) {
        cfg.source_csv = *args.source_csv;
        cfg.use_synthetic = false;
    }
    if (args.transfer_csv) {
        cfg.transfer_csv = *args.transfer_csv;
        cfg.use_synthetic = false;
    }
    if (args.source_target) cfg.source_target = *args.source_target;
    if (args.transfer_target) cfg.transfer_target = *args.transfer_target;
    return cfg;
}

struct TaskData {
    atbag::TabularDataset source;
    atbag::TabularDataset probe_pool;  // transfer features when available, else source
};

TaskData load_score_data(const atbag::ExperimentConfig& cfg) {
    TaskData d;
    if (cfg.use_synthetic) {
        auto [src, tr] = atbag::make_synthetic_transfer(
            cfg.synth_n_source, cfg.synth_n_transfer, cfg.synth_dims, cfg.synth_correlation,
            cfg.synth_shift, atbag::derive_seed(cfg.master_seed, 0xDA7A));
        d.source = std::move(src);
        d.probe_pool = tr.without_target();
        return d;
    }
    d.source = atbag::load_csv(cfg.source_csv, nullptr, cfg.source_target);
    if (!cfg.transfer_csv.empty()) {
        atbag::TabularDataset pool = atbag::load_csv(cfg.transfer_csv, nullptr, std::nullopt);
        if (!d.source.same_schema_as(pool)) {
            const auto merged = atbag::union_schema(d.source.schema(), pool.schema());
            d.source = d.source.recoded_to(merged);
            pool = pool.recoded_to(merged);
        }
        d.probe_pool = std::move(pool);
    } else {
        d.probe_pool = d.source.without_target();
    }
    return d;
}

std::uint64_t fnv1a64_str(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

int cmd_score(const CommonArgs& args, const std::string& out_path) {
    atbag::ExperimentConfig cfg = resolve_config(args);
    atbag::validate_config(cfg);
    const std::string hash = atbag::config_hash_hex(atbag::config_to_json(cfg));
    TaskData data = load_score_data(cfg);

    auto params = cfg.al.params;
    params.n_workers = cfg.workers;
    const atbag::BaggedEnsemble ensemble = atbag::BaggedEnsemble::fit(
        data.source, params.m_trees, params.limits, atbag::derive_seed(cfg.master_seed, 1),
        params.n_workers);
    const atbag::TabularDataset probes = atbag::choose_probe_set(
        data.probe_pool, params.probe_cap, atbag::derive_seed(cfg.master_seed, 2));
    atbag::ScoreOptions opts;
    opts.noise = params.noise;
    opts.diagonal_covariance = params.diagonal_covariance;
    opts.n_workers = params.n_workers;
    const atbag::InfoGainScores scores = atbag::score_all(ensemble, data.source, probes, opts);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + out_path);
    out << "# config_hash=" << hash << "\n";
    out << "# noise_var=" << atbag::fmt_g(scores.noise_var) << "\n";
    if (!scores.imputed_rows.empty()) {
        out << "# imputed_rows=" << scores.imputed_rows.size() << "\n";
    }
    out << "row_id,ig\n";
    for (std::size_t i = 0; i < scores.row_ids.size(); ++i) {
        out << scores.row_ids[i] << "," << atbag::fmt_g(scores.ig[i]) << "\n";
    }
    std::cerr << "wrote " << scores.row_ids.size() << " scores to " << out_path << "\n";
    return 0;
}

int cmd_select(const CommonArgs& args, const std::string& method, std::size_t k,
               const std::string& out_path) {
    atbag::ExperimentConfig cfg = resolve_config(args);
    atbag::validate_config(cfg);
    atbag::seed_method_from_string(method);  // validate before any compute
    const std::string hash = atbag::config_hash_hex(atbag::config_to_json(cfg));
    TaskData data = load_score_data(cfg);
    if (k > data.source.n_rows()) {
        throw std::invalid_argument("k exceeds the source dataset size");
    }
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    // Independent stream per method name under one master seed.
    const std::uint64_t seed =
        atbag::derive_seed(cfg.master_seed, fnv1a64_str(method));
    auto params = cfg.al.params;
    params.n_workers = cfg.workers;

    atbag::SelectionResult sel;
    switch (atbag::seed_method_from_string(method)) {
        case atbag::SeedMethod::Random:
            sel = atbag::select_random(data.source, k, seed);
            break;
        case atbag::SeedMethod::PcaGrid:
            sel = atbag::select_pca_grid(data.source, k, cfg.al.pca, seed);
            break;
        case atbag::SeedMethod::LossCoreset: {
            const auto e = atbag::BaggedEnsemble::fit(data.source, params.m_trees, params.limits,
                                                      atbag::derive_seed(seed, 1),
                                                      params.n_workers);
            sel = atbag::select_loss_coreset(data.source, e, k, atbag::derive_seed(seed, 2));
            break;
        }
        case atbag::SeedMethod::Atbagging:
            sel = atbag::select_atbagging(data.source, data.probe_pool, k, params, seed).selection;
            break;
    }

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + out_path);
    out << "# config_hash=" << hash << "\n";
    out << "# method=" << sel.method << "\n";
    for (const auto& note : sel.notes) out << "# note=" << note << "\n";
    out << "row_id\n";
    for (auto id : sel.row_ids) out << id << "\n";
    std::cerr << "selected " << sel.row_ids.size() << " rows with " << method << " into "
              << out_path << "\n";
    return 0;
}

int cmd_experiment(const CommonArgs& args, const std::string& out_dir_flag) {
    atbag::ExperimentConfig cfg = resolve_config(args);
    if (!out_dir_flag.empty()) cfg.out_dir = out_dir_flag;
    atbag::validate_config(cfg);
    const atbag::ExperimentResult result = atbag::run_experiment(cfg, &g_interrupted);
    atbag::write_report(result, cfg, cfg.out_dir);
    if (!result.complete) {
        std::cerr << "interrupted; partial report in " << cfg.out_dir << "\n";
        return 4;
    }
    std::cerr << "report written to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& trials_path, const std::string& out_dir) {
    std::ifstream f(trials_path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open trials file: " + trials_path);
    std::string first_line;
    std::getline(f, first_line);
    std::string hash = "unknown";
    const std::string prefix = "# config_hash=";
    if (first_line.rfind(prefix, 0) == 0) hash = first_line.substr(prefix.size());
    const atbag::TrialTable trials = atbag::read_trials_csv(trials_path);
    atbag::write_aggregates(trials, hash, out_dir);
    std::cerr << "aggregates written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_sigint);

    CLI::App app{"Seed-subset selection and transfer-active-learning harness"};
    app.require_subcommand(1);

    CommonArgs score_args, select_args, exp_args;
    std::string score_out = "scores.csv";
    auto* score = app.add_subcommand("score", "information-gain scores for every source row");
    add_common(score, score_args);
    score->add_option("--out", score_out, "output CSV path");

    std::string select_method = "atbagging";
    std::size_t select_k = 10;
    std::string select_out = "selection.csv";
    auto* select = app.add_subcommand("select", "select k rows with a given method");
    add_common(select, select_args);
    select->add_option("--method", select_method,
                       "atbagging | random | pca | loss_coreset");
    select->add_option("--k", select_k, "subset size")->required();
    select->add_option("--out", select_out, "output CSV path");

    std::string exp_out;
    auto* experiment =
        app.add_subcommand("experiment", "factorial transfer-active-learning runs + report");
    add_common(experiment, exp_args);
    experiment->add_option("--out-dir", exp_out, "report directory");

    std::string report_trials, report_out = "atbag_report";
    auto* report = app.add_subcommand("report", "recompute aggregates from a trials.csv");
    report->add_option("--trials", report_trials, "trials.csv path")->required();
    report->add_option("--out-dir", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (score->parsed()) return cmd_score(score_args, score_out);
        if (select->parsed()) return cmd_select(select_args, select_method, select_k, select_out);
        if (experiment->parsed()) return cmd_experiment(exp_args, exp_out);
        if (report->parsed()) return cmd_report(report_trials, report_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return g_interrupted.load() ? 4 : 3;
    }
    return 0;
}
