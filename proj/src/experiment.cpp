#include "atbag/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "atbag/parallel.hpp"
#include "atbag/rng.hpp"

namespace atbag {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

nlohmann::json noise_to_json(const NoiseVarPolicy& p) {
    if (p.kind == NoiseVarPolicy::Kind::OobMse) return "oob_mse";
    return p.fixed_value;
}

NoiseVarPolicy noise_from_json(const nlohmann::json& j) {
    NoiseVarPolicy p;
    if (j.is_string() && j == "oob_mse") {
        p.kind = NoiseVarPolicy::Kind::OobMse;
    } else if (j.is_number()) {
        p.kind = NoiseVarPolicy::Kind::Fixed;
        p.fixed_value = j.get<double>();
    } else {
        throw std::invalid_argument("noise_var must be \"oob_mse\" or a positive number");
    }
    return p;
}

nlohmann::json lengthscale_to_json(const LengthscalePolicy& p) {
    if (p.kind == LengthscalePolicy::Kind::Median) return "median";
    return p.value;
}

LengthscalePolicy lengthscale_from_json(const nlohmann::json& j) {
    LengthscalePolicy p;
    if (j.is_string() && j == "median") {
        p.kind = LengthscalePolicy::Kind::Median;
    } else if (j.is_number()) {
        p.kind = LengthscalePolicy::Kind::Fixed;
        p.value = j.get<double>();
    } else {
        throw std::invalid_argument("lengthscale must be \"median\" or a positive number");
    }
    return p;
}

}  // namespace

std::string fmt_g(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string config_hash_hex(const std::string& canonical_config) {
    const std::uint64_t h = fnv1a64(canonical_config);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["dataset"]["tag"] = cfg.dataset_tag;
    j["dataset"]["use_synthetic"] = cfg.use_synthetic;
    j["dataset"]["synthetic"] = {{"n_source", cfg.synth_n_source},
                                 {"n_transfer", cfg.synth_n_transfer},
                                 {"dims", cfg.synth_dims},
                                 {"target_correlation", cfg.synth_correlation},
                                 {"shift", cfg.synth_shift}};
    j["dataset"]["source_csv"] = cfg.source_csv;
    j["dataset"]["transfer_csv"] = cfg.transfer_csv;
    j["dataset"]["source_target"] = cfg.source_target;
    j["dataset"]["transfer_target"] = cfg.transfer_target;

    j["selection"]["methods"] = cfg.methods;
    j["selection"]["n_seeds"] = cfg.n_seeds;
    j["selection"]["probe_cap"] = cfg.al.params.probe_cap;
    j["selection"]["rff_features"] = cfg.al.params.rff_features;
    j["selection"]["quality_beta"] = cfg.al.params.quality_beta;
    j["selection"]["dpp_max_attempts"] = cfg.al.params.dpp_max_attempts;
    j["selection"]["diagonal_covariance"] = cfg.al.params.diagonal_covariance;
    j["selection"]["noise_var"] = noise_to_json(cfg.al.params.noise);
    j["selection"]["lengthscale"] = lengthscale_to_json(cfg.al.params.lengthscale);
    j["selection"]["pca_components"] = cfg.al.pca.n_components;
    j["selection"]["pca_bins"] = cfg.al.pca.bins_per_axis;
    j["selection"]["gamma_fallback"] = cfg.al.gamma_fallback;

    j["ensemble"]["m_trees"] = cfg.al.params.m_trees;
    j["ensemble"]["max_depth"] = cfg.al.params.limits.max_depth;
    j["ensemble"]["min_samples_leaf"] = cfg.al.params.limits.min_samples_leaf;
    j["ensemble"]["max_features"] = cfg.al.params.limits.max_features;

    j["active"]["m_collect"] = cfg.al.m_collect;
    j["active"]["n_rounds"] = cfg.al.n_rounds;
    j["active"]["eval_fraction"] = cfg.al.eval_fraction;
    j["active"]["acquisition_atbagging"] = cfg.acquisition_atbagging;
    j["active"]["acquisition_baselines"] = cfg.acquisition_baselines;

    j["replicates"] = cfg.replicates;
    j["master_seed"] = cfg.master_seed;
    // workers and out_dir are run mechanics, not part of the experiment
    // identity; the snapshot and its hash must not depend on them.
    return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            if (d.contains("tag")) cfg.dataset_tag = d["tag"].get<std::string>();
            if (d.contains("use_synthetic")) cfg.use_synthetic = d["use_synthetic"].get<bool>();
            if (d.contains("synthetic")) {
                const auto& s = d["synthetic"];
                if (s.contains("n_source")) cfg.synth_n_source = s["n_source"].get<std::size_t>();
                if (s.contains("n_transfer")) cfg.synth_n_transfer = s["n_transfer"].get<std::size_t>();
                if (s.contains("dims")) cfg.synth_dims = s["dims"].get<std::size_t>();
                if (s.contains("target_correlation")) cfg.synth_correlation = s["target_correlation"].get<double>();
                if (s.contains("shift")) cfg.synth_shift = s["shift"].get<double>();
            }
            if (d.contains("source_csv")) cfg.source_csv = d["source_csv"].get<std::string>();
            if (d.contains("transfer_csv")) cfg.transfer_csv = d["transfer_csv"].get<std::string>();
            if (d.contains("source_target")) cfg.source_target = d["source_target"].get<std::string>();
            if (d.contains("transfer_target")) cfg.transfer_target = d["transfer_target"].get<std::string>();
        }
        if (j.contains("selection")) {
            const auto& s = j["selection"];
            if (s.contains("methods")) cfg.methods = s["methods"].get<std::vector<std::string>>();
            if (s.contains("n_seeds")) cfg.n_seeds = s["n_seeds"].get<std::vector<std::size_t>>();
            if (s.contains("probe_cap")) cfg.al.params.probe_cap = s["probe_cap"].get<std::size_t>();
            if (s.contains("rff_features")) cfg.al.params.rff_features = s["rff_features"].get<int>();
            if (s.contains("quality_beta")) cfg.al.params.quality_beta = s["quality_beta"].get<double>();
            if (s.contains("dpp_max_attempts")) cfg.al.params.dpp_max_attempts = s["dpp_max_attempts"].get<int>();
            if (s.contains("diagonal_covariance")) cfg.al.params.diagonal_covariance = s["diagonal_covariance"].get<bool>();
            if (s.contains("noise_var")) cfg.al.params.noise = noise_from_json(s["noise_var"]);
            if (s.contains("lengthscale")) cfg.al.params.lengthscale = lengthscale_from_json(s["lengthscale"]);
            if (s.contains("pca_components")) cfg.al.pca.n_components = s["pca_components"].get<int>();
            if (s.contains("pca_bins")) cfg.al.pca.bins_per_axis = s["pca_bins"].get<int>();
            if (s.contains("gamma_fallback")) cfg.al.gamma_fallback = s["gamma_fallback"].get<double>();
        }
        if (j.contains("ensemble")) {
            const auto& e = j["ensemble"];
            if (e.contains("m_trees")) cfg.al.params.m_trees = e["m_trees"].get<std::size_t>();
            if (e.contains("max_depth")) cfg.al.params.limits.max_depth = e["max_depth"].get<int>();
            if (e.contains("min_samples_leaf")) cfg.al.params.limits.min_samples_leaf = e["min_samples_leaf"].get<int>();
            if (e.contains("max_features")) cfg.al.params.limits.max_features = e["max_features"].get<int>();
        }
        if (j.contains("active")) {
            const auto& a = j["active"];
            if (a.contains("m_collect")) cfg.al.m_collect = a["m_collect"].get<std::size_t>();
            if (a.contains("n_rounds")) cfg.al.n_rounds = a["n_rounds"].get<std::size_t>();
            if (a.contains("eval_fraction")) cfg.al.eval_fraction = a["eval_fraction"].get<double>();
            if (a.contains("acquisition_atbagging")) cfg.acquisition_atbagging = a["acquisition_atbagging"].get<std::string>();
            if (a.contains("acquisition_baselines")) cfg.acquisition_baselines = a["acquisition_baselines"].get<std::string>();
        }
        if (j.contains("replicates")) cfg.replicates = j["replicates"].get<std::size_t>();
        if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
        if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config field error: ") + e.what());
    }
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.methods.empty()) throw std::invalid_argument("config: methods list is empty");
    for (const auto& m : cfg.methods) seed_method_from_string(m);  // throws on unknown
    acquisition_from_string(cfg.acquisition_atbagging);
    acquisition_from_string(cfg.acquisition_baselines);
    if (cfg.n_seeds.empty()) throw std::invalid_argument("config: n_seeds list is empty");
    for (std::size_t n : cfg.n_seeds) {
        if (n < 1) throw std::invalid_argument("config: n_seed must be >= 1");
    }
    if (cfg.replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
    if (cfg.al.m_collect < 1) throw std::invalid_argument("config: m_collect must be >= 1");
    if (!(cfg.al.eval_fraction > 0.0 && cfg.al.eval_fraction < 1.0)) {
        throw std::invalid_argument("config: eval_fraction must be in (0, 1)");
    }
    if (cfg.al.params.m_trees < 2) throw std::invalid_argument("config: m_trees must be >= 2");
    if (cfg.al.params.rff_features < 1) throw std::invalid_argument("config: rff_features must be >= 1");
    if (cfg.al.params.probe_cap < 1) throw std::invalid_argument("config: probe_cap must be >= 1");
    if (cfg.al.params.dpp_max_attempts < 1) throw std::invalid_argument("config: dpp_max_attempts must be >= 1");
    if (cfg.al.params.quality_beta < 0.0) throw std::invalid_argument("config: quality_beta must be >= 0");
    if (cfg.al.params.noise.kind == NoiseVarPolicy::Kind::Fixed &&
        !(cfg.al.params.noise.fixed_value > 0.0)) {
        throw std::invalid_argument("config: fixed noise_var must be > 0");
    }
    if (cfg.al.params.lengthscale.kind == LengthscalePolicy::Kind::Fixed &&
        !(cfg.al.params.lengthscale.value > 0.0)) {
        throw std::invalid_argument("config: fixed lengthscale must be > 0");
    }
    if (cfg.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (!cfg.use_synthetic) {
        if (cfg.source_csv.empty() || cfg.transfer_csv.empty()) {
            throw std::invalid_argument("config: source_csv and transfer_csv are required");
        }
        if (cfg.source_target.empty() || cfg.transfer_target.empty()) {
            throw std::invalid_argument("config: target column names are required");
        }
    }
}

namespace {

std::pair<TabularDataset, TabularDataset> load_task_data(const ExperimentConfig& cfg) {
    if (cfg.use_synthetic) {
        return make_synthetic_transfer(cfg.synth_n_source, cfg.synth_n_transfer, cfg.synth_dims,
                                       cfg.synth_correlation, cfg.synth_shift,
                                       derive_seed(cfg.master_seed, 0xDA7A));
    }
    TabularDataset source = load_csv(cfg.source_csv, nullptr, cfg.source_target);
    TabularDataset transfer = load_csv(cfg.transfer_csv, nullptr, cfg.transfer_target);
    if (!source.same_schema_as(transfer)) {
        const auto merged = union_schema(source.schema(), transfer.schema());
        source = source.recoded_to(merged);
        transfer = transfer.recoded_to(merged);
    }
    // Transfer pool ids must not collide with source ids unless they denote
    // the same inputs; loaded CSVs get disjoint id ranges.
    std::vector<std::int64_t> ids(transfer.n_rows());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = static_cast<std::int64_t>(source.n_rows() + i);
    }
    transfer.set_row_ids(std::move(ids));
    return {std::move(source), std::move(transfer)};
}

std::vector<std::string> collect_assumptions(const ExperimentConfig& cfg) {
    std::vector<std::string> a;
    if (cfg.al.params.noise.kind == NoiseVarPolicy::Kind::OobMse) {
        a.push_back("noise_var: mean squared out-of-bag residual, floored at 1e-6 x target variance");
    }
    if (cfg.al.params.lengthscale.kind == LengthscalePolicy::Kind::Median) {
        a.push_back("lengthscale: median pairwise squared distance over a <=1000-row subsample");
    }
    if (cfg.al.params.limits.max_features == 0) {
        a.push_back("split candidates per node: max(1, n_cols/3) columns");
    }
    if (cfg.al.pca.n_components == 0) {
        a.push_back("pca components: min(5, encoded feature width)");
    }
    a.push_back("pca bins per axis: " + std::to_string(cfg.al.pca.bins_per_axis));
    a.push_back("loss-coreset importance weight: squared out-of-bag residual");
    a.push_back("categorical features one-hot encoded before embedding and pca");
    a.push_back("dpp retry budget " + std::to_string(cfg.al.params.dpp_max_attempts) +
                "; on exhaustion the closest draw is adjusted by quality");
    a.push_back("acquisition: atbagging=" + cfg.acquisition_atbagging +
                ", baselines=" + cfg.acquisition_baselines);
    a.push_back("evaluation split fixed per replicate at fraction " + fmt_g(cfg.al.eval_fraction));
    a.push_back("exact accuracy ties excluded from pairwise win/loss counts");
    a.push_back("accuracy normalizer: global per-dataset max r^2");
    return a;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::atomic<bool>* interrupt) {
    validate_config(cfg);
    const auto [source, transfer] = load_task_data(cfg);

    // Fail fast on an infeasible schedule before any trial runs.
    const std::size_t n_eval =
        static_cast<std::size_t>(cfg.al.eval_fraction * static_cast<double>(transfer.n_rows()) + 0.5);
    const std::size_t acquirable = transfer.n_rows() - std::min(transfer.n_rows(), n_eval);
    for (std::size_t n_seed : cfg.n_seeds) {
        if (n_seed + cfg.al.n_rounds * cfg.al.m_collect > acquirable) {
            throw std::invalid_argument(
                "config: n_seed=" + std::to_string(n_seed) + " plus " +
                std::to_string(cfg.al.n_rounds) + " rounds of " + std::to_string(cfg.al.m_collect) +
                " exceeds the acquirable pool (" + std::to_string(acquirable) + " rows)");
        }
        if (n_seed > source.n_rows()) {
            throw std::invalid_argument("config: n_seed exceeds the source dataset size");
        }
    }

    const std::size_t n_methods = cfg.methods.size();
    const std::size_t n_sizes = cfg.n_seeds.size();
    const std::size_t n_tasks = n_methods * n_sizes * cfg.replicates;
    std::vector<std::vector<TrialRecord>> task_records(n_tasks);
    std::vector<char> skipped(n_tasks, 0);

    parallel_for(n_tasks, cfg.workers, [&](std::size_t ti) {
        if (interrupt && interrupt->load()) {
            skipped[ti] = 1;
            return;
        }
        const std::size_t mi = ti / (n_sizes * cfg.replicates);
        const std::size_t si = (ti / cfg.replicates) % n_sizes;
        const std::size_t rep = ti % cfg.replicates;
        const std::string& method = cfg.methods[mi];

        ALConfig al = cfg.al;
        al.n_seed = cfg.n_seeds[si];
        al.acquisition = acquisition_from_string(
            method == "atbagging" ? cfg.acquisition_atbagging : cfg.acquisition_baselines);

        const std::uint64_t env_seed = derive_seed(cfg.master_seed, 0xE000 + rep);
        const std::uint64_t method_seed =
            derive_seed(derive_seed(cfg.master_seed, fnv1a64(method)), si * 1000003ULL + rep);

        const LearningCurve curve = run_al_trial(source, transfer, seed_method_from_string(method),
                                                 al, env_seed, method_seed);
        auto& recs = task_records[ti];
        recs.reserve(curve.points.size());
        for (const auto& pt : curve.points) {
            TrialRecord r;
            r.dataset = cfg.dataset_tag;
            r.method = method;
            r.n_seed = cfg.n_seeds[si];
            r.trial = static_cast<int>(rep);
            r.n_train = pt.n_train;
            r.r2 = pt.r2;
            recs.push_back(std::move(r));
        }
    });

    ExperimentResult result;
    result.assumptions = collect_assumptions(cfg);
    for (std::size_t ti = 0; ti < n_tasks; ++ti) {
        if (skipped[ti]) result.complete = false;
        for (auto& r : task_records[ti]) result.trials.records.push_back(std::move(r));
    }
    if (!result.trials.records.empty()) {
        result.trials = normalize_accuracy(result.trials);
    }
    return result;
}

namespace {

struct CurveKey {
    std::string method;
    std::size_t n_seed;
    int trial;
    bool operator<(const CurveKey& o) const {
        if (method != o.method) return method < o.method;
        if (n_seed != o.n_seed) return n_seed < o.n_seed;
        return trial < o.trial;
    }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f << content;
}

}  // namespace

TrialTable read_trials_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    TrialTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // dataset,method,n_seed,trial,n_train,r2,accuracy
            continue;
        }
        std::istringstream ss(line);
        TrialRecord r;
        std::string field;
        std::getline(ss, r.dataset, ',');
        std::getline(ss, r.method, ',');
        std::getline(ss, field, ',');
        r.n_seed = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, field, ',');
        r.trial = std::stoi(field);
        std::getline(ss, field, ',');
        r.n_train = static_cast<std::size_t>(std::stoull(field));
        std::getline(ss, field, ',');
        r.r2 = std::stod(field);
        if (std::getline(ss, field, ',')) r.accuracy = std::stod(field);
        table.records.push_back(std::move(r));
    }
    if (table.records.empty()) throw std::runtime_error(path + ": no trial records");
    return table;
}

void write_aggregates(const TrialTable& trials, const std::string& config_hash,
                      const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string hash_line = "# config_hash=" + config_hash + "\n";

    // Distinct labels in first-appearance order.
    std::vector<std::string> datasets, methods;
    std::vector<std::size_t> sizes;
    for (const auto& r : trials.records) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
            datasets.push_back(r.dataset);
        }
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
            methods.push_back(r.method);
        }
        if (std::find(sizes.begin(), sizes.end(), r.n_seed) == sizes.end()) {
            sizes.push_back(r.n_seed);
        }
    }

    // trials.csv
    {
        std::string out = hash_line + "dataset,method,n_seed,trial,n_train,r2,accuracy\n";
        for (const auto& r : trials.records) {
            out += r.dataset + "," + r.method + "," + std::to_string(r.n_seed) + "," +
                   std::to_string(r.trial) + "," + std::to_string(r.n_train) + "," + fmt_g(r.r2) +
                   "," + fmt_g(r.accuracy) + "\n";
        }
        write_text(out_dir + "/trials.csv", out);
    }

    // Per-trial accuracy curves.
    std::map<std::string, std::map<CurveKey, std::vector<std::pair<double, double>>>> curves;
    for (const auto& r : trials.records) {
        curves[r.dataset][{r.method, r.n_seed, r.trial}].push_back(
            {static_cast<double>(r.n_train), r.accuracy});
    }
    for (auto& [ds, by_key] : curves) {
        for (auto& [key, pts] : by_key) std::sort(pts.begin(), pts.end());
    }

    nlohmann::json report;
    report["config_hash"] = config_hash;

    // naulc.csv + naulc_summary.csv
    {
        std::string per_trial = hash_line + "dataset,method,n_seed,trial,naulc\n";
        std::string summary = hash_line + "dataset,method,n_seed,mean_naulc,std_naulc\n";
        nlohmann::json jn = nlohmann::json::array();
        for (const auto& ds : datasets) {
            for (const auto& method : methods) {
                for (std::size_t n_seed : sizes) {
                    std::vector<double> values;
                    std::vector<int> trial_ids;
                    for (const auto& [key, pts] : curves[ds]) {
                        if (key.method != method || key.n_seed != n_seed) continue;
                        if (pts.size() < 2) continue;
                        values.push_back(naulc(pts));
                        trial_ids.push_back(key.trial);
                    }
                    if (values.empty()) continue;
                    double mean = 0.0;
                    for (double v : values) mean += v;
                    mean /= static_cast<double>(values.size());
                    double var = 0.0;
                    for (double v : values) var += (v - mean) * (v - mean);
                    const double sd = values.size() > 1
                                          ? std::sqrt(var / static_cast<double>(values.size() - 1))
                                          : 0.0;
                    for (std::size_t i = 0; i < values.size(); ++i) {
                        per_trial += ds + "," + method + "," + std::to_string(n_seed) + "," +
                                     std::to_string(trial_ids[i]) + "," + fmt_g(values[i]) + "\n";
                    }
                    summary += ds + "," + method + "," + std::to_string(n_seed) + "," + fmt_g(mean) +
                               "," + fmt_g(sd) + "\n";
                    jn.push_back({{"dataset", ds},
                                  {"method", method},
                                  {"n_seed", n_seed},
                                  {"mean", mean},
                                  {"std", sd},
                                  {"trials", values}});
                }
            }
        }
        write_text(out_dir + "/naulc.csv", per_trial);
        write_text(out_dir + "/naulc_summary.csv", summary);
        report["naulc"] = std::move(jn);
    }

    // bands.csv: per-n_train mean accuracy with the 90% density band.
    {
        std::string out = hash_line + "dataset,method,n_seed,n_train,mean_accuracy,lower,upper\n";
        nlohmann::json jb = nlohmann::json::array();
        for (const auto& ds : datasets) {
            for (const auto& method : methods) {
                for (std::size_t n_seed : sizes) {
                    std::map<std::size_t, std::vector<double>> by_n;
                    for (const auto& r : trials.records) {
                        if (r.dataset == ds && r.method == method && r.n_seed == n_seed) {
                            by_n[r.n_train].push_back(r.accuracy);
                        }
                    }
                    if (by_n.empty()) continue;
                    nlohmann::json pts = nlohmann::json::array();
                    for (const auto& [n_train, vals] : by_n) {
                        double mean = 0.0;
                        for (double v : vals) mean += v;
                        mean /= static_cast<double>(vals.size());
                        const auto band = vals.size() >= 2 ? hdi_band(vals, 0.90)
                                                           : std::make_pair(vals[0], vals[0]);
                        out += ds + "," + method + "," + std::to_string(n_seed) + "," +
                               std::to_string(n_train) + "," + fmt_g(mean) + "," +
                               fmt_g(band.first) + "," + fmt_g(band.second) + "\n";
                        pts.push_back({{"n_train", n_train},
                                       {"mean_accuracy", mean},
                                       {"lower", band.first},
                                       {"upper", band.second}});
                    }
                    jb.push_back({{"dataset", ds},
                                  {"method", method},
                                  {"n_seed", n_seed},
                                  {"points", std::move(pts)}});
                }
            }
        }
        write_text(out_dir + "/bands.csv", out);
        report["bands"] = std::move(jb);
    }

    // pairwise.csv: atbagging against each alternative.
    {
        std::string out = hash_line +
                          "dataset,n_seed,opponent,n_train,wins,ties,losses,posterior_mean,lower,upper\n";
        nlohmann::json jp = nlohmann::json::array();
        const bool has_atb = std::find(methods.begin(), methods.end(), "atbagging") != methods.end();
        if (has_atb) {
            for (const auto& ds : datasets) {
                for (std::size_t n_seed : sizes) {
                    TrialTable sub;
                    for (const auto& r : trials.records) {
                        if (r.dataset == ds && r.n_seed == n_seed) sub.records.push_back(r);
                    }
                    for (const auto& opponent : methods) {
                        if (opponent == "atbagging") continue;
                        const auto points =
                            pairwise_beta_binomial(sub, ds, "atbagging", opponent, 0.90);
                        nlohmann::json pts = nlohmann::json::array();
                        for (const auto& p : points) {
                            out += ds + "," + std::to_string(n_seed) + "," + opponent + "," +
                                   std::to_string(p.n_train) + "," + std::to_string(p.wins) + "," +
                                   std::to_string(p.ties) + "," + std::to_string(p.losses) + "," +
                                   fmt_g(p.posterior_mean) + "," + fmt_g(p.lower) + "," +
                                   fmt_g(p.upper) + "\n";
                            pts.push_back({{"n_train", p.n_train},
                                           {"wins", p.wins},
                                           {"ties", p.ties},
                                           {"losses", p.losses},
                                           {"posterior_mean", p.posterior_mean},
                                           {"lower", p.lower},
                                           {"upper", p.upper}});
                        }
                        jp.push_back({{"dataset", ds},
                                      {"n_seed", n_seed},
                                      {"opponent", opponent},
                                      {"points", std::move(pts)}});
                    }
                }
            }
        }
        write_text(out_dir + "/pairwise.csv", out);
        report["pairwise"] = std::move(jp);
    }

    write_text(out_dir + "/report_aggregates.json", report.dump(2) + "\n");
}

void write_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string canonical = config_to_json(cfg);
    const std::string hash = config_hash_hex(canonical);

    write_text(out_dir + "/config.json", canonical + "\n");
    write_aggregates(result.trials, hash, out_dir);

    nlohmann::json report;
    report["complete"] = result.complete;
    report["config_hash"] = hash;
    report["dataset"] = cfg.dataset_tag;
    report["assumptions"] = result.assumptions;
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& r : result.trials.records) {
        jt.push_back({{"dataset", r.dataset},
                      {"method", r.method},
                      {"n_seed", r.n_seed},
                      {"trial", r.trial},
                      {"n_train", r.n_train},
                      {"r2", r.r2},
                      {"accuracy", r.accuracy}});
    }
    report["trials"] = std::move(jt);
    write_text(out_dir + "/report.json", report.dump(2) + "\n");

    nlohmann::json ja = nlohmann::json::array();
    for (const auto& a : result.assumptions) ja.push_back(a);
    nlohmann::json assumptions;
    assumptions["config_hash"] = hash;
    assumptions["defaults_in_effect"] = std::move(ja);
    write_text(out_dir + "/assumptions.json", assumptions.dump(2) + "\n");

    if (!result.complete) {
        write_text(out_dir + "/INCOMPLETE",
                   "run interrupted; outputs cover only the finished trials\n");
    } else {
        std::error_code ec;
        fs::remove(out_dir + "/INCOMPLETE", ec);
    }
}

}  // namespace atbag
