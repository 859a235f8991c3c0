#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "atbag/experiment.hpp"

using namespace atbag;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.use_synthetic = true;
    cfg.synth_n_source = 80;
    cfg.synth_n_transfer = 100;
    cfg.synth_dims = 2;
    cfg.synth_correlation = 0.9;
    cfg.methods = {"random", "atbagging"};
    cfg.n_seeds = {5};
    cfg.replicates = 2;
    cfg.al.m_collect = 4;
    cfg.al.n_rounds = 2;
    cfg.al.params.m_trees = 10;
    cfg.al.params.rff_features = 16;
    cfg.al.params.probe_cap = 16;
    cfg.master_seed = 3;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool dirs_equal(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename().string());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    if (names_a != names_b) return false;
    for (const auto& name : names_a) {
        if (slurp(a / name) != slurp(b / name)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("config json round trip preserves every field") {
    ExperimentConfig cfg = tiny_config();
    cfg.acquisition_baselines = "blended_dpp";
    cfg.al.params.noise.kind = NoiseVarPolicy::Kind::Fixed;
    cfg.al.params.noise.fixed_value = 0.125;
    cfg.al.params.lengthscale.kind = LengthscalePolicy::Kind::Fixed;
    cfg.al.params.lengthscale.value = 2.5;
    const std::string text = config_to_json(cfg);
    const ExperimentConfig back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.al.params.noise.fixed_value == 0.125);
    CHECK(back.al.params.lengthscale.value == 2.5);
}

TEST_CASE("validate_config rejects bad fields before work starts") {
    ExperimentConfig cfg = tiny_config();
    cfg.methods = {"nonsense"};
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = tiny_config();
    cfg.replicates = 0;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = tiny_config();
    cfg.al.eval_fraction = 1.5;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);

    cfg = tiny_config();
    cfg.use_synthetic = false;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);  // missing csv paths
}

TEST_CASE("run_experiment rejects an infeasible schedule") {
    ExperimentConfig cfg = tiny_config();
    cfg.al.n_rounds = 100;
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("experiment reports are byte-identical across worker counts") {
    ExperimentConfig cfg = tiny_config();
    const fs::path dir1 = "test_exp_w1", dir2 = "test_exp_w2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    cfg.workers = 1;
    const ExperimentResult r1 = run_experiment(cfg);
    write_report(r1, cfg, dir1.string());

    cfg.workers = 4;
    const ExperimentResult r2 = run_experiment(cfg);
    write_report(r2, cfg, dir2.string());

    CHECK(r1.trials.records.size() == r2.trials.records.size());
    CHECK(dirs_equal(dir1, dir2));
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("trial table counts match the factorial and the curves are complete") {
    const ExperimentConfig cfg = tiny_config();
    const ExperimentResult r = run_experiment(cfg);
    CHECK(r.complete);
    // 2 methods x 1 seed size x 2 replicates x 3 curve points
    CHECK(r.trials.records.size() == 2 * 1 * 2 * 3);
    for (const auto& rec : r.trials.records) {
        CHECK((rec.n_train == 5 || rec.n_train == 9 || rec.n_train == 13));
    }
}

TEST_CASE("interrupt before any trial marks the run incomplete") {
    const ExperimentConfig cfg = tiny_config();
    std::atomic<bool> interrupt{true};
    const ExperimentResult r = run_experiment(cfg, &interrupt);
    CHECK_FALSE(r.complete);
    CHECK(r.trials.records.empty());

    const fs::path dir = "test_exp_interrupted";
    fs::remove_all(dir);
    write_report(r, cfg, dir.string());
    CHECK(fs::exists(dir / "INCOMPLETE"));
    fs::remove_all(dir);
}

TEST_CASE("trials.csv round trips through read_trials_csv") {
    const ExperimentConfig cfg = tiny_config();
    const ExperimentResult r = run_experiment(cfg);
    const fs::path dir = "test_exp_rt";
    fs::remove_all(dir);
    write_report(r, cfg, dir.string());
    const TrialTable back = read_trials_csv((dir / "trials.csv").string());
    REQUIRE(back.records.size() == r.trials.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        CHECK(back.records[i].method == r.trials.records[i].method);
        CHECK(back.records[i].n_train == r.trials.records[i].n_train);
        CHECK(back.records[i].r2 == r.trials.records[i].r2);  // shortest round-trip text
        CHECK(back.records[i].accuracy == r.trials.records[i].accuracy);
    }
    fs::remove_all(dir);
}

TEST_CASE("config hash changes when the config changes") {
    const ExperimentConfig a = tiny_config();
    ExperimentConfig b = tiny_config();
    b.master_seed = 4;
    CHECK(config_hash_hex(config_to_json(a)) != config_hash_hex(config_to_json(b)));
    CHECK(config_hash_hex(config_to_json(a)) == config_hash_hex(config_to_json(a)));
}
