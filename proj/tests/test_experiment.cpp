#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cvb/experiment.hpp"

using namespace cvb;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_temp_config(const std::string& body) {
    const std::string path =
        (std::filesystem::temp_directory_path() / "cvb_test_config.json").string();
    std::ofstream out(path);
    out << body;
    return path;
}

ExperimentConfig tiny_gmm_config() {
    ExperimentConfig c;
    c.experiment = "gmm";
    c.seed_count = 3;
    c.base_seed = 5;
    c.K = 4;
    c.N = 24;
    c.radii = {2.0, 4.0};
    c.threads = 2;
    c.cvb_anchor_subsample = 6;
    return c;
}

}  // namespace

TEST_CASE("config parsing and diagnostics") {
    SUBCASE("valid config round-trips") {
        const std::string path = write_temp_config(R"({
            "experiment": "gmm",
            "seeds": {"count": 7, "base": 11},
            "model": {"K": 4, "N": 50, "radii": [1.0, 2.0]},
            "algorithms": ["kmeans", "vb"],
            "epsilon": 0.02,
            "cvb_anchor_subsample": 10,
            "threads": 3
        })");
        const ExperimentConfig c = load_config(path);
        CHECK(c.seed_count == 7);
        CHECK(c.base_seed == 11);
        CHECK(c.N == 50);
        CHECK(c.radii.size() == 2);
        CHECK(c.algorithms.size() == 2);
        CHECK(c.epsilon == doctest::Approx(0.02));
        CHECK(c.threads == 3);
        CHECK_NOTHROW(validate(c));
    }
    SUBCASE("zero seeds are rejected naming the field") {
        ExperimentConfig c = tiny_gmm_config();
        c.seed_count = 0;
        CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("seeds.count"),
                             std::runtime_error);
    }
    SUBCASE("unknown algorithm is rejected naming the field") {
        ExperimentConfig c = tiny_gmm_config();
        c.algorithms = {"kmeans", "tempered-gibbs"};
        CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("algorithms"),
                             std::runtime_error);
    }
    SUBCASE("empty radius list is rejected") {
        ExperimentConfig c = tiny_gmm_config();
        c.radii.clear();
        CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("radii"), std::runtime_error);
    }
    SUBCASE("malformed JSON is rejected") {
        const std::string path = write_temp_config("{ not json");
        CHECK_THROWS_AS(load_config(path), std::runtime_error);
    }
    SUBCASE("wrongly typed field is rejected by name") {
        const std::string path = write_temp_config(R"({"experiment": 17})");
        CHECK_THROWS_WITH_AS(load_config(path), doctest::Contains("experiment"),
                             std::runtime_error);
    }
}

TEST_CASE("gmm rows are deterministic and thread-count independent") {
    ExperimentConfig c = tiny_gmm_config();
    const std::vector<GmmRunRow> a = run_gmm_rows(c);
    c.threads = 1;
    const std::vector<GmmRunRow> b = run_gmm_rows(c);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == b[i].seed);
        CHECK(a[i].radius == b[i].radius);
        CHECK(a[i].algorithm == b[i].algorithm);
        CHECK(a[i].purity == b[i].purity);
        CHECK(a[i].elbo_final == b[i].elbo_final);
    }
    // rows sorted by (radius, seed, algorithm)
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto key = [](const GmmRunRow& r) {
            return std::make_tuple(r.radius, r.seed, r.algorithm);
        };
        CHECK(key(a[i - 1]) <= key(a[i]));
    }
}

TEST_CASE("bivariate rows: grid plus the VB specialization") {
    ExperimentConfig c;
    c.experiment = "bivariate";
    const std::vector<BivariateRow> rows = run_bivariate_rows(c);
    CHECK(rows.size() == 40);  // 39 grid points + VB
    CHECK(rows.back().rho_init == 0.0);
    CHECK(rows.back().iters == 8);
    CHECK(rows.back().kl_final == doctest::Approx(0.5108).epsilon(1e-3));
}

TEST_CASE("run_experiment writes byte-identical outputs on repeat runs") {
    ExperimentConfig c = tiny_gmm_config();
    c.out_dir = (std::filesystem::temp_directory_path() / "cvb_exp_a").string();
    REQUIRE(run_experiment(c) == 0);
    const std::string csv1 = slurp(c.out_dir + "/runs.csv");
    const std::string json1 = slurp(c.out_dir + "/summary.json");
    c.out_dir = (std::filesystem::temp_directory_path() / "cvb_exp_b").string();
    c.threads = 1;
    REQUIRE(run_experiment(c) == 0);
    CHECK(csv1 == slurp(c.out_dir + "/runs.csv"));
    CHECK(json1 == slurp(c.out_dir + "/summary.json"));
    CHECK(csv1.rfind("# runs-csv v1", 0) == 0);  // versioned header comment
}

TEST_CASE("trace emission") {
    ExperimentConfig c = tiny_gmm_config();
    c.seed_count = 1;
    c.radii = {3.0};
    c.algorithms = {"vb"};
    c.emit_traces = true;
    c.out_dir = (std::filesystem::temp_directory_path() / "cvb_exp_traces").string();
    REQUIRE(run_experiment(c) == 0);
    const std::string trace = slurp(c.out_dir + "/trace_gmm_r3_s5_vb.csv");
    CHECK(trace.rfind("iteration,elbo,delta", 0) == 0);
}

TEST_CASE("oracle-check rows carry the exact bound") {
    ExperimentConfig c;
    c.experiment = "oracle-check";
    c.seed_count = 6;
    c.base_seed = 2;
    c.threads = 2;
    const std::vector<GmmRunRow> rows = run_oracle_rows(c);
    // group rows per seed and compare against the exact row
    std::map<std::uint64_t, double> evidence;
    for (const GmmRunRow& r : rows)
        if (r.algorithm == "exact") evidence[r.seed] = r.elbo_final;
    CHECK(evidence.size() == 6);
    for (const GmmRunRow& r : rows) {
        if (r.algorithm == "exact") continue;
        CHECK(r.elbo_final <= evidence.at(r.seed) + 1e-9);
    }
}
