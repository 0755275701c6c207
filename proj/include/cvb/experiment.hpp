#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cvb/engine.hpp"
#include "cvb/gmm.hpp"

namespace cvb {

struct ExperimentConfig {
    std::string experiment = "gmm";  // gmm | bivariate | oracle-check

    int seed_count = 200;
    std::uint64_t base_seed = 1;

    // bivariate model (standard deviations, not variances)
    double sigma1 = 2.0;
    double sigma2 = 1.0;
    double rho = 0.8;

    // clustering model
    int K = 4;
    int N = 100;
    std::vector<double> radii = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    std::vector<std::string> algorithms = {"kmeans", "em1", "em2",
                                           "vb", "cvb1", "cvb2", "cvb3"};

    double epsilon = 0.01;          // soft-label algorithms; hard-label ones use 0
    std::size_t max_iters = 500;
    int cvb_anchor_subsample = 0;   // 0 = all anchors

    std::string out_dir = ".";
    int threads = 0;                // 0 = hardware concurrency
    bool emit_traces = false;
};

// Parses the JSON config; throws std::runtime_error naming the offending
// field on malformed input.
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& config);

struct GmmRunRow {
    std::uint64_t seed = 0;
    double radius = 0.0;
    std::string algorithm;
    double purity = 0.0;
    double mse = 0.0;
    double elbo_final = 0.0;
    double iters = 0.0;     // per-anchor mean for the CVB schemes
    bool truncated = false;
    bool heuristic_elbo = false;  // CVB1/CVB3 aggregate ELBOs
};

struct MetricStats {
    double mean = 0.0;
    double stdev = 0.0;
    int count = 0;
};

struct GmmAggregate {
    // keyed by (radius, algorithm)
    std::map<std::pair<double, std::string>, std::map<std::string, MetricStats>> cells;
};

// All Monte Carlo rows, computed with the requested concurrency. Output
// order is (radius, seed, algorithm), independent of scheduling.
std::vector<GmmRunRow> run_gmm_rows(const ExperimentConfig& config);

// Tiny-instance oracle sweep; emits an extra "exact" row per instance
// whose elbo_final column carries the enumerated log evidence.
std::vector<GmmRunRow> run_oracle_rows(const ExperimentConfig& config);

GmmAggregate aggregate_rows(const std::vector<GmmRunRow>& rows);

struct BivariateRow {
    double rho_init = 0.0;
    double kl_init = 0.0;
    double kl_final = 0.0;
    std::size_t iters = 0;
    bool converged = false;
};

// 39-point rho grid plus the VB specialization row.
std::vector<BivariateRow> run_bivariate_rows(const ExperimentConfig& config);

// Runs the configured experiment and writes runs.csv / summary.json
// (plus trace files when requested) under config.out_dir. Returns a
// process exit status: 0 on success, 1 on a monotonicity violation,
// 2 on config errors, 3 on I/O errors.
int run_experiment(const ExperimentConfig& config);

}  // namespace cvb
