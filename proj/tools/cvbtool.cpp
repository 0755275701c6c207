#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvb/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Copula/mean-field variational inference experiment driver"};

    std::string config_path;
    std::string out_dir;
    std::string experiment;
    int threads = -1;

    app.add_option("--config", config_path, "JSON experiment config (see README for schema)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--experiment", experiment,
                   "experiment name override: gmm | bivariate | oracle-check");
    app.add_option("--threads", threads, "worker thread count (overrides config)");

    CLI11_PARSE(app, argc, argv);

    cvb::ExperimentConfig config;
    if (!config_path.empty()) {
        try {
            config = cvb::load_config(config_path);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return 2;
        }
    }
    if (!experiment.empty()) config.experiment = experiment;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (threads >= 0) config.threads = threads;

    return cvb::run_experiment(config);
}
