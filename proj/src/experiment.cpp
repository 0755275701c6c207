#include "cvb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cvb/bivariate.hpp"
#include "cvb/oracle.hpp"
#include "cvb/rng.hpp"

namespace cvb {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownAlgorithms = {"kmeans", "em1", "em2", "vb",
                                                "cvb1", "cvb2", "cvb3"};

template <typename T>
void read_field(const json& j, const char* name, T& out) {
    if (!j.contains(name)) return;
    try {
        out = j.at(name).get<T>();
    } catch (const json::exception&) {
        throw std::runtime_error(std::string("config field '") + name +
                                 "' has the wrong type");
    }
}

int effective_threads(const ExperimentConfig& config) {
    if (config.threads > 0) return config.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(0..count-1) on a small worker pool; results land in
// caller-provided slots so scheduling never changes output.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    read_field(j, "experiment", c.experiment);
    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        read_field(s, "count", c.seed_count);
        read_field(s, "base", c.base_seed);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("sigma1_sq")) {
            double v = 0.0;
            read_field(m, "sigma1_sq", v);
            if (v <= 0.0) throw std::runtime_error("config field 'model.sigma1_sq' must be positive");
            c.sigma1 = std::sqrt(v);
        }
        if (m.contains("sigma2_sq")) {
            double v = 0.0;
            read_field(m, "sigma2_sq", v);
            if (v <= 0.0) throw std::runtime_error("config field 'model.sigma2_sq' must be positive");
            c.sigma2 = std::sqrt(v);
        }
        read_field(m, "rho", c.rho);
        read_field(m, "K", c.K);
        read_field(m, "N", c.N);
        read_field(m, "radii", c.radii);
    }
    read_field(j, "algorithms", c.algorithms);
    read_field(j, "epsilon", c.epsilon);
    std::int64_t max_iters = static_cast<std::int64_t>(c.max_iters);
    read_field(j, "max_iters", max_iters);
    if (max_iters <= 0) throw std::runtime_error("config field 'max_iters' must be positive");
    c.max_iters = static_cast<std::size_t>(max_iters);
    read_field(j, "cvb_anchor_subsample", c.cvb_anchor_subsample);
    read_field(j, "out_dir", c.out_dir);
    read_field(j, "threads", c.threads);
    read_field(j, "emit_traces", c.emit_traces);
    return c;
}

void validate(const ExperimentConfig& c) {
    if (c.experiment != "gmm" && c.experiment != "bivariate" && c.experiment != "oracle-check")
        throw std::runtime_error("config field 'experiment' must be one of gmm, bivariate, oracle-check");
    if (c.seed_count <= 0) throw std::runtime_error("config field 'seeds.count' must be positive");
    if (!(c.epsilon > 0.0)) throw std::runtime_error("config field 'epsilon' must be positive");
    if (c.experiment == "bivariate") {
        if (c.sigma1 <= 0.0 || c.sigma2 <= 0.0)
            throw std::runtime_error("config fields 'model.sigma1_sq'/'model.sigma2_sq' must be positive");
        if (!(std::abs(c.rho) < 1.0))
            throw std::runtime_error("config field 'model.rho' must satisfy |rho| < 1");
    } else {
        if (c.K < 1 || c.K > 4) throw std::runtime_error("config field 'model.K' must be in [1,4]");
        if (c.N < 1) throw std::runtime_error("config field 'model.N' must be positive");
        if (c.radii.empty()) throw std::runtime_error("config field 'model.radii' must be nonempty");
        if (c.algorithms.empty()) throw std::runtime_error("config field 'algorithms' must be nonempty");
        for (const std::string& a : c.algorithms)
            if (!kKnownAlgorithms.count(a))
                throw std::runtime_error("config field 'algorithms' has unknown entry '" + a + "'");
    }
}

namespace {

struct RunOutput {
    std::vector<GmmRunRow> rows;
    std::vector<std::pair<std::string, Trace>> traces;  // when emit_traces is set
};

std::string trace_id(double radius, std::uint64_t seed, const std::string& algo) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "gmm_r%g_s%llu_%s", radius,
                  static_cast<unsigned long long>(seed), algo.c_str());
    return buf;
}

bool wants_cvb(const ExperimentConfig& c) {
    for (const std::string& a : c.algorithms)
        if (a.rfind("cvb", 0) == 0) return true;
    return false;
}

bool wants(const ExperimentConfig& c, const std::string& name) {
    return std::find(c.algorithms.begin(), c.algorithms.end(), name) != c.algorithms.end();
}

GmmRunRow metric_row(std::uint64_t seed, double radius, std::string algorithm,
                     const LabelMatrix& labels, const std::vector<Vec2>& means,
                     const GeneratedData& gen, double elbo, double iters, bool truncated,
                     bool heuristic) {
    GmmRunRow row;
    row.seed = seed;
    row.radius = radius;
    row.algorithm = std::move(algorithm);
    row.purity = purity(labels, gen.truth);
    row.mse = mse_means(means, gen.means);
    row.elbo_final = elbo;
    row.iters = iters;
    row.truncated = truncated;
    row.heuristic_elbo = heuristic;
    return row;
}

// One Monte Carlo clustering run: every configured algorithm on one
// generated data set. The CVB anchor sweep is shared by the three
// aggregation schemes.
RunOutput run_gmm_instance(const ExperimentConfig& c, std::uint64_t seed, double radius,
                           std::uint64_t stream) {
    RunOutput out;
    const GeneratedData gen = generate_data(c.K, radius, c.N, seed, stream);
    const std::vector<Vec2> init = init_means(c.K);
    const StoppingRule soft_rule{c.epsilon, c.max_iters};
    const StoppingRule hard_rule{0.0, c.max_iters};  // label-stability stopping

    const auto run_meanfield =
        [&](const char* name,
            AlgorithmRun (*fn)(const DataSet&, std::vector<Vec2>, const StoppingRule&),
            const StoppingRule& rule) {
            const AlgorithmRun r = fn(gen.data, init, rule);
            out.rows.push_back(metric_row(seed, radius, name, r.labels, r.means, gen,
                                          r.trace.final_elbo(),
                                          static_cast<double>(r.trace.iterations()),
                                          r.trace.truncated, false));
            if (c.emit_traces) out.traces.emplace_back(trace_id(radius, seed, name), r.trace);
        };
    if (wants(c, "kmeans")) run_meanfield("kmeans", kmeans_run, hard_rule);
    if (wants(c, "em1")) run_meanfield("em1", em1_run, hard_rule);
    if (wants(c, "em2")) run_meanfield("em2", em2_run, soft_rule);
    if (wants(c, "vb")) run_meanfield("vb", vb_run, soft_rule);
    if (wants_cvb(c)) {
        const std::vector<int> anchors = anchor_subset(c.N, c.cvb_anchor_subsample);
        std::vector<CvbStructureState> states;
        states.reserve(anchors.size());
        double iters = 0.0;
        bool truncated = false;
        for (int j : anchors) {
            CvbAnchorRun r = cvb_run(gen.data, j, init, soft_rule);
            iters += static_cast<double>(r.trace.iterations());
            truncated = truncated || r.trace.truncated;
            if (c.emit_traces)
                out.traces.emplace_back(
                    trace_id(radius, seed, "cvb_a" + std::to_string(j)), r.trace);
            states.push_back(std::move(r.state));
        }
        iters /= static_cast<double>(anchors.size());
        if (wants(c, "cvb1")) {
            const SchemeResult s = scheme_cvb1(states);
            out.rows.push_back(metric_row(seed, radius, "cvb1", s.labels, s.means, gen,
                                          s.elbo, iters, truncated, true));
        }
        if (wants(c, "cvb2")) {
            const SchemeResult s = scheme_cvb2(states);
            out.rows.push_back(metric_row(seed, radius, "cvb2", s.labels, s.means, gen,
                                          s.elbo, iters, truncated, false));
        }
        if (wants(c, "cvb3")) {
            const SchemeResult s = scheme_cvb3(states);
            out.rows.push_back(metric_row(seed, radius, "cvb3", s.labels, s.means, gen,
                                          s.elbo, iters, truncated, true));
        }
    }
    return out;
}

}  // namespace

namespace {

std::vector<RunOutput> gmm_outputs(const ExperimentConfig& config) {
    validate(config);
    const int runs = static_cast<int>(config.radii.size()) * config.seed_count;
    std::vector<RunOutput> slots(runs);
    parallel_for(runs, effective_threads(config), [&](int idx) {
        const int ri = idx / config.seed_count;
        const int si = idx % config.seed_count;
        slots[idx] = run_gmm_instance(config, config.base_seed + si, config.radii[ri],
                                      static_cast<std::uint64_t>(ri));
    });
    return slots;
}

std::vector<GmmRunRow> flatten_rows(std::vector<RunOutput>& slots) {
    std::vector<GmmRunRow> rows;
    for (RunOutput& s : slots)
        for (GmmRunRow& r : s.rows) rows.push_back(std::move(r));
    std::stable_sort(rows.begin(), rows.end(), [](const GmmRunRow& a, const GmmRunRow& b) {
        if (a.radius != b.radius) return a.radius < b.radius;
        if (a.seed != b.seed) return a.seed < b.seed;
        return a.algorithm < b.algorithm;
    });
    return rows;
}

}  // namespace

std::vector<GmmRunRow> run_gmm_rows(const ExperimentConfig& config) {
    std::vector<RunOutput> slots = gmm_outputs(config);
    return flatten_rows(slots);
}

std::vector<GmmRunRow> run_oracle_rows(const ExperimentConfig& config) {
    validate(config);
    static const int kSizes[3] = {4, 6, 8};
    std::vector<RunOutput> slots(config.seed_count);
    parallel_for(config.seed_count, effective_threads(config), [&](int si) {
        ExperimentConfig local = config;
        local.K = 2;
        local.N = kSizes[si % 3];
        local.cvb_anchor_subsample = 0;
        CounterRng rng(config.base_seed + si, /*stream_id=*/1000000);
        const double radius = 1.0 + 3.0 * rng.next_uniform();
        RunOutput out =
            run_gmm_instance(local, config.base_seed + si, radius, /*stream=*/0);

        const GeneratedData gen =
            generate_data(local.K, radius, local.N, config.base_seed + si, 0);
        const ExactPosterior exact = enumerate_posterior(gen.data);
        LabelMatrix map_labels;
        map_labels.K = local.K;
        map_labels.assign.resize(local.N);
        for (int i = 0; i < local.N; ++i) {
            int best = 0;
            for (int k = 1; k < local.K; ++k)
                if (exact.label_marginals.at(k, i) > exact.label_marginals.at(best, i))
                    best = k;
            map_labels.assign[i] = best;
        }
        GmmRunRow row;
        row.seed = config.base_seed + si;
        row.radius = radius;
        row.algorithm = "exact";
        row.purity = purity(map_labels, gen.truth);
        row.mse = mse_means(exact.posterior_mean, gen.means);
        row.elbo_final = exact.log_evidence;
        row.iters = 0.0;
        out.rows.push_back(row);
        slots[si] = std::move(out);
    });
    std::vector<GmmRunRow> rows;
    for (RunOutput& s : slots)
        for (GmmRunRow& r : s.rows) rows.push_back(std::move(r));
    return rows;
}

GmmAggregate aggregate_rows(const std::vector<GmmRunRow>& rows) {
    struct Acc {
        double sum = 0.0, sumsq = 0.0;
        int n = 0;
        void add(double v) { sum += v; sumsq += v * v; ++n; }
        MetricStats stats() const {
            MetricStats s;
            s.count = n;
            if (n == 0) return s;
            s.mean = sum / n;
            const double var = std::max(0.0, sumsq / n - s.mean * s.mean);
            s.stdev = std::sqrt(var);
            return s;
        }
    };
    std::map<std::pair<double, std::string>, std::map<std::string, Acc>> acc;
    for (const GmmRunRow& r : rows) {
        auto& cell = acc[{r.radius, r.algorithm}];
        cell["purity"].add(r.purity);
        cell["mse"].add(r.mse);
        cell["elbo_final"].add(r.elbo_final);
        cell["iters"].add(r.iters);
        cell["truncated"].add(r.truncated ? 1.0 : 0.0);
    }
    GmmAggregate agg;
    for (const auto& [key, metrics] : acc)
        for (const auto& [name, a] : metrics) agg.cells[key][name] = a.stats();
    return agg;
}

std::vector<BivariateRow> run_bivariate_rows(const ExperimentConfig& config) {
    validate(config);
    const BivarTrueModel model{config.sigma1, config.sigma2, config.rho};
    const StoppingRule rule{config.epsilon, config.max_iters};
    std::vector<BivariateRow> rows;
    for (const BivariateSweepRow& r :
         bivariate_grid_sweep(model, default_rho_grid(), rule))
        rows.push_back({r.rho_init, r.kl_init, r.kl_final, r.iters, r.converged});
    // VB specialization appended as the final row.
    const BivariateRunResult vb = run_bivariate(model, CvbBivarState{1.0, 1.0, 0.0}, rule);
    rows.push_back({0.0, vb.kl_init, vb.kl_final, vb.trace.iterations(), vb.trace.converged});
    return rows;
}

namespace {

void write_gmm_csv(const std::string& path, const std::vector<GmmRunRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# runs-csv v1: seed,radius,algorithm,purity,mse,elbo_final,iters,truncated\n";
    out << "seed,radius,algorithm,purity,mse,elbo_final,iters,truncated\n";
    for (const GmmRunRow& r : rows) {
        out << r.seed << ',' << format_double(r.radius) << ',' << r.algorithm << ','
            << format_double(r.purity) << ',' << format_double(r.mse) << ','
            << format_double(r.elbo_final) << ',' << format_double(r.iters) << ','
            << (r.truncated ? 1 : 0) << '\n';
    }
}

void write_bivariate_csv(const std::string& path, const std::vector<BivariateRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# runs-csv v1: rho_init,kl_init,kl_final,iters,converged\n";
    out << "rho_init,kl_init,kl_final,iters,converged\n";
    for (const BivariateRow& r : rows) {
        out << format_double(r.rho_init) << ',' << format_double(r.kl_init) << ','
            << format_double(r.kl_final) << ',' << r.iters << ','
            << (r.converged ? 1 : 0) << '\n';
    }
}

void write_trace_csv(const std::string& dir, const std::string& id, const Trace& trace) {
    const std::string path = dir + "/trace_" + id + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iteration,elbo,delta\n";
    for (const TracePoint& p : trace.points)
        out << p.iteration << ',' << format_double(p.elbo) << ','
            << format_double(p.delta) << '\n';
}

json stats_json(const MetricStats& s) {
    return json{{"mean", s.mean}, {"std", s.stdev}, {"count", s.count}};
}

void write_gmm_summary(const std::string& path, const GmmAggregate& agg,
                       const ExperimentConfig& config) {
    json root;
    root["experiment"] = config.experiment;
    json cells = json::array();
    for (const auto& [key, metrics] : agg.cells) {
        json cell;
        cell["radius"] = key.first;
        cell["algorithm"] = key.second;
        for (const auto& [name, s] : metrics) cell[name] = stats_json(s);
        cell["elbo_is_heuristic"] = (key.second == "cvb1" || key.second == "cvb3");
        cells.push_back(cell);
    }
    root["cells"] = cells;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << root.dump(2) << '\n';
}

void write_bivariate_summary(const std::string& path, const std::vector<BivariateRow>& rows,
                             const ExperimentConfig& config) {
    json root;
    root["experiment"] = config.experiment;
    const BivariateRow& vb = rows.back();
    double sum_iters = 0.0;
    int exact_window = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        sum_iters += static_cast<double>(rows[i].iters);
        if (rows[i].kl_final <= 0.01) ++exact_window;
    }
    root["grid_points"] = rows.size() - 1;
    root["grid_mean_iters"] = sum_iters / static_cast<double>(rows.size() - 1);
    root["grid_exact_count"] = exact_window;
    root["vb"] = json{{"kl_final", vb.kl_final}, {"iters", vb.iters},
                      {"converged", vb.converged}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << root.dump(2) << '\n';
}

}  // namespace

int run_experiment(const ExperimentConfig& config) {
    try {
        validate(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    try {
        std::filesystem::create_directories(config.out_dir);
        const std::string runs_path = config.out_dir + "/runs.csv";
        const std::string summary_path = config.out_dir + "/summary.json";
        if (config.experiment == "bivariate") {
            const std::vector<BivariateRow> rows = run_bivariate_rows(config);
            write_bivariate_csv(runs_path, rows);
            write_bivariate_summary(summary_path, rows, config);
            if (config.emit_traces) {
                const BivarTrueModel model{config.sigma1, config.sigma2, config.rho};
                const StoppingRule rule{config.epsilon, config.max_iters};
                for (std::size_t g = 0; g + 1 < rows.size(); ++g) {
                    const BivariateRunResult res = run_bivariate(
                        model, CvbBivarState{1.0, 1.0, rows[g].rho_init}, rule);
                    char id[48];
                    std::snprintf(id, sizeof(id), "bivariate_g%02zu", g);
                    write_trace_csv(config.out_dir, id, res.trace);
                }
                const BivariateRunResult vb =
                    run_bivariate(model, CvbBivarState{1.0, 1.0, 0.0}, rule);
                write_trace_csv(config.out_dir, "bivariate_vb", vb.trace);
            }
        } else if (config.experiment == "gmm") {
            std::vector<RunOutput> slots = gmm_outputs(config);
            if (config.emit_traces)
                for (const RunOutput& s : slots)
                    for (const auto& [id, trace] : s.traces)
                        write_trace_csv(config.out_dir, id, trace);
            const std::vector<GmmRunRow> rows = flatten_rows(slots);
            write_gmm_csv(runs_path, rows);
            write_gmm_summary(summary_path, aggregate_rows(rows), config);
        } else {
            const std::vector<GmmRunRow> rows = run_oracle_rows(config);
            write_gmm_csv(runs_path, rows);
            write_gmm_summary(summary_path, aggregate_rows(rows), config);
        }
    } catch (const std::logic_error& e) {
        std::cerr << "monotonicity violation: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

}  // namespace cvb
