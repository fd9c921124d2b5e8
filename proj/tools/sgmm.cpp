// sgmm: command-line front end for the clustering library.
//
// Exit status: 0 success, 2 bad arguments or configuration, 3 file errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <sgmm/sgmm.hpp>

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    std::string format = "csv";
    std::string out;
};

struct FitOptions {
    std::string input;
    std::string algo = "dgmm";
    std::size_t clusters = 15;
    std::size_t trunc = 5;
    std::size_t cands = 5;
    std::size_t chain = 5;
    double eps = 1e-3;
    std::size_t max_iters = 1000;
    std::size_t coreset = 0; // 0: no coreset
    std::size_t repetitions = 1;
    bool count_eval = false;
};

void add_fit_options(CLI::App* cmd, FitOptions& f) {
    cmd->add_option("-i,--input", f.input, "Dataset (CSV or SGMM binary)")->required();
    cmd->add_option("--algo", f.algo, "Algorithm")->check(CLI::IsMember({"dgmm", "em", "kmeans"}))->capture_default_str();
    cmd->add_option("--clusters", f.clusters, "Number of clusters M")->capture_default_str();
    cmd->add_option("--trunc", f.trunc, "Truncation size H")->capture_default_str();
    cmd->add_option("--cands", f.cands, "Candidates per iteration R")->capture_default_str();
    cmd->add_option("--chain", f.chain, "AFK-MC2 chain length m")->capture_default_str();
    cmd->add_option("--eps", f.eps, "Relative convergence threshold")->capture_default_str();
    cmd->add_option("--max-iters", f.max_iters, "Iteration cap")->capture_default_str();
    cmd->add_option("--coreset", f.coreset, "Lightweight coreset size N' (0 = full data)")->capture_default_str();
    cmd->add_option("--repetitions", f.repetitions, "Independent repetitions")->capture_default_str();
    cmd->add_flag("--count-eval", f.count_eval, "Count the full-data quantization error pass");
}

sgmm::ExperimentConfig make_config(const FitOptions& f, const GlobalOptions& g) {
    sgmm::ExperimentConfig cfg;
    cfg.algorithm = sgmm::parse_algorithm(f.algo);
    cfg.clusters = f.clusters;
    cfg.truncation = f.trunc;
    cfg.candidates = f.cands;
    cfg.chain_length = f.chain;
    cfg.eps = f.eps;
    cfg.max_iters = f.max_iters;
    if (f.coreset > 0) {
        cfg.coreset = f.coreset;
    }
    cfg.seed = g.seed;
    cfg.repetitions = f.repetitions;
    cfg.threads = g.threads;
    cfg.count_evaluation = f.count_eval;
    return cfg;
}

json config_json(const sgmm::ExperimentConfig& cfg) {
    json j;
    j["algorithm"] = sgmm::algorithm_name(cfg.algorithm);
    j["M"] = cfg.clusters;
    j["H"] = cfg.truncation;
    j["R"] = cfg.candidates;
    j["m"] = cfg.chain_length;
    j["eps"] = cfg.eps;
    j["max_iters"] = cfg.max_iters;
    j["coreset"] = cfg.coreset ? json(*cfg.coreset) : json(nullptr);
    j["seed"] = cfg.seed;
    j["repetitions"] = cfg.repetitions;
    return j;
}

json matrix_json(const sgmm::Matrix<double>& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
    }
    return rows;
}

// Writes to --out, or stdout when it is empty.
template <class Fn>
void emit(const GlobalOptions& g, Fn&& write) {
    if (g.out.empty()) {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(g.out, std::ios::binary);
    if (!out) {
        throw sgmm::io_error("cannot open '" + g.out + "' for writing");
    }
    write(out);
    if (!out) {
        throw sgmm::io_error("failed writing '" + g.out + "'");
    }
}

void run_generate(const GlobalOptions& g, std::size_t points, std::size_t centers, std::size_t dim, double spread,
                  const std::string& centers_out, const std::string& labels_out) {
    const auto syn = sgmm::generate_synthetic(points, centers, dim, spread, g.seed);
    if (g.out.empty()) {
        sgmm::write_csv(std::cout, syn.data);
    } else {
        sgmm::save_data(g.out, syn.data);
    }
    if (!centers_out.empty()) {
        sgmm::save_data(centers_out, syn.centers);
    }
    if (!labels_out.empty()) {
        std::ofstream out(labels_out);
        if (!out) {
            throw sgmm::io_error("cannot open '" + labels_out + "' for writing");
        }
        out << "label\n";
        for (auto l : syn.labels) {
            out << l << '\n';
        }
    }
}

void run_coreset(const GlobalOptions& g, const std::string& input, std::size_t size) {
    const auto data = sgmm::load_data(input);
    sgmm::DistanceCounter counter;
    const auto core = sgmm::lightweight_coreset(data, size, g.seed, counter);
    if (g.out.empty()) {
        sgmm::write_csv(std::cout, core);
    } else {
        sgmm::save_data(g.out, core);
    }
}

void run_fit(const GlobalOptions& g, const FitOptions& f, const std::string& centers_out) {
    const auto data = sgmm::load_data(f.input);
    const auto cfg = make_config(f, g);
    const auto reports = sgmm::run_experiment(cfg, data);
    if (!centers_out.empty()) {
        sgmm::save_data(centers_out, reports.front().centers);
    }
    emit(g, [&](std::ostream& out) {
        if (g.format == "json") {
            json j;
            j["schema"] = "sgmm-fit/1";
            j["config"] = config_json(cfg);
            j["runs"] = json::array();
            for (const auto& r : reports) {
                json run;
                run["repetition"] = r.repetition;
                run["seed"] = r.seed;
                run["iterations"] = r.iterations;
                run["converged"] = r.converged;
                run["quantization_error"] = r.quantization_error;
                run["variance"] = r.variance;
                run["evals"] = {{"coreset", r.coreset_evals}, {"seeding", r.seeding_evals}, {"init", r.init_evals},
                                {"fit", r.fit_evals},         {"total", r.total_evals}};
                run["wall_seconds"] = r.wall_seconds;
                run["objective"] = r.objective;
                run["centers"] = matrix_json(r.centers);
                j["runs"].push_back(std::move(run));
            }
            out << j.dump(2) << '\n';
        } else {
            out << "# sgmm-fit v1\n"
                << "algorithm,repetition,seed,iterations,converged,quantization_error,variance,"
                   "init_evals,fit_evals,total_evals,final_objective,wall_seconds\n";
            for (const auto& r : reports) {
                out << sgmm::algorithm_name(cfg.algorithm) << ',' << r.repetition << ',' << r.seed << ','
                    << r.iterations << ',' << (r.converged ? 1 : 0) << ','
                    << sgmm::format_double(r.quantization_error) << ',' << sgmm::format_double(r.variance) << ','
                    << r.init_evals << ',' << r.fit_evals << ',' << r.total_evals << ','
                    << sgmm::format_double(r.objective.empty() ? 0.0 : r.objective.back()) << ','
                    << sgmm::format_double(r.wall_seconds) << '\n';
            }
        }
    });
}

void run_eval(const GlobalOptions& g, const std::string& input, const std::string& centers_path,
              const std::string& reference_path, std::optional<double> baseline_q) {
    const auto data = sgmm::load_data(input);
    const auto centers = sgmm::load_matrix(centers_path);
    if (centers.cols() != data.dim()) {
        throw sgmm::usage_error("centers and data differ in dimension");
    }
    const double q = sgmm::quantization_error(data, centers, nullptr, g.threads);
    std::optional<double> eta;
    if (baseline_q) {
        eta = sgmm::relative_error(q, *baseline_q);
    }
    std::optional<double> rmse;
    if (!reference_path.empty()) {
        rmse = sgmm::center_rmse(centers, sgmm::load_matrix(reference_path));
    }
    emit(g, [&](std::ostream& out) {
        if (g.format == "json") {
            json j;
            j["schema"] = "sgmm-eval/1";
            j["quantization_error"] = q;
            j["eta"] = eta ? json(*eta) : json(nullptr);
            j["center_rmse"] = rmse ? json(*rmse) : json(nullptr);
            out << j.dump(2) << '\n';
        } else {
            auto opt = [](const std::optional<double>& v) { return v ? sgmm::format_double(*v) : std::string(); };
            out << "# sgmm-eval v1\nquantization_error,eta,center_rmse\n"
                << sgmm::format_double(q) << ',' << opt(eta) << ',' << opt(rmse) << '\n';
        }
    });
}

void run_sweep(const GlobalOptions& g, const FitOptions& f, const std::string& axis,
               const std::vector<std::size_t>& values, bool baseline, bool no_timing) {
    const auto data = sgmm::load_data(f.input);
    const auto rows = sgmm::sweep(make_config(f, g), sgmm::parse_axis(axis), values, data, baseline);
    emit(g, [&](std::ostream& out) {
        if (g.format == "json") {
            json j;
            j["schema"] = "sgmm-sweep/1";
            j["rows"] = json::array();
            for (const auto& r : rows) {
                auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
                j["rows"].push_back({{"axis", r.axis},
                                     {"value", r.value},
                                     {"algorithm", r.algorithm},
                                     {"repetition", r.repetition},
                                     {"seed", r.seed},
                                     {"iterations", r.iterations},
                                     {"converged", r.converged},
                                     {"init_evals", r.init_evals},
                                     {"fit_evals", r.fit_evals},
                                     {"total_evals", r.total_evals},
                                     {"quantization_error", r.quantization_error},
                                     {"kmeans_quantization_error", opt(r.kmeans_quantization_error)},
                                     {"kmeans_total_evals", opt(r.kmeans_total_evals)},
                                     {"eta", opt(r.eta)},
                                     {"speedup", opt(r.speedup)},
                                     {"wall_seconds", no_timing ? 0.0 : r.wall_seconds}});
            }
            out << j.dump(2) << '\n';
        } else {
            sgmm::write_sweep_csv(out, rows, !no_timing);
        }
    });
}

void run_stability(const GlobalOptions& g, FitOptions f) {
    const auto data = sgmm::load_data(f.input);
    const auto report = sgmm::stability(make_config(f, g), data);
    emit(g, [&](std::ostream& out) {
        if (g.format == "json") {
            json j;
            j["schema"] = "sgmm-stability/1";
            j["runs"] = report.runs.size();
            j["mean"] = report.mean;
            j["stddev"] = report.stddev;
            j["cv"] = report.cv;
            j["pairwise_rmse"] = report.pairwise_rmse;
            out << j.dump(2) << '\n';
        } else {
            out << "# sgmm-stability v1\nruns,pairs,mean,stddev,cv\n"
                << report.runs.size() << ',' << report.pairwise_rmse.size() << ','
                << sgmm::format_double(report.mean) << ',' << sgmm::format_double(report.stddev) << ','
                << sgmm::format_double(report.cv) << '\n';
        }
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Truncated variational EM clustering (D-GMM) with k-means and exact EM baselines"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (SGMM_THREADS overrides)")->capture_default_str();
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--out", g.out, "Output file (default: stdout)");

    auto* gen = app.add_subcommand("generate", "Write synthetic Gaussian-blob data");
    std::size_t points = 5000, centers = 15, dim = 2;
    double spread = 1.0;
    std::string centers_out, labels_out;
    gen->add_option("--points", points, "Number of points N")->capture_default_str();
    gen->add_option("--centers", centers, "Number of true centers")->capture_default_str();
    gen->add_option("--dim", dim, "Dimension D")->capture_default_str();
    gen->add_option("--spread", spread, "Per-dimension standard deviation around a center")->capture_default_str();
    gen->add_option("--centers-out", centers_out, "Also write the true centers here");
    gen->add_option("--labels-out", labels_out, "Also write the true labels here");

    auto* core = app.add_subcommand("coreset", "Build a lightweight coreset");
    std::string core_input;
    std::size_t core_size = 1000;
    core->add_option("-i,--input", core_input, "Dataset")->required();
    core->add_option("--size", core_size, "Coreset size N'")->capture_default_str();

    auto* fit = app.add_subcommand("fit", "Fit a model and report");
    FitOptions fit_opts;
    std::string fit_centers_out;
    add_fit_options(fit, fit_opts);
    fit->add_option("--centers-out", fit_centers_out, "Write the centers of the first repetition here");

    auto* eval = app.add_subcommand("eval", "Quantization error of given centers");
    std::string eval_input, eval_centers, eval_reference;
    std::optional<double> eval_baseline;
    eval->add_option("-i,--input", eval_input, "Dataset")->required();
    eval->add_option("--centers", eval_centers, "Centers file")->required();
    eval->add_option("--reference", eval_reference, "Reference centers for the matched RMSE");
    eval->add_option("--baseline-q", eval_baseline, "Baseline quantization error for eta");

    auto* sw = app.add_subcommand("sweep", "Sweep one hyperparameter");
    FitOptions sweep_opts;
    std::string axis = "M";
    std::vector<std::size_t> values;
    bool baseline = false, no_timing = false;
    add_fit_options(sw, sweep_opts);
    sw->add_option("--axis", axis, "M, H, R or coreset")->check(CLI::IsMember({"M", "H", "R", "coreset"}))->capture_default_str();
    sw->add_option("--values", values, "Axis values")->required()->delimiter(',');
    sw->add_flag("--baseline", baseline, "Pair every run with full-data k-means (eta, speedup)");
    sw->add_flag("--no-timing", no_timing, "Write 0 for wall time so output is byte-reproducible");

    auto* stab = app.add_subcommand("stability", "Pairwise center RMSE across repetitions");
    FitOptions stab_opts;
    stab_opts.repetitions = 100;
    add_fit_options(stab, stab_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (const char* env = std::getenv("SGMM_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v < 1) {
                throw std::invalid_argument("nonpositive");
            }
            g.threads = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            std::cerr << "error: SGMM_THREADS must be a positive integer\n";
            return kExitUsage;
        }
    }
    g.threads = std::max<std::size_t>(g.threads, 1);

    try {
        if (*gen) {
            run_generate(g, points, centers, dim, spread, centers_out, labels_out);
        } else if (*core) {
            run_coreset(g, core_input, core_size);
        } else if (*fit) {
            run_fit(g, fit_opts, fit_centers_out);
        } else if (*eval) {
            run_eval(g, eval_input, eval_centers, eval_reference, eval_baseline);
        } else if (*sw) {
            run_sweep(g, sweep_opts, axis, values, baseline, no_timing);
        } else if (*stab) {
            run_stability(g, stab_opts);
        }
    } catch (const sgmm::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const sgmm::usage_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return 0;
}
