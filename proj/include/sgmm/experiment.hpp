// Experiment drivers: one configured run per repetition (optional coreset,
// AFK-MC^2 seeding, fit, full-data quantization error), sweeps over one
// hyperparameter and the pairwise stability study.
#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

#include "afkmc2.hpp"
#include "coreset.hpp"
#include "dgmm.hpp"
#include "distance.hpp"
#include "errors.hpp"
#include "exact_em.hpp"
#include "io.hpp"
#include "kmeans.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace sgmm {

enum class Algorithm { dgmm, exact_em, kmeans };

inline std::string_view algorithm_name(Algorithm a) {
    switch (a) {
    case Algorithm::dgmm:
        return "dgmm";
    case Algorithm::exact_em:
        return "em";
    case Algorithm::kmeans:
        return "kmeans";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
    if (name == "dgmm") {
        return Algorithm::dgmm;
    }
    if (name == "em" || name == "exact_em") {
        return Algorithm::exact_em;
    }
    if (name == "kmeans") {
        return Algorithm::kmeans;
    }
    throw usage_error("unknown algorithm '" + std::string(name) + "'");
}

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::dgmm;
    std::size_t clusters = 15;    // M
    std::size_t truncation = 3;   // H
    std::size_t candidates = 5;   // R
    std::size_t chain_length = 5; // m
    double eps = 1e-3;
    std::size_t max_iters = 1000;
    std::optional<std::size_t> coreset; // N'
    std::uint64_t seed = 0;
    std::size_t repetitions = 1;
    std::size_t threads = 1;
    bool count_evaluation = false; // count the full-data Q pass into total_evals

    void validate(std::size_t n_points) const {
        if (clusters == 0) {
            throw usage_error("need at least one cluster");
        }
        if (algorithm == Algorithm::dgmm) {
            if (truncation == 0 || truncation > clusters) {
                throw usage_error("truncation H must satisfy 1 <= H <= M");
            }
            if (candidates == 0) {
                throw usage_error("candidates R must be at least 1");
            }
        }
        if (chain_length == 0) {
            throw usage_error("chain length m must be at least 1");
        }
        if (!(eps > 0.0)) {
            throw usage_error("eps must be positive");
        }
        if (max_iters == 0) {
            throw usage_error("max_iters must be at least 1");
        }
        if (repetitions == 0) {
            throw usage_error("repetitions must be at least 1");
        }
        if (coreset && (*coreset == 0 || *coreset > n_points)) {
            throw usage_error("coreset size must satisfy 1 <= N' <= N");
        }
        const std::size_t fit_points = coreset ? *coreset : n_points;
        if (clusters > fit_points) {
            throw usage_error("more clusters than (coreset) points");
        }
    }
};

// Seed of repetition r; repetition 0 uses the configured seed itself.
inline std::uint64_t repetition_seed(std::uint64_t seed, std::size_t r) {
    return r == 0 ? seed : splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r)));
}

struct FitReport {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::vector<double> objective; // free energy per iteration (k-means: Q)
    double quantization_error = 0.0; // on the full data
    std::uint64_t coreset_evals = 0;
    std::uint64_t seeding_evals = 0;
    std::uint64_t init_evals = 0;  // coreset + seeding + model initialisation
    std::uint64_t fit_evals = 0;
    std::uint64_t total_evals = 0;
    std::size_t iterations = 0;
    bool converged = false;
    double wall_seconds = 0.0;
    Matrix<double> centers;
    double variance = 0.0; // 0 for k-means
};

// A single repetition with an explicit seed.
inline FitReport run_once(const ExperimentConfig& cfg, const DataMatrix<double>& data, std::uint64_t seed,
                          std::size_t threads) {
    const auto start = std::chrono::steady_clock::now();
    FitReport report;
    report.seed = seed;

    std::optional<DataMatrix<double>> coreset;
    if (cfg.coreset) {
        DistanceCounter counter;
        coreset.emplace(lightweight_coreset(data, *cfg.coreset, seed, counter));
        report.coreset_evals = counter.count();
    }
    const DataMatrix<double>& fit_data = coreset ? *coreset : data;

    DistanceCounter seeding;
    Matrix<double> init = afkmc2_seed(fit_data, SeedingConfig{cfg.clusters, cfg.chain_length, seed}, seeding);
    report.seeding_evals = seeding.count();

    FitTrace trace;
    switch (cfg.algorithm) {
    case Algorithm::dgmm: {
        Dgmm<double> model(fit_data, std::move(init), DgmmOptions{cfg.truncation, cfg.candidates, seed, threads});
        trace = model.fit(cfg.eps, cfg.max_iters);
        report.centers = model.params().means;
        report.variance = model.params().variance;
        break;
    }
    case Algorithm::exact_em: {
        ExactEm<double> model(fit_data, std::move(init), threads);
        trace = model.fit(cfg.eps, cfg.max_iters);
        trace.init_evals = model.init_evals();
        report.centers = model.params().means;
        report.variance = model.params().variance;
        break;
    }
    case Algorithm::kmeans: {
        KMeans<double> model(fit_data, std::move(init), threads);
        trace = model.fit(cfg.eps, cfg.max_iters);
        report.centers = model.centers();
        break;
    }
    }
    report.objective = std::move(trace.objective);
    report.iterations = trace.iterations;
    report.converged = trace.converged;
    report.init_evals = report.coreset_evals + report.seeding_evals + trace.init_evals;
    report.fit_evals = trace.fit_evals;
    report.total_evals = report.init_evals + report.fit_evals;

    DistanceCounter evaluation;
    report.quantization_error =
        quantization_error(data, report.centers, cfg.count_evaluation ? &evaluation : nullptr, threads);
    report.total_evals += evaluation.count();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// Repetitions run as independent jobs. With several repetitions and several
// threads each job is single-threaded; results do not depend on either.
inline std::vector<FitReport> run_experiment(const ExperimentConfig& cfg, const DataMatrix<double>& data) {
    cfg.validate(data.n_points());
    std::vector<FitReport> reports(cfg.repetitions);
    const std::size_t threads = std::max<std::size_t>(cfg.threads, 1);
    const bool jobs_parallel = cfg.repetitions > 1 && threads > 1;
    parallel_indices(cfg.repetitions, jobs_parallel ? threads : 1, [&](std::size_t r) {
        reports[r] = run_once(cfg, data, repetition_seed(cfg.seed, r), jobs_parallel ? 1 : threads);
        reports[r].repetition = r;
    });
    return reports;
}

enum class SweepAxis { clusters, truncation, candidates, coreset };

inline std::string_view axis_name(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::clusters:
        return "M";
    case SweepAxis::truncation:
        return "H";
    case SweepAxis::candidates:
        return "R";
    case SweepAxis::coreset:
        return "coreset";
    }
    return "?";
}

inline SweepAxis parse_axis(std::string_view name) {
    if (name == "M") {
        return SweepAxis::clusters;
    }
    if (name == "H") {
        return SweepAxis::truncation;
    }
    if (name == "R") {
        return SweepAxis::candidates;
    }
    if (name == "coreset" || name == "N'") {
        return SweepAxis::coreset;
    }
    throw usage_error("unknown sweep axis '" + std::string(name) + "' (expected M, H, R or coreset)");
}

inline ExperimentConfig with_axis(ExperimentConfig cfg, SweepAxis axis, std::size_t value) {
    switch (axis) {
    case SweepAxis::clusters:
        cfg.clusters = value;
        break;
    case SweepAxis::truncation:
        cfg.truncation = value;
        break;
    case SweepAxis::candidates:
        cfg.candidates = value;
        break;
    case SweepAxis::coreset:
        cfg.coreset = value;
        break;
    }
    return cfg;
}

struct SweepRow {
    std::string axis;
    std::size_t value = 0;
    std::string algorithm;
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    bool converged = false;
    std::uint64_t init_evals = 0;
    std::uint64_t fit_evals = 0;
    std::uint64_t total_evals = 0;
    double quantization_error = 0.0;
    std::optional<double> kmeans_quantization_error;
    std::optional<std::uint64_t> kmeans_total_evals;
    std::optional<double> eta;
    std::optional<double> speedup;
    double wall_seconds = 0.0;

    bool operator==(const SweepRow&) const = default;
};

// One run_experiment per value. With a baseline, every repetition is paired
// with full-data k-means from the same seed and M, which gives eta and the
// distance-evaluation speedup.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::size_t>& values,
                                   const DataMatrix<double>& data, bool with_baseline) {
    if (values.empty()) {
        throw usage_error("sweep needs at least one value");
    }
    std::map<std::size_t, std::vector<FitReport>> baselines; // by M
    std::vector<SweepRow> rows;
    for (const std::size_t value : values) {
        const ExperimentConfig cfg = with_axis(base, axis, value);
        const auto reports = run_experiment(cfg, data);
        const std::vector<FitReport>* baseline = nullptr;
        if (with_baseline) {
            auto it = baselines.find(cfg.clusters);
            if (it == baselines.end()) {
                ExperimentConfig km = cfg;
                km.algorithm = Algorithm::kmeans;
                km.coreset.reset();
                it = baselines.emplace(cfg.clusters, run_experiment(km, data)).first;
            }
            baseline = &it->second;
        }
        for (const auto& rep : reports) {
            SweepRow row;
            row.axis = std::string(axis_name(axis));
            row.value = value;
            row.algorithm = std::string(algorithm_name(cfg.algorithm));
            row.repetition = rep.repetition;
            row.seed = rep.seed;
            row.iterations = rep.iterations;
            row.converged = rep.converged;
            row.init_evals = rep.init_evals;
            row.fit_evals = rep.fit_evals;
            row.total_evals = rep.total_evals;
            row.quantization_error = rep.quantization_error;
            row.wall_seconds = rep.wall_seconds;
            if (baseline != nullptr) {
                const auto& km = (*baseline)[rep.repetition];
                row.kmeans_quantization_error = km.quantization_error;
                row.kmeans_total_evals = km.total_evals;
                row.eta = relative_error(rep.quantization_error, km.quantization_error);
                if (rep.total_evals > 0) {
                    row.speedup = static_cast<double>(km.total_evals) / static_cast<double>(rep.total_evals);
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline constexpr std::string_view kSweepSchema = "# sgmm-sweep v1";
inline constexpr std::string_view kSweepHeader =
    "axis,value,algorithm,repetition,seed,iterations,converged,init_evals,fit_evals,total_evals,"
    "quantization_error,kmeans_quantization_error,kmeans_total_evals,eta,speedup,wall_seconds";

// With include_timing = false the wall_seconds column is written as 0 so the
// file is byte-identical across runs.
inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool include_timing = true) {
    auto opt = [](const auto& v) -> std::string {
        if (!v) {
            return "";
        }
        if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
            return format_double(*v);
        } else {
            return std::to_string(*v);
        }
    };
    out << kSweepSchema << '\n' << kSweepHeader << '\n';
    for (const auto& r : rows) {
        out << r.axis << ',' << r.value << ',' << r.algorithm << ',' << r.repetition << ',' << r.seed << ','
            << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.init_evals << ',' << r.fit_evals << ','
            << r.total_evals << ',' << format_double(r.quantization_error) << ','
            << opt(r.kmeans_quantization_error) << ',' << opt(r.kmeans_total_evals) << ',' << opt(r.eta) << ','
            << opt(r.speedup) << ',' << format_double(include_timing ? r.wall_seconds : 0.0) << '\n';
    }
}

namespace detail {

inline std::uint64_t parse_unsigned(std::string_view text) {
    std::uint64_t value = 0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw io_error("not an unsigned integer: '" + std::string(text) + "'");
    }
    return value;
}

} // namespace detail

inline std::vector<SweepRow> read_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kSweepSchema) {
        throw io_error("sweep CSV does not start with '" + std::string(kSweepSchema) + "'");
    }
    if (!std::getline(in, line) || line != kSweepHeader) {
        throw io_error("sweep CSV header does not match schema v1");
    }
    std::vector<SweepRow> rows;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 16) {
            throw io_error("sweep CSV line " + std::to_string(line_no) + ": expected 16 fields");
        }
        try {
            SweepRow r;
            r.axis = std::string(f[0]);
            r.value = detail::parse_unsigned(f[1]);
            r.algorithm = std::string(f[2]);
            r.repetition = detail::parse_unsigned(f[3]);
            r.seed = detail::parse_unsigned(f[4]);
            r.iterations = detail::parse_unsigned(f[5]);
            r.converged = detail::parse_unsigned(f[6]) != 0;
            r.init_evals = detail::parse_unsigned(f[7]);
            r.fit_evals = detail::parse_unsigned(f[8]);
            r.total_evals = detail::parse_unsigned(f[9]);
            r.quantization_error = parse_double(f[10]);
            if (!f[11].empty()) {
                r.kmeans_quantization_error = parse_double(f[11]);
            }
            if (!f[12].empty()) {
                r.kmeans_total_evals = detail::parse_unsigned(f[12]);
            }
            if (!f[13].empty()) {
                r.eta = parse_double(f[13]);
            }
            if (!f[14].empty()) {
                r.speedup = parse_double(f[14]);
            }
            r.wall_seconds = parse_double(f[15]);
            rows.push_back(std::move(r));
        } catch (const io_error& e) {
            throw io_error("sweep CSV line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

struct StabilityReport {
    std::vector<FitReport> runs;
    std::vector<double> pairwise_rmse; // all pairs i < j, row by row
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation
    double cv = 0.0;     // stddev / mean; 0 when mean is 0
};

inline StabilityReport summarize_stability(std::vector<FitReport> runs) {
    StabilityReport out;
    out.runs = std::move(runs);
    for (std::size_t i = 0; i < out.runs.size(); ++i) {
        for (std::size_t j = i + 1; j < out.runs.size(); ++j) {
            out.pairwise_rmse.push_back(center_rmse(out.runs[i].centers, out.runs[j].centers));
        }
    }
    const std::size_t k = out.pairwise_rmse.size();
    if (k == 0) {
        return out;
    }
    for (double v : out.pairwise_rmse) {
        out.mean += v;
    }
    out.mean /= static_cast<double>(k);
    if (k > 1) {
        double ss = 0.0;
        for (double v : out.pairwise_rmse) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.stddev = std::sqrt(ss / static_cast<double>(k - 1));
    }
    out.cv = out.mean > 0.0 ? out.stddev / out.mean : 0.0;
    return out;
}

// cfg.repetitions independent runs (100 in the default protocol).
inline StabilityReport stability(const ExperimentConfig& cfg, const DataMatrix<double>& data) {
    if (cfg.repetitions < 2) {
        throw usage_error("stability needs at least two repetitions");
    }
    return summarize_stability(run_experiment(cfg, data));
}

// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw usage_error("log_log_slope needs two or more paired values");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw usage_error("log_log_slope needs positive values");
        }
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) {
        throw usage_error("log_log_slope needs distinct x values");
    }
    return sxy / sxx;
}

inline double median(std::vector<double> values) {
    if (values.empty()) {
        throw usage_error("median of an empty set");
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    return 0.5 * (*std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)) + upper);
}

} // namespace sgmm
