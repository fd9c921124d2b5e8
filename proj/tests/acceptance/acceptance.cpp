// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Optional arguments select criteria by number, e.g. `acceptance 1 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include <sgmm/sgmm.hpp>

using namespace sgmm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

Matrix<double> seed_means(const DataMatrix<double>& data, std::size_t M, std::uint64_t seed) {
    DistanceCounter c;
    return afkmc2_seed(data, SeedingConfig{M, 5, seed}, c);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return s;
}

Outcome exactness_bridge() {
    const auto syn = generate_synthetic(500, 8, 5, 1.0, 101);
    const auto init = seed_means(syn.data, 8, 1);
    Dgmm<double> dgmm(syn.data, init, DgmmOptions{8, 3, 1, 1});
    ExactEm<double> em(syn.data, init);
    double worst = rel_diff(dgmm.params().variance, em.params().variance);
    for (int t = 0; t < 10; ++t) {
        dgmm.step();
        em.step();
        for (std::size_t i = 0; i < init.values().size(); ++i) {
            worst = std::max(worst, rel_diff(dgmm.params().means.values()[i], em.params().means.values()[i]));
        }
        worst = std::max(worst, rel_diff(dgmm.params().variance, em.params().variance));
        worst = std::max(worst, rel_diff(dgmm.free_energy(), em.free_energy()));
    }
    return {worst <= 1e-10, fmt("max relative deviation %.3g over 10 iterations (tol 1e-10)", worst)};
}

Outcome single_swaps() {
    RngStream rng(2024, StreamDomain::test, 0);
    std::size_t swaps = 0, violations = 0;
    const std::size_t trials = 1000;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t M = 2 + rng.uniform_index(7);
        const std::size_t H = 1 + rng.uniform_index(M - 1);
        std::vector<double> d(M);
        for (auto& v : d) {
            v = static_cast<double>(rng.uniform_index(6)) + (rng.uniform() < 0.5 ? 0.0 : rng.uniform());
        }
        const double var = 0.5 + 2.0 * rng.uniform();
        std::vector<ClusterIndex> perm(M);
        std::iota(perm.begin(), perm.end(), ClusterIndex{0});
        for (std::size_t k = M - 1; k > 0; --k) {
            std::swap(perm[k], perm[rng.uniform_index(k + 1)]);
        }
        const auto exact = exact_posterior<double>(d, var);
        auto kl_of = [&](const std::vector<ClusterIndex>& K) {
            std::vector<double> dk;
            for (auto c : K) {
                dk.push_back(d[c]);
            }
            return kl_to_exact<double>(exact_posterior<double>(dk, var), K, exact);
        };
        const std::vector<ClusterIndex> K(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(H));
        const double base = kl_of(K);
        const std::size_t a = rng.uniform_index(H);
        const std::size_t b = H + rng.uniform_index(M - H);
        auto swapped = K;
        swapped[a] = perm[b];
        const double kl = kl_of(swapped);
        const double di = d[K[a]], dj = d[perm[b]];
        const bool ok = dj < di ? kl < base : dj > di ? kl > base : std::abs(kl - base) <= 1e-12;
        violations += ok ? 0 : 1;
        ++swaps;
    }
    return {violations == 0, fmt("%zu swaps, %zu violations", swaps, violations)};
}

Outcome monotonicity() {
    const auto syn = generate_synthetic(2000, 50, 5, 1.0, 303);
    double worst = 0.0;
    std::size_t increments = 0, violations = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Dgmm<double> model(syn.data, seed_means(syn.data, 50, seed), DgmmOptions{5, 5, seed, 1});
        double previous = model.free_energy();
        const auto trace = model.fit(1e-5, 300);
        for (double f : trace.objective) {
            const double scaled = (f - previous) / std::abs(f);
            worst = std::min(worst, scaled);
            violations += scaled < -1e-9 ? 1 : 0;
            ++increments;
            previous = f;
        }
    }
    return {violations == 0,
            fmt("50 runs, %zu increments, %zu below -1e-9|F|, most negative %.3g", increments, violations, worst)};
}

Outcome recovery() {
    const auto syn = generate_synthetic(5000, 15, 2, 1.0, 404);
    std::vector<double> dgmm_rmse, kmeans_rmse;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ExperimentConfig cfg;
        cfg.clusters = 15;
        cfg.truncation = 3;
        cfg.candidates = 5;
        cfg.coreset = 1000;
        cfg.seed = seed;
        dgmm_rmse.push_back(center_rmse(run_once(cfg, syn.data, seed, 1).centers, syn.centers));
        cfg.algorithm = Algorithm::kmeans;
        cfg.coreset.reset();
        kmeans_rmse.push_back(center_rmse(run_once(cfg, syn.data, seed, 1).centers, syn.centers));
    }
    const double d = median(dgmm_rmse), k = median(kmeans_rmse);
    return {d <= 2.0 * k, fmt("median RMSE D-GMM %.4f, k-means %.4f, ratio %.3f (limit 2)", d, k, d / k)};
}

Outcome speedup() {
    const auto syn = generate_synthetic(50000, 500, 16, 1.0, 7);
    ExperimentConfig cfg;
    cfg.clusters = 500;
    cfg.truncation = 5;
    cfg.candidates = 5;
    cfg.coreset = 4096;
    cfg.seed = 1;
    const auto dg = run_once(cfg, syn.data, cfg.seed, 1);
    cfg.algorithm = Algorithm::kmeans;
    cfg.coreset.reset();
    const auto km = run_once(cfg, syn.data, cfg.seed, 1);
    const double ratio = static_cast<double>(dg.total_evals) / static_cast<double>(km.total_evals);
    const double eta = *relative_error(dg.quantization_error, km.quantization_error);
    return {ratio <= 0.1 && eta <= 0.15,
            fmt("evals D-GMM %llu vs k-means %llu (ratio %.4f, speedup x%.1f), eta %.2f%%",
                static_cast<unsigned long long>(dg.total_evals), static_cast<unsigned long long>(km.total_evals),
                ratio, 1.0 / ratio, 100.0 * eta)};
}

Outcome scaling() {
    const auto syn = generate_synthetic(20000, 200, 8, 1.0, 11);
    const std::vector<std::size_t> Ms{64, 128, 256, 512, 1024};
    ExperimentConfig cfg;
    cfg.truncation = 5;
    cfg.candidates = 5;
    cfg.seed = 3;
    cfg.repetitions = 3;
    std::vector<double> x, dg, km;
    for (std::size_t M : Ms) {
        x.push_back(static_cast<double>(M));
        cfg.clusters = M;
        for (auto algo : {Algorithm::dgmm, Algorithm::kmeans}) {
            cfg.algorithm = algo;
            std::vector<double> evals;
            for (const auto& r : run_experiment(cfg, syn.data)) {
                evals.push_back(static_cast<double>(r.total_evals));
            }
            (algo == Algorithm::dgmm ? dg : km).push_back(median(evals));
        }
    }
    const double sd = log_log_slope(x, dg), sk = log_log_slope(x, km);
    return {sk >= 0.9 && sd <= 0.7, fmt("slope k-means %.3f (>= 0.9), D-GMM %.3f (<= 0.7)", sk, sd)};
}

Outcome stability_check() {
    const auto syn = generate_synthetic(5000, 50, 2, 1.0, 21);
    ExperimentConfig cfg;
    cfg.clusters = 50;
    cfg.truncation = 5;
    cfg.candidates = 5;
    cfg.seed = 5;
    cfg.repetitions = 30;
    const auto dg = stability(cfg, syn.data);
    cfg.algorithm = Algorithm::kmeans;
    const auto km = stability(cfg, syn.data);
    const double ratio = dg.cv / km.cv;
    return {ratio <= 1.5, fmt("CV D-GMM %.4f, k-means %.4f, ratio %.3f (limit 1.5)", dg.cv, km.cv, ratio)};
}

Outcome samplers() {
    const Matrix<double> pts{{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}, {3.0, 3.0},
                             {-2.0, 1.0}, {4.0, -1.0}, {0.5, 0.5}, {-1.0, -3.0}};
    const DataMatrix<double> data(pts);
    const std::size_t N = pts.rows();
    std::vector<double> probs(N, 0.0);
    for (std::size_t f = 0; f < N; ++f) {
        double total = 0.0;
        for (std::size_t y = 0; y < N; ++y) {
            total += sq_dist(pts.row(y), pts.row(f));
        }
        for (std::size_t x = 0; x < N; ++x) {
            probs[x] += sq_dist(pts.row(x), pts.row(f)) / total / static_cast<double>(N);
        }
    }
    const std::size_t trials = 100000;
    std::vector<double> counts(N, 0.0);
    for (std::size_t t = 0; t < trials; ++t) {
        DistanceCounter c;
        const auto centers = afkmc2_seed(data, SeedingConfig{2, 50, t}, c);
        for (std::size_t x = 0; x < N; ++x) {
            if (sq_dist(pts.row(x), centers.row(1)) == 0.0) {
                counts[x] += 1.0;
                break;
            }
        }
    }
    double chi2 = 0.0;
    for (std::size_t x = 0; x < N; ++x) {
        const double expected = probs[x] * static_cast<double>(trials);
        chi2 += (counts[x] - expected) * (counts[x] - expected) / expected;
    }
    const double critical =
        boost::math::quantile(boost::math::complement(boost::math::chi_squared(static_cast<double>(N - 1)), 0.01));

    const auto syn = generate_synthetic(1000, 5, 3, 2.0, 808);
    const std::size_t reps = 1000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < reps; ++t) {
        DistanceCounter c;
        const double s = lightweight_coreset(syn.data, 100, t, c).total_weight();
        const double delta = s - mean;
        mean += delta / static_cast<double>(t + 1);
        m2 += delta * (s - mean);
    }
    const double se = std::sqrt(m2 / static_cast<double>(reps - 1) / static_cast<double>(reps));
    const double z = (mean - 1000.0) / se;
    return {chi2 < critical && std::abs(z) <= 3.0,
            fmt("AFK-MC2 chi2 %.2f < %.2f; coreset mean weight sum %.2f vs N=1000 (%.2f standard errors)", chi2,
                critical, mean, z)};
}

Outcome counters() {
    const auto syn = generate_synthetic(100, 7, 3, 1.0, 909);
    const auto init = seed_means(syn.data, 7, 2);
    ExactEm<double> em(syn.data, init);
    const auto es = em.step();
    const std::size_t H = 3, R = 2;
    Dgmm<double> dgmm(syn.data, init, DgmmOptions{H, R, 2, 1});
    std::uint64_t worst = 0;
    for (int t = 0; t < 5; ++t) {
        const auto ds = dgmm.step();
        worst = std::max(worst, ds.estep_evals + ds.mstep_evals);
    }
    const bool pass = es.estep_evals == 700 && worst <= 100 * (H + R);
    return {pass, fmt("exact-EM E-step %llu (want 700); D-GMM max per-iteration %llu (limit %zu)",
                      static_cast<unsigned long long>(es.estep_evals), static_cast<unsigned long long>(worst),
                      100 * (H + R))};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit; // seconds, 0 = none
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "exactness bridge", 5.0, exactness_bridge},
        {2, "single-swap KL ordering", 10.0, single_swaps},
        {3, "free-energy monotonicity", 0.0, monotonicity},
        {4, "synthetic recovery", 30.0, recovery},
        {5, "distance-evaluation speedup", 120.0, speedup},
        {6, "sublinear scaling", 0.0, scaling},
        {7, "stability", 0.0, stability_check},
        {8, "sampler correctness", 0.0, samplers},
        {9, "counter exactness", 0.0, counters},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit > 0.0 && secs >= c.time_limit) {
            out.pass = false;
            out.detail += fmt("; over the %.0f s limit", c.time_limit);
        }
        std::printf("%s %d %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs);
        std::fflush(stdout);
        failures += out.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
