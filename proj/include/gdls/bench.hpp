#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gdls/crb.hpp"
#include "gdls/model.hpp"
#include "gdls/parallel.hpp"
#include "gdls/report.hpp"
#include "gdls/rng.hpp"
#include "gdls/solvers.hpp"

namespace gdls::bench {

/// Scenario shared by the experiment harnesses. Defaults reproduce the
/// standard simulation setup: N = 16, L = 4, f = [0.35, 0.1, 0.67, 0.92],
/// c = [12, 8, 10, 11], success threshold 0.005, 1024-point OMP grid.
struct Scenario {
    std::size_t n = 16;
    FrequencyVector freqs{std::vector<double>{0.35, 0.1, 0.67, 0.92}};
    cvec amps{cplx(12, 0), cplx(8, 0), cplx(10, 0), cplx(11, 0)};
    double snr_db = 20.0;
    double success_eps = 0.005;
    OmpConfig omp_cfg{};
    GdlsConfig gdls_cfg{};
};

struct ExperimentGrid {
    std::string swept_name;
    std::vector<double> values;
    int trials_per_point = 200;
    Scenario base;
    std::uint64_t master_seed = 1;
    unsigned threads = 1;
};

struct SeriesRecord {
    double swept_value = 0.0;
    std::string method;
    double metric = 0.0;
    long trials = 0;
    double std_error = 0.0;
};

struct SeriesResult {
    std::string swept_name;
    std::vector<SeriesRecord> records;

    void write_csv(std::ostream& os, const MetaBlock& meta) const {
        meta.write(os);
        os << "swept_value,method,metric,trials,stderr\n";
        for (const SeriesRecord& r : records)
            os << fmt_full(r.swept_value) << ',' << r.method << ',' << fmt_full(r.metric) << ','
               << r.trials << ',' << fmt_full(r.std_error) << '\n';
    }

    /// First record matching (value, method); throws when absent.
    const SeriesRecord& at(double swept_value, const std::string& method) const {
        for (const SeriesRecord& r : records)
            if (r.method == method && std::fabs(r.swept_value - swept_value) < 1e-12)
                return r;
        throw InvalidArgument("SeriesResult: no record for " + method);
    }
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = static_cast<double>(pts.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

struct TrialStats {
    bool omp_ok = false;
    bool gdls_ok = false;
    double omp_mse = 0.0;
    double gdls_mse = 0.0;
};

inline void push_mean_record(SeriesResult& out, double swept, const std::string& method,
                             const std::vector<double>& samples) {
    double mean = 0.0;
    for (double v : samples) mean += v;
    long n = static_cast<long>(samples.size());
    if (n > 0) mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    double se = (n > 1) ? std::sqrt(var / (static_cast<double>(n) * (n - 1.0))) : 0.0;
    out.records.push_back({swept, method, mean, n, se});
}

inline void push_rate_record(SeriesResult& out, double swept, const std::string& method,
                             long hits, long trials) {
    double p = trials > 0 ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
    double se = trials > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(trials)) : 0.0;
    out.records.push_back({swept, method, p, trials, se});
}

/// L frequencies in jittered regular slots; pairwise circular separation stays
/// above half a slot, which keeps every manifold well conditioned at any N.
inline FrequencyVector random_slotted_freqs(Rng& rng, std::size_t l) {
    const double slot = 1.0 / static_cast<double>(l);
    const double jitter = 0.25 * slot;
    const double phase = rng.uniform01();
    std::vector<double> f(l);
    for (std::size_t i = 0; i < l; ++i)
        f[i] = wrap_unit(phase + slot * static_cast<double>(i) + rng.uniform(-jitter, jitter));
    return FrequencyVector(f);
}

inline double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace detail

/// Matched-frequency MSE of OMP and GDLS versus SNR, with the CRB appended.
/// A trial is successful when the solver completes and the max matched
/// circular error is below the scenario threshold; MSE is averaged over
/// successful trials and the failure rate is emitted alongside.
inline SeriesResult mse_vs_snr(const ExperimentGrid& grid) {
    const Scenario& sc = grid.base;
    Snapshot x = synthesize(sc.freqs, ComplexAmplitudes(sc.amps), sc.n);
    const std::size_t l = sc.freqs.size();

    SeriesResult out;
    out.swept_name = grid.swept_name.empty() ? "snr_db" : grid.swept_name;
    for (std::size_t p = 0; p < grid.values.size(); ++p) {
        const double snr = grid.values[p];
        std::vector<detail::TrialStats> stats(grid.trials_per_point);
        parallel_for(stats.size(), grid.threads, [&](std::size_t t) {
            Snapshot y = add_noise(x, snr, derive_seed(grid.master_seed, p, t));
            detail::TrialStats& s = stats[t];
            SolveResult ores;
            try {
                OmpConfig oc = sc.omp_cfg;
                oc.sparsity = l;
                ores = omp(y, oc);
                FrequencyMatch m = match_frequencies(ores.frequencies, sc.freqs);
                if (m.max_error < sc.success_eps) {
                    s.omp_ok = true;
                    s.omp_mse = m.mse;
                }
            } catch (const Error&) {
                return;  // OMP failed; GDLS has no initial point either
            }
            try {
                GdlsConfig gc = sc.gdls_cfg;
                gc.sparsity = l;
                SolveResult gres = gdls_refine(y, ores.frequencies, gc);
                FrequencyMatch m = match_frequencies(gres.frequencies, sc.freqs);
                if (m.max_error < sc.success_eps) {
                    s.gdls_ok = true;
                    s.gdls_mse = m.mse;
                }
            } catch (const Error&) {
            }
        });

        std::vector<double> omp_mses, gdls_mses;
        for (const detail::TrialStats& s : stats) {
            if (s.omp_ok) omp_mses.push_back(s.omp_mse);
            if (s.gdls_ok) gdls_mses.push_back(s.gdls_mse);
        }
        detail::push_mean_record(out, snr, "omp", omp_mses);
        detail::push_mean_record(out, snr, "gdls", gdls_mses);
        detail::push_rate_record(out, snr, "omp_fail_rate",
                                 grid.trials_per_point - static_cast<long>(omp_mses.size()),
                                 grid.trials_per_point);
        detail::push_rate_record(out, snr, "gdls_fail_rate",
                                 grid.trials_per_point - static_cast<long>(gdls_mses.size()),
                                 grid.trials_per_point);
        out.records.push_back(
            {snr, "crb", crb_mean(sc.freqs, ComplexAmplitudes(sc.amps), sc.n, snr), 0, 0.0});
    }
    return out;
}

/// Success rate versus frequency separation for two sources with the same
/// complex amplitude (the hardest, fully coherent pair); the base frequency is
/// uniform per trial and the noise is fresh per trial.
inline SeriesResult resolution_sweep(const ExperimentGrid& grid) {
    const Scenario& sc = grid.base;
    SeriesResult out;
    out.swept_name = grid.swept_name.empty() ? "separation" : grid.swept_name;
    for (std::size_t p = 0; p < grid.values.size(); ++p) {
        const double sep = grid.values[p];
        std::vector<detail::TrialStats> stats(grid.trials_per_point);
        parallel_for(stats.size(), grid.threads, [&](std::size_t t) {
            Rng rng(derive_seed(grid.master_seed, p, t));
            double f1 = rng.uniform01();
            FrequencyVector truth({f1, wrap_unit(f1 + sep)});
            cvec c = {cplx(1.0, 0.0), cplx(1.0, 0.0)};
            Snapshot y = add_noise(synthesize(truth, ComplexAmplitudes(c), sc.n), sc.snr_db,
                                   rng.raw());
            detail::TrialStats& s = stats[t];
            SolveResult ores;
            try {
                OmpConfig oc = sc.omp_cfg;
                oc.sparsity = 2;
                ores = omp(y, oc);
                s.omp_ok = recovery_success(ores.frequencies, truth, sc.success_eps);
            } catch (const Error&) {
                return;
            }
            try {
                GdlsConfig gc = sc.gdls_cfg;
                gc.sparsity = 2;
                SolveResult gres = gdls_refine(y, ores.frequencies, gc);
                s.gdls_ok = recovery_success(gres.frequencies, truth, sc.success_eps);
            } catch (const Error&) {
            }
        });
        long omp_hits = 0, gdls_hits = 0;
        for (const detail::TrialStats& s : stats) {
            omp_hits += s.omp_ok ? 1 : 0;
            gdls_hits += s.gdls_ok ? 1 : 0;
        }
        detail::push_rate_record(out, sep, "omp", omp_hits, grid.trials_per_point);
        detail::push_rate_record(out, sep, "gdls", gdls_hits, grid.trials_per_point);
    }
    return out;
}

/// Success rate versus amplitude non-uniformity. Magnitudes are drawn
/// Normal(mean, std²) clipped at 0.1 with the mean fixed at the scenario's
/// mean amplitude magnitude; phases are all zero or i.i.d. uniform. Both phase
/// modes are emitted, as methods <m>_zero_phase and <m>_random_phase.
inline SeriesResult amplitude_sweep(const ExperimentGrid& grid) {
    const Scenario& sc = grid.base;
    const std::size_t l = sc.freqs.size();
    double mean_amp = 0.0;
    for (const cplx& a : sc.amps) mean_amp += std::abs(a);
    mean_amp /= static_cast<double>(sc.amps.size());

    SeriesResult out;
    out.swept_name = grid.swept_name.empty() ? "amplitude_std" : grid.swept_name;
    for (int mode = 0; mode < 2; ++mode) {
        const bool random_phase = mode == 1;
        const std::string suffix = random_phase ? "_random_phase" : "_zero_phase";
        for (std::size_t p = 0; p < grid.values.size(); ++p) {
            const double std_dev = grid.values[p];
            std::vector<detail::TrialStats> stats(grid.trials_per_point);
            parallel_for(stats.size(), grid.threads, [&](std::size_t t) {
                Rng rng(derive_seed(grid.master_seed + (random_phase ? 0x517ull : 0), p, t));
                cvec c(l);
                for (std::size_t i = 0; i < l; ++i) {
                    double mag = std::max(0.1, mean_amp + std_dev * rng.normal());
                    double ph = random_phase ? rng.uniform(0.0, kTwoPi) : 0.0;
                    c[i] = std::polar(mag, ph);
                }
                Snapshot y = add_noise(synthesize(sc.freqs, ComplexAmplitudes(c), sc.n),
                                       sc.snr_db, rng.raw());
                detail::TrialStats& s = stats[t];
                SolveResult ores;
                try {
                    OmpConfig oc = sc.omp_cfg;
                    oc.sparsity = l;
                    ores = omp(y, oc);
                    s.omp_ok = recovery_success(ores.frequencies, sc.freqs, sc.success_eps);
                } catch (const Error&) {
                    return;
                }
                try {
                    GdlsConfig gc = sc.gdls_cfg;
                    gc.sparsity = l;
                    SolveResult gres = gdls_refine(y, ores.frequencies, gc);
                    s.gdls_ok = recovery_success(gres.frequencies, sc.freqs, sc.success_eps);
                } catch (const Error&) {
                }
            });
            long omp_hits = 0, gdls_hits = 0;
            for (const detail::TrialStats& s : stats) {
                omp_hits += s.omp_ok ? 1 : 0;
                gdls_hits += s.gdls_ok ? 1 : 0;
            }
            detail::push_rate_record(out, std_dev, "omp" + suffix, omp_hits,
                                     grid.trials_per_point);
            detail::push_rate_record(out, std_dev, "gdls" + suffix, gdls_hits,
                                     grid.trials_per_point);
        }
    }
    return out;
}

/// Mean wall-clock cost versus N: total OMP solve, total GDLS solve, and the
/// per-evaluation cost of one objective/gradient computation (the work of one
/// descent iteration). Runs serially regardless of the thread setting so the
/// timings are uncontended; the random-signal content is still seed-derived
/// and deterministic.
inline SeriesResult runtime_sweep(const ExperimentGrid& grid) {
    const Scenario& sc = grid.base;
    const std::size_t l = sc.freqs.size();

    SeriesResult out;
    out.swept_name = grid.swept_name.empty() ? "n" : grid.swept_name;
    for (std::size_t p = 0; p < grid.values.size(); ++p) {
        const std::size_t n = static_cast<std::size_t>(grid.values[p]);
        std::vector<double> omp_times, gdls_times, eval_times;
        for (int t = 0; t < grid.trials_per_point; ++t) {
            Rng rng(derive_seed(grid.master_seed, p, static_cast<std::uint64_t>(t)));
            FrequencyVector truth = detail::random_slotted_freqs(rng, l);
            cvec c(l);
            for (std::size_t i = 0; i < l; ++i)
                c[i] = std::polar(rng.uniform(5.0, 15.0), rng.uniform(0.0, kTwoPi));
            Snapshot y = add_noise(synthesize(truth, ComplexAmplitudes(c), n), sc.snr_db,
                                   rng.raw());

            OmpConfig oc = sc.omp_cfg;
            oc.sparsity = l;
            double t0 = detail::now_seconds();
            SolveResult ores = omp(y, oc);
            double t1 = detail::now_seconds();
            omp_times.push_back(t1 - t0);

            // per-iteration gradient cost: batch full evaluations at the
            // initial point and average; one untimed evaluation first so the
            // buffers and caches are warm
            Evaluator ev(n, l);
            const std::size_t reps =
                std::max<std::size_t>(8, (1u << 23) / std::max<std::size_t>(1, n * n * l));
            volatile double sink = 0.0;
            sink = sink + ev.evaluate(y, ores.frequencies).cost;
            double t2 = detail::now_seconds();
            for (std::size_t r = 0; r < reps; ++r) {
                const ObjectiveEval& e = ev.evaluate(y, ores.frequencies);
                sink = sink + e.gradient[0];
            }
            double t3 = detail::now_seconds();
            eval_times.push_back((t3 - t2) / static_cast<double>(reps));

            GdlsConfig gc = sc.gdls_cfg;
            gc.sparsity = l;
            double t4 = detail::now_seconds();
            SolveResult gres = gdls_refine(y, ores.frequencies, gc);
            double t5 = detail::now_seconds();
            gdls_times.push_back(t5 - t4);
            (void)gres;
        }
        detail::push_mean_record(out, static_cast<double>(n), "omp_total_s", omp_times);
        detail::push_mean_record(out, static_cast<double>(n), "gdls_total_s", gdls_times);
        detail::push_mean_record(out, static_cast<double>(n), "gdls_grad_eval_s", eval_times);
    }
    return out;
}

}  // namespace gdls::bench
