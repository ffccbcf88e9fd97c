#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "gdls/model.hpp"
#include "gdls/objective.hpp"
#include "gdls/types.hpp"

namespace gdls {

/// Gridded greedy initialization. Dictionary atoms are a(m/M), m = 0..M-1.
struct OmpConfig {
    std::size_t grid_size = 1024;  // M, must be >= 2N
    std::size_t sparsity = 0;      // L, must be in [1, N-1]
};

/// Normalized-gradient refinement loop. A step that does not strictly decrease
/// the cost is rejected and the step length decays; the step length never
/// grows, so the solve terminates once it falls below min_step.
struct GdlsConfig {
    double initial_step = 0.0;  // 0 selects the default 0.1/N
    double step_decay = 0.5;
    double min_step = 1e-9;
    std::size_t max_iterations = 5000;
    std::size_t sparsity = 0;  // 0 infers L from the initial point
    bool record_trajectory = false;
};

struct SolveResult {
    FrequencyVector frequencies;
    ComplexAmplitudes amplitudes;
    double final_cost = 0.0;
    std::size_t iterations = 0;
    std::vector<std::pair<std::size_t, double>> trajectory;  // (iteration, cost)
};

namespace detail {

inline double grad_norm(const std::vector<double>& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
}

inline double min_pairwise_dist(const std::vector<double>& f) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = i + 1; j < f.size(); ++j)
            m = std::min(m, circ_dist(f[i], f[j]));
    return m;
}

}  // namespace detail

/// Orthogonal matching pursuit over the uniform frequency grid m/M. Each round
/// selects the unselected atom with the largest |aᴴ r| (all atoms share norm
/// √N, so the normalized correlation ranks identically), then re-fits all
/// selected amplitudes by least squares and rebuilds the residual.
inline SolveResult omp(const Snapshot& y, const OmpConfig& cfg) {
    const std::size_t n = y.size();
    const std::size_t m = cfg.grid_size;
    const std::size_t l = cfg.sparsity;
    if (l < 1) throw InvalidArgument("omp: sparsity must be >= 1");
    if (l > n - 1) throw InvalidArgument("sparsity bound violated: L must be <= N-1");
    if (m < 2 * n) throw InvalidArgument("omp: grid_size must be >= 2N");
    const double y2 = y.squared_norm();
    if (y2 == 0.0) throw InvalidArgument("omp: zero snapshot");

    // dictionary, one row per atom; entries built by phase recurrence
    CMat dict(m, n);
    for (std::size_t a = 0; a < m; ++a) {
        cplx z = std::polar(1.0, kTwoPi * static_cast<double>(a) / static_cast<double>(m));
        cplx acc(1.0, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            dict(a, k) = acc;
            acc *= z;
        }
    }

    cvec residual = y.samples;
    std::vector<bool> used(m, false);
    std::vector<double> freqs;
    ComplexAmplitudes amps;
    double cost = y2;

    for (std::size_t round = 0; round < l; ++round) {
        if (cost <= 1e-26 * y2)
            throw DegenerateResidual("omp: residual vanished before reaching the requested sparsity");
        std::size_t best = m;
        double best_corr = -1.0;
        for (std::size_t a = 0; a < m; ++a) {
            if (used[a]) continue;
            cplx corr(0.0, 0.0);
            for (std::size_t k = 0; k < n; ++k) corr += std::conj(dict(a, k)) * residual[k];
            double c2 = std::norm(corr);
            if (c2 > best_corr) {
                best_corr = c2;
                best = a;
            }
        }
        used[best] = true;
        freqs.push_back(static_cast<double>(best) / static_cast<double>(m));

        Manifold sel = build_manifold(FrequencyVector(freqs), n);
        amps = ls_amplitudes(y, sel);
        cost = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            cplx fit(0.0, 0.0);
            for (std::size_t j = 0; j < sel.l(); ++j) fit += sel.columns(k, j) * amps[j];
            residual[k] = y.samples[k] - fit;
            cost += std::norm(residual[k]);
        }
    }

    SolveResult r;
    r.frequencies = FrequencyVector(freqs);
    r.amplitudes = std::move(amps);
    r.final_cost = cost;
    r.iterations = l;
    return r;
}

/// Normalized gradient descent on the projection-residual objective starting
/// from f_init. Accepted iterates satisfy f ← f - α g/||g||; non-improving
/// candidates are rejected and α decays by step_decay until it falls below
/// min_step. Also stops on a vanishing gradient or max_iterations.
inline SolveResult gdls_refine(const Snapshot& y, const FrequencyVector& f_init, const GdlsConfig& cfg) {
    const std::size_t n = y.size();
    const std::size_t l = f_init.size();
    if (cfg.sparsity != 0 && cfg.sparsity != l)
        throw InvalidArgument("gdls: config sparsity disagrees with the initial point");
    if (l > n - 1) throw InvalidArgument("sparsity bound violated: L must be <= N-1");
    double alpha = cfg.initial_step > 0.0 ? cfg.initial_step : 0.1 / static_cast<double>(n);
    if (!(cfg.min_step > 0.0) || !(cfg.min_step < alpha))
        throw InvalidArgument("gdls: require 0 < min_step < initial_step");
    if (!(cfg.step_decay > 0.0) || !(cfg.step_decay < 1.0))
        throw InvalidArgument("gdls: step_decay must lie in (0, 1)");
    if (cfg.max_iterations < 1) throw InvalidArgument("gdls: max_iterations must be >= 1");

    Evaluator ev(n, l);
    std::vector<double> cur = f_init.values();

    // evaluate the starting point; on a rank-deficient manifold, spread the
    // frequencies once by 1e-9 and retry before giving up
    auto full_eval = [&](const std::vector<double>& fv) -> const ObjectiveEval& {
        return ev.evaluate(y, FrequencyVector(fv));
    };
    double cur_cost;
    std::vector<double> cur_grad;
    ComplexAmplitudes cur_amps;
    try {
        const ObjectiveEval& e = full_eval(cur);
        cur_cost = e.cost;
        cur_grad = e.gradient;
        cur_amps = e.amplitudes;
    } catch (const IllConditionedManifold&) {
        for (std::size_t i = 0; i < l; ++i)
            cur[i] = wrap_unit(cur[i] + 1e-9 * static_cast<double>(i));
        const ObjectiveEval& e = full_eval(cur);
        cur_cost = e.cost;
        cur_grad = e.gradient;
        cur_amps = e.amplitudes;
    }

    SolveResult res;
    res.trajectory.reserve(cfg.record_trajectory ? 64 : 0);
    if (cfg.record_trajectory) res.trajectory.emplace_back(0, cur_cost);

    std::size_t iter = 0;
    std::vector<double> cand(l);
    while (iter < cfg.max_iterations) {
        double gn = detail::grad_norm(cur_grad);
        if (gn < 1e-14) break;
        ++iter;
        for (std::size_t i = 0; i < l; ++i)
            cand[i] = wrap_unit(cur[i] - alpha * cur_grad[i] / gn);

        bool rejected = false;
        if (l > 1 && detail::min_pairwise_dist(cand) < 1e-7) {
            rejected = true;  // candidate would collide two frequencies
        } else {
            double cand_cost;
            try {
                cand_cost = ev.cost(y, FrequencyVector(cand));
            } catch (const IllConditionedManifold&) {
                cand_cost = std::numeric_limits<double>::infinity();
            }
            if (cand_cost < cur_cost) {
                try {
                    const ObjectiveEval& e = full_eval(cand);
                    // the screening path and the full path agree to rounding;
                    // keep the recorded cost sequence strictly decreasing
                    if (e.cost < cur_cost) {
                        cur = cand;
                        cur_cost = e.cost;
                        cur_grad = e.gradient;
                        cur_amps = e.amplitudes;
                        if (cfg.record_trajectory) res.trajectory.emplace_back(iter, cur_cost);
                    } else {
                        rejected = true;
                    }
                } catch (const IllConditionedManifold&) {
                    rejected = true;
                }
            } else {
                rejected = true;
            }
        }
        if (rejected) {
            alpha *= cfg.step_decay;
            if (alpha < cfg.min_step) break;
        }
    }

    res.frequencies = FrequencyVector(cur);
    res.amplitudes = std::move(cur_amps);
    res.final_cost = cur_cost;
    res.iterations = iter;
    return res;
}

/// OMP initialization followed by GDLS refinement.
inline SolveResult estimate(const Snapshot& y, std::size_t sparsity, OmpConfig ocfg,
                            GdlsConfig gcfg) {
    ocfg.sparsity = sparsity;
    gcfg.sparsity = sparsity;
    SolveResult init = omp(y, ocfg);
    return gdls_refine(y, init.frequencies, gcfg);
}

/// Optimal assignment between estimated and true frequencies under circular
/// distance, with per-pair errors. permutation[i] is the index of the estimate
/// matched to truth entry i.
struct FrequencyMatch {
    std::vector<std::size_t> permutation;
    std::vector<double> errors;
    double max_error = 0.0;
    double mse = 0.0;  // mean squared error per frequency
};

inline FrequencyMatch match_frequencies(const FrequencyVector& est, const FrequencyVector& truth) {
    const std::size_t l = truth.size();
    if (est.size() != l) throw InvalidArgument("match_frequencies: length mismatch");
    if (l > 10) throw InvalidArgument("match_frequencies: supports up to 10 sources");
    std::vector<std::size_t> perm(l), best(l);
    std::iota(perm.begin(), perm.end(), 0);
    best = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < l; ++i) total += circ_dist(est[perm[i]], truth[i]);
        if (total < best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    FrequencyMatch m;
    m.permutation = best;
    m.errors.resize(l);
    double sq = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        m.errors[i] = circ_dist(est[best[i]], truth[i]);
        m.max_error = std::max(m.max_error, m.errors[i]);
        sq += m.errors[i] * m.errors[i];
    }
    m.mse = sq / static_cast<double>(l);
    return m;
}

/// Success criterion: every matched frequency error below eps.
inline bool recovery_success(const FrequencyVector& est, const FrequencyVector& truth,
                             double eps) {
    return match_frequencies(est, truth).max_error < eps;
}

}  // namespace gdls
