#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gdls/bench.hpp"
#include "gdls/crb.hpp"

using namespace gdls;

namespace {

const FrequencyVector kTable1Freqs{std::vector<double>{0.35, 0.1, 0.67, 0.92}};
const ComplexAmplitudes kTable1Amps{cvec{{12, 0}, {8, 0}, {10, 0}, {11, 0}}};

bench::ExperimentGrid small_grid(std::vector<double> values, int trials) {
    bench::ExperimentGrid g;
    g.values = std::move(values);
    g.trials_per_point = trials;
    g.master_seed = 99;
    g.threads = 2;
    return g;
}

}  // namespace

TEST_CASE("crb: single source matches the closed form") {
    // var(f) = 6 sigma^2 / ((2 pi)^2 |c|^2 N (N^2 - 1))
    const std::size_t n = 16;
    FrequencyVector f({0.37});
    ComplexAmplitudes c(cvec{cplx(3.0, 4.0)});
    const double snr_db = 17.0;
    Snapshot x = synthesize(f, c, n);
    double sigma2 = noise_variance(x, snr_db);
    double expect =
        6.0 * sigma2 / (kTwoPi * kTwoPi * std::norm(c[0]) * n * (double(n) * n - 1.0));
    std::vector<double> got = crb_frequencies(f, c, n, snr_db);
    CHECK(got[0] == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("crb: +10 dB divides the bound by ten exactly") {
    std::vector<double> lo = crb_frequencies(kTable1Freqs, kTable1Amps, 16, 20.0);
    std::vector<double> hi = crb_frequencies(kTable1Freqs, kTable1Amps, 16, 30.0);
    for (std::size_t i = 0; i < lo.size(); ++i)
        CHECK(hi[i] == doctest::Approx(lo[i] / 10.0).epsilon(1e-12));
}

TEST_CASE("crb: doubling the amplitudes at fixed noise power quarters the bound") {
    // keep sigma^2 fixed: doubling c quadruples ||x||^2, so raise snr by 10 log10 4
    const double snr = 20.0;
    const double snr_comp = snr + 10.0 * std::log10(4.0);
    cvec doubled;
    for (const cplx& v : kTable1Amps.values) doubled.push_back(2.0 * v);
    std::vector<double> base = crb_frequencies(kTable1Freqs, kTable1Amps, 16, snr);
    std::vector<double> big =
        crb_frequencies(kTable1Freqs, ComplexAmplitudes(doubled), 16, snr_comp);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(big[i] == doctest::Approx(base[i] / 4.0).epsilon(1e-10));
}

TEST_CASE("crb: invariant under a common phase rotation of the amplitudes") {
    cvec rotated;
    for (const cplx& v : kTable1Amps.values) rotated.push_back(v * std::polar(1.0, 1.234));
    std::vector<double> base = crb_frequencies(kTable1Freqs, kTable1Amps, 16, 20.0);
    std::vector<double> rot = crb_frequencies(kTable1Freqs, ComplexAmplitudes(rotated), 16, 20.0);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK(rot[i] == doctest::Approx(base[i]).epsilon(1e-8));
}

TEST_CASE("crb: matches a finite-difference Fisher oracle") {
    const std::size_t n = 16, l = 4;
    const double snr_db = 20.0;
    Snapshot x = synthesize(kTable1Freqs, kTable1Amps, n);
    double sigma2 = noise_variance(x, snr_db);

    // numeric Jacobian of the mean mu(eta) = A(f)c over eta = [f; Re c; Im c]
    const std::size_t dim = 3 * l;
    auto mean_of = [&](const std::vector<double>& eta) {
        std::vector<double> fr(eta.begin(), eta.begin() + l);
        cvec c(l);
        for (std::size_t i = 0; i < l; ++i) c[i] = cplx(eta[l + i], eta[2 * l + i]);
        return synthesize(FrequencyVector(fr), ComplexAmplitudes(c), n).samples;
    };
    std::vector<double> eta0(dim);
    for (std::size_t i = 0; i < l; ++i) {
        eta0[i] = kTable1Freqs[i];
        eta0[l + i] = kTable1Amps[i].real();
        eta0[2 * l + i] = kTable1Amps[i].imag();
    }
    const double h = 1e-7;
    CMat jac(n, dim);
    for (std::size_t p = 0; p < dim; ++p) {
        std::vector<double> ep = eta0, em = eta0;
        ep[p] += h;
        em[p] -= h;
        cvec mp = mean_of(ep), mm = mean_of(em);
        for (std::size_t k = 0; k < n; ++k) jac(k, p) = (mp[k] - mm[k]) / (2.0 * h);
    }
    std::vector<double> fisher_fd(dim * dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            cplx s(0, 0);
            for (std::size_t k = 0; k < n; ++k) s += std::conj(jac(k, i)) * jac(k, j);
            fisher_fd[i * dim + j] = 2.0 / sigma2 * s.real();
        }
    REQUIRE(spd_invert(fisher_fd, dim));
    std::vector<double> got = crb_frequencies(kTable1Freqs, kTable1Amps, n, snr_db);
    for (std::size_t i = 0; i < l; ++i)
        CHECK(got[i] == doctest::Approx(fisher_fd[i * dim + i]).epsilon(1e-4));
}

TEST_CASE("crb: singular Fisher raises") {
    FrequencyVector f({0.3, 0.3});  // duplicated frequency, rank-deficient Jacobian
    ComplexAmplitudes c(cvec{cplx(1, 0), cplx(1, 0)});
    CHECK_THROWS_AS(crb_frequencies(f, c, 16, 20.0), SingularFisher);
}

TEST_CASE("loglog_slope recovers exact power laws") {
    std::vector<std::pair<double, double>> quad, lin;
    for (double x : {16.0, 32.0, 64.0, 128.0}) {
        quad.emplace_back(x, 3.0 * x * x);
        lin.emplace_back(x, 0.5 * x);
    }
    CHECK(bench::loglog_slope(quad) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bench::loglog_slope(lin) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bench sweeps are byte-deterministic across runs and thread counts") {
    bench::ExperimentGrid g = small_grid({0.06, 0.08}, 12);
    g.base.success_eps = 0.01;
    bench::SeriesResult a = bench::resolution_sweep(g);
    bench::SeriesResult b = bench::resolution_sweep(g);
    g.threads = 1;
    bench::SeriesResult c = bench::resolution_sweep(g);
    MetaBlock meta;
    meta.add("master_seed", g.master_seed);
    std::ostringstream sa, sb, sc;
    a.write_csv(sa, meta);
    b.write_csv(sb, meta);
    c.write_csv(sc, meta);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() == sc.str());
    CHECK(sa.str().find("swept_value,method,metric,trials,stderr\n") != std::string::npos);
    CHECK(sa.str().rfind("# gdls ", 0) == 0);
}

TEST_CASE("mse_vs_snr: gdls MSE non-increasing in SNR (slack 1.5), below omp at high snr") {
    bench::ExperimentGrid g = small_grid({10.0, 20.0, 30.0}, 100);
    bench::SeriesResult r = bench::mse_vs_snr(g);
    double prev = std::numeric_limits<double>::infinity();
    for (double snr : g.values) {
        double mse = r.at(snr, "gdls").metric;
        CHECK(mse <= prev * 1.5);
        prev = mse;
        CHECK(r.at(snr, "crb").metric > 0.0);
    }
    CHECK(r.at(30.0, "gdls").metric < r.at(30.0, "omp").metric);
    CHECK(r.at(30.0, "gdls_fail_rate").metric <= 0.05);
}

TEST_CASE("mse_vs_snr: gdls MSE collapses in the noiseless limit") {
    bench::ExperimentGrid g = small_grid({250.0}, 5);
    bench::SeriesResult r = bench::mse_vs_snr(g);
    CHECK(r.at(250.0, "gdls").metric < 1e-12);
    CHECK(r.at(250.0, "gdls_fail_rate").metric == 0.0);
}

TEST_CASE("resolution_sweep: success non-decreasing in separation (slack regime)") {
    bench::ExperimentGrid g = small_grid({0.02, 0.05, 0.08}, 100);
    g.base.success_eps = 0.01;
    bench::SeriesResult r = bench::resolution_sweep(g);
    double prev = 0.0;
    for (double sep : g.values) {
        double rate = r.at(sep, "gdls").metric;
        CHECK(rate >= prev / 1.5 - 0.05);
        prev = rate;
        CHECK(r.at(sep, "omp").metric >= 0.0);
    }
}

TEST_CASE("amplitude_sweep: emits both phase modes, rates are probabilities") {
    bench::ExperimentGrid g = small_grid({0.0, 4.0}, 60);
    bench::SeriesResult r = bench::amplitude_sweep(g);
    CHECK(r.at(0.0, "gdls_zero_phase").trials == 60);
    CHECK(r.at(0.0, "gdls_random_phase").trials == 60);
    CHECK(r.at(4.0, "omp_zero_phase").trials == 60);
    for (const bench::SeriesRecord& rec : r.records) {
        CHECK(rec.metric >= 0.0);
        CHECK(rec.metric <= 1.0);
    }
}

TEST_CASE("runtime_sweep: emits one row per method per N") {
    bench::ExperimentGrid g = small_grid({16.0, 32.0}, 3);
    bench::SeriesResult r = bench::runtime_sweep(g);
    for (double n : g.values) {
        CHECK(r.at(n, "omp_total_s").metric > 0.0);
        CHECK(r.at(n, "gdls_total_s").metric > 0.0);
        CHECK(r.at(n, "gdls_grad_eval_s").metric > 0.0);
    }
    CHECK(r.records.size() == 6);
}
