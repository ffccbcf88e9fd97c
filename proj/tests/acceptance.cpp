// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured values. Run via ctest or directly; the binary also
// drives the installed CLI for the determinism criterion.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "gdls/bench.hpp"
#include "gdls/crb.hpp"
#include "gdls/model.hpp"
#include "gdls/objective.hpp"
#include "gdls/rng.hpp"
#include "gdls/solvers.hpp"
#include "gdls/tomosar.hpp"

using namespace gdls;

namespace {

const std::vector<double> kTable1Freqs = {0.35, 0.1, 0.67, 0.92};
const cvec kTable1Amps = {cplx(12, 0), cplx(8, 0), cplx(10, 0), cplx(11, 0)};

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("ACCEPTANCE %2d %s: %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

FrequencyVector random_separated_freqs(Rng& rng, std::size_t l, std::size_t n) {
    const double min_sep = 2.0 / static_cast<double>(n - 1);
    const double slot = 1.0 / static_cast<double>(l);
    const double jitter = 0.45 * (slot - min_sep);
    const double phase = rng.uniform01();
    std::vector<double> f(l);
    for (std::size_t i = 0; i < l; ++i)
        f[i] = wrap_unit(phase + slot * static_cast<double>(i) + rng.uniform(-jitter, jitter));
    return FrequencyVector(f);
}

double db10(double ratio) { return 10.0 * std::log10(ratio); }

}  // namespace

// ---------------------------------------------------------------------------
TEST_CASE("criterion 1: analytic gradient matches finite differences") {
    Rng rng(101);
    const std::size_t n = 16;
    const double h = 1e-6;
    int entries = 0;
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        std::size_t l = 1 + static_cast<std::size_t>(rng.uniform(0, 4));
        FrequencyVector truth = random_separated_freqs(rng, l, n);
        cvec c(l);
        for (std::size_t i = 0; i < l; ++i)
            c[i] = std::polar(rng.uniform(5.0, 15.0), rng.uniform(0.0, kTwoPi));
        Snapshot y =
            add_noise(synthesize(truth, ComplexAmplitudes(c), n), 20.0, derive_seed(1001, t));
        std::vector<double> f = truth.values();
        for (double& v : f) v = wrap_unit(v + rng.uniform(-0.02, 0.02));
        FrequencyVector fv(f);
        ObjectiveEval e = evaluate(y, fv);
        for (std::size_t i = 0; i < l; ++i) {
            std::vector<double> fp = f, fm = f;
            fp[i] += h;
            fm[i] -= h;
            double fd =
                (evaluate(y, FrequencyVector(fp)).cost - evaluate(y, FrequencyVector(fm)).cost) /
                (2.0 * h);
            double scale = std::max(std::fabs(fd), 1e-9 * (1.0 + y.squared_norm()));
            double rel = std::fabs(fd - e.gradient[i]) / scale;
            worst = std::max(worst, rel);
            ++entries;
        }
    }
    bool pass = worst < 1e-5;
    CHECK(worst < 1e-5);
    std::ostringstream d;
    d << "gradient vs central differences, " << entries << " entries, worst relative error "
      << worst;
    report(1, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 2: gridless recovery of an off-grid source") {
    const double f_true = 0.2505;
    const std::size_t n = 16;
    OmpConfig ocfg;
    GdlsConfig gcfg;
    double omp_worst_floor = 1.0, est_worst = 0.0;
    bool pass = true;
    for (int t = 0; t < 50; ++t) {
        Rng rng(derive_seed(2002, t));
        cplx c = std::polar(1.0, rng.uniform(0.0, kTwoPi));
        cvec yv = steering_vector(f_true, n);
        for (cplx& v : yv) v *= c;
        Snapshot y(yv);
        ocfg.sparsity = 1;
        SolveResult o = omp(y, ocfg);
        SolveResult e = estimate(y, 1, ocfg, gcfg);
        double omp_err = circ_dist(o.frequencies[0], f_true);
        double est_err = circ_dist(e.frequencies[0], f_true);
        omp_worst_floor = std::min(omp_worst_floor, omp_err);
        est_worst = std::max(est_worst, est_err);
        pass = pass && omp_err >= 4e-4 && est_err < 1e-6;
    }
    CHECK(pass);
    std::ostringstream d;
    d << "50 random phases: OMP error always >= " << omp_worst_floor
      << " (grid floor 4e-4), refined error always <= " << est_worst << " (< 1e-6)";
    report(2, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 3: MSE vs SNR approaches the CRB; OMP quantization floor") {
    bench::ExperimentGrid g;
    g.swept_name = "snr_db";
    g.values = {0, 5, 10, 15, 20, 25, 30, 35, 40};
    g.trials_per_point = 200;
    g.master_seed = 3003;
    g.threads = default_threads();
    bench::SeriesResult r = bench::mse_vs_snr(g);

    const double quant_floor = (1.0 / 1024.0) * (1.0 / 1024.0) / 12.0;
    bool gdls_ok = true, omp_ok = true;
    std::ostringstream gd, od;
    gd.precision(2);
    od.precision(2);
    gd << std::fixed;
    od << std::fixed;
    for (double snr : {25.0, 30.0, 35.0, 40.0}) {
        double mse = r.at(snr, "gdls").metric;
        double crb = r.at(snr, "crb").metric;
        double off_db = db10(mse / crb);
        gdls_ok = gdls_ok && std::fabs(off_db) <= 3.0;
        gd << " " << snr << "dB:" << off_db;
        double omse = r.at(snr, "omp").metric;
        double omp_off = db10(omse / quant_floor);
        omp_ok = omp_ok && std::fabs(omp_off) <= 3.0;
        od << " " << snr << "dB:" << omp_off;
    }
    CHECK(gdls_ok);
    report(3, gdls_ok && omp_ok,
           "GDLS offset from CRB (dB):" + gd.str() + " | OMP offset from (1/M)^2/12 (dB):" +
               od.str() + (omp_ok ? "" : "  [OMP floor exceeds the quantization model: greedy "
                                         "grid selection is interference-biased]"));
    // the OMP clause is asserted as specified even though the multi-source
    // interference analysis says classical OMP cannot meet it
    CHECK(omp_ok);
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 4: two-source resolution limit near 0.05") {
    bench::ExperimentGrid g;
    g.swept_name = "separation";
    for (double s = 0.01; s <= 0.1 + 1e-12; s += 0.005) g.values.push_back(s);
    g.trials_per_point = 200;
    g.master_seed = 4004;
    g.threads = default_threads();
    g.base.snr_db = 20.0;
    g.base.success_eps = 0.01;
    bench::SeriesResult r = bench::resolution_sweep(g);

    std::vector<double> rates;
    for (double s : g.values) rates.push_back(r.at(s, "gdls").metric);

    // first upward crossing of 50%, linearly interpolated
    double crossing = -1.0;
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (rates[i - 1] < 0.5 && rates[i] >= 0.5) {
            double t = (0.5 - rates[i - 1]) / (rates[i] - rates[i - 1]);
            crossing = g.values[i - 1] + t * (g.values[i] - g.values[i - 1]);
            break;
        }
    }
    double at_01 = rates.front(), at_10 = rates.back();
    bool pass = crossing >= 0.03 && crossing <= 0.07 && at_10 >= 0.9 && at_01 <= 0.1;
    CHECK(pass);
    std::ostringstream d;
    d << "GDLS 50% crossing at separation " << crossing << " (allowed [0.03, 0.07]), success "
      << at_10 << " at 0.1 (>= 0.9), " << at_01 << " at 0.01 (<= 0.1)";
    report(4, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 5: amplitude diversity favors equal amplitudes") {
    bench::ExperimentGrid g;
    g.swept_name = "amplitude_std";
    g.values = {0.0, 8.0};
    g.trials_per_point = 200;
    g.master_seed = 5005;
    g.threads = default_threads();
    g.base.snr_db = 20.0;
    bench::SeriesResult r = bench::amplitude_sweep(g);

    double gdls0 = r.at(0.0, "gdls_random_phase").metric;
    double omp0 = r.at(0.0, "omp_random_phase").metric;
    double gdls_max_std = r.at(8.0, "gdls_random_phase").metric;
    bool pass = gdls0 >= omp0 - 0.02 && gdls0 >= gdls_max_std;
    CHECK(pass);
    std::ostringstream d;
    d << "std 0 random phase: GDLS " << gdls0 << " vs OMP " << omp0
      << " (>= OMP - 0.02); GDLS at largest std " << gdls_max_std << " (<= value at std 0)";
    report(5, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 6: per-iteration gradient cost scales ~N^2, OMP ~N") {
    bench::ExperimentGrid g;
    g.swept_name = "n";
    g.values = {16, 32, 64, 128, 256};
    g.trials_per_point = 50;
    g.master_seed = 6006;
    bench::SeriesResult r = bench::runtime_sweep(g);

    std::vector<std::pair<double, double>> eval_pts, omp_pts;
    for (double n : g.values) {
        eval_pts.emplace_back(n, r.at(n, "gdls_grad_eval_s").metric);
        omp_pts.emplace_back(n, r.at(n, "omp_total_s").metric);
    }
    double eval_slope = bench::loglog_slope(eval_pts);
    double omp_slope = bench::loglog_slope(omp_pts);
    bool pass = eval_slope >= 1.7 && eval_slope <= 2.4 && omp_slope >= 0.8 && omp_slope <= 1.3;
    CHECK(eval_slope >= 1.7);
    CHECK(eval_slope <= 2.4);
    CHECK(omp_slope >= 0.8);
    CHECK(omp_slope <= 1.3);
    std::ostringstream d;
    d << "gradient-evaluation log-log slope " << eval_slope << " (allowed [1.7, 2.4]), OMP total "
      << omp_slope << " (allowed [0.8, 1.3]); eval us/N:";
    for (const auto& [n, t] : eval_pts) d << " " << n << ":" << t * 1e6;
    report(6, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 7: convergence basin is real") {
    Rng rng(7007);
    const std::size_t n = 16;
    const double basin = 1.0 / static_cast<double>(n - 1);
    int ok_small = 0, fail_big = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        double f1 = rng.uniform01();
        double sep = rng.uniform(2.0 * basin * 1.02, 0.45);
        FrequencyVector truth({f1, wrap_unit(f1 + sep)});
        cvec c = {std::polar(1.0, rng.uniform(0.0, kTwoPi)),
                  std::polar(1.0, rng.uniform(0.0, kTwoPi))};
        Snapshot y = synthesize(truth, ComplexAmplitudes(c), n);

        std::vector<double> in_basin(2), outside(2);
        for (int i = 0; i < 2; ++i) {
            in_basin[i] = wrap_unit(truth[i] + rng.uniform(-0.5 * basin, 0.5 * basin));
            double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            outside[i] = wrap_unit(truth[i] + sign * 3.0 * basin);
        }
        SolveResult near = gdls_refine(y, FrequencyVector(in_basin), GdlsConfig{});
        if (match_frequencies(near.frequencies, truth).max_error < 1e-6) ++ok_small;
        try {
            SolveResult far = gdls_refine(y, FrequencyVector(outside), GdlsConfig{});
            if (match_frequencies(far.frequencies, truth).max_error >= 1e-6) ++fail_big;
        } catch (const Error&) {
            ++fail_big;  // collapse of collided frequencies counts as a failure
        }
    }
    bool pass = ok_small >= 99 && fail_big > 20;
    CHECK(ok_small >= 99);
    CHECK(fail_big > 20);
    std::ostringstream d;
    d << "in-basin inits converged " << ok_small << "/100 (>= 99); 3x-basin control failed "
      << fail_big << "/100 (> 20)";
    report(7, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 8: elevation inversion on the simulated building scene") {
    const double c0 = 299792458.0;
    TomoGeometry geom(c0 / 14.25e9, 0.084, 500.0, 8, 45.0 * 3.14159265358979323846 / 180.0);
    tomosar::SceneSpec spec;  // tuned defaults: 50x20 grid, 300 layover cells
    GdlsConfig gcfg;
    gcfg.max_iterations = 50000;
    OmpConfig ocfg;

    auto [scene, stack] = tomosar::simulate_scene(geom, spec, 25.0, 46);
    std::size_t layover = 0;
    for (const auto& cell : scene.cells) layover += cell.size() > 1 ? 1 : 0;
    REQUIRE(layover >= 100);

    auto [gcloud, grep_] = tomosar::invert_stack(stack, tomosar::Method::Gdls,
                                                 tomosar::sparsity_from_scene(scene), ocfg, gcfg,
                                                 default_threads());
    double gdls_rmse = tomosar::score_cloud(gcloud, scene).rmse_m;
    auto [ocloud, orep_] = tomosar::invert_stack(stack, tomosar::Method::Omp,
                                                 tomosar::sparsity_from_scene(scene), ocfg, gcfg,
                                                 default_threads());
    double omp_rmse = tomosar::score_cloud(ocloud, scene).rmse_m;

    auto [scene0, stack0] = tomosar::simulate_scene(geom, spec, 400.0, 46);
    auto [ncloud, nrep_] = tomosar::invert_stack(stack0, tomosar::Method::Gdls,
                                                 tomosar::sparsity_from_scene(scene0), ocfg, gcfg,
                                                 default_threads());
    double noiseless_rmse = tomosar::score_cloud(ncloud, scene0).rmse_m;

    bool band = gdls_rmse >= 0.2 && gdls_rmse <= 1.2;
    bool ratio = omp_rmse / gdls_rmse >= 2.0;
    bool control = noiseless_rmse < 1e-3;
    bool pass = band && ratio && control;
    CHECK(band);
    CHECK(ratio);
    CHECK(control);
    std::ostringstream d;
    d << layover << " layover cells; GDLS RMSE " << gdls_rmse << " m (band [0.2, 1.2]), OMP/GDLS "
      << omp_rmse / gdls_rmse << " (>= 2), noiseless control " << noiseless_rmse
      << " m (< 1e-3)";
    report(8, pass, d.str());
}

// ---------------------------------------------------------------------------
TEST_CASE("criterion 9: objective identity and correlation-kernel identity") {
    Rng rng(9009);
    bool identity_ok = true;
    double worst_identity = 0.0;
    for (int t = 0; t < 1000; ++t) {
        std::size_t l = 1 + static_cast<std::size_t>(rng.uniform(0, 4));
        std::size_t n = 2 * l + 2 + static_cast<std::size_t>(rng.uniform(0, 16));
        FrequencyVector f = random_separated_freqs(rng, l, n);
        cvec yv(n);
        for (std::size_t i = 0; i < n; ++i) yv[i] = cplx(rng.normal(), rng.normal());
        Snapshot y(yv);
        ObjectiveEval e = evaluate(y, f);
        Manifold a = build_manifold(f, n);
        double proj = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            cplx fit(0, 0);
            for (std::size_t j = 0; j < l; ++j) fit += a.columns(k, j) * e.amplitudes[j];
            proj += (std::conj(yv[k]) * fit).real();
        }
        double y2 = y.squared_norm();
        double rel = std::fabs(e.cost + proj - y2) / y2;
        worst_identity = std::max(worst_identity, rel);
        identity_ok = identity_ok && rel < 1e-10;
    }

    bool sad_ok = true;
    double worst_sad = 0.0;
    for (int t = 0; t < 1000; ++t) {
        int n = 2 + static_cast<int>(rng.uniform(0, 62));
        double f0 = rng.uniform01(), f1 = rng.uniform01();
        double corr = std::abs(cdot(steering_vector(f0, n), steering_vector(f1, n)));
        double pred = std::fabs(sad(3.14159265358979323846 * circ_dist(f0, f1), n));
        double rel = std::fabs(corr - pred) / std::max(1.0, pred);
        worst_sad = std::max(worst_sad, rel);
        sad_ok = sad_ok && rel < 1e-9;
    }
    bool pass = identity_ok && sad_ok;
    CHECK(identity_ok);
    CHECK(sad_ok);
    std::ostringstream d;
    d << "1000 projection identities, worst relative " << worst_identity
      << " (< 1e-10); 1000 correlation identities, worst relative " << worst_sad << " (< 1e-9)";
    report(9, pass, d.str());
}

// ---------------------------------------------------------------------------
namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args, const fs::path& dir) {
    fs::create_directories(dir);
    std::string cmd = "cd " + dir.string() + " && " + GDLS_CLI_PATH + " " + args +
                      " > cli.log 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string drop_time_lines(const std::string& text) {
    std::istringstream is(text);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("wall_time_s", 0) != 0) os << line << '\n';
    return os.str();
}

// project away the measured columns of a runtime CSV, keeping structure
std::string runtime_structure(const std::string& csv) {
    std::istringstream is(csv);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.find(',') == std::string::npos) {
            os << line << '\n';
            continue;
        }
        std::istringstream ls(line);
        std::string swept, method, metric, trials;
        std::getline(ls, swept, ',');
        std::getline(ls, method, ',');
        std::getline(ls, metric, ',');
        std::getline(ls, trials, ',');
        os << swept << ',' << method << ',' << trials << '\n';
    }
    return os.str();
}

}  // namespace

TEST_CASE("criterion 10: CLI outputs are byte-deterministic") {
    fs::path box = fs::temp_directory_path() / "gdls_acceptance";
    fs::remove_all(box);
    fs::create_directories(box);

    bool all_ok = true;
    std::ostringstream notes;

    auto check_pair = [&](const std::string& label, const std::string& args,
                          const std::vector<std::string>& files, bool strip_times) {
        fs::path d1 = box / (label + "_1"), d2 = box / (label + "_2");
        int r1 = run_cli(args, d1);
        int r2 = run_cli(args, d2);
        bool ok = r1 == 0 && r2 == 0;
        for (const std::string& f : files) {
            if (!ok) break;
            std::string a = slurp(d1 / f), b = slurp(d2 / f);
            if (strip_times) {
                a = drop_time_lines(a);
                b = drop_time_lines(b);
            }
            if (f.size() >= 11 && f.substr(f.size() - 11) == "runtime.csv") {
                a = runtime_structure(a);
                b = runtime_structure(b);
            }
            ok = ok && a == b;
        }
        CHECK(ok);
        all_ok = all_ok && ok;
        if (!ok) notes << " " << label << ":MISMATCH";
    };

    check_pair("estimate", "estimate --preset table1 --seed 7 --out-dir out",
               {"out/estimate.csv", "out/trajectory.csv"}, false);
    check_pair("mse_snr", "bench mse-snr --snr-list 15,25 --trials 8 --seed 5 --out-dir out",
               {"out/mse_snr.csv"}, false);
    check_pair("resolution",
               "bench resolution --sep-min 0.04 --sep-max 0.08 --sep-step 0.02 --trials 8 "
               "--seed 5 --out-dir out",
               {"out/resolution.csv"}, false);
    check_pair("amplitude", "bench amplitude --std-list 0,4 --trials 8 --seed 5 --out-dir out",
               {"out/amplitude.csv"}, false);
    check_pair("runtime", "bench runtime --n-list 16,32 --trials 2 --seed 5 --out-dir out",
               {"out/runtime.csv"}, false);
    check_pair("simulate",
               "tomosar simulate --preset table3 --rows 10 --cols 4 --footprint 2 7 1 2 --seed 9 "
               "--out-dir out",
               {"out/scene.csv", "out/stack.gdls", "out/geometry.txt"}, false);

    // invert runs against a fixed simulated input, with different thread counts
    fs::path simdir = box / "sim_input";
    REQUIRE(run_cli("tomosar simulate --preset table3 --rows 10 --cols 4 --footprint 2 7 1 2 "
                    "--seed 9 --out-dir sim",
                    simdir) == 0);
    std::string sim = (simdir / "sim").string();
    {
        fs::path d1 = box / "invert_1", d2 = box / "invert_2";
        int r1 = run_cli("tomosar invert --stack " + sim + "/stack.gdls --geometry " + sim +
                             "/geometry.txt --scene " + sim +
                             "/scene.csv --threads 2 --out-dir out",
                         d1);
        int r2 = run_cli("tomosar invert --stack " + sim + "/stack.gdls --geometry " + sim +
                             "/geometry.txt --scene " + sim +
                             "/scene.csv --threads 1 --out-dir out",
                         d2);
        bool ok = r1 == 0 && r2 == 0 &&
                  slurp(d1 / "out/cloud.csv") == slurp(d2 / "out/cloud.csv") &&
                  slurp(d1 / "out/cloud.ply") == slurp(d2 / "out/cloud.ply") &&
                  drop_time_lines(slurp(d1 / "out/invert_report.txt")) ==
                      drop_time_lines(slurp(d2 / "out/invert_report.txt"));
        CHECK(ok);
        all_ok = all_ok && ok;
        if (!ok) notes << " invert:MISMATCH";

        int r3 = run_cli("tomosar score --scene " + sim + "/scene.csv --geometry " + sim +
                             "/geometry.txt --cloud " + (d1 / "out/cloud.csv").string() +
                             " --out-dir out",
                         box / "score_1");
        int r4 = run_cli("tomosar score --scene " + sim + "/scene.csv --geometry " + sim +
                             "/geometry.txt --cloud " + (d1 / "out/cloud.csv").string() +
                             " --out-dir out",
                         box / "score_2");
        bool sok = r3 == 0 && r4 == 0 &&
                   slurp(box / "score_1/out/score_report.txt") ==
                       slurp(box / "score_2/out/score_report.txt");
        CHECK(sok);
        all_ok = all_ok && sok;
        if (!sok) notes << " score:MISMATCH";
    }

    std::string detail = "estimate, 4 bench sweeps, simulate/invert/score re-run byte-identical "
                         "(measured wall times excluded)" +
                         notes.str();
    report(10, all_ok, detail);
}
