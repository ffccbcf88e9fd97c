// Command-line front end: scenario estimation, the benchmark sweeps, and the
// tomographic elevation-inversion pipeline. Every output file starts with a
// '#' provenance header (tool version, config echo, seed) and is byte
// deterministic for a fixed seed and config, except for measured wall times.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime/solver error.

#include <CLI11.hpp>

#include <cstdlib>
#include <map>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gdls/bench.hpp"
#include "gdls/crb.hpp"
#include "gdls/model.hpp"
#include "gdls/parallel.hpp"
#include "gdls/report.hpp"
#include "gdls/solvers.hpp"
#include "gdls/tomosar.hpp"
#include "gdls/version.hpp"

namespace fs = std::filesystem;
using namespace gdls;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSpeedOfLight = 299792458.0;

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": bad number '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
    return out;
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    fs::path p = dir / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file " + p.string());
    return os;
}

/// Apply a flat `key = value` config file to a parsed subcommand. Values only
/// fill options that were not given on the command line, so flags override
/// the file. Unknown keys and malformed lines are named errors.
void apply_config_file(CLI::App* sub, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    for (const auto& [key, value] : tomosar::parse_key_values(is, "config file")) {
        CLI::Option* op = sub->get_option_no_throw("--" + key);
        if (op == nullptr && key.size() == 1) op = sub->get_option_no_throw("-" + key);
        if (op == nullptr)
            throw ConfigError("config file: unknown key '" + key + "' for this command");
        if (op->count() > 0) continue;  // command line wins
        std::istringstream vs(value);
        std::string token;
        while (vs >> token) op->add_result(token);
        op->run_callback();
    }
}

Snapshot read_snapshot_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open snapshot file " + path);
    cvec samples;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = line;
        std::size_t h = t.find('#');
        if (h != std::string::npos) t = t.substr(0, h);
        std::istringstream ss(t);
        double re, im;
        if (!(ss >> re)) {
            ss.clear();
            std::string residue;
            if (ss >> residue) {
                std::ostringstream msg;
                msg << "snapshot file: line " << lineno << ": expected 're im', got '" << t
                    << "'";
                throw ParseError(msg.str());
            }
            continue;  // blank or comment-only line
        }
        if (!(ss >> im)) {
            std::ostringstream msg;
            msg << "snapshot file: line " << lineno << ": missing imaginary part";
            throw ParseError(msg.str());
        }
        samples.emplace_back(re, im);
    }
    if (samples.size() < 2) throw ParseError("snapshot file: fewer than 2 samples in " + path);
    return Snapshot(std::move(samples));
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateOpts {
    std::string preset = "table1";
    std::string input;  // snapshot file; empty -> synthetic preset scenario
    std::string method = "gdls";
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::size_t n = 16;
    std::size_t sparsity = 0;  // 0 -> scenario length
    double snr_db = 20.0;
    std::string freqs, amps, phases;
    std::size_t grid_size = 1024;
    double step_init = 0.0, step_min = 1e-9, step_decay = 0.5;
    std::size_t max_iters = 5000;
};

int run_estimate(const EstimateOpts& o) {
    OmpConfig ocfg;
    ocfg.grid_size = o.grid_size;
    GdlsConfig gcfg;
    gcfg.initial_step = o.step_init;
    gcfg.min_step = o.step_min;
    gcfg.step_decay = o.step_decay;
    gcfg.max_iterations = o.max_iters;
    gcfg.record_trajectory = true;

    MetaBlock meta;
    meta.add("command", "estimate");
    meta.add("method", o.method);
    meta.add("seed", o.seed);

    Snapshot y(cvec(2));
    std::size_t sparsity = o.sparsity;
    bool have_truth = false;
    FrequencyVector truth;
    if (!o.input.empty()) {
        if (sparsity == 0) throw ConfigError("--sparsity is required with --input");
        y = read_snapshot_file(o.input);
        meta.add("input", o.input);
    } else {
        std::vector<double> fr = o.freqs.empty() ? std::vector<double>{0.35, 0.1, 0.67, 0.92}
                                                 : parse_double_list(o.freqs, "--freqs");
        std::vector<double> mags = o.amps.empty() ? std::vector<double>{12, 8, 10, 11}
                                                  : parse_double_list(o.amps, "--amps");
        std::vector<double> phases = o.phases.empty()
                                         ? std::vector<double>(fr.size(), 0.0)
                                         : parse_double_list(o.phases, "--amp-phases");
        if (mags.size() != fr.size() || phases.size() != fr.size())
            throw ConfigError("--freqs, --amps and --amp-phases must have equal lengths");
        cvec c(fr.size());
        for (std::size_t i = 0; i < fr.size(); ++i) c[i] = std::polar(mags[i], phases[i]);
        truth = FrequencyVector(fr);
        have_truth = true;
        if (sparsity == 0) sparsity = fr.size();
        Snapshot x = synthesize(truth, ComplexAmplitudes(c), o.n);
        y = o.snr_db >= tomosar::kNoiselessSnrDb ? x : add_noise(x, o.snr_db, o.seed);
        meta.add("preset", o.preset);
        meta.add("n", std::uint64_t(o.n));
        meta.add("snr_db", o.snr_db);
        std::string fstr;
        for (double f : fr) fstr += (fstr.empty() ? "" : ",") + fmt_full(f);
        meta.add("freqs", fstr);
    }
    if (sparsity < 1 || sparsity > y.size() - 1) {
        std::ostringstream msg;
        msg << "sparsity bound violated: L = " << sparsity
            << " must satisfy 1 <= L <= N-1 = " << y.size() - 1;
        throw ConfigError(msg.str());
    }
    meta.add("sparsity", std::uint64_t(sparsity));
    meta.add("grid_size", std::uint64_t(o.grid_size));

    SolveResult res;
    if (o.method == "omp") {
        ocfg.sparsity = sparsity;
        res = omp(y, ocfg);
    } else if (o.method == "gdls") {
        res = estimate(y, sparsity, ocfg, gcfg);
    } else {
        throw ConfigError("--method must be omp or gdls");
    }

    {
        std::ofstream os = open_output(o.out_dir, "estimate.csv");
        meta.add("final_cost", res.final_cost);
        meta.add("iterations", std::uint64_t(res.iterations));
        meta.write(os);
        os << "frequency,amplitude_re,amplitude_im\n";
        for (std::size_t i = 0; i < res.frequencies.size(); ++i)
            os << fmt_full(res.frequencies[i]) << ',' << fmt_full(res.amplitudes[i].real())
               << ',' << fmt_full(res.amplitudes[i].imag()) << '\n';
    }
    {
        std::ofstream os = open_output(o.out_dir, "trajectory.csv");
        meta.write(os);
        os << "iteration,cost\n";
        for (const auto& [it, cost] : res.trajectory) os << it << ',' << fmt_full(cost) << '\n';
    }

    std::cout << "estimated " << res.frequencies.size() << " frequencies in " << res.iterations
              << " iterations, final cost " << fmt_full(res.final_cost) << "\n";
    if (have_truth) {
        FrequencyMatch m = match_frequencies(res.frequencies, truth);
        std::cout << "max matched error vs truth: " << fmt_full(m.max_error) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchOpts {
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 -> hardware
    int trials = 200;
    std::size_t n = 16;
    double snr_db = 20.0;
    double success_eps = -1.0;  // -1 -> per-sweep default
    std::size_t grid_size = 1024;
    std::string snr_list = "0,5,10,15,20,25,30,35,40";
    double sep_min = 0.01, sep_max = 0.1, sep_step = 0.005;
    std::string std_list = "0,1,2,3,4,5,6,7,8";
    std::string n_list = "16,32,64,128,256";
    bool trials_given = false;
};

bench::ExperimentGrid make_grid(const BenchOpts& o, double default_eps) {
    bench::ExperimentGrid g;
    g.trials_per_point = o.trials;
    g.master_seed = o.seed;
    g.threads = o.threads == 0 ? default_threads() : o.threads;
    g.base.n = o.n;
    g.base.snr_db = o.snr_db;
    g.base.success_eps = o.success_eps < 0 ? default_eps : o.success_eps;
    g.base.omp_cfg.grid_size = o.grid_size;
    return g;
}

void add_common_meta(MetaBlock& meta, const bench::ExperimentGrid& g) {
    meta.add("master_seed", g.master_seed);
    meta.add("trials_per_point", g.trials_per_point);
    meta.add("n", std::uint64_t(g.base.n));
    meta.add("snr_db", g.base.snr_db);
    meta.add("success_eps", g.base.success_eps);
    meta.add("grid_size", std::uint64_t(g.base.omp_cfg.grid_size));
}

int run_bench(const std::string& sub, const BenchOpts& o) {
    if (sub == "mse-snr") {
        bench::ExperimentGrid g = make_grid(o, 0.005);
        g.swept_name = "snr_db";
        g.values = parse_double_list(o.snr_list, "--snr-list");
        bench::SeriesResult r = bench::mse_vs_snr(g);
        MetaBlock meta;
        meta.add("command", "bench mse-snr");
        add_common_meta(meta, g);
        meta.add("mse_definition",
                 "per-frequency mean squared matched circular error, averaged over "
                 "successful trials");
        std::ofstream os = open_output(o.out_dir, "mse_snr.csv");
        r.write_csv(os, meta);
    } else if (sub == "resolution") {
        bench::ExperimentGrid g = make_grid(o, 0.01);
        g.swept_name = "separation";
        for (int i = 0;; ++i) {
            double s = o.sep_min + static_cast<double>(i) * o.sep_step;
            if (s > o.sep_max + 1e-12) break;
            g.values.push_back(s);
        }
        bench::SeriesResult r = bench::resolution_sweep(g);
        MetaBlock meta;
        meta.add("command", "bench resolution");
        add_common_meta(meta, g);
        meta.add("scenario",
                 "two sources with identical complex amplitude (coherent pair), base "
                 "frequency uniform per trial");
        std::ofstream os = open_output(o.out_dir, "resolution.csv");
        r.write_csv(os, meta);
    } else if (sub == "amplitude") {
        bench::ExperimentGrid g = make_grid(o, 0.005);
        g.swept_name = "amplitude_std";
        g.values = parse_double_list(o.std_list, "--std-list");
        bench::SeriesResult r = bench::amplitude_sweep(g);
        MetaBlock meta;
        meta.add("command", "bench amplitude");
        add_common_meta(meta, g);
        meta.add("amplitude_model",
                 "magnitude ~ Normal(mean 10, swept std) clipped at 0.1; phase zero or "
                 "uniform per mode");
        std::ofstream os = open_output(o.out_dir, "amplitude.csv");
        r.write_csv(os, meta);
    } else if (sub == "runtime") {
        bench::ExperimentGrid g = make_grid(o, 0.005);
        g.swept_name = "n";
        g.values = parse_double_list(o.n_list, "--n-list");
        if (!o.trials_given) g.trials_per_point = 50;
        bench::SeriesResult r = bench::runtime_sweep(g);
        MetaBlock meta;
        meta.add("command", "bench runtime");
        add_common_meta(meta, g);
        meta.add("timing",
                 "wall clock of the solve call only, serial execution; time and stderr "
                 "columns are not reproducible run to run");
        std::ofstream os = open_output(o.out_dir, "runtime.csv");
        r.write_csv(os, meta);
    } else {
        throw ConfigError("unknown bench subcommand '" + sub + "'");
    }
    std::cout << "bench " << sub << " written to " << o.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// tomosar
// ---------------------------------------------------------------------------

struct TomoOpts {
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    unsigned threads = 0;
    // geometry preset: 14.25 GHz, 0.084 m x 8 baselines, 500 m range, 45 deg, 25 dB
    double frequency_ghz = 14.25;
    double baseline_m = 0.084;
    double range_m = 500.0;
    int num_baselines = 8;
    double incident_deg = 45.0;
    double snr_db = 25.0;
    // scene
    std::size_t rows = 50, cols = 20;
    double height_m = 50.0;
    std::vector<std::size_t> footprint;  // row0 row1 col0 col1
    double facade_lo = 2.5, facade_hi = 16.0;
    double range_spacing = 2.0, azimuth_spacing = 2.0;
    // invert/score inputs
    std::string stack_path = "stack.gdls";
    std::string geometry_path = "geometry.txt";
    std::string scene_path;
    std::string cloud_path = "cloud.csv";
    std::string method = "gdls";
    std::size_t sparsity = 0;  // fixed per-cell order when no truth scene given
    std::size_t grid_size = 1024;
    double step_init = 0.0, step_min = 1e-9, step_decay = 0.5;
    // per-cell solves at N = 8 are microseconds; a generous budget lets the
    // tightest layover cells converge all the way
    std::size_t max_iters = 50000;
};

TomoGeometry geometry_from(const TomoOpts& o) {
    return TomoGeometry(kSpeedOfLight / (o.frequency_ghz * 1e9), o.baseline_m, o.range_m,
                        o.num_baselines, o.incident_deg * kPi / 180.0);
}

void add_geometry_meta(MetaBlock& meta, const TomoGeometry& g, double snr_db) {
    meta.add("wavelength_m", g.wavelength_m);
    meta.add("baseline_spacing_m", g.baseline_spacing_m);
    meta.add("range_m", g.range_m);
    meta.add("num_baselines", g.num_baselines);
    meta.add("incident_angle_rad", g.incident_angle_rad);
    meta.add("ambiguity_span_m", g.ambiguity_span_m());
    meta.add("snr_db", snr_db);
}

int run_tomosar_simulate(const TomoOpts& o) {
    TomoGeometry geom = geometry_from(o);
    tomosar::SceneSpec spec;
    spec.rows = o.rows;
    spec.cols = o.cols;
    spec.range_spacing_m = o.range_spacing;
    spec.azimuth_spacing_m = o.azimuth_spacing;
    spec.building.height_m = o.height_m;
    spec.building.facade_lo_m = o.facade_lo;
    spec.building.facade_hi_m = o.facade_hi;
    if (!o.footprint.empty()) {
        if (o.footprint.size() != 4)
            throw ConfigError("--footprint needs four values: row0 row1 col0 col1");
        spec.building.row0 = o.footprint[0];
        spec.building.row1 = o.footprint[1];
        spec.building.col0 = o.footprint[2];
        spec.building.col1 = o.footprint[3];
    }
    auto [scene, stack] = tomosar::simulate_scene(geom, spec, o.snr_db, o.seed);

    MetaBlock meta;
    meta.add("command", "tomosar simulate");
    meta.add("seed", o.seed);
    add_geometry_meta(meta, geom, o.snr_db);
    meta.add("rows", std::uint64_t(spec.rows));
    meta.add("cols", std::uint64_t(spec.cols));
    meta.add("building_height_m", spec.building.height_m);

    {
        std::ofstream os = open_output(o.out_dir, "scene.csv");
        tomosar::write_scene_csv(os, scene, meta);
    }
    {
        std::ofstream os = open_output(o.out_dir, "stack.gdls");
        tomosar::write_stack(os, stack);
    }
    {
        std::ofstream os = open_output(o.out_dir, "geometry.txt");
        tomosar::write_geometry_sidecar(os, stack);
        os << "rows = " << spec.rows << "\n";
        os << "cols = " << spec.cols << "\n";
    }
    std::size_t layover = 0;
    for (const auto& cell : scene.cells) layover += cell.size() > 1 ? 1 : 0;
    std::cout << "simulated " << spec.rows << "x" << spec.cols << " scene (" << layover
              << " layover cells), span " << fmt_full(geom.ambiguity_span_m()) << " m\n";
    return 0;
}

tomosar::TomoStack load_stack(const TomoOpts& o) {
    std::ifstream sb(o.stack_path, std::ios::binary);
    if (!sb) throw ConfigError("cannot open stack file " + o.stack_path);
    tomosar::TomoStack stack = tomosar::read_stack(sb);
    std::ifstream gs(o.geometry_path);
    if (!gs) throw ConfigError("cannot open geometry sidecar " + o.geometry_path);
    tomosar::apply_geometry_sidecar(stack, gs);
    return stack;
}

tomosar::TomoScene load_scene(const std::string& path, const TomoGeometry& geom) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open scene file " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    // infer the grid from the row/col indices (every cell has a ground return)
    std::size_t rows = 0, cols = 0;
    {
        std::istringstream pass1(buf.str());
        std::string line;
        bool header_seen = false;
        while (std::getline(pass1, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (!header_seen) {
                header_seen = true;
                continue;
            }
            std::istringstream ss(line);
            std::string r, c;
            if (std::getline(ss, r, ',') && std::getline(ss, c, ',')) {
                try {
                    rows = std::max(rows, static_cast<std::size_t>(std::stoul(r)) + 1);
                    cols = std::max(cols, static_cast<std::size_t>(std::stoul(c)) + 1);
                } catch (const std::exception&) {
                    throw ParseError("scene csv: bad cell index '" + r + "," + c + "'");
                }
            }
        }
    }
    if (rows == 0 || cols == 0) throw ParseError("scene csv: no scatterer rows in " + path);
    std::istringstream pass2(buf.str());
    return tomosar::read_scene_csv(pass2, geom, rows, cols);
}

int run_tomosar_invert(const TomoOpts& o) {
    tomosar::TomoStack stack = load_stack(o);

    std::vector<std::size_t> sparsity;
    if (!o.scene_path.empty()) {
        tomosar::TomoScene scene = load_scene(o.scene_path, stack.geometry);
        if (scene.cells.size() != stack.rows * stack.cols)
            throw ConfigError("scene truth grid does not match the stack grid");
        sparsity = tomosar::sparsity_from_scene(scene);
    } else {
        std::size_t fixed = o.sparsity == 0 ? 1 : o.sparsity;
        sparsity.assign(stack.rows * stack.cols, fixed);
    }
    for (std::size_t l : sparsity)
        if (l > stack.n - 1) {
            std::ostringstream msg;
            msg << "sparsity bound violated: L = " << l
                << " must satisfy L <= N-1 = " << stack.n - 1;
            throw ConfigError(msg.str());
        }

    tomosar::Method method;
    if (o.method == "omp") {
        method = tomosar::Method::Omp;
    } else if (o.method == "gdls") {
        method = tomosar::Method::Gdls;
    } else {
        throw ConfigError("--method must be omp or gdls");
    }

    OmpConfig ocfg;
    ocfg.grid_size = o.grid_size;
    GdlsConfig gcfg;
    gcfg.initial_step = o.step_init;
    gcfg.min_step = o.step_min;
    gcfg.step_decay = o.step_decay;
    gcfg.max_iterations = o.max_iters;

    unsigned threads = o.threads == 0 ? default_threads() : o.threads;
    auto [cloud, report] = tomosar::invert_stack(stack, method, sparsity, ocfg, gcfg, threads);

    MetaBlock meta;
    meta.add("command", "tomosar invert");
    meta.add("method", o.method);
    meta.add("stack", o.stack_path);
    meta.add("grid_size", std::uint64_t(o.grid_size));
    add_geometry_meta(meta, stack.geometry, stack.snr_db);
    {
        std::ofstream os = open_output(o.out_dir, "cloud.csv");
        tomosar::write_cloud_csv(os, cloud, meta);
    }
    {
        std::ofstream os = open_output(o.out_dir, "cloud.ply");
        tomosar::write_cloud_ply(os, cloud, meta);
    }
    {
        std::ofstream os = open_output(o.out_dir, "invert_report.txt");
        meta.write(os);
        os << "cells_total = " << report.cells_total << "\n";
        os << "cells_dropped = " << report.cells_dropped << "\n";
        os << "points = " << cloud.points.size() << "\n";
        os << "wall_time_s = " << fmt_full(report.wall_time_s) << "\n";
    }
    std::cout << "inverted " << report.cells_total << " cells (" << report.cells_dropped
              << " dropped) in " << fmt_full(report.wall_time_s) << " s\n";
    return 0;
}

int run_tomosar_score(const TomoOpts& o) {
    TomoGeometry geom = geometry_from(o);
    // prefer the geometry sidecar when present
    std::ifstream gs(o.geometry_path);
    if (gs) {
        double wavelength = 0, baseline = 0, range = 0, incident = 0;
        int nb = 0;
        for (const auto& [key, val] : tomosar::parse_key_values(gs, "geometry sidecar")) {
            try {
                if (key == "wavelength_m") wavelength = std::stod(val);
                else if (key == "baseline_spacing_m") baseline = std::stod(val);
                else if (key == "range_m") range = std::stod(val);
                else if (key == "num_baselines") nb = std::stoi(val);
                else if (key == "incident_angle_rad") incident = std::stod(val);
            } catch (const std::exception&) {
                throw ParseError("geometry sidecar: bad value for '" + key + "'");
            }
        }
        if (wavelength > 0) geom = TomoGeometry(wavelength, baseline, range, nb, incident);
    }
    if (o.scene_path.empty()) throw ConfigError("--scene is required for scoring");
    tomosar::TomoScene scene = load_scene(o.scene_path, geom);
    std::ifstream cs(o.cloud_path);
    if (!cs) throw ConfigError("cannot open cloud file " + o.cloud_path);
    tomosar::PointCloud cloud = tomosar::read_cloud_csv(cs);
    tomosar::ScoreReport rep = tomosar::score_cloud(cloud, scene);

    MetaBlock meta;
    meta.add("command", "tomosar score");
    meta.add("cloud", o.cloud_path);
    meta.add("scene", o.scene_path);
    std::ofstream os = open_output(o.out_dir, "score_report.txt");
    meta.write(os);
    os << "rmse_m = " << fmt_full(rep.rmse_m) << "\n";
    os << "matched_pairs = " << rep.matched_pairs << "\n";
    os << "dropped_cells = " << rep.dropped_cells << "\n";
    std::cout << "rmse_m = " << fmt_full(rep.rmse_m) << " over " << rep.matched_pairs
              << " pairs, " << rep.dropped_cells << " dropped cells\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridless single-snapshot line-spectrum estimation toolkit"};
    app.set_version_flag("--version", std::string("gdls ") + kVersion);
    app.require_subcommand(1);

    const char* env_out = std::getenv("GDLS_OUT_DIR");
    std::string default_out = env_out ? env_out : ".";

    // ---- estimate ----
    EstimateOpts eo;
    eo.out_dir = default_out;
    CLI::App* est = app.add_subcommand("estimate", "estimate frequencies from one snapshot");
    std::string cfg_path;
    CLI::App* parsed_leaf = nullptr;
    est->add_option("--config", cfg_path, "flat key = value config file; flags override");
    est->callback([&parsed_leaf, est] { parsed_leaf = est; });
    est->add_option("--preset", eo.preset, "scenario preset (table1)")
        ->check(CLI::IsMember({"table1"}));
    est->add_option("--input", eo.input, "snapshot file ('re im' per line, '#' comments)");
    est->add_option("--method", eo.method, "omp | gdls (default gdls)");
    est->add_option("--out-dir", eo.out_dir, "output directory");
    est->add_option("--seed", eo.seed, "noise seed");
    est->add_option("-n,--samples", eo.n, "snapshot length for synthetic scenarios");
    est->add_option("--sparsity", eo.sparsity, "model order L");
    est->add_option("--snr-db", eo.snr_db, "SNR of the synthetic snapshot");
    est->add_option("--freqs", eo.freqs, "true frequencies, comma list");
    est->add_option("--amps", eo.amps, "true amplitude magnitudes, comma list");
    est->add_option("--amp-phases", eo.phases, "true amplitude phases (rad), comma list");
    est->add_option("--grid-size", eo.grid_size, "OMP dictionary size M");
    est->add_option("--step-init", eo.step_init, "initial step (0 = 0.1/N)");
    est->add_option("--step-min", eo.step_min, "terminating step length");
    est->add_option("--step-decay", eo.step_decay, "step decay on rejected steps");
    est->add_option("--max-iters", eo.max_iters, "iteration cap");

    // ---- bench ----
    BenchOpts bo;
    bo.out_dir = default_out;
    CLI::App* bench_app = app.add_subcommand("bench", "simulation study sweeps (CSV output)");
    bench_app->require_subcommand(1);
    std::string bench_sub;
    const std::map<std::string, std::string> bench_help = {
        {"mse-snr", "matched-frequency MSE vs SNR, with the CRB"},
        {"resolution", "two-source success rate vs frequency separation"},
        {"amplitude", "success rate vs amplitude non-uniformity"},
        {"runtime", "solver wall-clock cost vs snapshot length"}};
    for (const char* name : {"mse-snr", "resolution", "amplitude", "runtime"}) {
        CLI::App* s = bench_app->add_subcommand(name, bench_help.at(name));
        s->add_option("--config", cfg_path, "flat key = value config file; flags override");
        s->add_option("--out-dir", bo.out_dir, "output directory");
        s->add_option("--seed", bo.seed, "master seed");
        s->add_option("--threads", bo.threads, "worker count (0 = hardware)");
        s->add_option("--trials", bo.trials, "trials per sweep point")
            ->each([&bo](const std::string&) { bo.trials_given = true; });
        s->add_option("-n,--samples", bo.n, "snapshot length");
        s->add_option("--snr-db", bo.snr_db, "SNR where not swept");
        s->add_option("--success-eps", bo.success_eps, "success threshold");
        s->add_option("--grid-size", bo.grid_size, "OMP dictionary size M");
        s->add_option("--snr-list", bo.snr_list, "mse-snr: swept SNRs");
        s->add_option("--sep-min", bo.sep_min, "resolution: smallest separation");
        s->add_option("--sep-max", bo.sep_max, "resolution: largest separation");
        s->add_option("--sep-step", bo.sep_step, "resolution: separation step");
        s->add_option("--std-list", bo.std_list, "amplitude: swept magnitude stds");
        s->add_option("--n-list", bo.n_list, "runtime: swept snapshot lengths");
        s->callback([&bench_sub, &parsed_leaf, s, name] {
            bench_sub = name;
            parsed_leaf = s;
        });
    }

    // ---- tomosar ----
    TomoOpts to;
    to.out_dir = default_out;
    CLI::App* tomo = app.add_subcommand("tomosar", "elevation inversion pipeline");
    tomo->require_subcommand(1);
    std::string tomo_sub;
    std::string tomo_preset = "table3";
    const std::map<std::string, std::string> tomo_help = {
        {"simulate", "rasterize a layover scene and synthesize its stack"},
        {"invert", "per-cell elevation estimation into a point cloud"},
        {"score", "RMSE of a point cloud against the scene truth"}};
    for (const char* name : {"simulate", "invert", "score"}) {
        CLI::App* s = tomo->add_subcommand(name, tomo_help.at(name));
        s->add_option("--config", cfg_path, "flat key = value config file; flags override");
        s->add_option("--out-dir", to.out_dir, "output directory");
        s->add_option("--seed", to.seed, "master seed");
        s->add_option("--threads", to.threads, "worker count (0 = hardware)");
        if (std::string(name) == "simulate") {
            s->add_option("--preset", tomo_preset, "geometry preset (table3)")
                ->check(CLI::IsMember({"table3"}));
            s->add_option("--frequency-ghz", to.frequency_ghz, "system frequency");
            s->add_option("--baseline", to.baseline_m, "baseline spacing b (m)");
            s->add_option("--range", to.range_m, "slant range R0 (m)");
            s->add_option("--num-baselines", to.num_baselines, "array size N");
            s->add_option("--incident-deg", to.incident_deg, "incident angle");
            s->add_option("--snr-db", to.snr_db, "per-cell SNR");
            s->add_option("--rows", to.rows, "scene range cells");
            s->add_option("--cols", to.cols, "scene azimuth cells");
            s->add_option("--height", to.height_m, "building height (m); 0 = flat scene");
            s->add_option("--footprint", to.footprint,
                          "building footprint cells: row0 row1 col0 col1")
                ->expected(4);
            s->add_option("--facade-lo", to.facade_lo, "facade ramp start elevation (m)");
            s->add_option("--facade-hi", to.facade_hi, "facade ramp end elevation (m)");
            s->add_option("--range-spacing", to.range_spacing, "cell size in range (m)");
            s->add_option("--azimuth-spacing", to.azimuth_spacing, "cell size in azimuth (m)");
        } else {
            s->add_option("--stack", to.stack_path, "stack container path");
            s->add_option("--geometry", to.geometry_path, "geometry sidecar path");
            s->add_option("--scene", to.scene_path, "scene truth CSV");
            s->add_option("--cloud", to.cloud_path, "point cloud CSV (score input)");
            s->add_option("--method", to.method, "omp | gdls");
            s->add_option("--sparsity", to.sparsity, "fixed per-cell order when no truth");
            s->add_option("--grid-size", to.grid_size, "OMP dictionary size M");
            s->add_option("--step-init", to.step_init, "initial step (0 = 0.1/N)");
            s->add_option("--step-min", to.step_min, "terminating step length");
            s->add_option("--step-decay", to.step_decay, "step decay on rejected steps");
            s->add_option("--max-iters", to.max_iters, "iteration cap");
        }
        s->callback([&tomo_sub, &parsed_leaf, s, name] {
            tomo_sub = name;
            parsed_leaf = s;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (!cfg_path.empty() && parsed_leaf != nullptr) apply_config_file(parsed_leaf, cfg_path);
        if (est->parsed()) return run_estimate(eo);
        if (bench_app->parsed()) return run_bench(bench_sub, bo);
        if (tomo->parsed()) {
            if (tomo_sub == "simulate") return run_tomosar_simulate(to);
            if (tomo_sub == "invert") return run_tomosar_invert(to);
            return run_tomosar_score(to);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
