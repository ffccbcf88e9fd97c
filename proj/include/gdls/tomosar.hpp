#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gdls/model.hpp"
#include "gdls/parallel.hpp"
#include "gdls/report.hpp"
#include "gdls/rng.hpp"
#include "gdls/solvers.hpp"

namespace gdls::tomosar {

struct Scatterer {
    double elevation_m = 0.0;
    cplx reflectivity{1.0, 0.0};
};

/// Rectangular building rasterized onto the cell grid. Cells inside the
/// footprint are layover cells carrying three scatterers: the ground at 0,
/// the roof at height_m, and one facade contribution whose elevation ramps
/// linearly from facade_lo_m to facade_hi_m across the footprint rows.
struct BuildingSpec {
    std::size_t row0 = 10, row1 = 34;  // inclusive
    std::size_t col0 = 4, col1 = 15;   // inclusive
    double height_m = 50.0;
    double facade_lo_m = 2.5;
    double facade_hi_m = 16.0;

    bool contains(std::size_t r, std::size_t c) const {
        return height_m > 0.0 && r >= row0 && r <= row1 && c >= col0 && c <= col1;
    }
};

struct SceneSpec {
    std::size_t rows = 50, cols = 20;
    double range_spacing_m = 2.0, azimuth_spacing_m = 2.0;
    BuildingSpec building{};
};

struct TomoScene {
    TomoGeometry geometry;
    SceneSpec spec;
    std::vector<std::vector<Scatterer>> cells;  // row-major, rows*cols entries

    std::size_t rows() const { return spec.rows; }
    std::size_t cols() const { return spec.cols; }
    std::size_t index(std::size_t r, std::size_t c) const { return r * spec.cols + c; }
};

struct TomoStack {
    TomoGeometry geometry;
    std::size_t rows = 0, cols = 0;
    std::size_t n = 0;  // samples per cell == geometry.num_baselines
    double snr_db = 0.0;
    double range_spacing_m = 2.0, azimuth_spacing_m = 2.0;
    cvec data;  // rows*cols*n, cell-major

    std::size_t index(std::size_t r, std::size_t c) const { return r * cols + c; }

    Snapshot cell(std::size_t r, std::size_t c) const {
        cvec s(n);
        const cplx* base = data.data() + index(r, c) * n;
        std::copy(base, base + n, s.begin());
        return Snapshot(std::move(s));
    }
};

struct PointRecord {
    double range_m = 0.0, azimuth_m = 0.0, elevation_m = 0.0;
    cplx amplitude{0.0, 0.0};
    std::size_t row = 0, col = 0;
};

struct PointCloud {
    std::vector<PointRecord> points;
};

enum class Method { Omp, Gdls };

inline const char* method_name(Method m) { return m == Method::Omp ? "omp" : "gdls"; }

/// Treated as noiseless above this SNR (the noise would be below double
/// rounding anyway).
inline constexpr double kNoiselessSnrDb = 300.0;

/// Rasterize the scene and synthesize the per-cell measurement stack.
/// Scatterers share a unit amplitude with per-scatterer phases drawn uniform;
/// everything is derived from `seed`.
inline std::pair<TomoScene, TomoStack> simulate_scene(const TomoGeometry& geometry,
                                                      const SceneSpec& spec, double snr_db,
                                                      std::uint64_t seed) {
    const double span = geometry.ambiguity_span_m();
    const BuildingSpec& b = spec.building;
    if (b.height_m >= span) {
        std::ostringstream msg;
        msg << "building height " << b.height_m << " m reaches the ambiguity span " << span
            << " m; elevations would wrap";
        throw ConfigError(msg.str());
    }
    if (b.height_m > 0.0) {
        if (b.row1 < b.row0 || b.col1 < b.col0 || b.row1 >= spec.rows || b.col1 >= spec.cols)
            throw ConfigError("building footprint does not fit the scene grid");
        if (b.facade_lo_m <= 0.0 || b.facade_hi_m >= b.height_m || b.facade_hi_m < b.facade_lo_m)
            throw ConfigError("facade ramp must lie strictly between ground and roof");
    }

    TomoScene scene;
    scene.geometry = geometry;
    scene.spec = spec;
    scene.cells.resize(spec.rows * spec.cols);

    TomoStack stack;
    stack.geometry = geometry;
    stack.rows = spec.rows;
    stack.cols = spec.cols;
    stack.n = static_cast<std::size_t>(geometry.num_baselines);
    stack.snr_db = snr_db;
    stack.range_spacing_m = spec.range_spacing_m;
    stack.azimuth_spacing_m = spec.azimuth_spacing_m;
    stack.data.resize(stack.rows * stack.cols * stack.n);

    const std::size_t footprint_rows = b.row1 - b.row0;
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const std::size_t idx = scene.index(r, c);
            Rng rng(derive_seed(seed, 0x5ce, idx));
            std::vector<Scatterer>& cell = scene.cells[idx];
            cell.push_back({0.0, std::polar(1.0, rng.uniform(0.0, kTwoPi))});
            if (b.contains(r, c)) {
                double frac = footprint_rows == 0
                                  ? 0.5
                                  : static_cast<double>(r - b.row0) /
                                        static_cast<double>(footprint_rows);
                double facade = b.facade_lo_m + (b.facade_hi_m - b.facade_lo_m) * frac;
                cell.push_back({facade, std::polar(1.0, rng.uniform(0.0, kTwoPi))});
                cell.push_back({b.height_m, std::polar(1.0, rng.uniform(0.0, kTwoPi))});
            }

            std::vector<double> freqs;
            cvec amps;
            for (const Scatterer& s : cell) {
                freqs.push_back(elevation_to_frequency(s.elevation_m, geometry));
                amps.push_back(s.reflectivity);
            }
            Snapshot x = synthesize(FrequencyVector(freqs), ComplexAmplitudes(amps), stack.n);
            std::copy(x.samples.begin(), x.samples.end(), stack.data.begin() + idx * stack.n);
        }
    }

    // One thermal-noise floor for the whole acquisition: sigma^2 is set by the
    // requested SNR against the mean per-cell signal power, so cells whose
    // scatterers mix destructively really are noisier relative to their signal.
    if (snr_db < kNoiselessSnrDb) {
        const std::size_t cells = stack.rows * stack.cols;
        double mean_power = 0.0;
        for (std::size_t idx = 0; idx < cells; ++idx) {
            const cplx* base = stack.data.data() + idx * stack.n;
            for (std::size_t k = 0; k < stack.n; ++k) mean_power += std::norm(base[k]);
        }
        mean_power /= static_cast<double>(cells);
        const double sigma2 =
            mean_power / (static_cast<double>(stack.n) * std::pow(10.0, snr_db / 10.0));
        for (std::size_t idx = 0; idx < cells; ++idx) {
            Rng rng(derive_seed(seed, 0x401, idx));
            cplx* base = stack.data.data() + idx * stack.n;
            for (std::size_t k = 0; k < stack.n; ++k) base[k] += rng.complex_normal(sigma2);
        }
    }
    return {std::move(scene), std::move(stack)};
}

/// Per-cell model orders taken from the ground truth (the known-sparsity
/// assumption of the simulation pipeline).
inline std::vector<std::size_t> sparsity_from_scene(const TomoScene& scene) {
    std::vector<std::size_t> l(scene.cells.size());
    for (std::size_t i = 0; i < scene.cells.size(); ++i) l[i] = scene.cells[i].size();
    return l;
}

struct InvertReport {
    std::string method;
    std::size_t cells_total = 0;
    std::size_t cells_dropped = 0;
    double wall_time_s = 0.0;
    std::vector<std::size_t> dropped_cells;  // flat indices
};

/// Invert every cell of the stack independently (parallel across cells),
/// mapping estimated frequencies back to elevations. Cell failures are
/// recorded and dropped, never fatal. The output order is canonical:
/// row-major cells, ascending elevation inside a cell.
inline std::pair<PointCloud, InvertReport> invert_stack(const TomoStack& stack, Method method,
                                                        const std::vector<std::size_t>& sparsity,
                                                        const OmpConfig& ocfg,
                                                        const GdlsConfig& gcfg,
                                                        unsigned threads = 1) {
    const std::size_t cells = stack.rows * stack.cols;
    if (sparsity.size() != cells)
        throw InvalidArgument("invert_stack: sparsity list does not match the cell grid");
    for (std::size_t l : sparsity)
        if (l < 1 || l > stack.n - 1)
            throw InvalidArgument("invert_stack: per-cell sparsity must lie in [1, N-1]");

    std::vector<std::vector<PointRecord>> per_cell(cells);
    std::vector<std::uint8_t> dropped(cells, 0);

    auto t0 = std::chrono::steady_clock::now();
    parallel_for(cells, threads, [&](std::size_t idx) {
        const std::size_t r = idx / stack.cols, c = idx % stack.cols;
        Snapshot y = stack.cell(r, c);
        try {
            OmpConfig oc = ocfg;
            oc.sparsity = sparsity[idx];
            SolveResult res = omp(y, oc);
            if (method == Method::Gdls) {
                GdlsConfig gc = gcfg;
                gc.sparsity = sparsity[idx];
                res = gdls_refine(y, res.frequencies, gc);
            }
            std::vector<PointRecord>& pts = per_cell[idx];
            for (std::size_t i = 0; i < res.frequencies.size(); ++i) {
                PointRecord p;
                p.row = r;
                p.col = c;
                p.range_m = static_cast<double>(r) * stack.range_spacing_m;
                p.azimuth_m = static_cast<double>(c) * stack.azimuth_spacing_m;
                p.elevation_m = frequency_to_elevation(res.frequencies[i], stack.geometry);
                p.amplitude = res.amplitudes[i];
                pts.push_back(p);
            }
            std::sort(pts.begin(), pts.end(),
                      [](const PointRecord& a, const PointRecord& b) {
                          return a.elevation_m < b.elevation_m;
                      });
        } catch (const Error&) {
            dropped[idx] = 1;
        }
    });
    auto t1 = std::chrono::steady_clock::now();

    PointCloud cloud;
    InvertReport report;
    report.method = method_name(method);
    report.cells_total = cells;
    report.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    for (std::size_t idx = 0; idx < cells; ++idx) {
        if (dropped[idx]) {
            ++report.cells_dropped;
            report.dropped_cells.push_back(idx);
            continue;
        }
        for (const PointRecord& p : per_cell[idx]) cloud.points.push_back(p);
    }
    return {std::move(cloud), std::move(report)};
}

struct ScoreReport {
    double rmse_m = 0.0;
    std::size_t matched_pairs = 0;
    std::size_t dropped_cells = 0;          // truth cells with no estimate
    std::vector<double> per_cell_max_error;  // one entry per scored cell
};

/// Elevation distance circular on the ambiguity span.
inline double elevation_dist(double a, double b, double span) {
    double d = std::fabs(a - b);
    d = std::fmod(d, span);
    return std::min(d, span - d);
}

/// Match estimated elevations to the true scatterers cell by cell (optimal
/// assignment under circular elevation distance) and report the RMSE over all
/// matched pairs.
inline ScoreReport score_cloud(const PointCloud& est, const TomoScene& truth) {
    const double span = truth.geometry.ambiguity_span_m();
    std::vector<std::vector<double>> est_elev(truth.cells.size());
    for (const PointRecord& p : est.points) {
        if (p.row >= truth.rows() || p.col >= truth.cols())
            throw InvalidArgument("score_cloud: point outside the truth cell grid");
        est_elev[truth.index(p.row, p.col)].push_back(p.elevation_m);
    }

    ScoreReport rep;
    double sq_sum = 0.0;
    for (std::size_t idx = 0; idx < truth.cells.size(); ++idx) {
        const std::vector<Scatterer>& ts = truth.cells[idx];
        if (ts.empty()) continue;
        std::vector<double>& es = est_elev[idx];
        if (es.empty()) {
            ++rep.dropped_cells;
            continue;
        }
        // brute-force optimal assignment of min(|est|,|truth|) pairs; the
        // larger side is permuted so every injection is enumerated
        const std::size_t k = std::min(es.size(), ts.size());
        const bool permute_est = es.size() >= ts.size();
        std::vector<std::size_t> perm(permute_est ? es.size() : ts.size());
        std::iota(perm.begin(), perm.end(), 0);
        double best_total = std::numeric_limits<double>::infinity();
        std::vector<double> best_err;
        do {
            double total = 0.0;
            std::vector<double> errs(k);
            for (std::size_t i = 0; i < k; ++i) {
                errs[i] = permute_est
                              ? elevation_dist(es[perm[i]], ts[i].elevation_m, span)
                              : elevation_dist(es[i], ts[perm[i]].elevation_m, span);
                total += errs[i];
            }
            if (total < best_total) {
                best_total = total;
                best_err = errs;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        double cell_max = 0.0;
        for (double e : best_err) {
            sq_sum += e * e;
            cell_max = std::max(cell_max, e);
            ++rep.matched_pairs;
        }
        rep.per_cell_max_error.push_back(cell_max);
    }
    rep.rmse_m = rep.matched_pairs > 0
                     ? std::sqrt(sq_sum / static_cast<double>(rep.matched_pairs))
                     : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// file formats
// ---------------------------------------------------------------------------

/// Binary stack container: magic "GDLS", little-endian u32 header
/// (version, rows, cols, N), then row-major cells of N float64 (re, im) pairs.
inline void write_stack(std::ostream& os, const TomoStack& stack) {
    os.write("GDLS", 4);
    std::uint32_t header[4] = {1u, static_cast<std::uint32_t>(stack.rows),
                               static_cast<std::uint32_t>(stack.cols),
                               static_cast<std::uint32_t>(stack.n)};
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const cplx& v : stack.data) {
        double re = v.real(), im = v.imag();
        os.write(reinterpret_cast<const char*>(&re), sizeof(double));
        os.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
}

/// Reads the binary payload; geometry and SNR come from the sidecar file.
inline TomoStack read_stack(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GDLS", 4) != 0)
        throw ParseError("stack file: bad magic, expected GDLS");
    std::uint32_t header[4];
    is.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!is) throw ParseError("stack file: truncated header");
    if (header[0] != 1u) throw ParseError("stack file: unsupported version");
    TomoStack stack;
    stack.rows = header[1];
    stack.cols = header[2];
    stack.n = header[3];
    if (stack.rows == 0 || stack.cols == 0 || stack.n < 2)
        throw ParseError("stack file: degenerate dimensions");
    stack.data.resize(stack.rows * stack.cols * stack.n);
    for (cplx& v : stack.data) {
        double re = 0.0, im = 0.0;
        is.read(reinterpret_cast<char*>(&re), sizeof(double));
        is.read(reinterpret_cast<char*>(&im), sizeof(double));
        if (!is) throw ParseError("stack file: truncated cell data");
        v = cplx(re, im);
    }
    return stack;
}

/// Sidecar text format: `key = value` lines, '#' comments.
inline void write_geometry_sidecar(std::ostream& os, const TomoStack& stack) {
    const TomoGeometry& g = stack.geometry;
    os << "# gdls " << kVersion << " stack geometry\n";
    os << "wavelength_m = " << fmt_full(g.wavelength_m) << "\n";
    os << "baseline_spacing_m = " << fmt_full(g.baseline_spacing_m) << "\n";
    os << "range_m = " << fmt_full(g.range_m) << "\n";
    os << "num_baselines = " << g.num_baselines << "\n";
    os << "incident_angle_rad = " << fmt_full(g.incident_angle_rad) << "\n";
    os << "snr_db = " << fmt_full(stack.snr_db) << "\n";
    os << "range_spacing_m = " << fmt_full(stack.range_spacing_m) << "\n";
    os << "azimuth_spacing_m = " << fmt_full(stack.azimuth_spacing_m) << "\n";
}

/// Generic `key = value` parser shared by the sidecar and run configs.
/// Returns pairs in file order; malformed lines name their line number.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& is,
                                                                         const char* what) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const char* ws = " \t\r";
        std::size_t b = s.find_first_not_of(ws);
        if (b == std::string::npos) return std::string();
        std::size_t e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << what << ": line " << lineno << ": expected 'key = value', got '" << t << "'";
            throw ParseError(msg.str());
        }
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream msg;
            msg << what << ": line " << lineno << ": empty key";
            throw ParseError(msg.str());
        }
        out.emplace_back(key, val);
    }
    return out;
}

inline void apply_geometry_sidecar(TomoStack& stack, std::istream& is) {
    double wavelength = 0, baseline = 0, range = 0, incident = 0;
    int n_baselines = 0;
    for (const auto& [key, val] : parse_key_values(is, "geometry sidecar")) {
        try {
            if (key == "wavelength_m") wavelength = std::stod(val);
            else if (key == "baseline_spacing_m") baseline = std::stod(val);
            else if (key == "range_m") range = std::stod(val);
            else if (key == "num_baselines") n_baselines = std::stoi(val);
            else if (key == "incident_angle_rad") incident = std::stod(val);
            else if (key == "snr_db") stack.snr_db = std::stod(val);
            else if (key == "range_spacing_m") stack.range_spacing_m = std::stod(val);
            else if (key == "azimuth_spacing_m") stack.azimuth_spacing_m = std::stod(val);
            else if (key == "rows") {
                if (std::stoul(val) != stack.rows)
                    throw ParseError("geometry sidecar: rows disagrees with the stack payload");
            } else if (key == "cols") {
                if (std::stoul(val) != stack.cols)
                    throw ParseError("geometry sidecar: cols disagrees with the stack payload");
            } else {
                throw ParseError("geometry sidecar: unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ParseError("geometry sidecar: bad value for '" + key + "'");
        }
    }
    stack.geometry = TomoGeometry(wavelength, baseline, range, n_baselines, incident);
    if (static_cast<std::size_t>(stack.geometry.num_baselines) != stack.n)
        throw ParseError("geometry sidecar: num_baselines disagrees with the stack payload");
}

/// Scene truth: one CSV row per scatterer.
inline void write_scene_csv(std::ostream& os, const TomoScene& scene, const MetaBlock& meta) {
    meta.write(os);
    os << "cell_row,cell_col,elevation_m,reflect_re,reflect_im\n";
    for (std::size_t r = 0; r < scene.rows(); ++r)
        for (std::size_t c = 0; c < scene.cols(); ++c)
            for (const Scatterer& s : scene.cells[scene.index(r, c)])
                os << r << ',' << c << ',' << fmt_full(s.elevation_m) << ','
                   << fmt_full(s.reflectivity.real()) << ',' << fmt_full(s.reflectivity.imag())
                   << '\n';
}

/// Rebuild a truth scene from its CSV (geometry supplied separately).
inline TomoScene read_scene_csv(std::istream& is, const TomoGeometry& geometry,
                                std::size_t rows, std::size_t cols) {
    TomoScene scene;
    scene.geometry = geometry;
    scene.spec.rows = rows;
    scene.spec.cols = cols;
    scene.cells.resize(rows * cols);
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column header
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        double vals[5];
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(ss, field, i == 4 ? '\n' : ',')) {
                std::ostringstream msg;
                msg << "scene csv: line " << lineno << ": expected 5 fields";
                throw ParseError(msg.str());
            }
            try {
                vals[i] = std::stod(field);
            } catch (const std::invalid_argument&) {
                std::ostringstream msg;
                msg << "scene csv: line " << lineno << ": bad number '" << field << "'";
                throw ParseError(msg.str());
            }
        }
        std::size_t r = static_cast<std::size_t>(vals[0]), c = static_cast<std::size_t>(vals[1]);
        if (r >= rows || c >= cols) {
            std::ostringstream msg;
            msg << "scene csv: line " << lineno << ": cell (" << r << ',' << c
                << ") outside the grid";
            throw ParseError(msg.str());
        }
        scene.cells[scene.index(r, c)].push_back({vals[2], cplx(vals[3], vals[4])});
    }
    if (!header_seen) throw ParseError("scene csv: empty file");
    return scene;
}

inline void write_cloud_csv(std::ostream& os, const PointCloud& cloud, const MetaBlock& meta) {
    meta.write(os);
    os << "range_m,azimuth_m,elevation_m,amplitude_abs,amplitude_phase_rad,cell_row,cell_col\n";
    for (const PointRecord& p : cloud.points)
        os << fmt_full(p.range_m) << ',' << fmt_full(p.azimuth_m) << ','
           << fmt_full(p.elevation_m) << ',' << fmt_full(std::abs(p.amplitude)) << ','
           << fmt_full(std::arg(p.amplitude)) << ',' << p.row << ',' << p.col << '\n';
}

inline PointCloud read_cloud_csv(std::istream& is) {
    PointCloud cloud;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        std::string field;
        double vals[7];
        for (int i = 0; i < 7; ++i) {
            if (!std::getline(ss, field, i == 6 ? '\n' : ',')) {
                std::ostringstream msg;
                msg << "cloud csv: line " << lineno << ": expected 7 fields";
                throw ParseError(msg.str());
            }
            try {
                vals[i] = std::stod(field);
            } catch (const std::invalid_argument&) {
                std::ostringstream msg;
                msg << "cloud csv: line " << lineno << ": bad number '" << field << "'";
                throw ParseError(msg.str());
            }
        }
        PointRecord p;
        p.range_m = vals[0];
        p.azimuth_m = vals[1];
        p.elevation_m = vals[2];
        p.amplitude = std::polar(vals[3], vals[4]);
        p.row = static_cast<std::size_t>(vals[5]);
        p.col = static_cast<std::size_t>(vals[6]);
        cloud.points.push_back(p);
    }
    if (!header_seen) throw ParseError("cloud csv: empty file");
    return cloud;
}

/// ASCII PLY with per-vertex amplitude; x = range, y = azimuth, z = elevation.
/// Provenance rides along as PLY comment lines.
inline void write_cloud_ply(std::ostream& os, const PointCloud& cloud, const MetaBlock& meta) {
    os << "ply\nformat ascii 1.0\ncomment gdls " << kVersion << "\n";
    std::ostringstream mb;
    meta.write(mb);
    std::istringstream lines(mb.str());
    std::string line;
    while (std::getline(lines, line))
        if (line.size() > 2) os << "comment " << line.substr(2) << "\n";
    os << "element vertex " << cloud.points.size() << "\n";
    os << "property double x\nproperty double y\nproperty double z\n"
       << "property double amplitude\nend_header\n";
    for (const PointRecord& p : cloud.points)
        os << fmt_full(p.range_m) << ' ' << fmt_full(p.azimuth_m) << ' '
           << fmt_full(p.elevation_m) << ' ' << fmt_full(std::abs(p.amplitude)) << '\n';
}

}  // namespace gdls::tomosar
