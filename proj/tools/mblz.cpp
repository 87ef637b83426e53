// mblz: command-line driver for ground states, sweeps, scans, spectra and the
// two-level reference.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <mblz/checkpoint.hpp>
#include <mblz/config.hpp>
#include <mblz/groundstate.hpp>
#include <mblz/manifest.hpp>
#include <mblz/observables.hpp>
#include <mblz/presets.hpp>
#include <mblz/reference_lz.hpp>
#include <mblz/series_io.hpp>
#include <mblz/snapshot.hpp>
#include <mblz/sweep.hpp>

namespace fs = std::filesystem;
using namespace mblz;

namespace {

struct Globals {
    std::string config;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<long> checkpoint_every;
    std::string resume;
};

RunConfig resolved(const Globals& g, bool required = true) {
    if (g.config.empty()) {
        if (required) throw Error("--config is required for this command");
        return parse_config("[model]\npreset = paper-V17\n");
    }
    RunConfig c = load_config(g.config);
    if (g.seed) {
        c.seed = *g.seed;
        c.ground.rng_seed = *g.seed;
    }
    if (g.threads) {
        if (*g.threads < 1) throw Error("--threads must be >= 1");
        c.threads = *g.threads;
    }
    if (g.checkpoint_every) {
        if (*g.checkpoint_every < 0) throw Error("--checkpoint-every must be >= 0");
        c.checkpoint_every = *g.checkpoint_every;
    }
    return c;
}

// Every manifest records the wall clock, but only the content digest matters
// for reproducibility.
class Run {
public:
    Run(std::string command, const RunConfig& c, fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
        m_.command = std::move(command);
        m_.config = config_echo(c);
        m_.rng_seed = c.seed;
        m_.threads = c.threads;
        m_.wall_start = utc_timestamp();
    }
    fs::path path(const fs::path& rel) {
        files_.push_back(rel);
        return dir_ / rel;
    }
    void warn(const std::vector<std::string>& w) { m_.warnings.insert(m_.warnings.end(), w.begin(), w.end()); }
    void finish() {
        m_.wall_end = utc_timestamp();
        m_.add_files(dir_, files_);
        m_.write(dir_ / "manifest.json");
        std::cout << "manifest " << (dir_ / "manifest.json").string() << " digest " << m_.digest() << "\n";
    }

private:
    fs::path dir_;
    RunManifest m_;
    std::vector<fs::path> files_;
};

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

nlohmann::json report_json(const GroundReport& r) {
    return {{"steps", r.steps},
            {"converged", r.converged},
            {"energy", number(r.energy)},
            {"chemical_potential", number(r.chemical_potential)},
            {"residual", number(r.residual)},
            {"final_dt", number(r.final_dt)},
            {"max_energy_rise", number(r.max_energy_rise)}};
}

int cmd_params() {
    std::printf("%-10s %9s %8s %6s %7s %9s %10s  %s\n", "preset", "t1", "t2", "U", "omega", "lattice", "endpoints",
                "note");
    for (const auto& p : presets())
        std::printf("%-10s %9g %8g %6g %7g %4dx%-4d %10g  %s\n", p.name.c_str(), p.t1, p.t2, p.U, p.omega, p.nx, p.ny,
                    p.endpoint_detuning, p.note.c_str());
    const auto r = harmonic_interaction_ratios();
    std::printf("\nharmonic-approximation interaction ratios (p orbitals)\n");
    std::printf("  U_xx / U_yy   = 1 (symmetry)\n");
    std::printf("  U_xx / U_xy   = %.6f\n", r.xx_over_xy);
    std::printf("  U_xx / U_pair = %.6f\n", r.xx_over_pair);
    std::printf("  equations of motion use U_xx = U, U_xy = U_pair = U/3\n");
    return 0;
}

int cmd_lz2(double coupling, double lambda, std::optional<double> span, std::optional<double> dt, bool diabatic,
            const std::string& trajectory) {
    TwoLevelConfig c = two_level_defaults(coupling, lambda);
    if (span) {
        c.t_i = -*span;
        c.t_f = *span;
    }
    if (dt) c.dt = *dt;
    c.adiabatic_frame = !diabatic;
    if (!trajectory.empty()) c.record_stride = std::max<long>(1, std::lround((c.t_f - c.t_i) / c.dt / 2000.0));
    const LzResult r = lz_integrate(c);
    std::printf("Lambda=%.6f\n", r.lambda_parameter);
    std::printf("P_analytic=%.6f\n", r.p_analytic);
    std::printf("P_numeric=%.6f\n", r.p_numeric);
    std::printf("abs_difference=%.3e\n", std::abs(r.p_numeric - r.p_analytic));
    for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!trajectory.empty()) write_series(r.trajectory, trajectory);
    return 0;
}

int cmd_ground(const Globals& g, std::optional<double> detuning) {
    RunConfig c = resolved(g);
    if (detuning) c.ground.detuning = *detuning;
    Run run("ground", c, g.out_dir);
    const GroundResult r = find_ground(c.ground, c.params);
    const double z = imbalance(r.field).z_tot;
    const double edge = edge_density_ratio(r.field);
    write_snapshot(r.field, run.path("ground.snap"));
    nlohmann::json j = report_json(r.report);
    j["detuning"] = c.ground.detuning;
    j["z_tot"] = z;
    j["edge_ratio"] = edge;
    write_json(run.path("ground.json"), j);
    std::vector<std::string> w;
    if (!r.report.converged) w.push_back("ground state did not converge");
    if (edge > edge_guard_threshold) w.push_back("edge density exceeds the periodic-boundary guard");
    run.warn(w);
    for (const auto& s : w) std::fprintf(stderr, "warning: %s\n", s.c_str());
    std::printf("detuning %g  Z_tot %.9f  energy %.12f  steps %ld  converged %s\n", c.ground.detuning, z,
                r.report.energy, r.report.steps, r.report.converged ? "yes" : "no");
    run.finish();
    return r.report.converged ? 0 : 2;
}

int cmd_scan_ground(const Globals& g) {
    RunConfig c = resolved(g);
    if (c.ground_detunings.empty()) throw Error("scan_ground.detunings is empty");
    std::vector<double> ds = c.ground_detunings;
    std::sort(ds.begin(), ds.end());
    Run run("scan-ground", c, g.out_dir);
    auto pts = ground_scan(ds, c.params, c.ground, c.warm_start, c.threads);
    Table t{{"detuning", "z_tot", "energy", "converged", "steps", "x2_x", "y2_x", "x2_y", "y2_y", "edge_ratio"}, {}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> w;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const bool has_y = p.field.orbital_norm(Orbital::y) > 1e-12;
        const bool has_x = p.field.orbital_norm(Orbital::x) > 1e-12;
        t.add_row({p.detuning, p.z_tot, p.energy, p.converged ? 1.0 : 0.0, static_cast<double>(p.steps),
                   has_x ? p.widths_x.x2 : nan, has_x ? p.widths_x.y2 : nan, has_y ? p.widths_y.x2 : nan,
                   has_y ? p.widths_y.y2 : nan, edge_density_ratio(p.field)});
        write_snapshot(p.field, run.path("ground_" + std::to_string(i) + ".snap"));
        if (!p.converged) w.push_back("detuning " + format_double(p.detuning) + ": not converged");
        std::printf("detuning %-10g Z_tot %.6f  converged %s\n", p.detuning, p.z_tot, p.converged ? "yes" : "no");
    }
    write_table(t, run.path("ground_scan.tsv"));
    run.warn(w);
    run.finish();
    return 0;
}

nlohmann::json result_json(const RunResult& r) {
    return {{"z_initial", number(r.z_initial)},
            {"z_at_tf", number(r.z_at_tf)},
            {"p_iex", number(r.p_iex)},
            {"delta_f_y", number(r.delta_f_y)},
            {"squeeze_window", number(r.squeeze_window)},
            {"window_under_resolved", r.window_under_resolved},
            {"max_edge_ratio", number(r.max_edge_ratio)},
            {"accepted", r.accepted},
            {"z_final", number(imbalance(r.final_field).z_tot)},
            {"ground", report_json(r.ground)},
            {"warnings", r.warnings}};
}

int cmd_sweep(const Globals& g) {
    RunConfig c = resolved(g);
    SweepRunConfig s = sweep_config(c);
    const nlohmann::json echo = config_echo(c);
    const fs::path out(g.out_dir);
    const fs::path ckpt_root = out / "ckpt";
    if (s.checkpoint_every > 0) {
        s.on_checkpoint = [&](const ResumeState& st) {
            const auto p = write_checkpoint(ckpt_root, st, s.schedule, echo, c.seed);
            std::fprintf(stderr, "checkpoint %s\n", p.string().c_str());
        };
    }
    std::optional<ResumeState> resume;
    if (!g.resume.empty()) {
        // The clock and thread count do not affect the physics, so only the
        // scientific part of the configuration has to match.
        auto strip = [](nlohmann::json j) {
            j["run"].erase("checkpoint_every");
            j["run"].erase("threads");
            return j;
        };
        auto loaded = read_checkpoint(g.resume);
        if (strip(loaded.manifest.config) != strip(echo))
            throw Error("checkpoint " + g.resume + " was written with a different configuration");
        std::fprintf(stderr, "resuming at step %ld (t = %s)\n", loaded.state.step, format_double(loaded.time).c_str());
        resume = std::move(loaded.state);
    }
    Run run("sweep", c, out);
    const RunResult r = run_sweep(s, std::move(resume));
    write_snapshot(r.final_field, run.path("final.snap"));
    write_series(r.series, run.path("series.tsv"));
    Table snaps{{"index", "time", "step"}, {}};
    for (std::size_t i = 0; i < r.snapshots.size(); ++i) {
        write_snapshot(r.snapshots[i].field, run.path("snap_" + std::to_string(i) + ".snap"));
        snaps.add_row({static_cast<double>(i), r.snapshots[i].time, static_cast<double>(r.snapshots[i].step)});
    }
    write_table(snaps, run.path("snapshots.tsv"));
    write_json(run.path("result.json"), result_json(r));
    run.warn(r.warnings);
    for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("Z_initial %.12f\nZ_tot(t_f) %.12f\nZ_tot(final) %.12f\nP_iex %.6f\ndelta_F_y %s%s\naccepted %s\n",
                r.z_initial, r.z_at_tf, imbalance(r.final_field).z_tot, r.p_iex, format_double(r.delta_f_y).c_str(),
                r.window_under_resolved ? " (window shorter than the slowest mode period)" : "",
                r.accepted ? "yes" : "no");
    run.finish();
    return 0;
}

int cmd_scan_velocity(const Globals& g) {
    RunConfig c = resolved(g);
    if (c.lambdas.empty()) throw Error("scan_velocity.lambdas is empty");
    SweepRunConfig base = sweep_config(c);
    base.checkpoint_every = 0;
    ScanEndpoints ends{base.schedule.detuning(base.schedule.t_i), base.schedule.detuning(base.schedule.t_f)};
    Run run("scan-velocity", c, g.out_dir);
    const VelocityScan scan = velocity_scan(base, ends, c.lambdas, c.threads);
    Table t{{"lambda", "p_iex", "delta_f_y", "z_at_tf", "f_y_final", "accepted"}, {}};
    std::vector<std::string> w;
    for (const auto& row : scan.rows) {
        t.add_row({row.lambda, row.p_iex, row.delta_f_y, row.z_at_tf, row.f_y_final, row.accepted ? 1.0 : 0.0});
        if (!row.error.empty()) w.push_back("lambda " + format_double(row.lambda) + ": " + row.error);
        else if (!row.accepted) w.push_back("lambda " + format_double(row.lambda) + ": edge guard exceeded");
        std::printf("lambda %-10g P_iex %.6f  delta_F_y %s\n", row.lambda, row.p_iex, format_double(row.delta_f_y).c_str());
    }
    write_table(t, run.path("velocity_scan.tsv"));
    if (scan.p_iex_fit && scan.delta_f_y_fit) {
        Table fit{{"power", "p_iex", "delta_f_y"}, {}};
        for (int d = 0; d <= scan.p_iex_fit->degree; ++d)
            fit.add_row({static_cast<double>(d), scan.p_iex_fit->coefficients[d], scan.delta_f_y_fit->coefficients[d]});
        write_table(fit, run.path("velocity_fit.tsv"));
    } else {
        w.push_back("fewer than 6 usable rows; no polynomial fit");
    }
    run.warn(w);
    for (const auto& s : w) std::fprintf(stderr, "warning: %s\n", s.c_str());
    run.finish();
    return 0;
}

int cmd_spectrum(const Globals& g, const std::string& series_path, const std::string& cx, const std::string& cy,
                 std::optional<double> start, std::optional<double> length, const std::string& taper, bool no_detrend) {
    RunConfig c = resolved(g, false);
    SpectrumOptions o = c.spectrum;
    if (start) o.window_start = *start;
    if (length) o.window_length = *length;
    if (taper == "hann") o.taper = Taper::hann;
    else if (taper == "none") o.taper = Taper::none;
    else if (!taper.empty()) throw Error("--taper must be hann or none");
    if (no_detrend) o.detrend = false;
    c.spectrum = o;
    Run run("spectrum", c, g.out_dir);
    const ObservableSeries s = read_series(series_path);
    const SpectrumResult r = spectrum(s, o, cx, cy);
    Table t{{"nu", "re_s_x", "im_s_x", "abs_s_x", "re_s_y", "im_s_y", "abs_s_y"}, {}};
    for (std::size_t k = 0; k < r.nu.size(); ++k)
        t.add_row({r.nu[k], r.s_x[k].real(), r.s_x[k].imag(), std::abs(r.s_x[k]), r.s_y[k].real(), r.s_y[k].imag(),
                   std::abs(r.s_y[k])});
    write_table(t, run.path("spectrum.tsv"));
    std::printf("window start %s length %s samples %zu\n", format_double(r.window.start).c_str(),
                format_double(r.window.length).c_str(), r.window.samples);
    run.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field p-orbital lattice Landau-Zener simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "run configuration file");
    app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", g.seed, "random seed (overrides run.seed)");
    app.add_option("--threads", g.threads, "worker threads for scans (overrides run.threads)");
    app.add_option("--checkpoint-every", g.checkpoint_every, "checkpoint cadence in steps, 0 disables");
    app.add_option("--resume", g.resume, "checkpoint directory to resume a sweep from");

    auto* params = app.add_subcommand("params", "print parameter presets and interaction ratios");

    auto* lz2 = app.add_subcommand("lz2", "two-level Landau-Zener reference");
    double coupling = 1.0, lambda = 2.0 * std::numbers::pi;
    std::optional<double> span, lz_dt;
    bool diabatic = false;
    std::string trajectory;
    lz2->add_option("--coupling", coupling, "two-level coupling")->required();
    lz2->add_option("--lambda", lambda, "sweep rate")->required();
    lz2->add_option("--t-span", span, "integrate over [-span, span]");
    lz2->add_option("--dt", lz_dt, "time step");
    lz2->add_flag("--diabatic", diabatic, "report the bare diabatic population at t_f");
    lz2->add_option("--trajectory", trajectory, "write the populations to this series file");

    auto* ground = app.add_subcommand("ground", "imaginary-time ground state at fixed detuning");
    std::optional<double> detuning;
    ground->add_option("--detuning", detuning, "detuning (overrides ground.detuning)");

    auto* scan_ground = app.add_subcommand("scan-ground", "ground states over scan_ground.detunings");
    auto* sweep = app.add_subcommand("sweep", "ground state, seeding, sweep and post-sweep hold");
    auto* scan_velocity = app.add_subcommand("scan-velocity", "sweeps over scan_velocity.lambdas");

    auto* spec = app.add_subcommand("spectrum", "vibrational spectrum of a recorded series");
    std::string series_path, cx = "q_x2", cy = "q_y2", taper;
    std::optional<double> wstart, wlength;
    bool no_detrend = false;
    spec->add_option("--series", series_path, "series file")->required()->check(CLI::ExistingFile);
    spec->add_option("--channel-x", cx, "channel for the x direction")->capture_default_str();
    spec->add_option("--channel-y", cy, "channel for the y direction")->capture_default_str();
    spec->add_option("--window-start", wstart, "first time of the analysis window");
    spec->add_option("--window-length", wlength, "window duration");
    spec->add_option("--taper", taper, "hann or none");
    spec->add_flag("--no-detrend", no_detrend, "keep the window mean");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*params) return cmd_params();
        if (*lz2) return cmd_lz2(coupling, lambda, span, lz_dt, diabatic, trajectory);
        if (*ground) return cmd_ground(g, detuning);
        if (*scan_ground) return cmd_scan_ground(g);
        if (*sweep) return cmd_sweep(g);
        if (*scan_velocity) return cmd_scan_velocity(g);
        if (*spec) return cmd_spectrum(g, series_path, cx, cy, wstart, wlength, taper, no_detrend);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
