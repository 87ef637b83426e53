#pragma once

// Checkpoint bundle, one directory per checkpoint:
//
//   <root>/step_<k>/field.snap        field after step k (snapshot format)
//   <root>/step_<k>/series.tsv        observables recorded so far
//   <root>/step_<k>/snap_<i>.snap     configured snapshots already taken
//   <root>/step_<k>/state.json        step, schedule clock, imbalances, guard
//                                     maximum, warnings, ground report, rng
//   <root>/step_<k>/manifest.json     manifest fragment over the files above
//
// The bundle is assembled under step_<k>.tmp and renamed into place, so a
// directory named step_<k> is always complete.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "manifest.hpp"
#include "series_io.hpp"
#include "snapshot.hpp"
#include "sweep.hpp"
#include "textnum.hpp"

namespace mblz {

namespace detail {

inline nlohmann::json exact(double v) { return format_double(v); }

inline double inexact(const nlohmann::json& j) {
    const auto v = parse_double(j.get<std::string>());
    if (!v) throw FormatError("checkpoint: bad number '" + j.get<std::string>() + "'");
    return *v;
}

}  // namespace detail

inline std::filesystem::path checkpoint_dir(const std::filesystem::path& root, long step) {
    return root / ("step_" + std::to_string(step));
}

inline std::filesystem::path write_checkpoint(const std::filesystem::path& root, const ResumeState& s,
                                              const SweepSchedule& schedule, const nlohmann::json& config,
                                              std::uint64_t seed) {
    namespace fs = std::filesystem;
    const fs::path final_dir = checkpoint_dir(root, s.step);
    const fs::path tmp = final_dir.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    std::vector<fs::path> files{"field.snap", "series.tsv"};
    write_snapshot(s.field, tmp / "field.snap");
    write_series(s.series, tmp / "series.tsv");

    using detail::exact;
    nlohmann::json st;
    st["step"] = s.step;
    st["time"] = exact(schedule.time_at(s.step));
    st["z_initial"] = exact(s.z_initial);
    st["z_at_tf"] = s.z_at_tf ? exact(*s.z_at_tf) : nlohmann::json(nullptr);
    st["max_edge_ratio"] = exact(s.max_edge_ratio);
    st["warnings"] = s.warnings;
    st["rng_state"] = s.rng_state;
    st["ground"] = {{"steps", s.ground.steps},
                    {"converged", s.ground.converged},
                    {"energy", exact(s.ground.energy)},
                    {"chemical_potential", exact(s.ground.chemical_potential)},
                    {"residual", exact(s.ground.residual)},
                    {"final_dt", exact(s.ground.final_dt)},
                    {"max_energy_rise", exact(s.ground.max_energy_rise)}};
    st["snapshots"] = nlohmann::json::array();
    for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
        const std::string name = "snap_" + std::to_string(i) + ".snap";
        write_snapshot(s.snapshots[i].field, tmp / name);
        files.emplace_back(name);
        st["snapshots"].push_back({{"time", exact(s.snapshots[i].time)}, {"step", s.snapshots[i].step}, {"file", name}});
    }
    const std::string text = st.dump(2) + "\n";
    write_bytes(tmp / "state.json", std::vector<unsigned char>(text.begin(), text.end()));
    files.emplace_back("state.json");

    RunManifest m;
    m.command = "checkpoint";
    m.config = config;
    m.rng_seed = seed;
    m.warnings = s.warnings;
    m.add_files(tmp, files);
    m.write(tmp / "manifest.json");

    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
    return final_dir;
}

struct LoadedCheckpoint {
    ResumeState state;
    double time = 0.0;
    RunManifest manifest;
};

/// Reads and verifies a checkpoint. When `expected_config` is not null it
/// must equal the configuration the checkpoint was written under.
inline LoadedCheckpoint read_checkpoint(const std::filesystem::path& dir,
                                        const nlohmann::json& expected_config = nullptr) {
    LoadedCheckpoint out;
    out.manifest = RunManifest::read(dir / "manifest.json");
    if (const auto bad = out.manifest.verify(dir); !bad.empty())
        throw FormatError("checkpoint " + dir.string() + ": content digest mismatch for " + bad.front());
    if (!expected_config.is_null() && out.manifest.config != expected_config)
        throw Error("checkpoint " + dir.string() + " was written with a different configuration");

    const auto bytes = read_bytes(dir / "state.json");
    try {
        const auto st = nlohmann::json::parse(bytes.begin(), bytes.end());
        using detail::inexact;
        auto& s = out.state;
        s.step = st.at("step");
        out.time = inexact(st.at("time"));
        s.z_initial = inexact(st.at("z_initial"));
        if (!st.at("z_at_tf").is_null()) s.z_at_tf = inexact(st["z_at_tf"]);
        s.max_edge_ratio = inexact(st.at("max_edge_ratio"));
        s.warnings = st.at("warnings").get<std::vector<std::string>>();
        s.rng_state = st.at("rng_state");
        const auto& g = st.at("ground");
        s.ground.steps = g.at("steps");
        s.ground.converged = g.at("converged");
        s.ground.energy = inexact(g.at("energy"));
        s.ground.chemical_potential = inexact(g.at("chemical_potential"));
        s.ground.residual = inexact(g.at("residual"));
        s.ground.final_dt = inexact(g.at("final_dt"));
        s.ground.max_energy_rise = inexact(g.at("max_energy_rise"));
        for (const auto& sn : st.at("snapshots"))
            s.snapshots.push_back({inexact(sn.at("time")), sn.at("step").get<long>(),
                                   read_snapshot(dir / sn.at("file").get<std::string>())});
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint state: " + std::string(e.what()));
    }
    out.state.field = read_snapshot(dir / "field.snap");
    out.state.series = read_series(dir / "series.tsv");
    return out;
}

}  // namespace mblz
