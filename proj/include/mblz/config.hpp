#pragma once

// Run configuration files.
//
// Grammar, one construct per line:
//
//   line     := blank | comment | section | entry
//   comment  := ('#' | ';') any-text
//   section  := '[' name ']'
//   entry    := key '=' value [ws comment]
//   name,key := [A-Za-z_][A-Za-z0-9_]*
//   value    := any text up to an unquoted '#' or ';', trimmed
//   list     := value ',' value ...
//
// Leading and trailing whitespace is ignored. Keys are case-sensitive. A key
// may appear once per section, and a section may appear once per file.
// Numbers use the C locale; booleans are true/false/yes/no/on/off/1/0.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "groundstate.hpp"
#include "observables.hpp"
#include "presets.hpp"
#include "sweep.hpp"
#include "textnum.hpp"
#include "types.hpp"

namespace mblz {

class ConfigParseError : public Error {
public:
    ConfigParseError(const std::string& msg, int line, int column)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
          line_(line),
          column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// All validation failures of one configuration, reported together.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues) : Error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& i : v) s += "\n  " + i;
        return s;
    }
    std::vector<std::string> issues_;
};

struct ConfigEntry {
    std::string value;
    int line = 0;
    int column = 0;  // of the value
};

using ConfigSection = std::map<std::string, ConfigEntry>;
using ConfigDocument = std::map<std::string, ConfigSection>;

namespace detail {

inline bool is_name_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
inline bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9'); }

inline std::string_view trim(std::string_view s, int* lead = nullptr) {
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    std::size_t e = s.size();
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    if (lead) *lead = static_cast<int>(b);
    return s.substr(b, e - b);
}

}  // namespace detail

inline ConfigDocument parse_config_text(std::string_view text) {
    ConfigDocument doc;
    std::string current;
    doc[current];
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        int lead = 0;
        const std::string_view line = detail::trim(raw, &lead);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        const int col0 = lead + 1;
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string_view::npos) throw ConfigParseError("missing ']' in section header", lineno, col0);
            const auto rest = detail::trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#' && rest.front() != ';')
                throw ConfigParseError("unexpected text after section header", lineno, col0 + static_cast<int>(close) + 1);
            int nlead = 0;
            const auto name = detail::trim(line.substr(1, close - 1), &nlead);
            if (name.empty() || !detail::is_name_start(name.front()))
                throw ConfigParseError("invalid section name", lineno, col0 + 1 + nlead);
            for (std::size_t i = 0; i < name.size(); ++i)
                if (!detail::is_name_char(name[i]))
                    throw ConfigParseError("invalid character in section name", lineno, col0 + 1 + nlead + static_cast<int>(i));
            current = std::string(name);
            if (doc.count(current) && current != "") throw ConfigParseError("duplicate section [" + current + "]", lineno, col0);
            doc[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigParseError("expected 'key = value'", lineno, col0);
        const auto key = detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigParseError("missing key before '='", lineno, col0);
        for (std::size_t i = 0; i < key.size(); ++i) {
            if (i == 0 ? !detail::is_name_start(key[i]) : !detail::is_name_char(key[i]))
                throw ConfigParseError("invalid character in key", lineno, col0 + static_cast<int>(i));
        }
        std::string_view value = line.substr(eq + 1);
        const auto hash = value.find_first_of("#;");
        if (hash != std::string_view::npos) value = value.substr(0, hash);
        int vlead = 0;
        value = detail::trim(value, &vlead);
        const int vcol = col0 + static_cast<int>(eq) + 1 + vlead;
        if (value.empty()) throw ConfigParseError("missing value for '" + std::string(key) + "'", lineno, vcol);
        auto& sec = doc[current];
        if (sec.count(std::string(key))) throw ConfigParseError("duplicate key '" + std::string(key) + "'", lineno, col0);
        sec[std::string(key)] = {std::string(value), lineno, vcol};
    }
    return doc;
}

/// Fully resolved run configuration: every field has its final value.
struct RunConfig {
    std::string preset;  // empty when the model is given explicitly
    ModelParams params;
    bool has_schedule = false;
    double endpoint_detuning = 1e-3;
    SweepSchedule schedule;
    GroundConfig ground;
    std::vector<double> ground_detunings;
    bool warm_start = false;
    double seed_fraction = 0.01;
    SeedPhase seed_phase = SeedPhase::aligned;
    long observe_stride = 20;
    std::vector<double> snapshot_times;
    std::vector<double> lambdas;
    SpectrumOptions spectrum;
    std::uint64_t seed = 1;
    int threads = 1;
    long checkpoint_every = 0;
};

namespace detail {

struct Reader {
    const ConfigDocument& doc;
    std::vector<std::string> issues;

    const ConfigEntry* get(const std::string& sec, const std::string& key) const {
        const auto s = doc.find(sec);
        if (s == doc.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
    std::string where(const std::string& sec, const std::string& key, const ConfigEntry& e) const {
        return sec + "." + key + " (line " + std::to_string(e.line) + ", column " + std::to_string(e.column) + ")";
    }
    void real(const std::string& sec, const std::string& key, double& out) {
        if (const auto* e = get(sec, key)) {
            if (auto v = parse_double(e->value); v && std::isfinite(*v)) out = *v;
            else issues.push_back(where(sec, key, *e) + ": expected a finite number, got '" + e->value + "'");
        }
    }
    template <class I>
    void integer(const std::string& sec, const std::string& key, I& out) {
        if (const auto* e = get(sec, key)) {
            const auto v = parse_integer(e->value);
            if (v && *v >= static_cast<long long>(std::numeric_limits<I>::min()) &&
                static_cast<unsigned long long>(*v) <= static_cast<unsigned long long>(std::numeric_limits<I>::max()))
                out = static_cast<I>(*v);
            else
                issues.push_back(where(sec, key, *e) + ": expected an integer, got '" + e->value + "'");
        }
    }
    void boolean(const std::string& sec, const std::string& key, bool& out) {
        if (const auto* e = get(sec, key)) {
            const auto& v = e->value;
            if (v == "true" || v == "yes" || v == "on" || v == "1") out = true;
            else if (v == "false" || v == "no" || v == "off" || v == "0") out = false;
            else issues.push_back(where(sec, key, *e) + ": expected a boolean, got '" + v + "'");
        }
    }
    void list(const std::string& sec, const std::string& key, std::vector<double>& out) {
        if (const auto* e = get(sec, key)) {
            out.clear();
            std::string_view rest = e->value;
            while (true) {
                const auto comma = rest.find(',');
                const auto item = trim(rest.substr(0, comma));
                const auto v = parse_double(item);
                if (!v || !std::isfinite(*v)) {
                    issues.push_back(where(sec, key, *e) + ": bad list item '" + std::string(item) + "'");
                    return;
                }
                out.push_back(*v);
                if (comma == std::string_view::npos) break;
                rest = rest.substr(comma + 1);
            }
        }
    }
    template <class E>
    void choice(const std::string& sec, const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> opts) {
        if (const auto* e = get(sec, key)) {
            std::string names;
            for (const auto& [name, val] : opts) {
                if (e->value == name) {
                    out = val;
                    return;
                }
                names += names.empty() ? name : std::string(", ") + name;
            }
            issues.push_back(where(sec, key, *e) + ": expected one of " + names + ", got '" + e->value + "'");
        }
    }
    void check(bool ok, const std::string& sec, const std::string& key, const std::string& msg) {
        if (ok) return;
        if (const auto* e = get(sec, key)) issues.push_back(where(sec, key, *e) + ": " + msg);
        else issues.push_back(sec + "." + key + ": " + msg);
    }
};

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

inline const std::map<std::string, std::vector<std::string>>& known_keys() {
    static const std::map<std::string, std::vector<std::string>> k = {
        {"model", {"preset", "t1", "t2", "U", "omega", "nx", "ny"}},
        {"schedule", {"lambda", "t_i", "t_f", "detuning_start", "detuning_end", "dt", "hold_pre", "hold_post"}},
        {"ground",
         {"detuning", "tol_energy", "tol_state", "max_steps", "init", "dt", "dt_min", "patience", "nonlinearity"}},
        {"scan_ground", {"detunings", "warm_start"}},
        {"sweep", {"seed_fraction", "seed_phase", "observe_stride", "snapshot_times"}},
        {"scan_velocity", {"lambdas"}},
        {"spectrum", {"taper", "detrend", "window_start", "window_length"}},
        {"run", {"seed", "threads", "checkpoint_every"}},
    };
    return k;
}

}  // namespace detail

inline RunConfig resolve_config(const ConfigDocument& doc) {
    detail::Reader r{doc, {}};
    const auto& known = detail::known_keys();

    for (const auto& [sec, entries] : doc) {
        if (sec.empty()) {
            for (const auto& [key, e] : entries)
                r.issues.push_back("'" + key + "' (line " + std::to_string(e.line) + ") appears before any section");
            continue;
        }
        const auto ks = known.find(sec);
        if (ks == known.end()) {
            r.issues.push_back("unknown section [" + sec + "]");
            continue;
        }
        for (const auto& [key, e] : entries) {
            if (std::find(ks->second.begin(), ks->second.end(), key) != ks->second.end()) continue;
            std::string hint;
            for (const auto& cand : ks->second)
                if (detail::edit_distance(key, cand) <= 2) hint = "; did you mean '" + cand + "'?";
            r.issues.push_back(r.where(sec, key, e) + ": unknown key '" + key + "'" + hint);
        }
    }

    RunConfig c;
    if (const auto* e = r.get("model", "preset")) {
        if (const auto p = find_preset(e->value)) {
            c.preset = p->name;
            c.params = p->params();
            c.endpoint_detuning = p->endpoint_detuning;
        } else {
            std::string names;
            for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
            r.issues.push_back(r.where("model", "preset", *e) + ": unknown preset '" + e->value + "' (known: " + names + ")");
        }
    } else {
        std::vector<std::string> missing;
        for (const char* k : {"t1", "t2", "U", "omega"})
            if (!r.get("model", k)) missing.push_back(std::string("model.") + k);
        if (!missing.empty()) {
            std::string m = "missing required keys: model.preset, or all of";
            for (const auto& k : missing) m += " " + k;
            r.issues.push_back(m);
        }
        c.params = ModelParams{};
    }
    r.real("model", "t1", c.params.t1);
    r.real("model", "t2", c.params.t2);
    r.real("model", "U", c.params.U);
    r.real("model", "omega", c.params.omega);
    r.integer("model", "nx", c.params.nx);
    r.integer("model", "ny", c.params.ny);
    r.check(c.params.U >= 0.0, "model", "U", "U >= 0 required");
    r.check(c.params.omega >= 0.0, "model", "omega", "omega >= 0 required");
    r.check(c.params.nx >= 2, "model", "nx", "nx >= 2 required");
    r.check(c.params.ny >= 2, "model", "ny", "ny >= 2 required");

    if (doc.count("schedule")) {
        c.has_schedule = true;
        auto& s = c.schedule;
        if (!r.get("schedule", "lambda")) r.issues.push_back("schedule.lambda: required when [schedule] is present");
        r.real("schedule", "lambda", s.lambda);
        r.check(s.lambda > 0.0, "schedule", "lambda", "λ > 0 required");
        double d_start = -c.endpoint_detuning, d_end = c.endpoint_detuning;
        r.real("schedule", "detuning_start", d_start);
        r.real("schedule", "detuning_end", d_end);
        const bool by_time = r.get("schedule", "t_i") || r.get("schedule", "t_f");
        const bool by_detuning = r.get("schedule", "detuning_start") || r.get("schedule", "detuning_end");
        if (by_time && by_detuning)
            r.issues.push_back("schedule: give either t_i/t_f or detuning_start/detuning_end, not both");
        if (s.lambda > 0.0) {
            s.t_i = d_start / s.lambda;
            s.t_f = d_end / s.lambda;
        }
        r.real("schedule", "t_i", s.t_i);
        r.real("schedule", "t_f", s.t_f);
        r.real("schedule", "dt", s.dt);
        r.real("schedule", "hold_pre", s.hold_pre);
        r.real("schedule", "hold_post", s.hold_post);
        r.check(s.t_i < s.t_f, "schedule", by_time ? "t_f" : "detuning_end", "t_i < t_f required");
        r.check(s.dt > 0.0, "schedule", "dt", "dt > 0 required");
        r.check(s.hold_pre >= 0.0, "schedule", "hold_pre", "hold_pre >= 0 required");
        r.check(s.hold_post >= 0.0, "schedule", "hold_post", "hold_post >= 0 required");
    }

    auto& g = c.ground;
    r.real("ground", "detuning", g.detuning);
    r.real("ground", "tol_energy", g.tol_energy);
    r.real("ground", "tol_state", g.tol_state);
    r.integer("ground", "max_steps", g.max_steps);
    r.choice("ground", "init", g.init,
             {{"gaussian", InitKind::gaussian}, {"random-phase-gaussian", InitKind::random_phase_gaussian}});
    r.real("ground", "dt", g.dt);
    // A small dt on its own pulls the default floor down with it.
    if (!r.get("ground", "dt_min")) g.dt_min = std::min(g.dt_min, g.dt);
    r.real("ground", "dt_min", g.dt_min);
    r.integer("ground", "patience", g.patience);
    r.choice("ground", "nonlinearity", g.nonlinearity_update,
             {{"midpoint", NonlinearUpdate::midpoint}, {"frozen", NonlinearUpdate::frozen}});
    r.check(g.tol_energy > 0.0, "ground", "tol_energy", "tol_energy > 0 required");
    r.check(g.tol_state > 0.0, "ground", "tol_state", "tol_state > 0 required");
    r.check(g.max_steps > 0, "ground", "max_steps", "max_steps > 0 required");
    r.check(g.dt > 0.0, "ground", "dt", "dt > 0 required");
    r.check(g.dt_min > 0.0 && g.dt_min <= g.dt, "ground", "dt_min", "0 < dt_min <= dt required");
    r.check(g.patience > 0, "ground", "patience", "patience > 0 required");

    r.list("scan_ground", "detunings", c.ground_detunings);
    r.boolean("scan_ground", "warm_start", c.warm_start);

    r.real("sweep", "seed_fraction", c.seed_fraction);
    r.choice("sweep", "seed_phase", c.seed_phase, {{"aligned", SeedPhase::aligned}, {"random", SeedPhase::random}});
    r.integer("sweep", "observe_stride", c.observe_stride);
    r.list("sweep", "snapshot_times", c.snapshot_times);
    r.check(c.seed_fraction >= 0.0 && c.seed_fraction < 1.0, "sweep", "seed_fraction", "0 <= seed_fraction < 1 required");
    r.check(c.observe_stride > 0, "sweep", "observe_stride", "observe_stride > 0 required");

    r.list("scan_velocity", "lambdas", c.lambdas);
    for (double l : c.lambdas)
        if (!(l > 0.0)) {
            r.check(false, "scan_velocity", "lambdas", "every λ > 0 required");
            break;
        }

    r.choice("spectrum", "taper", c.spectrum.taper, {{"hann", Taper::hann}, {"none", Taper::none}});
    r.boolean("spectrum", "detrend", c.spectrum.detrend);
    r.real("spectrum", "window_start", c.spectrum.window_start);
    r.real("spectrum", "window_length", c.spectrum.window_length);
    r.check(c.spectrum.window_length > 0.0, "spectrum", "window_length", "window_length > 0 required");

    r.integer("run", "seed", c.seed);
    r.integer("run", "threads", c.threads);
    r.integer("run", "checkpoint_every", c.checkpoint_every);
    r.check(c.threads >= 1, "run", "threads", "threads >= 1 required");
    r.check(c.checkpoint_every >= 0, "run", "checkpoint_every", "checkpoint_every >= 0 required");
    g.rng_seed = c.seed;

    if (!r.issues.empty()) throw ConfigError(std::move(r.issues));
    return c;
}

inline RunConfig parse_config(std::string_view text) { return resolve_config(parse_config_text(text)); }

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Sweep configuration for one run described by `c`.
inline SweepRunConfig sweep_config(const RunConfig& c) {
    if (!c.has_schedule) throw ConfigError({"schedule: a [schedule] section is required for sweeps"});
    SweepRunConfig s;
    s.params = c.params;
    s.schedule = c.schedule;
    s.ground = c.ground;
    s.seed_fraction = c.seed_fraction;
    s.seed_phase = c.seed_phase;
    s.rng_seed = c.seed;
    s.observe_stride = c.observe_stride;
    s.snapshot_times = c.snapshot_times;
    s.checkpoint_every = c.checkpoint_every;
    return s;
}

namespace detail {

inline const char* name_of(InitKind k) {
    switch (k) {
        case InitKind::gaussian: return "gaussian";
        case InitKind::random_phase_gaussian: return "random-phase-gaussian";
        case InitKind::provided: return "provided";
    }
    return "?";
}
inline const char* name_of(NonlinearUpdate u) { return u == NonlinearUpdate::midpoint ? "midpoint" : "frozen"; }
inline const char* name_of(SeedPhase p) { return p == SeedPhase::aligned ? "aligned" : "random"; }
inline const char* name_of(Taper t) { return t == Taper::hann ? "hann" : "none"; }

// JSON cannot carry infinities; they are echoed as strings.
inline nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

}  // namespace detail

/// JSON echo of every resolved field, used in manifests and checkpoints.
inline nlohmann::json config_echo(const RunConfig& c) {
    using detail::name_of;
    using detail::num;
    nlohmann::json j;
    j["model"] = {{"preset", c.preset}, {"t1", c.params.t1}, {"t2", c.params.t2}, {"U", c.params.U},
                  {"omega", c.params.omega}, {"nx", c.params.nx}, {"ny", c.params.ny}};
    if (c.has_schedule) {
        const auto& s = c.schedule;
        j["schedule"] = {{"lambda", s.lambda}, {"t_i", s.t_i}, {"t_f", s.t_f}, {"dt", s.dt},
                         {"hold_pre", s.hold_pre}, {"hold_post", s.hold_post}};
    }
    const auto& g = c.ground;
    j["ground"] = {{"detuning", g.detuning}, {"tol_energy", g.tol_energy}, {"tol_state", g.tol_state},
                   {"max_steps", g.max_steps}, {"init", name_of(g.init)}, {"dt", g.dt}, {"dt_min", g.dt_min},
                   {"patience", g.patience}, {"nonlinearity", name_of(g.nonlinearity_update)}};
    j["scan_ground"] = {{"detunings", c.ground_detunings}, {"warm_start", c.warm_start}};
    j["sweep"] = {{"seed_fraction", c.seed_fraction}, {"seed_phase", name_of(c.seed_phase)},
                  {"observe_stride", c.observe_stride}, {"snapshot_times", c.snapshot_times}};
    j["scan_velocity"] = {{"lambdas", c.lambdas}};
    j["spectrum"] = {{"taper", name_of(c.spectrum.taper)}, {"detrend", c.spectrum.detrend},
                     {"window_start", num(c.spectrum.window_start)}, {"window_length", num(c.spectrum.window_length)}};
    j["run"] = {{"seed", c.seed}, {"threads", c.threads}, {"checkpoint_every", c.checkpoint_every}};
    return j;
}

}  // namespace mblz
