// scenario.hpp - JSON scenario documents: parsing, validation, serialization
// and dotted-path overrides used by sweeps.

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ptmech/errors.hpp"
#include "ptmech/model.hpp"
#include "ptmech/quantum.hpp"
#include "ptmech/semiclassical.hpp"

namespace ptmech::cli {

using json = nlohmann::json;

struct WorkingPointOverride {
    Pair<cplx> g_eff{};
    Pair<double> delta_eff{};
    bool operator==(const WorkingPointOverride&) const = default;
};

enum class ReducedMode { Ideal, Corrected, WorkingPoint };

inline const char* to_string(ReducedMode m) {
    switch (m) {
        case ReducedMode::Ideal: return "ideal";
        case ReducedMode::Corrected: return "corrected";
        case ReducedMode::WorkingPoint: return "working_point";
    }
    return "?";
}

/// How the reduced tier obtains its coefficients. Unset fields are derived
/// from the working point (gamma_eff via the balance gate).
struct ReducedSpec {
    ReducedMode mode = ReducedMode::Ideal;
    std::optional<double> gamma_eff;
    std::optional<double> omega_m;
    std::optional<double> j;
    Pair<double> shift{0.0, 0.0};
    Pair<double> gamma_intrinsic{0.0, 0.0};
    bool operator==(const ReducedSpec&) const = default;
};

struct TimeSpec {
    double t_max = 100.0;
    double dt = 0.0;               // 0 = tier default
    std::size_t sample_every = 1;
    bool adaptive = false;
    double sample_dt = 1.0;        // quantum tier sampling interval
    bool operator==(const TimeSpec&) const = default;
};

struct InitSpec {
    ClassicalState classical{};    // full / linearized
    InitialMoments moments{};      // quantum
    bool operator==(const InitSpec& o) const {
        return classical.a == o.classical.a && classical.q == o.classical.q && classical.p == o.classical.p &&
               moments == o.moments;
    }
};

struct SweepSpec {
    std::string path;
    std::vector<double> values;
    bool operator==(const SweepSpec&) const = default;
};

struct Scenario {
    std::string name = "scenario";
    Tier tier = Tier::Full;
    PhysicalParams params = PhysicalParams::canonical();
    std::optional<double> temperature_k;  // overrides n_th (needs kappa_hz)
    std::optional<double> kappa_hz;       // absolute kappa, output conversion only
    std::optional<WorkingPointOverride> working_point;
    ReducedSpec reduced;
    InitSpec init;
    TimeSpec time;
    std::vector<std::string> outputs;     // empty = every column of the tier
    std::optional<SweepSpec> sweep;
    double quasi_threshold = 1e-3;

    bool operator==(const Scenario&) const = default;
};

inline Tier parse_tier(const std::string& s) {
    if (s == "full") return Tier::Full;
    if (s == "linearized") return Tier::Linearized;
    if (s == "reduced") return Tier::Reduced;
    if (s == "quantum") return Tier::Quantum;
    if (s == "spectrum") return Tier::Spectrum;
    throw ParseError("tier: unknown value '" + s + "' (full|linearized|reduced|quantum|spectrum)");
}

/// Output columns (after t) of a time-domain tier.
inline std::vector<std::string> tier_columns(Tier t) {
    switch (t) {
        case Tier::Full:
        case Tier::Linearized: return full_columns();
        case Tier::Reduced: return reduced_columns();
        case Tier::Quantum:
            return {"n_st1", "n_st2", "n_sp1", "n_sp2", "n_cm1", "n_cm2", "n_mr1", "n_mr2", "n_tt1", "n_tt2"};
        case Tier::Spectrum: return {};
    }
    return {};
}

// --------------------------------------------------------------------------
// Parsing
// --------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!ok.count(k)) throw ParseError(where + ": unknown field '" + k + "'");
    }
}

inline std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

inline double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ParseError(field + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError(field + ": must be finite");
    return x;
}

/// Scalar (applied to both) or array of two numbers.
inline Pair<double> get_pair(const json& v, const std::string& field) {
    if (v.is_number()) {
        const double x = get_number(v, field);
        return {x, x};
    }
    if (!v.is_array() || v.size() != 2) throw ParseError(field + ": expected a number or an array of 2 numbers");
    return {get_number(v[0], field + "[0]"), get_number(v[1], field + "[1]")};
}

/// Complex number: plain number or [re, im].
inline cplx get_complex(const json& v, const std::string& field) {
    if (v.is_number()) return {get_number(v, field), 0.0};
    if (!v.is_array() || v.size() != 2) throw ParseError(field + ": expected a number or [re, im]");
    return {get_number(v[0], field + "[0]"), get_number(v[1], field + "[1]")};
}

inline Pair<cplx> get_complex_pair(const json& v, const std::string& field) {
    if (v.is_number()) {
        const cplx x = get_complex(v, field);
        return {x, x};
    }
    if (!v.is_array() || v.size() != 2) throw ParseError(field + ": expected a number or an array of 2 entries");
    return {get_complex(v[0], field + "[0]"), get_complex(v[1], field + "[1]")};
}

inline void parse_params(const json& j, PhysicalParams& p, std::optional<double>& temperature) {
    check_keys(j, "params",
               {"kappa", "gamma", "omega", "g", "delta", "drive", "j_coupling", "n_th", "temperature_k"});
    if (j.contains("kappa")) p.kappa = get_pair(j["kappa"], "params.kappa");
    if (j.contains("gamma")) p.gamma = get_pair(j["gamma"], "params.gamma");
    if (j.contains("omega")) p.omega = get_pair(j["omega"], "params.omega");
    if (j.contains("g")) p.g = get_pair(j["g"], "params.g");
    if (j.contains("delta")) p.delta = get_pair(j["delta"], "params.delta");
    if (j.contains("drive")) p.drive = get_pair(j["drive"], "params.drive");
    if (j.contains("j_coupling")) p.j_coupling = get_number(j["j_coupling"], "params.j_coupling");
    if (j.contains("n_th")) p.n_th = get_pair(j["n_th"], "params.n_th");
    if (j.contains("temperature_k")) temperature = get_number(j["temperature_k"], "params.temperature_k");
}

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Physics and schema checks that need the whole scenario.
inline void validate(Scenario& s) {
    if (s.temperature_k) {
        if (!s.kappa_hz) throw ValidationError("params.temperature_k requires kappa_hz");
        if (!(*s.kappa_hz > 0)) throw ValidationError("kappa_hz must be > 0");
        for (int i = 0; i < 2; ++i) {
            s.params.n_th[i] = thermal_occupation(s.params.omega[i] * *s.kappa_hz, *s.temperature_k);
        }
    }
    if (s.kappa_hz && !(*s.kappa_hz > 0)) throw ValidationError("kappa_hz must be > 0");
    s.params.validate();
    if (!(s.time.t_max >= 0)) throw ValidationError("time.t_max must be >= 0");
    if (!(s.time.dt >= 0)) throw ValidationError("time.dt must be >= 0");
    if (s.time.sample_every == 0) throw ValidationError("time.sample_every must be >= 1");
    if (!(s.time.sample_dt > 0)) throw ValidationError("time.sample_dt must be > 0");
    if (!(s.quasi_threshold > 0)) throw ValidationError("quasi_threshold must be > 0");
    s.init.moments.validate();
    if (s.tier == Tier::Reduced) {
        if (s.reduced.gamma_eff && !(*s.reduced.gamma_eff >= 0)) throw ValidationError("reduced.gamma_eff must be >= 0");
        if (s.reduced.omega_m && !(*s.reduced.omega_m > 0)) throw ValidationError("reduced.omega_m must be > 0");
        if (s.reduced.j && !(*s.reduced.j >= 0)) throw ValidationError("reduced.j must be >= 0");
    }
    const auto cols = tier_columns(s.tier);
    for (const auto& o : s.outputs) {
        if (std::find(cols.begin(), cols.end(), o) == cols.end()) {
            throw ValidationError("outputs: '" + o + "' is not a column of tier " + to_string(s.tier));
        }
    }
    if (s.sweep) {
        if (s.sweep->path.empty()) throw ValidationError("sweep.path must not be empty");
        if (s.sweep->values.empty()) throw ValidationError("sweep.values must not be empty");
    }
}

inline Scenario scenario_from_json(const json& doc) {
    using namespace detail;
    check_keys(doc, "<root>",
               {"name", "tier", "params", "kappa_hz", "working_point", "reduced", "init", "time", "outputs", "sweep",
                "quasi_threshold"});
    Scenario s;
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) throw ParseError("name: expected a string");
        s.name = doc["name"].get<std::string>();
    }
    if (doc.contains("tier")) {
        if (!doc["tier"].is_string()) throw ParseError("tier: expected a string");
        s.tier = parse_tier(doc["tier"].get<std::string>());
    }
    if (doc.contains("params")) parse_params(doc["params"], s.params, s.temperature_k);
    if (doc.contains("kappa_hz")) s.kappa_hz = get_number(doc["kappa_hz"], "kappa_hz");
    if (doc.contains("quasi_threshold")) s.quasi_threshold = get_number(doc["quasi_threshold"], "quasi_threshold");
    if (doc.contains("working_point")) {
        const auto& w = doc["working_point"];
        check_keys(w, "working_point", {"g_eff", "delta_eff"});
        if (!w.contains("g_eff") || !w.contains("delta_eff")) {
            throw ParseError("working_point: both g_eff and delta_eff are required");
        }
        s.working_point = WorkingPointOverride{get_complex_pair(w["g_eff"], "working_point.g_eff"),
                                               get_pair(w["delta_eff"], "working_point.delta_eff")};
    }
    if (doc.contains("reduced")) {
        const auto& r = doc["reduced"];
        check_keys(r, "reduced", {"mode", "gamma_eff", "omega_m", "j", "shift", "gamma_intrinsic"});
        if (r.contains("mode")) {
            if (!r["mode"].is_string()) throw ParseError("reduced.mode: expected a string");
            const auto m = r["mode"].get<std::string>();
            if (m == "ideal") {
                s.reduced.mode = ReducedMode::Ideal;
            } else if (m == "corrected") {
                s.reduced.mode = ReducedMode::Corrected;
            } else if (m == "working_point") {
                s.reduced.mode = ReducedMode::WorkingPoint;
            } else {
                throw ParseError("reduced.mode: unknown value '" + m + "' (ideal|corrected|working_point)");
            }
        }
        if (r.contains("gamma_eff")) s.reduced.gamma_eff = get_number(r["gamma_eff"], "reduced.gamma_eff");
        if (r.contains("omega_m")) s.reduced.omega_m = get_number(r["omega_m"], "reduced.omega_m");
        if (r.contains("j")) s.reduced.j = get_number(r["j"], "reduced.j");
        if (r.contains("shift")) s.reduced.shift = get_pair(r["shift"], "reduced.shift");
        if (r.contains("gamma_intrinsic")) {
            s.reduced.gamma_intrinsic = get_pair(r["gamma_intrinsic"], "reduced.gamma_intrinsic");
        }
    }
    if (doc.contains("init")) {
        const auto& in = doc["init"];
        check_keys(in, "init", {"a", "q", "p", "n_cavity", "q2", "p2"});
        if (in.contains("a")) s.init.classical.a = get_complex_pair(in["a"], "init.a");
        if (in.contains("q")) s.init.classical.q = get_pair(in["q"], "init.q");
        if (in.contains("p")) s.init.classical.p = get_pair(in["p"], "init.p");
        if (in.contains("n_cavity")) s.init.moments.n_cavity = get_pair(in["n_cavity"], "init.n_cavity");
        if (in.contains("q2")) s.init.moments.q2 = get_pair(in["q2"], "init.q2");
        if (in.contains("p2")) s.init.moments.p2 = get_pair(in["p2"], "init.p2");
    }
    if (doc.contains("time")) {
        const auto& t = doc["time"];
        check_keys(t, "time", {"t_max", "dt", "sample_every", "adaptive", "sample_dt"});
        if (t.contains("t_max")) s.time.t_max = get_number(t["t_max"], "time.t_max");
        if (t.contains("dt")) s.time.dt = get_number(t["dt"], "time.dt");
        if (t.contains("sample_every")) {
            if (!t["sample_every"].is_number_integer() || t["sample_every"].get<long long>() < 1) {
                throw ParseError("time.sample_every: expected a positive integer");
            }
            s.time.sample_every = t["sample_every"].get<std::size_t>();
        }
        if (t.contains("adaptive")) {
            if (!t["adaptive"].is_boolean()) throw ParseError("time.adaptive: expected a boolean");
            s.time.adaptive = t["adaptive"].get<bool>();
        }
        if (t.contains("sample_dt")) s.time.sample_dt = get_number(t["sample_dt"], "time.sample_dt");
    }
    if (doc.contains("outputs")) {
        const auto& o = doc["outputs"];
        if (!o.is_array()) throw ParseError("outputs: expected an array of column names");
        for (const auto& c : o) {
            if (!c.is_string()) throw ParseError("outputs: expected strings");
            s.outputs.push_back(c.get<std::string>());
        }
    }
    if (doc.contains("sweep")) {
        const auto& w = doc["sweep"];
        check_keys(w, "sweep", {"path", "values"});
        SweepSpec sw;
        if (!w.contains("path") || !w["path"].is_string()) throw ParseError("sweep.path: expected a string");
        sw.path = w["path"].get<std::string>();
        if (!w.contains("values") || !w["values"].is_array()) throw ParseError("sweep.values: expected an array");
        for (std::size_t k = 0; k < w["values"].size(); ++k) {
            sw.values.push_back(get_number(w["values"][k], "sweep.values[" + std::to_string(k) + "]"));
        }
        s.sweep = sw;
    }
    validate(s);
    return s;
}

inline Scenario parse_scenario(const std::string& text, const std::string& source = "<string>") {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + detail::line_col(text, e.byte) + ": invalid JSON");
    }
    return scenario_from_json(doc);
}

inline Scenario load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

// --------------------------------------------------------------------------
// Serialization
// --------------------------------------------------------------------------

inline json pair_json(const Pair<double>& p) { return json::array({p[0], p[1]}); }
inline json complex_json(const cplx& c) { return json::array({c.real(), c.imag()}); }
inline json complex_pair_json(const Pair<cplx>& p) { return json::array({complex_json(p[0]), complex_json(p[1])}); }

inline json to_json(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["tier"] = to_string(s.tier);
    json p;
    p["kappa"] = pair_json(s.params.kappa);
    p["gamma"] = pair_json(s.params.gamma);
    p["omega"] = pair_json(s.params.omega);
    p["g"] = pair_json(s.params.g);
    p["delta"] = pair_json(s.params.delta);
    p["drive"] = pair_json(s.params.drive);
    p["j_coupling"] = s.params.j_coupling;
    p["n_th"] = pair_json(s.params.n_th);
    if (s.temperature_k) p["temperature_k"] = *s.temperature_k;
    j["params"] = p;
    if (s.kappa_hz) j["kappa_hz"] = *s.kappa_hz;
    j["quasi_threshold"] = s.quasi_threshold;
    if (s.working_point) {
        j["working_point"] = {{"g_eff", complex_pair_json(s.working_point->g_eff)},
                              {"delta_eff", pair_json(s.working_point->delta_eff)}};
    }
    json r;
    r["mode"] = to_string(s.reduced.mode);
    if (s.reduced.gamma_eff) r["gamma_eff"] = *s.reduced.gamma_eff;
    if (s.reduced.omega_m) r["omega_m"] = *s.reduced.omega_m;
    if (s.reduced.j) r["j"] = *s.reduced.j;
    r["shift"] = pair_json(s.reduced.shift);
    r["gamma_intrinsic"] = pair_json(s.reduced.gamma_intrinsic);
    j["reduced"] = r;
    j["init"] = {{"a", complex_pair_json(s.init.classical.a)},
                 {"q", pair_json(s.init.classical.q)},
                 {"p", pair_json(s.init.classical.p)},
                 {"n_cavity", pair_json(s.init.moments.n_cavity)},
                 {"q2", pair_json(s.init.moments.q2)},
                 {"p2", pair_json(s.init.moments.p2)}};
    j["time"] = {{"t_max", s.time.t_max},
                 {"dt", s.time.dt},
                 {"sample_every", s.time.sample_every},
                 {"adaptive", s.time.adaptive},
                 {"sample_dt", s.time.sample_dt}};
    j["outputs"] = s.outputs;
    if (s.sweep) j["sweep"] = {{"path", s.sweep->path}, {"values", s.sweep->values}};
    return j;
}

inline std::string serialize(const Scenario& s) { return to_json(s).dump(2); }

// --------------------------------------------------------------------------
// Dotted-path overrides
// --------------------------------------------------------------------------

/// Sets the value at a dotted path ("params.drive", "working_point.g_eff",
/// "reduced.gamma_eff", ...). A scalar assigned to an array sets every
/// element; array elements are addressed as "params.drive.0".
inline void set_path(json& doc, const std::string& path, double value) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.empty()) throw ValidationError("sweep.path must not be empty");
    json* node = &doc;
    for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
        const auto& key = parts[k];
        if (node->is_array()) {
            const std::size_t idx = std::stoul(key);
            if (idx >= node->size()) throw ValidationError("sweep.path '" + path + "': index out of range");
            node = &(*node)[idx];
        } else {
            node = &(*node)[key];
        }
    }
    json& leaf = node->is_array() ? (*node)[std::stoul(parts.back())] : (*node)[parts.back()];
    if (leaf.is_array()) {
        for (auto& e : leaf) e = value;
    } else {
        leaf = value;
    }
}

inline Scenario with_override(const Scenario& s, const std::string& path, double value) {
    json doc = to_json(s);
    doc.erase("sweep");
    if (s.temperature_k) doc["params"].erase("n_th");
    try {
        set_path(doc, path, value);
    } catch (const std::invalid_argument&) {
        throw ValidationError("sweep.path '" + path + "': malformed index");
    } catch (const json::exception& e) {
        throw ValidationError("sweep.path '" + path + "': " + e.what());
    }
    try {
        return scenario_from_json(doc);
    } catch (const ParseError& e) {
        throw ValidationError("sweep.path '" + path + "': " + e.what());
    }
}

}  // namespace ptmech::cli
