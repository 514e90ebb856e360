// runner.hpp - executes a Scenario on its tier, builds the JSON summary and
// writes CSV / JSON result files. Sweeps run points on worker threads.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ptmech/cli/scenario.hpp"
#include "ptmech/ptanalysis.hpp"
#include "ptmech/quantum.hpp"

namespace ptmech::cli {

namespace fs = std::filesystem;

struct RunResult {
    Scenario scenario;
    std::optional<WorkingPoint> wp;
    std::optional<TimeSeries> series;   // time-domain tiers
    json summary;
};

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline bool needs_working_point(const Scenario& s) {
    if (s.tier != Tier::Reduced) return true;
    return s.reduced.mode == ReducedMode::WorkingPoint || !s.reduced.gamma_eff;
}

inline WorkingPoint resolve_working_point(const Scenario& s) {
    if (s.working_point) return WorkingPoint::from_effective(s.params, s.working_point->g_eff, s.working_point->delta_eff);
    return solve_steady_state(s.params);
}

inline IntegrationOptions integration_options(const Scenario& s) {
    IntegrationOptions o;
    o.dt = s.time.dt;
    o.sample_every = s.time.sample_every;
    o.adaptive = s.time.adaptive;
    return o;
}

inline double common_omega(const Pair<double>& omega, const char* what) {
    if (omega[0] != omega[1]) throw ValidationError(std::string(what) + ": resonator frequencies differ, set reduced.omega_m");
    return omega[0];
}

inline ReducedModel reduced_model(const Scenario& s, const std::optional<WorkingPoint>& wp) {
    const auto& r = s.reduced;
    if (r.mode == ReducedMode::WorkingPoint) return ReducedModel::from_working_point(s.params, *wp);
    const double gamma_eff = r.gamma_eff ? *r.gamma_eff : balanced_gamma_eff(*wp);
    const double omega_m = r.omega_m ? *r.omega_m : common_omega(s.params.omega, "reduced model");
    const double j = r.j ? *r.j : s.params.j_coupling;
    if (r.mode == ReducedMode::Ideal) return ReducedModel::ideal(gamma_eff, omega_m, j);
    return ReducedModel::with_corrections(gamma_eff, omega_m, j, r.shift, r.gamma_intrinsic);
}

/// Quantum-tier sample grid: 0, dt, 2 dt, ... and t_max itself.
inline std::vector<double> quantum_times(const TimeSpec& t) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor(t.t_max / t.sample_dt + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) out.push_back(static_cast<double>(k) * t.sample_dt);
    if (out.back() < t.t_max * (1.0 - 1e-12)) out.push_back(t.t_max);
    return out;
}

inline TimeSeries quantum_series(const DriftMatrix& d, const Scenario& s) {
    const auto times = quantum_times(s.time);
    const auto rows = phonon_total(d, NoiseModel::from_params(s.params), s.init.moments, times);
    TimeSeries ts;
    ts.tier = Tier::Quantum;
    ts.params_hash = hash_params(s.params);
    ts.columns = tier_columns(Tier::Quantum);
    for (const auto& r : rows) {
        ts.t.push_back(r.t);
        for (double v : {r.n_st[0], r.n_st[1], r.n_sp[0], r.n_sp[1], r.n_cm[0], r.n_cm[1], r.n_mr[0], r.n_mr[1],
                         r.n_tt[0], r.n_tt[1]}) {
            ts.data.push_back(v);
        }
    }
    return ts;
}

// --------------------------------------------------------------------------
// Summary blocks
// --------------------------------------------------------------------------

inline json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json working_point_json(const WorkingPoint& wp) {
    json j;
    j["alpha"] = complex_pair_json(wp.alpha);
    j["xi"] = pair_json(wp.xi);
    j["delta_eff"] = pair_json(wp.delta_eff);
    j["g_eff"] = complex_pair_json(wp.g_eff);
    j["g_eff_abs"] = json::array({std::abs(wp.g_eff[0]), std::abs(wp.g_eff[1])});
    j["spring_shift"] = pair_json(wp.spring_shift);
    j["rate"] = pair_json(wp.rate);
    j["gain_sign"] = json::array({wp.gain_sign(0), wp.gain_sign(1)});
    j["gamma_eff"] = wp.gamma_eff;
    j["residual"] = wp.residual;
    j["from_steady_state"] = wp.from_steady_state;
    j["warnings"] = wp.warnings;
    bool balanced = true;
    try {
        balanced_gamma_eff(wp);
    } catch (const RegimeError&) {
        balanced = false;
    }
    j["balanced"] = balanced;
    return j;
}

inline json pt_json(double omega_m, double j, double gamma_eff) {
    const auto sp = spectrum(build_heff(omega_m, j, gamma_eff));
    json out;
    out["omega_m"] = omega_m;
    out["j"] = j;
    out["gamma_eff"] = gamma_eff;
    out["gamma_pt"] = nullable(j <= omega_m ? pt_threshold(omega_m, j) : std::numeric_limits<double>::quiet_NaN());
    out["gamma_eff_over_2j"] = nullable(j > 0 ? gamma_eff / (2.0 * j) : std::numeric_limits<double>::quiet_NaN());
    out["phase"] = to_string(sp.phase);
    out["lambda_plus"] = complex_json(sp.lambda_plus);
    out["lambda_minus"] = complex_json(sp.lambda_minus);
    out["max_imag"] = sp.max_imag;
    out["beat"] = sp.phase == Phase::Broken ? json(nullptr) : json(beat_frequency(sp));
    json ev = json::array();
    for (const auto& l : sp.lambda) ev.push_back(complex_json(l));
    out["eigenvalues"] = ev;
    return out;
}

inline json stability_json(const StabilityResult& st) {
    json out;
    out["lambda_max"] = st.lambda_max;
    out["region"] = to_string(st.region);
    json ev = json::array();
    for (Eigen::Index k = 0; k < st.eigenvalues.size(); ++k) ev.push_back(complex_json(st.eigenvalues(k)));
    out["eigenvalues"] = ev;
    return out;
}

inline json final_row_json(const TimeSeries& ts) {
    json out = json::object();
    if (ts.size() == 0) return out;
    const std::size_t last = ts.size() - 1;
    out["t"] = ts.t[last];
    for (std::size_t c = 0; c < ts.width(); ++c) out[ts.columns[c]] = ts.at(last, c);
    return out;
}

inline json phonon_rows_json(const TimeSeries& ts) {
    json rows = json::array();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        json r;
        r["t"] = ts.t[k];
        for (std::size_t c = 0; c < ts.width(); ++c) r[ts.columns[c]] = ts.at(k, c);
        rows.push_back(r);
    }
    return rows;
}

/// Rates in s^-1 and times in s when an absolute kappa is configured.
inline json units_json(const Scenario& s, const json& summary) {
    json u;
    u["kappa_hz"] = *s.kappa_hz;
    u["time_unit_s"] = 1.0 / *s.kappa_hz;
    json hz;
    const double k = *s.kappa_hz;
    if (summary.contains("working_point")) {
        const auto& w = summary["working_point"];
        hz["rate"] = json::array({w["rate"][0].get<double>() * k, w["rate"][1].get<double>() * k});
        hz["spring_shift"] =
            json::array({w["spring_shift"][0].get<double>() * k, w["spring_shift"][1].get<double>() * k});
        hz["gamma_eff"] = w["gamma_eff"].get<double>() * k;
    }
    if (summary.contains("pt") && summary["pt"]["beat"].is_number()) hz["beat"] = summary["pt"]["beat"].get<double>() * k;
    if (summary.contains("stability")) hz["lambda_max"] = summary["stability"]["lambda_max"].get<double>() * k;
    hz["omega"] = json::array({s.params.omega[0] * k, s.params.omega[1] * k});
    u["rates_hz"] = hz;
    return u;
}

inline json error_json(const std::exception& e);

// --------------------------------------------------------------------------
// Execution
// --------------------------------------------------------------------------

inline RunResult run(const Scenario& s) {
    RunResult res;
    res.scenario = s;
    json& sum = res.summary;
    sum["status"] = "ok";
    sum["name"] = s.name;
    sum["tier"] = to_string(s.tier);
    sum["params_hash"] = hex64(hash_params(s.params));
    sum["scenario"] = to_json(s);

    if (needs_working_point(s)) {
        // The full tier integrates without a working point; a failed solve
        // only costs it the derived-rate blocks.
        try {
            res.wp = resolve_working_point(s);
            sum["working_point"] = working_point_json(*res.wp);
        } catch (const Error& e) {
            if (s.tier != Tier::Full) throw;
            sum["working_point_error"] = error_json(e);
        }
    }
    const IntegrationOptions opt = integration_options(s);

    switch (s.tier) {
        case Tier::Full:
            res.series = integrate_full(s.params, s.init.classical, s.time.t_max, opt);
            break;
        case Tier::Linearized:
            res.series = integrate_linearized(*res.wp, s.params, s.init.classical, s.time.t_max, opt);
            break;
        case Tier::Reduced: {
            const ReducedModel m = reduced_model(s, res.wp);
            json rm;
            rm["mode"] = to_string(s.reduced.mode);
            rm["omega"] = pair_json(m.omega);
            rm["shift"] = pair_json(m.shift);
            rm["rate"] = pair_json(m.rate);
            rm["sign"] = json::array({m.sign[0], m.sign[1]});
            rm["gamma"] = pair_json(m.gamma);
            rm["j"] = m.j;
            rm["ideal"] = m.is_ideal();
            sum["reduced_model"] = rm;
            sum["pt"] = pt_json(0.5 * (m.omega[0] + m.omega[1]), m.j, 0.5 * (m.rate[0] + m.rate[1]));
            res.series = integrate_reduced(m, ReducedState{s.init.classical.q, s.init.classical.p}, s.time.t_max, opt);
            break;
        }
        case Tier::Quantum:
        case Tier::Spectrum:
            break;
    }

    if (res.wp) {
        const double omega_m = 0.5 * (s.params.omega[0] + s.params.omega[1]);
        if (!sum.contains("pt")) sum["pt"] = pt_json(omega_m, s.params.j_coupling, res.wp->gamma_eff);
        const DriftMatrix d = build_drift(*res.wp, s.params);
        sum["stability"] = stability_json(stability_spectrum(d, s.quasi_threshold));
        if (s.tier == Tier::Quantum) {
            res.series = quantum_series(d, s);
            sum["phonons"] = phonon_rows_json(*res.series);
        }
    }
    if (res.series) {
        res.series->params_hash = hash_params(s.params);
        sum["samples"] = res.series->size();
        sum["final"] = final_row_json(*res.series);
    }
    if (s.kappa_hz) sum["units"] = units_json(s, sum);
    return res;
}

// --------------------------------------------------------------------------
// Writers
// --------------------------------------------------------------------------

/// Columns to emit: `outputs` filtered in tier order, or all of them.
inline std::vector<std::size_t> selected_columns(const TimeSeries& ts, const std::vector<std::string>& outputs) {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < ts.width(); ++c) {
        if (outputs.empty() || std::find(outputs.begin(), outputs.end(), ts.columns[c]) != outputs.end()) {
            idx.push_back(c);
        }
    }
    return idx;
}

inline void write_series_csv(std::ostream& os, const TimeSeries& ts, const std::vector<std::string>& outputs = {}) {
    const auto cols = selected_columns(ts, outputs);
    os << "t";
    for (auto c : cols) os << ',' << ts.columns[c];
    os << '\n';
    for (std::size_t k = 0; k < ts.size(); ++k) {
        os << format_double(ts.t[k]);
        for (auto c : cols) os << ',' << format_double(ts.at(k, c));
        os << '\n';
    }
}

inline void write_series_json(std::ostream& os, const TimeSeries& ts, const std::vector<std::string>& outputs = {}) {
    const auto cols = selected_columns(ts, outputs);
    json j;
    j["tier"] = to_string(ts.tier);
    j["params_hash"] = hex64(ts.params_hash);
    json names = json::array({"t"});
    for (auto c : cols) names.push_back(ts.columns[c]);
    j["columns"] = names;
    json rows = json::array();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        json r = json::array({ts.t[k]});
        for (auto c : cols) r.push_back(ts.at(k, c));
        rows.push_back(r);
    }
    j["rows"] = rows;
    os << j.dump() << '\n';
}

/// Eigenvalue table for the spectrum tier: PT spectrum and drift spectrum.
inline void write_spectrum_csv(std::ostream& os, const json& summary) {
    os << "kind,index,re,im\n";
    auto emit = [&os](const char* kind, const json& list) {
        for (std::size_t k = 0; k < list.size(); ++k) {
            os << kind << ',' << k << ',' << format_double(list[k][0].get<double>()) << ','
               << format_double(list[k][1].get<double>()) << '\n';
        }
    };
    if (summary.contains("pt")) emit("pt", summary["pt"]["eigenvalues"]);
    if (summary.contains("stability")) emit("drift", summary["stability"]["eigenvalues"]);
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed: " + path.string());
}

enum class Format { Csv, Json };

/// Writes the data file <stem>.csv|json.
inline fs::path write_data(const RunResult& r, const fs::path& dir, const std::string& stem, Format fmt = Format::Csv,
                           const std::vector<std::string>& outputs = {}) {
    fs::create_directories(dir);
    std::ostringstream data;
    if (r.series) {
        const auto& cols = outputs.empty() ? r.scenario.outputs : outputs;
        if (fmt == Format::Csv) {
            write_series_csv(data, *r.series, cols);
        } else {
            write_series_json(data, *r.series, cols);
        }
    } else if (fmt == Format::Csv) {
        write_spectrum_csv(data, r.summary);
    } else {
        data << json{{"pt", r.summary.value("pt", json())}, {"stability", r.summary.value("stability", json())}}.dump()
             << '\n';
    }
    const fs::path path = dir / (stem + (fmt == Format::Csv ? ".csv" : ".json"));
    write_text(path, data.str());
    return path;
}

inline fs::path write_summary(const RunResult& r, const fs::path& dir, const std::string& stem) {
    fs::create_directories(dir);
    const fs::path path = dir / (stem + ".summary.json");
    write_text(path, r.summary.dump(2) + "\n");
    return path;
}

/// Writes <stem>.csv|json and <stem>.summary.json; returns the files written.
inline std::vector<fs::path> write_result(const RunResult& r, const fs::path& dir, const std::string& stem,
                                          Format fmt = Format::Csv) {
    return {write_data(r, dir, stem, fmt), write_summary(r, dir, stem)};
}

inline json error_json(const std::exception& e) {
    json j;
    j["status"] = "error";
    if (const auto* pe = dynamic_cast<const Error*>(&e)) {
        j["kind"] = pe->kind();
        const auto cat = pe->category();
        j["category"] = cat == ErrorCategory::Config ? "config" : cat == ErrorCategory::Numerics ? "numerics" : "physics";
        j["exit_code"] = exit_code(cat);
    } else {
        j["kind"] = "InternalError";
        j["category"] = "internal";
        j["exit_code"] = 1;
    }
    j["message"] = e.what();
    return j;
}

// --------------------------------------------------------------------------
// Sweeps
// --------------------------------------------------------------------------

struct SweepRow {
    double value = 0.0;
    std::optional<json> summary;
    std::string error;
};

/// Rejects paths that do not address a scenario field. Value-dependent
/// failures are left to the individual points.
inline void check_sweep_path(const Scenario& s) {
    json doc = to_json(s);
    doc.erase("sweep");
    try {
        set_path(doc, s.sweep->path, s.sweep->values.front());
    } catch (const std::invalid_argument&) {
        throw ValidationError("sweep.path '" + s.sweep->path + "': malformed index");
    } catch (const json::exception& e) {
        throw ValidationError("sweep.path '" + s.sweep->path + "': " + e.what());
    }
    try {
        scenario_from_json(doc);
    } catch (const ParseError& e) {
        throw ValidationError("sweep.path '" + s.sweep->path + "': " + e.what());
    } catch (const ValidationError&) {
    }
}

inline std::vector<SweepRow> sweep(const Scenario& s, unsigned jobs = 1) {
    if (!s.sweep) throw ValidationError("sweep: scenario has no sweep section");
    if (s.sweep->values.empty()) throw ValidationError("sweep.values must not be empty");
    check_sweep_path(s);
    const auto& values = s.sweep->values;
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < values.size(); k = next++) {
            SweepRow row;
            row.value = values[k];
            try {
                row.summary = run(with_override(s, s.sweep->path, values[k])).summary;
            } catch (const Error& e) {
                row.error = e.kind() + ": " + e.what();
            } catch (const std::exception& e) {
                row.error = std::string("InternalError: ") + e.what();
            }
            rows[k] = std::move(row);
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.value < b.value; });
    return rows;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_sweep_csv(std::ostream& os, const std::string& path, const std::vector<SweepRow>& rows) {
    os << csv_field(path)
       << ",gamma_eff,gamma_eff_over_2j,gamma_pt,phase,max_imag,beat,lambda_max,stability,g_eff_abs1,g_eff_abs2,"
          "rate1,rate2,error\n";
    auto num = [](const json& j, const char* a, const char* b = nullptr) -> std::string {
        if (!j.contains(a)) return "";
        const json& v = b ? (j[a].contains(b) ? j[a][b] : json()) : j[a];
        if (v.is_number()) return format_double(v.get<double>());
        if (v.is_string()) return v.get<std::string>();
        return "";
    };
    for (const auto& r : rows) {
        os << format_double(r.value);
        if (r.summary) {
            const json& s = *r.summary;
            os << ',' << num(s, "pt", "gamma_eff") << ',' << num(s, "pt", "gamma_eff_over_2j") << ','
               << num(s, "pt", "gamma_pt") << ',' << num(s, "pt", "phase") << ',' << num(s, "pt", "max_imag") << ','
               << num(s, "pt", "beat") << ',' << num(s, "stability", "lambda_max") << ','
               << num(s, "stability", "region");
            if (s.contains("working_point")) {
                const auto& w = s["working_point"];
                os << ',' << format_double(w["g_eff_abs"][0].get<double>()) << ','
                   << format_double(w["g_eff_abs"][1].get<double>()) << ',' << format_double(w["rate"][0].get<double>())
                   << ',' << format_double(w["rate"][1].get<double>());
            } else {
                os << ",,,,";
            }
            os << ",\n";
        } else {
            os << ",,,,,,,,,,,,," << csv_field(r.error) << '\n';
        }
    }
}

inline std::vector<fs::path> write_sweep(const Scenario& s, const std::vector<SweepRow>& rows, const fs::path& dir,
                                         const std::string& stem) {
    fs::create_directories(dir);
    std::ostringstream os;
    write_sweep_csv(os, s.sweep->path, rows);
    const fs::path p = dir / (stem + ".csv");
    write_text(p, os.str());
    json sum;
    sum["status"] = "ok";
    sum["name"] = s.name;
    sum["tier"] = to_string(s.tier);
    sum["sweep"] = {{"path", s.sweep->path}, {"points", rows.size()}};
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
    sum["sweep"]["failed"] = failed;
    sum["scenario"] = to_json(s);
    const fs::path sp = dir / (stem + ".summary.json");
    write_text(sp, sum.dump(2) + "\n");
    return {p, sp};
}

}  // namespace ptmech::cli
