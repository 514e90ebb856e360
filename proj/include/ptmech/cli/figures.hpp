// figures.hpp - named presets that regenerate the data behind each figure.
//
// Time windows are not given with the figures; the ones below cover several
// envelope e-foldings (semiclassical tiers) or t <= 500 (quantum tier).

#pragma once

#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "ptmech/cli/scenario.hpp"

namespace ptmech::cli {

/// One output file: stem plus the columns it carries (empty = all).
struct Panel {
    std::string stem;
    std::vector<std::string> columns;
};

struct FigurePreset {
    std::string name;
    Scenario scenario;
    std::vector<Panel> panels;   // time-domain presets
    bool is_sweep = false;       // written as one sweep table
};

namespace detail {

inline Scenario full_preset(const std::string& name, double drive, double j, double t_max) {
    Scenario s;
    s.name = name;
    s.tier = Tier::Full;
    s.params = PhysicalParams::canonical();
    s.params.drive = {drive, drive};
    s.params.j_coupling = j;
    s.time.t_max = t_max;
    s.time.sample_every = 10;
    return s;
}

inline Scenario reduced_preset(const std::string& name, double gamma_over_j, double q0, double t_max) {
    Scenario s;
    s.name = name;
    s.tier = Tier::Reduced;
    const double j = s.params.j_coupling;
    s.reduced.mode = ReducedMode::Ideal;
    s.reduced.gamma_eff = gamma_over_j * j;
    s.init.classical.q = {q0, q0};
    s.time.t_max = t_max;
    s.time.sample_every = 10;
    return s;
}

/// Quantum tier at G1 = G2 = g, Delta' = (-omega_m, +omega_m).
inline Scenario quantum_preset(const std::string& name, double g, double n_th, double moment) {
    Scenario s;
    s.name = name;
    s.tier = Tier::Quantum;
    s.params.n_th = {n_th, n_th};
    const double w = s.params.omega[0];
    s.working_point = WorkingPointOverride{{cplx(g, 0.0), cplx(g, 0.0)}, {-w, w}};
    s.init.moments.q2 = {moment, moment};
    s.init.moments.p2 = {moment, moment};
    s.time.t_max = 500.0;
    s.time.sample_dt = 1.0;
    return s;
}

inline FigurePreset single(Scenario s, std::vector<std::string> cols) {
    FigurePreset f;
    f.name = s.name;
    s.outputs = cols;
    f.panels = {Panel{s.name, std::move(cols)}};
    f.scenario = std::move(s);
    return f;
}

}  // namespace detail

inline const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{
        "fig3",   "fig4",   "fig5a",  "fig5b",  "fig5c",  "fig5d",  "fig5e",  "fig5f",  "fig6",
        "fig7",   "fig8",   "fig9a",  "fig9b",  "fig9c",  "fig9d",  "fig9e",  "fig9f",  "fig9g",
        "fig9h",  "fig9i",  "fig10a", "fig10b", "fig10c", "fig10d", "fig11a", "fig11b", "fig11c",
        "fig11d"};
    return names;
}

inline FigurePreset figure_preset(const std::string& name) {
    using namespace detail;
    const std::vector<std::string> qq{"q1", "q2"};

    if (name == "fig3") {
        FigurePreset f;
        f.name = name;
        f.scenario = full_preset(name, 5000.0, 0.0, 3000.0);
        f.scenario.outputs = qq;
        f.panels = {Panel{"fig3a", {"q1"}}, Panel{"fig3b", {"q2"}}};
        return f;
    }
    if (name == "fig4") {
        Scenario s = full_preset(name, 5000.0, 0.01, 4.0 * std::numbers::pi);
        s.time.sample_every = 1;
        return single(s, qq);
    }
    static const std::map<std::string, double> full_drive{{"fig5a", 5000.0}, {"fig5c", 6700.0}, {"fig5e", 10000.0}};
    if (auto it = full_drive.find(name); it != full_drive.end()) {
        return single(full_preset(name, it->second, 0.01, 3000.0), qq);
    }
    // Initial amplitudes follow the transient level of the matching full-tier run.
    static const std::map<std::string, std::pair<double, double>> reduced{
        {"fig5b", {1.0, 50.0}}, {"fig5d", {1.8, 90.0}}, {"fig5f", {4.0, 200.0}}};
    if (auto it = reduced.find(name); it != reduced.end()) {
        return single(reduced_preset(name, it->second.first, it->second.second, 3000.0), qq);
    }
    if (name == "fig6") {
        Scenario s = reduced_preset(name, 1.8, 90.0, 20000.0);
        s.reduced.mode = ReducedMode::Corrected;
        s.reduced.shift = {2.25e-5, 2.25e-5};
        s.time.sample_every = 20;
        return single(s, qq);
    }
    if (name == "fig7") {
        return single(full_preset(name, 5000.0, 0.01, 3000.0), {"I1", "I2", "q1", "q2"});
    }
    if (name == "fig8") {
        FigurePreset f;
        f.name = name;
        f.is_sweep = true;
        Scenario s = quantum_preset(name, 0.05, 0.0, 0.5);
        s.tier = Tier::Spectrum;
        SweepSpec sw;
        sw.path = "working_point.g_eff";
        for (int k = 0; k <= 200; ++k) sw.values.push_back(k / 2000.0);
        s.sweep = sw;
        f.scenario = s;
        return f;
    }
    if (name.size() == 5 && name.rfind("fig9", 0) == 0 && name[4] >= 'a' && name[4] <= 'i') {
        const int k = name[4] - 'a';
        static const double g[3] = {0.05, 0.069, 0.08};
        static const std::vector<std::string> cols[3] = {{"n_sp1", "n_sp2"}, {"n_st1", "n_st2"}, {"n_tt1", "n_tt2"}};
        return single(quantum_preset(name, g[k % 3], 0.0, 1.5), cols[k / 3]);
    }
    if (name.size() == 6 && name.rfind("fig10", 0) == 0 && name[5] >= 'a' && name[5] <= 'd') {
        const int k = name[5] - 'a';
        return single(quantum_preset(name, k % 2 == 0 ? 0.05 : 0.08, k < 2 ? 0.0 : 1000.0, 1.5),
                      {"n_cm1", "n_cm2", "n_mr1", "n_mr2"});
    }
    if (name.size() == 6 && name.rfind("fig11", 0) == 0 && name[5] >= 'a' && name[5] <= 'd') {
        const int k = name[5] - 'a';
        return single(quantum_preset(name, k % 2 == 0 ? 0.05 : 0.08, 1000.0, k < 2 ? 1.5 : 100.5), {"n_st1", "n_tt1"});
    }
    std::string known;
    for (const auto& n : figure_names()) known += (known.empty() ? "" : ", ") + n;
    throw ValidationError("unknown figure '" + name + "' (known: " + known + ")");
}

}  // namespace ptmech::cli
