// ptmech - command-line driver: simulate a scenario, regenerate a figure
// preset, or run a parameter sweep.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "ptmech/cli/figures.hpp"
#include "ptmech/cli/runner.hpp"

namespace fs = std::filesystem;
using namespace ptmech;
using namespace ptmech::cli;

namespace {

fs::path resolve_out(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("PTMECH_OUT_DIR"); env && *env) return env;
    return "out";
}

void report(const std::vector<fs::path>& files) {
    for (const auto& f : files) std::cout << f.string() << '\n';
}

/// Prints the error, writes error.json when possible, returns the exit code.
int fail(const std::exception& e, const fs::path& out) {
    const json err = error_json(e);
    std::cerr << "ptmech: " << err["kind"].get<std::string>() << ": " << e.what() << '\n';
    if (!out.empty()) {
        std::error_code ec;
        fs::create_directories(out, ec);
        if (!ec) {
            std::ofstream f(out / "error.json");
            f << err.dump(2) << '\n';
        }
    }
    return err["exit_code"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled optomechanical PT-symmetry simulator"};
    app.require_subcommand(1);

    std::string config, tier, out_flag, format = "csv", figure;
    double t_max = -1.0, dt = -1.0;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool list = false;

    auto* sim = app.add_subcommand("simulate", "Run one scenario and write its time series and summary");
    sim->add_option("--config", config, "Scenario JSON file")->required();
    sim->add_option("--tier", tier, "Override the tier (full|linearized|reduced|quantum|spectrum)");
    sim->add_option("--t-max", t_max, "Override time.t_max");
    sim->add_option("--dt", dt, "Override time.dt");
    sim->add_option("--out", out_flag, "Output directory");
    sim->add_option("--format", format, "Time-series format")->check(CLI::IsMember({"csv", "json"}));

    auto* fig = app.add_subcommand("figure", "Regenerate the data of a figure preset");
    fig->add_option("name", figure, "Preset name (fig3, fig5a, ... fig11d)");
    fig->add_option("--out", out_flag, "Output directory");
    fig->add_option("--jobs", jobs, "Worker threads for sweep presets")->check(CLI::PositiveNumber);
    fig->add_flag("--list", list, "List preset names");

    auto* sw = app.add_subcommand("sweep", "Run the sweep section of a scenario");
    sw->add_option("--config", config, "Scenario JSON file")->required();
    sw->add_option("--out", out_flag, "Output directory");
    sw->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const fs::path out = resolve_out(out_flag);
    try {
        if (sim->parsed()) {
            Scenario s = load_config(config);
            if (!tier.empty()) s.tier = parse_tier(tier);
            if (t_max >= 0) s.time.t_max = t_max;
            if (dt >= 0) s.time.dt = dt;
            if (!tier.empty() || t_max >= 0 || dt >= 0) validate(s);
            const std::string stem = s.name == Scenario{}.name ? fs::path(config).stem().string() : s.name;
            const RunResult r = run(s);
            report(write_result(r, out, stem, format == "json" ? Format::Json : Format::Csv));
        } else if (fig->parsed()) {
            if (list) {
                for (const auto& n : figure_names()) std::cout << n << '\n';
                return 0;
            }
            if (figure.empty()) throw ValidationError("figure: a preset name is required (see --list)");
            const FigurePreset p = figure_preset(figure);
            if (p.is_sweep) {
                report(write_sweep(p.scenario, sweep(p.scenario, jobs), out, p.name));
            } else {
                const RunResult r = run(p.scenario);
                std::vector<fs::path> files;
                for (const auto& panel : p.panels) files.push_back(write_data(r, out, panel.stem, Format::Csv, panel.columns));
                files.push_back(write_summary(r, out, p.name));
                report(files);
            }
        } else if (sw->parsed()) {
            const Scenario s = load_config(config);
            if (!s.sweep) throw ValidationError("sweep: config has no sweep section");
            const std::string stem = s.name == Scenario{}.name ? fs::path(config).stem().string() : s.name;
            report(write_sweep(s, sweep(s, jobs), out, stem + ".sweep"));
        }
    } catch (const std::exception& e) {
        return fail(e, out);
    }
    return 0;
}
