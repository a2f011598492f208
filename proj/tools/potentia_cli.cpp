#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <potentia/plot.hpp>
#include <potentia/scenario.hpp>

namespace fs = std::filesystem;
using namespace potentia;

namespace {

enum Exit { kPass = 0, kTolerance = 1, kConfig = 2, kNumerical = 3 };

Json load_config(const std::string& what) {
    if (fs::exists(what)) return read_json_file(what);
    if (auto j = builtin_config(what)) return *j;
    throw ConfigError("'" + what + "' is neither a readable config file nor a builtin scenario id (see 'potentia list')");
}

int cmd_list() {
    for (const auto& s : list_scenarios()) std::cout << s.id << '\t' << s.kind << '\t' << s.description << '\n';
    return kPass;
}

int cmd_run(const std::string& target, const Overrides& ov, unsigned threads) {
    Scenario sc;
    try {
        sc = parse_scenario(load_config(target), ov);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    Report rep;
    try {
        rep = run_scenario(sc, {threads});
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }

    std::error_code ec;
    fs::create_directories(sc.output, ec);
    const fs::path csv = fs::path(sc.output) / (sc.id + ".csv");
    {
        std::ofstream f(csv, std::ios::binary);
        if (!f) {
            std::cerr << "config error: cannot write '" << csv.string() << "'\n";
            return kConfig;
        }
        rep.write_csv(f);
    }
    std::istringstream back(rep.csv());
    const auto plots = write_plots(read_csv_table(back), sc.output, sc.id);

    for (const auto& n : rep.notes) std::cout << "note: " << n << '\n';
    for (const auto& r : rep.rows) {
        if (r.pass()) continue;
        std::string reason;
        for (const auto& c : r.reasons) reason += (reason.empty() ? "" : "|") + c;
        std::cout << "FAIL " << r.label << " " << r.point << ": " << reason << '\n';
    }
    std::cout << "wrote " << csv.string() << " (" << rep.rows.size() << " rows, " << plots.size() << " plots)\n";
    const int st = rep.status();
    std::cout << sc.id << ": " << (st == 0 ? "PASS" : st == 1 ? "FAIL (tolerance)" : "FAIL (numerical validity)") << '\n';
    return st;
}

int cmd_plot(const std::string& path, std::optional<std::string> out_dir) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "config error: cannot open '" << path << "'\n";
        return kConfig;
    }
    const CsvTable t = read_csv_table(in);
    if (t.comments.empty() || t.comments.front() != "potentia-csv v1") {
        std::cerr << "config error: '" << path << "' is not a potentia-csv v1 report\n";
        return kConfig;
    }
    const fs::path p(path);
    const std::string dir = out_dir ? *out_dir : (p.has_parent_path() ? p.parent_path().string() : ".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    const auto files = write_plots(t, dir, p.stem().string());
    if (files.empty()) {
        std::cerr << "warning: no ratio curve with at least two points in '" << path << "'; no plot written\n";
        return kPass;
    }
    for (const auto& f : files) std::cout << f << '\n';
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"potentia: potentials and ruin of heavy-tailed risk processes"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "Print the builtin scenario ids");

    std::string target;
    std::optional<std::uint64_t> seed, n_paths;
    std::optional<std::string> output;
    unsigned threads = 0;
    auto* run = app.add_subcommand("run", "Run a scenario config file or builtin id");
    run->add_option("config", target, "Config file (JSON) or builtin id")->required();
    run->add_option("--seed", seed, "Override mc.seed");
    run->add_option("--n-paths", n_paths, "Override mc.n_paths");
    run->add_option("--output", output, "Override the output directory");
    run->add_option("--threads", threads, "Worker threads for simulation (0: all cores); results do not depend on it");

    std::string report;
    std::optional<std::string> plot_dir;
    auto* plot = app.add_subcommand("plot", "Write SVG ratio plots for a report CSV");
    plot->add_option("report", report, "Report CSV written by 'run'")->required();
    plot->add_option("--output", plot_dir, "Directory for the SVG files (default: next to the report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfig;
    }
    try {
        if (list->parsed()) return cmd_list();
        if (run->parsed()) return cmd_run(target, {seed, n_paths, output}, threads);
        if (plot->parsed()) return cmd_plot(report, plot_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kConfig;
}
