// Command-line driver: one subcommand per experiment, JSON config in,
// CSV/JSON/SVG reports out.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "distlab/experiments.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string formats = "csv,json";
    unsigned threads = 1;
    bool paper_scale = false;
};

std::vector<distlab::ReportFormat> parse_formats(const std::string& spec) {
    std::vector<distlab::ReportFormat> formats;
    std::string token;
    std::stringstream ss(spec);
    while (std::getline(ss, token, ',')) {
        if (token == "csv") {
            formats.push_back(distlab::ReportFormat::csv);
        } else if (token == "json") {
            formats.push_back(distlab::ReportFormat::json);
        } else if (token == "svg") {
            formats.push_back(distlab::ReportFormat::svg);
        } else {
            throw distlab::ConfigError("unknown format '" + token + "' (use csv,json,svg)");
        }
    }
    if (formats.empty()) throw distlab::ConfigError("--format must name at least one format");
    return formats;
}

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw distlab::IoError("cannot open config " + path);
    nlohmann::json cfg;
    try {
        in >> cfg;
    } catch (const nlohmann::json::exception& e) {
        throw distlab::ConfigError("config " + path + ": " + e.what());
    }
    return cfg;
}

int run(const std::string& experiment, const CliArgs& args) {
    const nlohmann::json cfg = load_config(args.config_path);
    distlab::RunOptions opts;
    opts.seed = args.seed;
    opts.out_dir = args.out_dir;
    opts.threads = args.threads;
    opts.paper_scale = args.paper_scale;

    const distlab::Report report = distlab::run_experiment(experiment, cfg, opts);
    const auto formats = parse_formats(args.formats);
    const auto paths = distlab::emit_report(report, formats, args.out_dir);

    std::printf("%s: %zu rows, %.2fs\n", report.experiment.c_str(), report.rows.size(),
                report.wall_clock_seconds);
    if (!report.summary.is_null() && !report.summary.empty())
        std::printf("summary: %s\n", report.summary.dump().c_str());
    for (const auto& note : report.notes) std::printf("note: %s\n", note.c_str());
    for (const auto& p : paths) std::printf("wrote %s\n", p.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distlab: knowledge-distillation uncertainty laboratory"};
    app.require_subcommand(1);

    CliArgs args;
    std::string chosen;
    for (const std::string& name : distlab::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", args.config_path, "JSON config file");
        sub->add_option("--seed", args.seed, "master seed");
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--format", args.formats, "comma list of csv,json,svg");
        sub->add_option("--threads", args.threads, "worker threads");
        sub->add_flag("--paper-scale", args.paper_scale,
                      "paper-scale ensemble sizes (p=1000, B=1000)");
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run(chosen, args);
    } catch (const distlab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const distlab::ParseError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const distlab::EmptyDataset& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const distlab::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
}
