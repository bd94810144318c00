// qfal: command-line front end for the scenario pipelines.

#include "qfal/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Tabular Q-learning under falsified costs"};
    app.require_subcommand(1);

    std::string config_path;
    qfal::RunOverrides ov;
    std::uint64_t seed = 0;
    double xi = 0.0;
    std::string format, out;
    std::size_t runs = 0;

    for (qfal::Command cmd : qfal::all_commands()) {
        CLI::App* sub = app.add_subcommand(std::string(qfal::command_name(cmd)));
        sub->add_option("--config", config_path, "JSON scenario (default: reservoir case study)");
        sub->add_option("--seed", seed, "RNG seed override");
        sub->add_option("--out", out, "Write output here instead of stdout");
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--xi", xi, "Target-policy margin override")->check(CLI::PositiveNumber);
        sub->add_option("--n", runs, "Number of runs (lipschitz-sweep)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : qfal::kExitConfig;
    }

    CLI::App* sub = app.get_subcommands().front();
    const qfal::Command cmd = *qfal::parse_command(sub->get_name());
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--xi")) ov.xi = xi;
    if (sub->count("--format")) ov.format = format;
    if (sub->count("--out")) ov.out = out;
    if (sub->count("--n")) ov.runs = runs;

    try {
        const qfal::ScenarioConfig cfg =
            config_path.empty() ? qfal::reservoir_scenario() : qfal::load_config(config_path);
        return qfal::run_and_emit(cmd, cfg, ov, std::cout, std::cerr);
    } catch (const qfal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
    } catch (const qfal::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
    }
    return qfal::kExitConfig;
}
