#include <iostream>

#include <CLI11.hpp>

#include "modeqfi/run.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"quantum Cramer-Rao bounds for spatio-temporal mode parameters"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output;
    std::string format;
    bool oracle = false;

    CLI::App* run_cmd = app.add_subcommand("run", "evaluate a scenario or sweep from a config");
    run_cmd->add_option("--config", config_path, "config file (key = value lines)")->required();
    run_cmd->add_option("--output", output, "output path (default: stdout)");
    run_cmd->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    run_cmd->add_flag("--oracle", oracle, "cross-check the unitary term by finite differences");

    CLI::App* list_cmd = app.add_subcommand("list", "list scenarios and their parameters");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            std::cout << modeqfi::list_scenarios();
            return 0;
        }
        modeqfi::RunConfig config = modeqfi::parse_config_file(config_path);
        if (!output.empty())
            config.output = output;
        if (format == "json")
            config.format = modeqfi::RunConfig::Format::json;
        else if (format == "csv")
            config.format = modeqfi::RunConfig::Format::csv;
        if (oracle)
            config.oracle = true;
        return modeqfi::run(config);
    } catch (const modeqfi::ValidationError& e) {
        std::cerr << "modeqfi: " << e.what() << "\n";
        return 2;
    } catch (const modeqfi::NumericalError& e) {
        std::cerr << "modeqfi: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "modeqfi: " << e.what() << "\n";
        return 3;
    }
}
