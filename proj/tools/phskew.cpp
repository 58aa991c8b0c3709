#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "phskew/description.hpp"
#include "phskew/error.hpp"
#include "phskew/run.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"phskew: partially hyperbolic skew products and IFS diagnostics"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    std::string config_path;
    bool allow_override = false;
    app.add_option("--config", config_path, "run config (schema phskew-run/1)");
    app.add_flag("--allow-override", allow_override, "keep config values when flags disagree");

    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::map<std::string, CLI::App*> subs;
    for (const std::string& cmd : phskew::subcommands()) {
        CLI::App* sub = app.add_subcommand(cmd);
        subs[cmd] = sub;
        for (const std::string& key : phskew::keys_for(cmd))
            sub->add_option("--" + key, flag_values[cmd][key], phskew::key_help(key));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    std::string command;
    for (const auto& [cmd, sub] : subs)
        if (sub->parsed()) command = cmd;

    std::string output;  // known only once settings merge
    try {
        phskew::RawSettings config, flags;
        std::string base_dir = ".";
        std::string config_text;
        if (!config_path.empty()) {
            config_text = phskew::read_text_file(config_path);
            std::string config_command;
            try {
                config = phskew::parse_config_text(config_text, config_command);
            } catch (const phskew::Error& e) {
                throw phskew::Error(e.code(), config_path + ": " + e.detail());
            }
            const std::filesystem::path p(config_path);
            if (p.has_parent_path()) base_dir = p.parent_path().string();
            if (command.empty()) command = config_command;
            if (!config_command.empty() && config_command != command)
                throw phskew::Error(phskew::Errc::InvalidArgument,
                                    "config command '" + config_command + "' differs from '" + command + "'");
        }
        if (command.empty()) throw phskew::Error(phskew::Errc::InvalidArgument, "no subcommand given");
        for (const auto& [key, value] : flag_values[command])
            if (subs[command]->count("--" + key)) flags[key] = phskew::RawSetting{value, "--" + key};
        // flag paths are relative to the working directory, config paths to the config file
        if (!base_dir.empty() && base_dir != ".")
            for (auto& [key, s] : flags)
                if (config.count(key) == 0 && (key == "matrix" || key == "fiber_matrix" || key == "skew" || key == "ifs"))
                    s.text = std::filesystem::absolute(s.text).string();
        const phskew::RawSettings merged = phskew::merge_settings(config, flags, allow_override);
        if (merged.count("output")) output = merged.at("output").text;
        phskew::RunConfig cfg = phskew::make_run_config(command, merged, base_dir);
        cfg.config_text = config_text;
        const phskew::RunResult r = phskew::run(cfg);
        std::cout << r.report;
        if (r.status != 0) std::cerr << "phskew: " << r.reason << "\n";
        return r.status;
    } catch (const phskew::Error& e) {
        std::cerr << "phskew: error: " << e.what() << "\n";
        if (!output.empty() || std::getenv("PHSKEW_OUTPUT_DIR")) phskew::write_error_manifest(output, command, e.what());
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "phskew: error: " << e.what() << "\n";
        return 1;
    }
}
