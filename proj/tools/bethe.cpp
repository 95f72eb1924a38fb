// bethe: population-dynamics and density solvers for the Anderson model on a
// regular tree.
//
//   bethe solve    --seed 1 --E 0 --beta 0 --eta 0.01
//   bethe sweep    --seed 1 --E=-3.5:3.5:0.25 --beta 0.02
//   bethe certify  --seed 1 --E 3 --beta 1e-4
//   bethe validate --seed 1 --beta 0.1
//   bethe oracle-compare --config run.ini
//
// Settings come from an INI file (--config), then BETHE_* environment
// variables, then flags; later sources win. Exit codes: 0 success, 2 bad
// configuration, 3 internal error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bethe/cli.hpp"

extern char** environ;

int main(int argc, char** argv) {
    using namespace bethe::cli;
    CLI::App app{"Anderson model on the Bethe lattice: self-consistent solvers and diagnostics"};
    app.set_version_flag("--version", version_string());

    std::string command, config_path;
    app.add_option("command", command, "solve | sweep | certify | validate | oracle-compare")
        ->required();
    app.add_option("--config", config_path, "INI configuration file");

    // flag name -> config key
    const std::vector<std::pair<std::string, std::string>> direct = {
        {"seed", "run.seed"},     {"out", "run.out"},         {"workers", "run.workers"},
        {"format", "run.format"}, {"K", "physics.K"},         {"E", "physics.E"},
        {"beta", "physics.beta"}, {"eta", "physics.eta"},     {"law", "law.kind"},
        {"L", "law.L"},           {"pool-size", "solver.pool_size"},
    };
    std::map<std::string, std::string> flag_values;
    for (const auto& [flag, key] : direct)
        app.add_option("--" + flag, flag_values[flag], "sets " + key);
    std::vector<std::string> sets;
    app.add_option("--set", sets, "section.key=value, any config key (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto cmd = parse_command(command);
        if (!cmd) throw bethe::ConfigError("unknown command '" + command + "'");
        Settings file;
        if (!config_path.empty()) file = load_ini(config_path);
        const Settings env = environment_settings(read_environment(environ));
        Settings flags;
        for (const auto& [flag, key] : direct) {
            if (app.get_option("--" + flag)->count() == 0) continue;
            flags[key] = {flag_values[flag], "flag --" + flag};
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw bethe::ConfigError("flag --set: expected key=value, got '" + s + "'");
            const std::string key = s.substr(0, eq);
            if (!find_key(key)) throw bethe::ConfigError("flag --set: unknown key '" + key + "'");
            flags[key] = {s.substr(eq + 1), "flag --set " + key};
        }
        const RunConfig cfg = resolve(*cmd, merge({&file, &env, &flags}));
        run(cfg, std::cout);
        return 0;
    } catch (const bethe::ConfigError& e) {
        std::cerr << "bethe: configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "bethe: internal error: " << e.what() << "\n";
        return 3;
    }
}
