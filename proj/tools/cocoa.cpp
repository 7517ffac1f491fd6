// cocoa: score, evaluate, and ablate uncertainty estimators over generation
// records.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 provider error.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cocoa/app/commands.hpp"
#include "cocoa/app/config.hpp"
#include "cocoa/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitProvider = 4;

struct Overrides {
    std::string config_path;
    std::map<std::string, std::string> single;
    std::map<std::string, std::vector<std::string>> repeated;
};

void add_overrides(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config_path, "TOML config file; flags override its keys")->check(CLI::ExistingFile);
    for (const auto& key : cocoa::app::config_keys()) {
        if (key == "groups" || key == "datasets")
            cmd.add_option("--" + key, o.repeated[key], key == "groups" ? "name=ds1,ds2 (repeatable)"
                                                                        : "name=records[:scores] (repeatable)");
        else
            cmd.add_option("--" + key, o.single[key]);
    }
}

cocoa::app::RunConfig resolve(const CLI::App& cmd, const Overrides& o) {
    auto config = cocoa::app::default_config();
    if (!o.config_path.empty()) cocoa::app::load_toml(o.config_path, config);
    for (const auto& [key, value] : o.single)
        if (cmd.count("--" + key) > 0) cocoa::app::apply_override(config, key, value);
    for (const auto& [key, values] : o.repeated) {
        if (cmd.count("--" + key) == 0) continue;
        if (key == "datasets") config.datasets.clear();
        if (key == "groups") config.groups.clear();
        for (const auto& v : values) cocoa::app::apply_override(config, key, v);
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Confidence and consistency uncertainty estimators for LLM generations"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* cmd;
        Overrides overrides;
    };
    std::map<std::string, Sub> subs;
    for (auto [name, help] : std::vector<std::pair<std::string, std::string>>{
             {"score", "score records with a list of estimators (JSONL out)"},
             {"evaluate", "compute PRR reports from scores and record qualities"},
             {"ablate", "PRR grid over estimators x similarity backends x strategies (CSV out)"},
             {"synth", "write deterministic synthetic records"},
             {"sim", "precompute similarity blocks into records"},
         }) {
        auto& s = subs[name];
        s.cmd = app.add_subcommand(name, help);
        add_overrides(*s.cmd, s.overrides);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        for (auto& [name, s] : subs) {
            if (!s.cmd->parsed()) continue;
            auto config = resolve(*s.cmd, s.overrides);
            if (name == "synth") {
                cocoa::app::cmd_synth(config);
            } else if (name == "evaluate") {
                cocoa::app::cmd_evaluate(config);
            } else {
                cocoa::app::ProviderSession session(config);
                if (name == "score") cocoa::app::cmd_score(config, session);
                else if (name == "ablate") cocoa::app::cmd_ablate(config, session);
                else cocoa::app::cmd_sim(config, session);
            }
        }
    } catch (const cocoa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cocoa::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << '\n';
        return kExitProvider;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
