#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "possq/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Possibility and standard particle filters for bearings-only TMA"};
  app.set_version_flag("--version", POSSQ_VERSION);
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "Monte Carlo batch for one filter, writes rms.csv and runs.csv"},
      {"table1", "Divergence grid over N and nu, writes table1.csv"},
      {"crlb", "Position CRLB along the nominal track, writes crlb.csv"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "INI config file (defaults apply when omitted)");
    sub->add_option("--set", overrides, "Override one key, section.key=value (repeatable)")->take_all();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return possq::cli::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::optional<std::string> path = config.empty() ? std::nullopt : std::optional<std::string>(config);
  return possq::cli::execute(command, path, overrides, std::cout, std::cerr);
}
