// Command-line front end: pphi2 <subcommand> <config> [--set section.key=value]...

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pphi2/app/run.hpp"

namespace {

int fail(const pphi2::Error& e, bool json_errors) {
  if (json_errors) std::cerr << pphi2::app::error_record(e).dump() << "\n";
  else std::cerr << "error: " << e.what() << (e.field().empty() ? "" : " [" + e.field() + "]") << "\n";
  return pphi2::app::exit_code(e);
}

}  // namespace

int main(int argc, char** argv) {
  bool json_errors = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--json-errors") json_errors = true;

  CLI::App app{"Variable-metric P(phi)_2 pipeline: scattering, eigenbases, truncated Hamiltonians and spectral probes"};
  app.set_help_all_flag("--help-all", "Show help for all subcommands");
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  unsigned threads = 0;
  app.add_flag("--json-errors", json_errors, "Print errors as JSON records on stderr");
  app.add_option("--set", overrides, "Override a config value: section.key=value (repeatable)");
  app.add_option("--out", out_dir, "Root directory for run outputs (default: output.dir)");
  app.add_option("--threads", threads, "Worker threads (sets PPHI2_THREADS)")->check(CLI::Range(1u, 1024u));
  app.require_subcommand(1);
  for (const auto& name : pphi2::app::subcommands()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
    sub->add_option("config", config_path, "Config file (key = value sections)")->required();
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(pphi2::validation_error("BadArguments", e.what(), "argv"), json_errors);
  }
  if (threads > 0) setenv("PPHI2_THREADS", std::to_string(threads).c_str(), 1);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    auto ctx = pphi2::app::make_context(pphi2::app::RunConfig::load(config_path), overrides,
                                        out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir));
    const auto summary = pphi2::app::run(ctx, cmd);
    std::cout << nlohmann::json{{"command", cmd},
                                {"config_hash", ctx.hash},
                                {"output_dir", ctx.dir.string()},
                                {"summary", summary}}
                     .dump(2)
              << "\n";
    return 0;
  } catch (const pphi2::Error& e) {
    return fail(e, json_errors);
  } catch (const std::exception& e) {
    return fail(pphi2::numerical_error("InternalError", e.what()), json_errors);
  }
}
