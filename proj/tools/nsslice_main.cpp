#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsslice/commands.hpp"
#include "nsslice/config.hpp"
#include "nsslice/error.hpp"
#include "nsslice/log.hpp"

namespace {

std::string key_help() {
  std::string s = "\nConfiguration keys (--set key=value):\n";
  for (const auto& k : nsslice::Config::registry()) {
    s += "  " + k.key;
    if (!k.default_value.empty()) s += " [" + k.default_value + "]";
    s += "\n      " + k.help + "\n";
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  nsslice::log::init_from_env();

  CLI::App app{"Galerkin solver and diagnostics for Navier-Stokes plane sections"};
  app.footer(key_help());
  std::string command;
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  app.add_option("command", command, "project | solve | uniqueness | quadform | stratify | mms")
      ->required()
      ->check(CLI::IsMember(nsslice::command_names()));
  app.add_option("--config", config_path, "flat key=value configuration file");
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed");
  app.add_option("--set", sets, "override one key, key=value")->take_all();
  CLI11_PARSE(app, argc, argv);

  try {
    nsslice::Config cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& s : sets) cfg.assign(s);
    if (*out_opt) cfg.set("out", out);
    if (*seed_opt) cfg.set("seed", std::to_string(seed));
    const int status = nsslice::run_command(command, cfg);
    if (status == 0) nsslice::log::info(command + ": all checks passed");
    return status;
  } catch (const nsslice::Error& e) {
    nsslice::log::error(std::string(nsslice::to_string(e.code())) + ": " + e.what());
    return nsslice::exit_status(e.code());
  } catch (const std::exception& e) {
    nsslice::log::error(std::string("internal error: ") + e.what());
    return 70;
  }
}
