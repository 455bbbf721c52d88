// monofem <experiment> --config <file> [--out <dir>] [--full-scale]
//
// Exit codes: 0 success, 2 invalid configuration, 3 numeric failure.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "monofem/monofem.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

monofem::ExperimentConfig load(const std::string& experiment, const std::string& path, bool full) {
  std::ifstream in(path);
  if (!in) {
    throw monofem::config_error("cannot open config file '" + path + "'");
  }
  // The command line names the experiment; a config that names another one is an error.
  std::stringstream text;
  text << in.rdbuf();
  monofem::ExperimentConfig c;
  {
    std::istringstream probe(text.str());
    std::string line;
    bool named = false;
    while (std::getline(probe, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) {
        line.erase(hash);
      }
      const auto eq = line.find('=');
      if (eq != std::string::npos && monofem::detail::trim(line.substr(0, eq)) == "experiment") {
        named = true;
        if (monofem::detail::trim(line.substr(eq + 1)) != experiment) {
          throw monofem::config_error("config names experiment '" + monofem::detail::trim(line.substr(eq + 1)) +
                                      "' but '" + experiment + "' was requested");
        }
      }
    }
    if (!named) {
      text.seekp(0, std::ios::end);
      text << "\nexperiment = " << experiment << '\n';
    }
  }
  std::istringstream parse(text.str());
  c = monofem::parse_config(parse);
  return full ? monofem::full_scale(c) : c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-point Galerkin experiments for monotone quasilinear problems"};
  std::string experiment;
  std::string config_path;
  std::string out_dir = "out";
  bool full = false;
  app.add_option("experiment", experiment, "apriori-p | apriori-h | adaptive")
      ->required()
      ->check(CLI::IsMember({"apriori-p", "apriori-h", "adaptive"}));
  app.add_option("--config", config_path, "key = value configuration file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--full-scale", full, "use the larger full-scale grid sizes");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    const monofem::ExperimentConfig c = load(experiment, config_path, full);
    const auto files = monofem::run_experiment(c, out_dir);
    for (const auto& f : files) {
      std::cout << f << '\n';
    }
    return 0;
  } catch (const monofem::config_error& e) {
    std::cerr << "monofem: " << e.what() << '\n';
    return exit_config;
  } catch (const monofem::numeric_error& e) {
    std::cerr << "monofem: numeric failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const monofem::solver_error& e) {
    std::cerr << "monofem: numeric failure: " << e.what() << '\n';
    return exit_numeric;
  } catch (const std::invalid_argument& e) {
    // e.g. an unreadable mesh file
    std::cerr << "monofem: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "monofem: " << e.what() << '\n';
    return 1;
  }
}
