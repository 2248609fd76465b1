#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ofw/cli/runner.hpp"
#include "ofw/cli/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Online Frank-Wolfe experiments"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
  run->add_option("config", config, "config file")->required();

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  std::string names;
  for (const auto& s : ofw::cli::suites()) names += (names.empty() ? "" : ", ") + s.name;
  verify->add_option("suite", suite, "one of: " + names);

  std::string dims;
  std::int64_t trials = 0;
  auto* check = app.add_subcommand("lmo-check", "compare LMOs against exhaustive or dense references");
  check->add_option("dims", dims, "'m1xm2' for the trace-norm ball, 'n' for l1 and vertex sets")->required();
  check->add_option("trials", trials, "number of random gradients")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return ofw::cli::run_command(config, std::cout, std::cerr);
  if (*verify) return ofw::cli::verify_command(suite, std::cout, std::cerr);
  return ofw::cli::lmo_check_command(dims, trials, std::cout, std::cerr);
}
