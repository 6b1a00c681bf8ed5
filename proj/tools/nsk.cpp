#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsk/cli.hpp"
#include "nsk/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reduced-space Newton-Krylov solver for Navier-Stokes optimal control"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string method;
  double tol = 0.0;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI config file")->required();
    sub->add_option("--set", overrides, "override, e.g. --set params.nu=0.01 (repeatable)");
  };
  CLI::App* solve = app.add_subcommand("solve", "optimal control solve with grid continuation");
  add_common(solve);
  solve->add_option("--method", method, "linear solver")->check(CLI::IsMember({"cg", "mgcg"}));
  solve->add_option("--tol", tol, "relative tolerance of the linear solves");
  add_common(app.add_subcommand("bench", "CG vs MGCG parameter sweep"));
  add_common(app.add_subcommand("spectral", "preconditioner approximation order study"));
  add_common(app.add_subcommand("mms", "manufactured-solution convergence rates"));
  CLI::App* exp = app.add_subcommand("export", "write target and optimal fields as legacy VTK");
  add_common(exp);
  exp->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nsk::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  nsk::RunConfig config;
  try {
    config = nsk::parse_config(config_path);
    config.command = command;
    for (const std::string& o : overrides) nsk::apply_override(config, o);
    if (!method.empty()) nsk::apply_override(config, "linear.method=" + method);
    if (tol > 0.0) config.tol = tol;
    if (!out_dir.empty()) config.vtk_dir = out_dir;
    nsk::validate(config);
  } catch (const nsk::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return nsk::kExitIo;
  } catch (const nsk::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return nsk::kExitConfig;
  }
  return nsk::run_command(config, std::cout, std::cerr);
}
