// Command-line front end: scatter runs, convergence studies, tensor export,
// and invariant checks, all driven by a single JSON config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "foldylax/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"foldylax: point-interaction scattering by clusters of small particles"};

  std::string config_path;
  std::string out_dir = "out";
  std::string verb = "scatter";
  std::optional<std::uint64_t> seed;

  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--verb", verb, "scatter | study | tensors | check")
      ->check(CLI::IsMember({"scatter", "study", "tensors", "check"}));
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "seed for randomized clusters");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) seed = seed_value;

  try {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    const foldylax::Json cj = foldylax::Json::parse(in);
    const std::string base_dir =
        std::filesystem::absolute(config_path).parent_path().string();
    const foldylax::RunConfig cfg = foldylax::parse_config(cj, base_dir, seed);

    foldylax::Json report;
    if (verb == "scatter") {
      report = foldylax::run_scatter(cfg, out_dir);
      std::cout << "scatter: wrote " << out_dir << "/{solution.json,pattern.csv,report.json}\n";
    } else if (verb == "study") {
      if (!cfg.study) throw std::runtime_error("study verb needs a study section in the config");
      report = foldylax::run_convergence_study(cfg, out_dir);
      std::cout << "study: slope " << report.at("slope_loglog").get<double>() << ", wrote "
                << out_dir << "/{study.json,summary.txt}\n";
    } else if (verb == "tensors") {
      report = foldylax::run_tensors(cfg, out_dir);
      std::cout << "tensors: wrote " << out_dir << "/tensors.json\n";
    } else {
      report = foldylax::run_check(cfg, out_dir);
      const bool ok = report.at("pass").get<bool>();
      std::cout << "check: " << (ok ? "all invariants hold" : "FAILURES, see check.json")
                << " (" << out_dir << "/check.json)\n";
      if (!ok) return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
