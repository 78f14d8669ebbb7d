#include <ksm/cli.hpp>
#include <ksm/datasets.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ksm::ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability and metric solver for toric fiber bundles over Fano bases"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, dataset, example;
  double tol = 0;
  bool plots = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--tol", tol, "tolerance override (verdict / solver residual)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "directory for report.json and CSV files");
  app.add_flag("--plots", plots, "also write CSV plot data");
  app.add_option("--dataset", dataset, "built-in dataset: Z1, Z2, P2-fiber, product");

  const std::pair<const char*, const char*> subcommands[] = {
      {"validate", "check Fano conditions, KSM data and the sigma profile"},
      {"stability", "barycenter verdict and destabilizer"},
      {"solve-field", "find the fiber field (soliton, path, general, tau0)"},
      {"solve-metric", "minimize the Ding functional on a dual mesh"},
      {"geodesic", "Ding functional along a toric geodesic ray"},
      {"probe", "sample D against J_red and J_sigma"},
      {"reproduce", "worked examples: Z1, Z2 or classical"}};
  for (const auto& [name, help] : subcommands) {
    auto* sub = app.add_subcommand(name, help);
    if (std::string(name) == "reproduce") sub->add_option("example", example, "Z1, Z2 or classical");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string task = app.get_subcommands().front()->get_name();
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      // Syntax diagnostics with line and column come from parse_config.
      j = ksm::to_json(ksm::parse_config(slurp(config_path), config_path));
    }
    j["task"] = task;
    if (!dataset.empty()) j["ksm"] = dataset;
    if (!example.empty()) j["example"] = example;
    ksm::RunConfig cfg = ksm::config_from_json(j);
    if (tol > 0) cfg.tolerance = tol;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (plots) cfg.plots = true;

    const auto out = ksm::run(cfg);
    std::cout << out.report.dump(2) << '\n';
    ksm::write_outputs(out, cfg.out_dir, cfg.plots);
    return 0;
  } catch (const ksm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
