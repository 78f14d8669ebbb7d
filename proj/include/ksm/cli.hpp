#pragma once

#include <ksm/field_solver.hpp>
#include <ksm/ma_solver.hpp>

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ksm {

inline constexpr const char* kReportSchema = "ksmstab-report/1";

struct ConfigError : InvalidInput {
  using InvalidInput::InvalidInput;
};

enum class Task { validate, stability, solve_field, solve_metric, geodesic, probe, reproduce };
std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct SigmaSettings {
  std::string kind = "constant";  // constant, linear, mabuchi_log, tau_mix, custom
  double parameter = 0;           // value, shift or tau
  std::vector<std::pair<double, double>> samples;
  SigmaProfile build() const;
};

struct FieldSettings {
  std::string method = "explicit";  // explicit, soliton, path, general, tau0
  std::vector<std::string> c;       // explicit coefficients as rational strings
  double tau = 0;
  PathParameter parameter = PathParameter::constant;
  Point c0;
};

struct RunConfig {
  Task task = Task::stability;
  std::optional<std::string> dataset;  // built-in name
  std::optional<std::string> ksm_file;
  std::optional<nlohmann::json> ksm_inline;  // raw KSM-data object
  SigmaSettings sigma;
  FieldSettings field;
  double tolerance = 0;  // 0: per-module default
  int mesh_level = 0;    // 0: default
  std::string out_dir;
  bool plots = false;
  // geodesic
  std::vector<std::pair<Point, double>> phi;  // pieces (a, b); empty selects |z|_1
  std::vector<double> times{0, 10, 25, 50, 100};
  // probe
  int samples = 40;
  unsigned long long seed = 1;
  // reproduce: Z1, Z2 or classical
  std::string example;
};

// Line/column diagnostics for syntax errors, field paths for semantic ones.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

KSMData parse_ksm_data(const nlohmann::json& j);
nlohmann::json to_json(const KSMData& d);

// Raw KSM-data object from the dataset name, file or inline entry.
nlohmann::json ksm_source(const RunConfig& c);
KSMData load_ksm(const RunConfig& c);

// Plot files produced by a run: (file name, CSV text).
struct RunOutput {
  nlohmann::json report;
  std::vector<std::pair<std::string, std::string>> csv;
};

// Dispatches to the modules; mathematical failures (unstable, no root) are
// results, execution failures propagate as exceptions.
RunOutput run(const RunConfig& c);

// Classical criteria: h-barycenter (KE) test and the soliton solve.
nlohmann::json reproduce_classical(const KSMData& data);

// Writes report.json and the CSV files under out_dir (created if needed).
void write_outputs(const RunOutput& out, const std::string& out_dir, bool plots);

}  // namespace ksm
