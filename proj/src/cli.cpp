#include <ksm/cli.hpp>
#include <ksm/datasets.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ksm {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("field '" + field + "': " + what);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path + key, e.what());
  }
}

Rational rational_from(const json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number()) return parse_rational(v.dump());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const Error& e) {
    fail(path, e.what());
  }
  fail(path, "expected a number or a rational string");
}

json point_json(const Point& p) { return json(p); }

json rat_json(const RatPoint& p) {
  json a = json::array();
  for (const auto& q : p) a.push_back(to_string(q));
  return a;
}

// splitmix64: deterministic across platforms, unlike std distributions.
struct SplitMix {
  unsigned long long state;
  unsigned long long next() {
    unsigned long long z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

json hstats_json(const HStats& h) {
  return {{"volume", h.volume},
          {"barycenter", point_json(h.barycenter)},
          {"ke_defect", point_json(h.ke_defect)},
          {"ke_criterion", h.ke_criterion()},
          {"error_estimate", h.error_estimate}};
}

json gstats_json(const GStats& g) {
  return {{"volume", g.volume},
          {"barycenter", point_json(g.barycenter)},
          {"barycenter_norm", g.barycenter_norm()},
          {"futaki", point_json(g.futaki)},
          {"A", g.A},
          {"B", g.B},
          {"touches_alpha", g.touches_alpha},
          {"error_estimate", g.error_estimate}};
}

json field_json(const FiberField& f) {
  json j{{"c", point_json(f.c)}, {"C_V", f.C_V}, {"k_min", f.k_min}, {"k_max", f.k_max}};
  if (f.c_exact) j["c_exact"] = rat_json(*f.c_exact);
  if (f.C_V_exact) j["C_V_exact"] = to_string(*f.C_V_exact);
  if (f.k_vertices_exact) j["k_vertices_exact"] = rat_json(*f.k_vertices_exact);
  return j;
}

json pl_json(const PLConvex& phi) {
  json pieces = json::array();
  for (const auto& [a, b] : phi.pieces) pieces.push_back({{"a", point_json(a)}, {"b", b}});
  return {{"pieces", pieces}, {"R", phi.R}};
}

json verdict_json(const Verdict& v) {
  json j{{"kind", to_string(v.kind)}, {"barycenter_norm", v.barycenter_norm}, {"tolerance", v.tolerance}};
  if (v.destabilizer) {
    j["destabilizer"] = pl_json(*v.destabilizer);
    j["destabilizer_invariant"] = v.destabilizer_invariant;
  }
  return j;
}

json solve_json(const SolveReport& r) {
  json j{{"method", r.method},
         {"converged", r.converged},
         {"residual", r.residual},
         {"iterations", r.iterations},
         {"boundary_obstruction", r.boundary_obstruction},
         {"margin_alpha", r.margin_alpha},
         {"margin_beta", r.margin_beta},
         {"diagnostics", r.diagnostics}};
  if (r.c) j["c"] = point_json(*r.c);
  if (r.last_iterate) j["last_iterate"] = point_json(*r.last_iterate);
  return j;
}

json path_json(const PathReport& p) {
  json j{{"tau", p.tau},
         {"parameter", to_string(p.parameter)},
         {"interval", {to_string(p.lower), to_string(p.upper)}},
         {"value_at_lower", p.value_at_lower},
         {"value_at_upper", p.value_at_upper},
         {"sign_certificate", p.value_at_lower > 0 && p.value_at_upper < 0},
         {"has_root", p.has_root},
         {"report", solve_json(p.report)}};
  if (p.root) {
    j["root"] = *p.root;
    j["value_at_root"] = p.value_at_root;
  }
  return j;
}

json tau0_json(const Tau0Report& t) {
  json scan = json::array();
  for (const auto& [name, found] : t.endpoint_scan) scan.push_back({{"endpoint", name}, {"root", found}});
  json j{{"found", t.found}, {"endpoint_scan", scan}, {"sign_changes", t.sign_changes}, {"diagnostics", t.diagnostics}};
  if (t.found) {
    j["tau0"] = t.tau0;
    j["value"] = t.value;
    j["b1"] = to_string(t.b1);
    j["field"] = field_json(t.field);
  }
  return j;
}

struct ResolvedField {
  FiberField field;
  json report;
  bool ok = true;
};

FiberField explicit_field(const KSMModel& model, const std::vector<std::string>& cs) {
  if (static_cast<int>(cs.size()) != model.dimension())
    fail("field.c", "expected " + std::to_string(model.dimension()) + " coefficients");
  RatPoint c;
  for (const auto& s : cs) c.push_back(parse_rational(s));
  if (const auto exact = exact_h_moments(model)) return normalize_field_exact(c, *exact, model.dual);
  return normalize_field(to_double(c), h_stats(model), model.dual);
}

FiberField field_from_c(const KSMModel& model, const Point& c) {
  return normalize_field(c, h_stats(model), model.dual);
}

ResolvedField resolve_field(const RunConfig& cfg, const KSMModel& model, const SigmaProfile& profile) {
  const auto& f = cfg.field;
  ResolvedField out;
  if (f.method == "explicit") {
    std::vector<std::string> cs = f.c;
    if (cs.empty()) cs.assign(model.dimension(), "0");
    out.field = explicit_field(model, cs);
    out.report = {{"method", "explicit"}};
  } else if (f.method == "soliton") {
    const auto r = solve_soliton(model);
    out.report = solve_json(r);
    out.ok = r.converged;
    out.field = field_from_c(model, r.c ? *r.c : Point(model.dimension(), 0.0));
  } else if (f.method == "path") {
    const auto p = solve_path_1d(model, f.tau, f.parameter);
    out.report = path_json(p);
    out.ok = p.has_root;
    // The double root converts to a Rational exactly.
    out.field = p.root ? path_field(model, f.parameter, Rational(*p.root)) : field_from_c(model, Point{0.0});
  } else if (f.method == "general") {
    Point c0 = f.c0.empty() ? Point(model.dimension(), 0.0) : f.c0;
    const auto r = solve_general(model, profile, c0, cfg.tolerance > 0 ? cfg.tolerance : 1e-10);
    out.report = solve_json(r);
    out.ok = r.converged;
    out.field = field_from_c(model, r.c ? *r.c : (r.last_iterate ? *r.last_iterate : c0));
  } else if (f.method == "tau0") {
    const auto t = find_tau0(model);
    out.report = tau0_json(t);
    out.ok = t.found;
    out.field = t.found ? t.field : field_from_c(model, Point(model.dimension(), 0.0));
  } else {
    fail("field.solve", "unknown method '" + f.method + "'");
  }
  return out;
}

int mesh_level(const RunConfig& cfg, int l) { return cfg.mesh_level > 0 ? cfg.mesh_level : default_mesh_level(l); }

PLConvex geodesic_phi(const RunConfig& cfg, int l) {
  PLConvex phi;
  if (!cfg.phi.empty()) {
    phi.pieces = cfg.phi;
    return phi;
  }
  for (int mask = 0; mask < (1 << l); ++mask) {
    Point a(l);
    for (int k = 0; k < l; ++k) a[k] = (mask >> k) & 1 ? -1.0 : 1.0;
    phi.pieces.push_back({a, 0.0});
  }
  return phi;
}

json solution_json(const MASolution& s) {
  return {{"ding_value", s.ding_value},
          {"ding_initial", s.ding_initial},
          {"residual", s.residual},
          {"residual_sup", s.residual_sup},
          {"coverage", s.coverage},
          {"shift", s.shift},
          {"normalized_mass", s.normalized_mass},
          {"pushforward_barycenter", point_json(s.pushforward_barycenter)},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"non_uniform", s.non_uniform},
          {"zero_set_dimension", s.zero_set_dimension},
          {"regularity_note", s.regularity_note},
          {"holder_exponent", s.holder_exponent},
          {"history", s.history}};
}

// Grid-convex samples for the coercivity probe: affine duals, PL maxima,
// quadratics and their affine translates.
std::vector<ConvexDualGrid> probe_samples(const DualMeshPtr& mesh, int count, unsigned long long seed) {
  SplitMix rng{seed};
  const int l = mesh->dimension;
  std::vector<ConvexDualGrid> out;
  // Affine duals r <+-e_k, z>: J vanishes on them, D moves by r <+-e_k, b_g>.
  const ConvexDualGrid zero{mesh, std::vector<double>(mesh->size(), 0.0), 0.0};
  for (double r : {1.0, 10.0, 100.0})
    for (int k = 0; k < l; ++k)
      for (double sign : {1.0, -1.0}) {
        Point a(l, 0.0);
        a[k] = sign * r;
        out.push_back(add_affine(zero, a, 0.0));
      }
  const std::size_t offset = out.size();
  for (int i = 0; i < count; ++i) {
    const int kind = i % 3;
    if (kind == 0) {
      std::vector<std::pair<Point, double>> pieces;
      const int m = 1 + static_cast<int>(rng.next() % 4);
      for (int r = 0; r < m; ++r) {
        Point a(l);
        for (double& x : a) x = rng.uniform(-4, 4);
        pieces.push_back({a, rng.uniform(-1, 1)});
      }
      const double t = rng.uniform(0, 1);
      out.push_back(sample_dual(mesh, [&](std::span<const double> z) {
        double best = -1e300, q = 0;
        for (const auto& [a, b] : pieces) {
          double v = b;
          for (int k = 0; k < l; ++k) v += a[k] * z[k];
          best = std::max(best, v);
        }
        for (int k = 0; k < l; ++k) q += z[k] * z[k];
        return best + t * q;
      }));
    } else if (kind == 1) {
      const double t = rng.uniform(0.05, 8);
      Point c(l);
      for (double& x : c) x = rng.uniform(-0.5, 0.5);
      out.push_back(sample_dual(mesh, [&](std::span<const double> z) {
        double q = 0;
        for (int k = 0; k < l; ++k) q += (z[k] - c[k]) * (z[k] - c[k]);
        return t * q;
      }));
    } else {
      Point a(l);
      for (double& x : a) x = rng.uniform(-3, 3);
      out.push_back(add_affine(out[offset + i - 2], a, rng.uniform(-1, 1)));
    }
  }
  return out;
}

// Least squares fit of D(T) = s T - a log T + b over T >= 10.
double asymptotic_slope(const std::vector<double>& T, const std::vector<double>& D) {
  std::vector<std::array<double, 3>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < T.size(); ++i)
    if (T[i] >= 10) {
      rows.push_back({T[i], -std::log(T[i]), 1.0});
      rhs.push_back(D[i]);
    }
  if (rows.size() < 3) return std::nan("");
  Eigen::MatrixXd A(rows.size(), 3);
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < 3; ++k) A(i, k) = rows[i][k];
    y[i] = rhs[i];
  }
  return A.colPivHouseholderQr().solve(y)[0];
}

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::validate: return "validate";
    case Task::stability: return "stability";
    case Task::solve_field: return "solve-field";
    case Task::solve_metric: return "solve-metric";
    case Task::geodesic: return "geodesic";
    case Task::probe: return "probe";
    case Task::reproduce: return "reproduce";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  for (Task t : {Task::validate, Task::stability, Task::solve_field, Task::solve_metric, Task::geodesic,
                 Task::probe, Task::reproduce})
    if (to_string(t) == s) return t;
  fail("task", "unknown task '" + s + "'");
}

SigmaProfile SigmaSettings::build() const {
  if (kind == "constant") return SigmaProfile::constant(parameter);
  if (kind == "linear") return SigmaProfile::linear(parameter);
  if (kind == "mabuchi_log") return SigmaProfile::mabuchi_log(parameter);
  if (kind == "tau_mix") return SigmaProfile::tau_mix(parameter);
  if (kind == "custom") return SigmaProfile::custom(samples);
  fail("sigma.kind", "unknown profile '" + kind + "'");
}

KSMData parse_ksm_data(const json& j) {
  if (!j.is_object()) fail("ksm", "expected an object");
  KSMData d;
  d.label = get<std::string>(j, "label", "ksm.", "");
  d.n = get<int>(j, "n", "ksm.", 0);
  d.l = get<int>(j, "l", "ksm.", 1);
  if (!j.contains("polytope")) fail("ksm.polytope", "missing");
  std::vector<IntPoint> pts;
  try {
    pts = j.at("polytope").get<std::vector<IntPoint>>();
  } catch (const json::exception& e) {
    fail("ksm.polytope", e.what());
  }
  d.polytope = make_fano(pts);
  if (j.contains("mu")) {
    const auto& mu = j.at("mu");
    if (!mu.is_array()) fail("ksm.mu", "expected an array of vectors");
    for (std::size_t a = 0; a < mu.size(); ++a) {
      const std::string path = "ksm.mu[" + std::to_string(a) + "]";
      if (!mu[a].is_array()) fail(path, "expected a vector");
      RatPoint v;
      for (std::size_t k = 0; k < mu[a].size(); ++k)
        v.push_back(rational_from(mu[a][k], path + "[" + std::to_string(k) + "]"));
      d.mu.push_back(std::move(v));
    }
  }
  return d;
}

json to_json(const KSMData& d) {
  json mu = json::array();
  for (const auto& v : d.mu) mu.push_back(rat_json(v));
  return {{"label", d.label}, {"n", d.n}, {"l", d.l}, {"mu", mu}, {"polytope", d.polytope.vertices}};
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  c.task = task_from_string(get<std::string>(j, "task", "", "stability"));
  if (j.contains("ksm")) {
    const auto& k = j.at("ksm");
    if (k.is_string()) c.dataset = k.get<std::string>();
    else if (k.is_object() && k.contains("dataset")) c.dataset = get<std::string>(k, "dataset", "ksm.", "");
    else if (k.is_object() && k.contains("file")) c.ksm_file = get<std::string>(k, "file", "ksm.", "");
    else if (k.is_object()) c.ksm_inline = k;
    else fail("ksm", "expected a dataset name or an object");
  }
  if (j.contains("sigma")) {
    const auto& s = j.at("sigma");
    if (s.is_string()) {
      c.sigma.kind = s.get<std::string>();
    } else if (s.is_object()) {
      c.sigma.kind = get<std::string>(s, "kind", "sigma.", "constant");
      for (const char* key : {"value", "shift", "tau", "parameter"})
        if (s.contains(key)) c.sigma.parameter = get<double>(s, key, "sigma.", 0.0);
      if (c.sigma.kind == "mabuchi_log" && !s.contains("shift") && !s.contains("parameter")) c.sigma.parameter = 1;
      c.sigma.samples = get<std::vector<std::pair<double, double>>>(s, "samples", "sigma.", {});
    } else {
      fail("sigma", "expected a profile name or an object");
    }
    (void)c.sigma.build();  // early diagnostics for bad parameters
  }
  if (j.contains("field")) {
    const auto& f = j.at("field");
    if (!f.is_object()) fail("field", "expected an object");
    if (f.contains("c")) {
      c.field.method = "explicit";
      const auto& cv = f.at("c");
      if (!cv.is_array()) fail("field.c", "expected an array");
      for (std::size_t k = 0; k < cv.size(); ++k)
        c.field.c.push_back(to_string(rational_from(cv[k], "field.c[" + std::to_string(k) + "]")));
    } else {
      c.field.method = get<std::string>(f, "solve", "field.", "explicit");
    }
    c.field.tau = get<double>(f, "tau", "field.", 0.0);
    const auto param = get<std::string>(f, "parameter", "field.", "constant");
    if (param == "slope" || param == "b1") c.field.parameter = PathParameter::slope;
    else if (param == "constant" || param == "b2") c.field.parameter = PathParameter::constant;
    else fail("field.parameter", "expected 'b1' (slope) or 'b2' (constant)");
    c.field.c0 = get<Point>(f, "c0", "field.", {});
  }
  c.tolerance = get<double>(j, "tolerance", "", 0.0);
  if (c.tolerance < 0) fail("tolerance", "must be nonnegative");
  c.mesh_level = get<int>(j, "mesh_level", "", 0);
  if (j.contains("output")) {
    const auto& o = j.at("output");
    c.out_dir = get<std::string>(o, "dir", "output.", "");
    c.plots = get<bool>(o, "plots", "output.", false);
  }
  if (j.contains("geodesic")) {
    const auto& g = j.at("geodesic");
    if (g.contains("phi")) {
      for (std::size_t r = 0; r < g.at("phi").size(); ++r) {
        const auto& piece = g.at("phi")[r];
        const std::string path = "geodesic.phi[" + std::to_string(r) + "].";
        c.phi.push_back({get<Point>(piece, "a", path, {}), get<double>(piece, "b", path, 0.0)});
      }
    }
    c.times = get<std::vector<double>>(g, "times", "geodesic.", c.times);
    for (double t : c.times)
      if (t < 0) fail("geodesic.times", "times must be nonnegative");
  }
  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    c.samples = get<int>(p, "samples", "probe.", c.samples);
    c.seed = get<unsigned long long>(p, "seed", "probe.", c.seed);
  }
  c.example = get<std::string>(j, "example", "", "");
  if (c.task == Task::reproduce && c.example.empty()) fail("example", "reproduce needs Z1, Z2 or classical");
  if (c.ksm_file && !std::filesystem::exists(*c.ksm_file)) fail("ksm.file", "no such file '" + *c.ksm_file + "'");
  return c;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  if (c.dataset) j["ksm"] = *c.dataset;
  else if (c.ksm_file) j["ksm"] = {{"file", *c.ksm_file}};
  else if (c.ksm_inline) j["ksm"] = *c.ksm_inline;
  json s{{"kind", c.sigma.kind}, {"parameter", c.sigma.parameter}};
  if (!c.sigma.samples.empty()) s["samples"] = c.sigma.samples;
  j["sigma"] = s;
  json f;
  if (c.field.method == "explicit") f["c"] = c.field.c;
  else f["solve"] = c.field.method;
  f["tau"] = c.field.tau;
  f["parameter"] = to_string(c.field.parameter);
  if (!c.field.c0.empty()) f["c0"] = c.field.c0;
  j["field"] = f;
  j["tolerance"] = c.tolerance;
  j["mesh_level"] = c.mesh_level;
  j["output"] = {{"dir", c.out_dir}, {"plots", c.plots}};
  json phi = json::array();
  for (const auto& [a, b] : c.phi) phi.push_back({{"a", a}, {"b", b}});
  j["geodesic"] = {{"phi", phi}, {"times", c.times}};
  j["probe"] = {{"samples", c.samples}, {"seed", c.seed}};
  j["example"] = c.example;
  return j;
}

json ksm_source(const RunConfig& c) {
  if (c.ksm_inline) return *c.ksm_inline;
  if (c.ksm_file) {
    std::ifstream in(*c.ksm_file);
    if (!in) fail("ksm.file", "cannot open '" + *c.ksm_file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      return json::parse(ss.str());
    } catch (const json::parse_error& e) {
      fail("ksm.file", e.what());
    }
  }
  return to_json(builtin_dataset(c.dataset.value_or("Z1")));
}

KSMData load_ksm(const RunConfig& c) {
  if (c.dataset) return builtin_dataset(*c.dataset);
  return parse_ksm_data(ksm_source(c));
}

json reproduce_classical(const KSMData& data) {
  const auto model = make_model(data);
  const auto h = h_stats(model);
  const auto sol = solve_soliton(model);
  json j{{"label", data.label}, {"h", hstats_json(h)}, {"ke_criterion", h.ke_criterion()}, {"soliton", solve_json(sol)}};
  if (const auto exact = exact_h_moments(model)) {
    j["exact_volume"] = to_string(exact->volume);
    j["exact_ke_defect"] = rat_json(exact->moments);
  }
  return j;
}

RunOutput run(const RunConfig& cfg) {
  RunOutput out;
  json& rep = out.report;
  rep["schema"] = kReportSchema;
  rep["task"] = to_string(cfg.task);
  rep["echo"] = to_json(cfg);
  json warnings = json::array();
  json results;

  if (cfg.task == Task::validate) {
    const json raw = ksm_source(cfg);
    std::vector<IntPoint> pts;
    try {
      pts = raw.at("polytope").get<std::vector<IntPoint>>();
    } catch (const json::exception& e) {
      fail("ksm.polytope", e.what());
    }
    const auto fano = validate_fano(pts);
    json viol = json::array();
    for (const auto& v : fano.violations)
      viol.push_back({{"condition", to_string(v.condition)}, {"indices", v.indices}, {"detail", v.detail}});
    results["fano"] = {{"valid", fano.valid()}, {"violations", viol}};
    if (fano.valid()) {
      const auto data = parse_ksm_data(raw);
      const auto kv = validate_ksm(data);
      results["ksm"] = {{"valid", kv.valid()}, {"violations", kv.violations}};
      if (kv.margin) results["ksm"]["margin"] = to_string(*kv.margin);
      if (kv.valid()) {
        const auto model = make_model(data);
        results["dual"] = {{"vertices", model.dual.vertices.size()},
                           {"lattice_points", model.dual.lattice_points.size()},
                           {"volume", to_string(model.dual.volume)}};
      }
    }
    const auto profile = cfg.sigma.build();
    const auto adm = check_admissible(profile, 201);
    const auto growth = check_growth(profile);
    results["sigma"] = {{"description", profile.describe()},
                        {"admissible", adm.admissible()},
                        {"condition_i", adm.condition_i},
                        {"condition_ii", adm.condition_ii},
                        {"growth_applicable", growth.applicable},
                        {"growth_holds", growth.holds},
                        {"growth_a0", growth.a0},
                        {"growth_detail", growth.detail}};
  } else if (cfg.task == Task::reproduce) {
    if (cfg.example == "classical") {
      results = reproduce_classical(load_ksm(cfg));
    } else if (cfg.example == "Z1") {
      const auto model = make_model(builtin_dataset("Z1"));
      json rows = json::array();
      std::ostringstream csv;
      csv << "tau,b2,I\n";
      for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto p = solve_path_1d(model, tau, PathParameter::constant);
        rows.push_back(path_json(p));
        if (cfg.plots) {
          const double lo = to_double(p.lower), hi = to_double(p.upper);
          for (int i = 1; i < 100; ++i) {
            const double b = lo + (hi - lo) * i / 100;
            csv << tau << ',' << b << ',' << path_value(model, tau, PathParameter::constant, b) << '\n';
          }
        }
      }
      results = {{"example", "Z1"}, {"roots", rows}};
      if (cfg.plots) out.csv.push_back({"z1_path_values.csv", csv.str()});
    } else if (cfg.example == "Z2") {
      const auto model = make_model(builtin_dataset("Z2"));
      const auto t = find_tau0(model);
      results = {{"example", "Z2"}, {"tau0", tau0_json(t)}};
      if (t.found) {
        const auto profile = SigmaProfile::tau_mix(t.tau0);
        const auto g = g_stats(model, profile, t.field);
        results["verdict"] = verdict_json(stability_verdict(g, profile, t.field));
        results["g"] = gstats_json(g);
        if (t.field.k_vertices_exact) {
          json kv;
          for (std::size_t v = 0; v < model.dual.vertices.size(); ++v)
            kv[to_string(model.dual.vertices[v][0])] = to_string((*t.field.k_vertices_exact)[v]);
          results["k_at_vertices"] = kv;
        }
        warnings.push_back("non-uniform mode: weight vanishes on the face {k = alpha}");
      }
    } else {
      fail("example", "unknown example '" + cfg.example + "'");
    }
  } else {
    const auto data = load_ksm(cfg);
    const auto model = make_model(data);
    const auto profile = cfg.sigma.build();
    results["h"] = hstats_json(h_stats(model));
    if (cfg.task == Task::solve_field && cfg.field.method == "explicit")
      fail("field.solve", "solve-field needs a solve method");
    const auto rf = resolve_field(cfg, model, profile);
    results["field_solve"] = rf.report;
    if (!rf.ok) warnings.push_back("field solve did not converge");
    if (rf.report.value("boundary_obstruction", false)) warnings.push_back("boundary obstruction in field solve");
    results["field"] = field_json(rf.field);
    // The tau0 method fixes its own profile.
    const SigmaProfile prof =
        cfg.field.method == "tau0" && rf.ok ? SigmaProfile::tau_mix(rf.report.at("tau0").get<double>()) : profile;
    if (cfg.task == Task::solve_field) {
      rep["warnings"] = warnings;
      rep["results"] = results;
      return out;
    }
    if (!field_admissible(prof, rf.field, true)) {
      results["admissible"] = false;
      warnings.push_back("field leaves the sigma domain on P*");
      rep["warnings"] = warnings;
      rep["results"] = results;
      return out;
    }
    const auto g = g_stats(model, prof, rf.field);
    const auto verdict = stability_verdict(g, prof, rf.field, cfg.tolerance > 0 ? cfg.tolerance : 1e-8);
    results["g"] = gstats_json(g);
    results["verdict"] = verdict_json(verdict);
    if (verdict.kind == Stability::polystable_non_uniform)
      warnings.push_back("non-uniform mode: weight vanishes on the face {k = alpha}");
    if (cfg.task == Task::stability) {
      rep["warnings"] = warnings;
      rep["results"] = results;
      return out;
    }
    const auto mesh = make_dual_mesh(model.dual, mesh_level(cfg, model.dimension()));
    const auto ctx = make_ding_context(model, prof, rf.field, mesh);
    if (cfg.task == Task::solve_metric) {
      if (verdict.kind == Stability::unstable) {
        results["solution"] = {{"refused", true}, {"reason", "unstable configuration"}};
      } else {
        MAOptions opt;
        opt.tolerance = cfg.tolerance;
        const auto sol = minimize_ding(ctx, std::nullopt, opt);
        results["solution"] = solution_json(sol);
        if (!sol.converged) warnings.push_back("Monge-Ampere solve stopped before the residual target");
        if (model.dimension() == 1) results["solution"]["ode_residual"] = ode_residual_1d(sol.u, ctx);
        if (verdict.kind == Stability::polystable_non_uniform) {
          const auto sub = build_subsolution(ctx);
          results["subsolution"] = {{"C", sub.check.C},
                                    {"A", sub.check.A},
                                    {"a0", sub.check.a0},
                                    {"holds", sub.check.holds},
                                    {"strictly_convex", sub.check.strictly_convex},
                                    {"samples", sub.check.samples},
                                    {"window", sub.check.window},
                                    {"detail", sub.check.detail}};
        }
        if (cfg.plots) {
          out.csv.push_back({"primal.csv", primal_csv(sol.u, model.dimension() == 1 ? 10 : 6,
                                                      model.dimension() == 1 ? 401 : 61)});
          out.csv.push_back({"dual.csv", dual_csv(sol.u)});
        }
      }
    } else if (cfg.task == Task::geodesic) {
      const auto phi = geodesic_phi(cfg, model.dimension());
      ConvexDualGrid base = verdict.kind == Stability::unstable ? reference_dual_grid(model, mesh)
                                                               : minimize_ding(ctx).u;
      const double inv = ding_invariant(phi, model, prof, rf.field, g);
      const double d0 = ding_functional(base, ctx).value;
      json rows = json::array();
      std::vector<double> Ts, Ds;
      std::ostringstream csv;
      csv << std::setprecision(17) << "T,D,slope\n";
      for (double T : cfg.times) {
        const double D = ding_functional(geodesic_point(base, phi, T), ctx).value;
        const double slope = T > 0 ? (D - d0) / T : 0.0;
        rows.push_back({{"T", T}, {"D", D}, {"slope", slope}});
        csv << T << ',' << D << ',' << slope << '\n';
        Ts.push_back(T);
        Ds.push_back(D);
      }
      results["phi"] = pl_json(phi);
      results["ding_invariant"] = inv;
      results["ray"] = rows;
      const double fit = asymptotic_slope(Ts, Ds);
      if (std::isfinite(fit)) results["fitted_slope"] = fit;
      if (cfg.plots) out.csv.push_back({"geodesic.csv", csv.str()});
    } else if (cfg.task == Task::probe) {
      const auto samples = probe_samples(mesh, cfg.samples, cfg.seed);
      const auto probe = coercivity_probe(ctx, samples);
      json table = json::array();
      std::ostringstream csv;
      csv << std::setprecision(17) << "j_red,j_sigma,ding\n";
      for (const auto& s : probe.table) {
        table.push_back({{"j_red", s.j_red}, {"j_sigma", s.j_sigma}, {"ding", s.ding}});
        csv << s.j_red << ',' << s.j_sigma << ',' << s.ding << '\n';
      }
      auto est = [](const CoercivityEstimate& e) {
        return json{{"delta", e.delta}, {"C", e.C}, {"evidence", e.evidence}};
      };
      results["against_j_red"] = est(probe.against_j_red);
      results["against_j_sigma"] = est(probe.against_j_sigma);
      results["note"] = probe.note;
      results["table"] = table;
      if (cfg.plots) out.csv.push_back({"probe.csv", csv.str()});
    }
  }
  rep["warnings"] = warnings;
  rep["results"] = results;
  return out;
}

void write_outputs(const RunOutput& out, const std::string& out_dir, bool plots) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  std::ofstream(std::filesystem::path(out_dir) / "report.json") << out.report.dump(2) << '\n';
  if (!plots) return;
  for (const auto& [name, text] : out.csv) std::ofstream(std::filesystem::path(out_dir) / name) << text;
}

}  // namespace ksm
