#include "nsk/cli.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nsk/error.hpp"

namespace nsk {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return d;
}

long long to_integer(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return i;
}

int to_int(const std::string& key, const std::string& v) {
  const long long i = to_integer(key, v);
  if (i < INT32_MIN || i > INT32_MAX) throw ConfigError(key + ": integer out of range");
  return static_cast<int>(i);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number_field(T RunConfig::*member) {
  Field f;
  f.set = [member](RunConfig& c, const std::string& key, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      c.*member = to_double(key, v);
    } else if constexpr (std::is_same_v<T, int>) {
      c.*member = to_int(key, v);
    } else {
      const long long i = to_integer(key, v);
      if (i < 0) throw ConfigError(key + ": must be nonnegative");
      c.*member = static_cast<T>(i);
    }
  };
  f.get = [member](const RunConfig& c) {
    if constexpr (std::is_same_v<T, double>) {
      return fmt_double(c.*member);
    } else {
      return std::to_string(c.*member);
    }
  };
  return f;
}

Field string_field(std::string RunConfig::*member) {
  return {[member](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return c.*member; }};
}

Field bool_field(bool RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& key, const std::string& v) { c.*member = to_bool(key, v); },
          [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <class T>
Field list_field(std::vector<T> RunConfig::*member) {
  Field f;
  f.set = [member](RunConfig& c, const std::string& key, const std::string& v) {
    std::vector<T> out;
    if (!trim(v).empty()) {
      for (const std::string& item : split(v, ',')) {
        if constexpr (std::is_same_v<T, double>) {
          out.push_back(to_double(key, item));
        } else {
          out.push_back(to_int(key, item));
        }
      }
    }
    c.*member = std::move(out);
  };
  f.get = [member](const RunConfig& c) {
    std::string s;
    for (std::size_t i = 0; i < (c.*member).size(); ++i) {
      if (i) s += ", ";
      if constexpr (std::is_same_v<T, double>) {
        s += fmt_double((c.*member)[i]);
      } else {
        s += std::to_string((c.*member)[i]);
      }
    }
    return s;
  };
  return f;
}

// Section order matters for write_config.
const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>>& schema() {
  static const std::vector<std::pair<std::string, std::vector<std::pair<std::string, Field>>>> s = {
      {"run",
       {{"command", string_field(&RunConfig::command)},
        {"seed", number_field(&RunConfig::seed)},
        {"threads", number_field(&RunConfig::threads)}}},
      {"mesh",
       {{"n0", number_field(&RunConfig::n0)},
        {"levels", number_field(&RunConfig::levels)},
        {"first_level", number_field(&RunConfig::first_level)}}},
      {"params",
       {{"nu", number_field(&RunConfig::nu)},
        {"beta", number_field(&RunConfig::beta)},
        {"gamma_y", number_field(&RunConfig::gamma_y)},
        {"gamma_p", number_field(&RunConfig::gamma_p)}}},
      {"linear",
       {{"method", string_field(&RunConfig::method)},
        {"tol", number_field(&RunConfig::tol)},
        {"base", number_field(&RunConfig::base)},
        {"cycle", string_field(&RunConfig::cycle)},
        {"maxit", number_field(&RunConfig::maxit)},
        {"m", number_field(&RunConfig::m)}}},
      {"newton",
       {{"grad_tol", number_field(&RunConfig::grad_tol)}, {"max_iter", number_field(&RunConfig::max_iter)}}},
      {"bench",
       {{"nu", list_field(&RunConfig::bench_nu)},
        {"beta", list_field(&RunConfig::bench_beta)},
        {"gamma_p", list_field(&RunConfig::bench_gamma_p)},
        {"cg", bool_field(&RunConfig::bench_cg)},
        {"mgcg", bool_field(&RunConfig::bench_mgcg)}}},
      {"spectral",
       {{"levels", list_field(&RunConfig::spectral_levels)},
        {"frozen", string_field(&RunConfig::frozen)},
        {"lanczos_k", number_field(&RunConfig::lanczos_k)},
        {"power_maxit", number_field(&RunConfig::power_maxit)},
        {"power_tol", number_field(&RunConfig::power_tol)}}},
      {"mms", {{"n", list_field(&RunConfig::mms_n)}, {"nu", number_field(&RunConfig::mms_nu)}}},
      {"output",
       {{"csv", string_field(&RunConfig::csv)},
        {"json", string_field(&RunConfig::json)},
        {"vtk_dir", string_field(&RunConfig::vtk_dir)}}},
  };
  return s;
}

const Field& lookup(const std::string& section, const std::string& key) {
  for (const auto& [name, fields] : schema()) {
    if (name != section) continue;
    for (const auto& [k, f] : fields) {
      if (k == key) return f;
    }
    throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
  throw ConfigError("unknown section [" + section + "]");
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool is_power_of_two_multiple(int base, int n0) {
  if (base < n0 || base % n0 != 0) return false;
  const int q = base / n0;
  return (q & (q - 1)) == 0;
}

}  // namespace

void validate(const RunConfig& c) {
  static const std::set<std::string> commands{"solve", "bench", "spectral", "mms", "export"};
  check(commands.count(c.command) == 1, "run.command: unknown command '" + c.command + "'");
  check(c.n0 >= 2, "mesh.n0: needs at least 2 cells per side");
  check(c.levels >= 1, "mesh.levels: must be at least 1");
  check(c.levels <= 12, "mesh.levels: at most 12 levels");
  check(c.first_level >= 0 && c.first_level < c.levels, "mesh.first_level: must lie in [0, levels)");
  check(c.nu > 0.0, "params.nu: must be positive");
  check(c.beta > 0.0, "params.beta: must be positive");
  check(c.gamma_y >= 0.0 && c.gamma_p >= 0.0, "params.gamma_y, params.gamma_p: must be nonnegative");
  check(c.gamma_y > 0.0 || c.gamma_p > 0.0, "params.gamma_y, params.gamma_p: not both zero");
  check(c.method == "cg" || c.method == "mgcg", "linear.method: expected cg or mgcg, got '" + c.method + "'");
  check(c.cycle == "two_grid" || c.cycle == "w_cycle",
        "linear.cycle: expected two_grid or w_cycle, got '" + c.cycle + "'");
  check(c.tol > 0.0 && c.tol < 1.0, "linear.tol: must lie in (0, 1)");
  check(c.maxit >= 1, "linear.maxit: must be at least 1");
  check(c.m >= 1, "linear.m: must be at least 1");
  const bool needs_base = c.method == "mgcg" || (c.command == "bench" && c.bench_mgcg);
  if (needs_base) {
    check(is_power_of_two_multiple(c.base, c.n0) && c.base / c.n0 < (1 << c.levels),
          "linear.base: " + std::to_string(c.base) + " is not a grid of the hierarchy");
  }
  check(c.grad_tol > 0.0, "newton.grad_tol: must be positive");
  check(c.max_iter >= 0, "newton.max_iter: must be nonnegative");
  for (double v : c.bench_nu) check(v > 0.0, "bench.nu: entries must be positive");
  for (double v : c.bench_beta) check(v > 0.0, "bench.beta: entries must be positive");
  for (double v : c.bench_gamma_p) check(v >= 0.0, "bench.gamma_p: entries must be nonnegative");
  if (c.gamma_y == 0.0 && c.command == "bench") {
    for (double v : c.bench_gamma_p) check(v > 0.0, "bench.gamma_p: with gamma_y = 0 entries must be positive");
  }
  // Study levels depend on the mesh section, so only a spectral run checks them.
  if (c.command == "spectral") {
    for (int l : c.spectral_levels) {
      check(l >= 1 && l < c.levels, "spectral.levels: entries must lie in [1, levels)");
    }
  }
  check(c.frozen == "target" || c.frozen == "minimizer",
        "spectral.frozen: expected target or minimizer, got '" + c.frozen + "'");
  check(c.lanczos_k >= 1 && c.lanczos_k <= 40, "spectral.lanczos_k: must lie in [1, 40]");
  check(c.power_maxit >= 1, "spectral.power_maxit: must be at least 1");
  check(c.power_tol > 0.0, "spectral.power_tol: must be positive");
  for (int n : c.mms_n) check(n >= 2, "mms.n: entries must be at least 2");
  check(c.mms_nu > 0.0, "mms.nu: must be positive");
  check(c.threads >= 0, "run.threads: must be nonnegative");
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of(";#");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& s : schema()) known = known || s.first == section;
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    if (!seen.insert(full).second) throw ConfigError(where + "duplicate key " + full);
    try {
      lookup(section, key).set(c, full, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  validate(c);
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  lookup(section, key).set(config, section + "." + key, trim(assignment.substr(eq + 1)));
}

std::string write_config(const RunConfig& config) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, fields] : schema()) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, f] : fields) out << key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

ProblemParams problem_params(const RunConfig& c) { return {c.nu, c.beta, c.gamma_y, c.gamma_p}; }

LinearConfig linear_config(const RunConfig& c) {
  LinearConfig l;
  l.method = parse_method(c.method);
  l.tol = c.tol;
  l.base_n = c.base;
  l.cycle = parse_cycle(c.cycle);
  l.maxit = c.maxit;
  l.inner_steps = c.m;
  l.threads = c.threads;
  return l;
}

OuterOptions outer_options(const RunConfig& c) {
  OuterOptions o;
  o.grad_tol = c.grad_tol;
  o.max_newton = c.max_iter;
  return o;
}

BenchConfig bench_config(const RunConfig& c) {
  BenchConfig b;
  b.n0 = c.n0;
  b.levels = c.levels;
  b.first_level = c.first_level;
  b.nus = c.bench_nu;
  b.betas = c.bench_beta;
  b.gamma_ps = c.bench_gamma_p;
  b.gamma_y = c.gamma_y;
  b.linear = linear_config(c);
  b.outer = outer_options(c);
  b.run_cg = c.bench_cg;
  b.run_mgcg = c.bench_mgcg;
  return b;
}

OrderStudyConfig order_config(const RunConfig& c) {
  OrderStudyConfig o;
  o.n0 = c.n0;
  o.levels = c.levels;
  o.study_levels = c.spectral_levels;
  o.params = problem_params(c);
  o.frozen = c.frozen == "minimizer" ? FrozenControl::minimizer : FrozenControl::target;
  o.power_maxit = c.power_maxit;
  o.power_tol = c.power_tol;
  o.lanczos_k = c.lanczos_k;
  o.seed = c.seed;
  o.linear = linear_config(c);
  o.outer = outer_options(c);
  return o;
}

MmsConfig mms_config(const RunConfig& c) {
  MmsConfig m;
  m.ns = c.mms_n;
  m.nu = c.mms_nu;
  return m;
}

const char* const kRecordColumns =
    "nu,beta,gamma_y,gamma_p,method,base,level,newton_iter,lin_iters,grad_inf,lin_time_s,total_time_s,status";

std::vector<RecordRow> record_rows(const std::vector<BenchRecord>& records) {
  std::vector<RecordRow> rows;
  for (const BenchRecord& rec : records) {
    for (const auto* arm : {&rec.cg, &rec.mgcg}) {
      for (const NewtonReport& rep : *arm) {
        for (const NewtonStep& s : rep.steps) {
          RecordRow r;
          r.nu = rec.params.nu;
          r.beta = rec.params.beta;
          r.gamma_y = rec.params.gamma_y;
          r.gamma_p = rec.params.gamma_p;
          r.method = to_string(rep.method);
          r.base = rep.base_n;
          r.level = rep.level_n;
          r.newton_iter = s.iteration;
          r.lin_iters = s.lin_iters;
          r.grad_inf = s.grad_inf;
          r.lin_time_s = s.lin_time;
          r.total_time_s = s.total_time;
          r.status = s.status;
          rows.push_back(std::move(r));
        }
      }
    }
  }
  return rows;
}

std::string records_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << kRecordColumns << '\n';
  for (const RecordRow& r : record_rows(records)) {
    out << fmt_double(r.nu) << ',' << fmt_double(r.beta) << ',' << fmt_double(r.gamma_y) << ','
        << fmt_double(r.gamma_p) << ',' << r.method << ',' << r.base << ',' << r.level << ',' << r.newton_iter << ','
        << r.lin_iters << ',' << fmt_double(r.grad_inf) << ',' << fmt_double(r.lin_time_s) << ','
        << fmt_double(r.total_time_s) << ',' << r.status << '\n';
  }
  return out.str();
}

std::vector<RecordRow> parse_records_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kRecordColumns) throw Error("CSV header does not match");
  std::vector<RecordRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 13) throw Error("CSV row has " + std::to_string(f.size()) + " fields");
    RecordRow r;
    r.nu = to_double("nu", f[0]);
    r.beta = to_double("beta", f[1]);
    r.gamma_y = to_double("gamma_y", f[2]);
    r.gamma_p = to_double("gamma_p", f[3]);
    r.method = f[4];
    r.base = to_int("base", f[5]);
    r.level = to_int("level", f[6]);
    r.newton_iter = to_int("newton_iter", f[7]);
    r.lin_iters = to_int("lin_iters", f[8]);
    r.grad_inf = to_double("grad_inf", f[9]);
    r.lin_time_s = to_double("lin_time_s", f[10]);
    r.total_time_s = to_double("total_time_s", f[11]);
    r.status = f[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json report_json(const NewtonReport& rep) {
  nlohmann::json steps = nlohmann::json::array();
  for (const NewtonStep& s : rep.steps) {
    steps.push_back({{"iteration", s.iteration},
                     {"grad_inf", number(s.grad_inf)},
                     {"lin_iters", s.lin_iters},
                     {"lin_time_s", number(s.lin_time)},
                     {"setup_time_s", number(s.setup_time)},
                     {"total_time_s", number(s.total_time)},
                     {"status", s.status}});
  }
  return {{"level", rep.level_n},
          {"method", to_string(rep.method)},
          {"base", rep.base_n},
          {"newton_iters", rep.newton_iters},
          {"lin_time_s", number(rep.lin_time)},
          {"total_time_s", number(rep.total_time)},
          {"final_grad_inf", number(rep.final_grad_inf)},
          {"converged", rep.converged},
          {"nc", rep.nc},
          {"message", rep.message},
          {"steps", steps}};
}

}  // namespace

std::string records_json(const std::vector<BenchRecord>& records) {
  nlohmann::json doc = nlohmann::json::array();
  for (const BenchRecord& rec : records) {
    nlohmann::json cg = nlohmann::json::array();
    nlohmann::json mg = nlohmann::json::array();
    for (const NewtonReport& r : rec.cg) cg.push_back(report_json(r));
    for (const NewtonReport& r : rec.mgcg) mg.push_back(report_json(r));
    doc.push_back({{"nu", number(rec.params.nu)},
                   {"beta", number(rec.params.beta)},
                   {"gamma_y", number(rec.params.gamma_y)},
                   {"gamma_p", number(rec.params.gamma_p)},
                   {"tol", number(rec.linear.tol)},
                   {"base", rec.linear.base_n},
                   {"cycle", to_string(rec.linear.cycle)},
                   {"efficiency", number(rec.efficiency)},
                   {"error", rec.error},
                   {"cg", cg},
                   {"mgcg", mg}});
  }
  // nlohmann prints doubles with max_digits10 (17) significant digits.
  return doc.dump(2) + "\n";
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

void emit_records(const std::vector<BenchRecord>& records, RecordFormat format, const std::string& path) {
  write_file(path, format == RecordFormat::csv ? records_csv(records) : records_json(records));
}

std::string fields_vtk(const Level& level, const StateSolution& state, const ControlField& control) {
  const int side = level.q2_side();
  const int count = level.q2_count();
  if (state.y.coeffs.size() != level.velocity_size() || control.coeffs.size() != level.velocity_size() ||
      state.p.coeffs.size() != level.q1_count()) {
    throw LevelMismatch("export: fields are not on level n=" + std::to_string(level.n()));
  }
  std::ostringstream out;
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n";
  out << "velocity, pressure and control on a " << level.n() << "x" << level.n() << " Q2 grid\n";
  out << "ASCII\nDATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << side << ' ' << side << " 1\n";
  out << "POINTS " << count << " double\n";
  for (int i = 0; i < count; ++i) {
    const auto x = level.q2_node(i);
    out << x[0] << ' ' << x[1] << " 0\n";
  }
  out << "POINT_DATA " << count << '\n';
  out << "VECTORS velocity double\n";
  for (int i = 0; i < count; ++i) out << state.y.coeffs[i] << ' ' << state.y.coeffs[count + i] << " 0\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (int i = 0; i < count; ++i) {
    const auto x = level.q2_node(i);
    out << evaluate_q1(level, state.p.coeffs, x[0], x[1]) << '\n';
  }
  out << "VECTORS control double\n";
  for (int i = 0; i < count; ++i) out << control.coeffs[i] << ' ' << control.coeffs[count + i] << " 0\n";
  return out.str();
}

void export_fields(const Level& level, const StateSolution& state, const ControlField& control,
                   const std::string& path) {
  write_file(path, fields_vtk(level, state, control));
}

namespace {

void print_reports(std::ostream& out, const std::vector<NewtonReport>& reports) {
  for (const NewtonReport& r : reports) {
    out << "  " << to_string(r.method);
    if (r.method == LinearMethod::mgcg) out << "(base " << r.base_n << ")";
    out << " n=" << r.level_n << ": newton=" << r.newton_iters << " lin_iters=";
    bool first = true;
    for (const NewtonStep& s : r.steps) {
      if (s.status == "converged" || s.status == "maxit") continue;
      out << (first ? "" : ",") << s.lin_iters;
      first = false;
    }
    out << " |grad|=" << r.final_grad_inf << " t_lin=" << r.lin_time << "s t_total=" << r.total_time << "s";
    if (r.nc) out << " nc";
    else if (!r.converged) out << " not converged";
    if (!r.message.empty()) out << " (" << r.message << ")";
    out << '\n';
  }
}

void write_outputs(const RunConfig& c, const std::vector<BenchRecord>& records) {
  if (!c.csv.empty()) emit_records(records, RecordFormat::csv, c.csv);
  if (!c.json.empty()) emit_records(records, RecordFormat::json, c.json);
}

std::vector<TargetData> all_targets(const Multilevel& ml, const ProblemParams& params) {
  std::vector<TargetData> targets;
  for (int l = 0; l < ml.size(); ++l) {
    targets.push_back(generate_target_data(ml, l, params, target_control_field(ml.level(l))));
  }
  return targets;
}

int run_solve(const RunConfig& c, std::ostream& out, ContinuationResult* result = nullptr) {
  const Multilevel ml(c.n0, c.levels);
  const ProblemParams params = problem_params(c);
  BenchRecord rec;
  rec.params = params;
  rec.linear = linear_config(c);
  rec.efficiency = std::nan("");
  const std::vector<TargetData> targets = all_targets(ml, params);
  ContinuationResult res =
      continuation_solve(ml, params, targets, rec.linear, c.first_level, c.levels - 1, outer_options(c));
  (rec.linear.method == LinearMethod::cg ? rec.cg : rec.mgcg) = res.reports;
  out << "solve nu=" << params.nu << " beta=" << params.beta << " gamma_y=" << params.gamma_y
      << " gamma_p=" << params.gamma_p << " method=" << c.method << '\n';
  print_reports(out, res.reports);
  write_outputs(c, {rec});
  const NewtonReport& last = res.reports.back();
  const bool ok = last.converged && last.level_n == ml.level(c.levels - 1).n();
  if (result) *result = std::move(res);
  if (!ok) {
    out << (last.nc ? "status: nc (preconditioner not positive definite)\n" : "status: not converged\n");
    return kExitDiverged;
  }
  out << "status: converged\n";
  return kExitOk;
}

int run_bench(const RunConfig& c, std::ostream& out) {
  const std::vector<BenchRecord> records = run_benchmark(bench_config(c));
  for (const BenchRecord& r : records) {
    out << "nu=" << r.params.nu << " beta=" << r.params.beta << " gamma_p=" << r.params.gamma_p << '\n';
    if (!r.error.empty()) out << "  error: " << r.error << '\n';
    print_reports(out, r.cg);
    print_reports(out, r.mgcg);
    out << "  eff=t_cg/t_mg: " << (std::isfinite(r.efficiency) ? fmt_double(r.efficiency) : "--") << '\n';
  }
  write_outputs(c, records);
  for (const BenchRecord& r : records) {
    if (!r.error.empty()) return kExitDiverged;
    for (const auto* arm : {&r.cg, &r.mgcg}) {
      for (const NewtonReport& rep : *arm) {
        if (rep.nc) return kExitDiverged;
      }
    }
  }
  return kExitOk;
}

int run_spectral(const RunConfig& c, std::ostream& out) {
  const std::vector<OrderRow> rows = run_order_study(order_config(c));
  std::ostringstream csv;
  csv << "n,difference_norm,spectral_distance,difference_ratio,distance_ratio,not_positive_definite\n";
  out << "   n   |H-T|            ratio      d(H,T)           ratio\n";
  for (const OrderRow& r : rows) {
    csv << r.n << ',' << fmt_double(r.difference_norm) << ',' << fmt_double(r.spectral_distance) << ','
        << fmt_double(r.difference_ratio) << ',' << fmt_double(r.distance_ratio) << ','
        << (r.not_positive_definite ? 1 : 0) << '\n';
    out << std::setw(4) << r.n << "   " << std::setw(15) << r.difference_norm << "  " << std::setw(9)
        << r.difference_ratio << "  " << std::setw(15) << r.spectral_distance << "  " << std::setw(9)
        << r.distance_ratio << (r.not_positive_definite ? "  nc" : "") << '\n';
  }
  if (!c.csv.empty()) write_file(c.csv, csv.str());
  bool nc = false;
  for (const OrderRow& r : rows) nc = nc || r.not_positive_definite;
  return nc ? kExitDiverged : kExitOk;
}

int run_mms_command(const RunConfig& c, std::ostream& out) {
  const std::vector<MmsRow> rows = run_mms(mms_config(c));
  std::ostringstream csv;
  csv << "n,velocity_l2,velocity_h1,pressure_l2,velocity_l2_order,velocity_h1_order,pressure_l2_order\n";
  out << "   n   |u-u_h|_L2       order  |u-u_h|_H1       order  |p-p_h|_L2       order\n";
  for (const MmsRow& r : rows) {
    csv << r.n << ',' << fmt_double(r.velocity_l2) << ',' << fmt_double(r.velocity_h1) << ','
        << fmt_double(r.pressure_l2) << ',' << fmt_double(r.velocity_l2_order) << ','
        << fmt_double(r.velocity_h1_order) << ',' << fmt_double(r.pressure_l2_order) << '\n';
    out << std::setw(4) << r.n << "   " << std::setw(15) << r.velocity_l2 << "  " << std::setw(5)
        << std::setprecision(3) << r.velocity_l2_order << std::setprecision(6) << "  " << std::setw(15)
        << r.velocity_h1 << "  " << std::setw(5) << std::setprecision(3) << r.velocity_h1_order
        << std::setprecision(6) << "  " << std::setw(15) << r.pressure_l2 << "  " << std::setw(5)
        << std::setprecision(3) << r.pressure_l2_order << std::setprecision(6) << '\n';
  }
  if (!c.csv.empty()) write_file(c.csv, csv.str());
  return kExitOk;
}

int run_export(const RunConfig& c, std::ostream& out) {
  if (c.vtk_dir.empty()) throw ConfigError("export: output.vtk_dir (or --out) is required");
  const Multilevel ml(c.n0, c.levels);
  const int top = c.levels - 1;
  const Level& lv = ml.level(top);
  const ProblemParams params = problem_params(c);
  const ControlField ut = target_control_field(lv);
  const StateSolution st = solve_navier_stokes(ml, top, params, ut);
  const std::string dir = c.vtk_dir;
  const std::string target_path = dir + "/target_n" + std::to_string(lv.n()) + ".vtk";
  export_fields(lv, st, ut, target_path);
  out << "wrote " << target_path << '\n';

  ContinuationResult res;
  const int code = run_solve(c, out, &res);
  if (res.u.n == lv.n()) {
    const StateSolution s = solve_navier_stokes(ml, top, params, res.u);
    const std::string path = dir + "/solution_n" + std::to_string(lv.n()) + ".vtk";
    export_fields(lv, s, res.u, path);
    out << "wrote " << path << '\n';
  }
  return code;
}

}  // namespace

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    if (config.command == "solve") return run_solve(config, out);
    if (config.command == "bench") return run_bench(config, out);
    if (config.command == "spectral") return run_spectral(config, out);
    if (config.command == "mms") return run_mms_command(config, out);
    return run_export(config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitDiverged;
  }
}

}  // namespace nsk
