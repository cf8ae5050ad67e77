// Command-line front end: cell, icdd, dns, validate and sweep runs driven by an INI-style config.
#include <CLI11.hpp>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "icdd/dns.hpp"
#include "icdd/homogenization.hpp"
#include "icdd/icdd.hpp"
#include "icdd/io.hpp"
#include "icdd/validation.hpp"

namespace fs = std::filesystem;
using namespace icdd;

namespace {

const std::map<std::string, std::set<std::string>> known_keys = {
    {"run", {"preset", "configuration", "obstacle_side", "cell_size", "cell_sizes", "delta", "delta_factors"}},
    {"fem", {"order", "stabilization"}},
    {"mesh", {"dns_cells_per_length", "icdd_cells_per_length", "cell_resolution"}},
    {"krylov", {"tolerance", "max_iterations"}},
};

/// Accepts decimals and fractions such as 1/20.
double parse_number(const std::string& key, std::string text) {
  text.erase(std::remove_if(text.begin(), text.end(), ::isspace), text.end());
  try {
    std::size_t pos = 0;
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
      const double a = std::stod(text.substr(0, slash), &pos);
      if (pos != slash) throw std::invalid_argument(text);
      const std::string rest = text.substr(slash + 1);
      const double b = std::stod(rest, &pos);
      if (pos != rest.size() || b == 0.0) throw std::invalid_argument(text);
      return a / b;
    }
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::logic_error&) {
    throw InputError("'" + key + "' expects a number, got '" + text + "'");
  }
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, item));
  if (out.empty()) throw InputError("'" + key + "' expects a comma-separated list");
  return out;
}

int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != static_cast<int>(v)) throw InputError("'" + key + "' expects an integer, got '" + text + "'");
  return static_cast<int>(v);
}

struct RunConfig {
  std::string command;
  int preset = 1;
  std::optional<std::string> configuration;
  std::optional<double> obstacle_side;
  double cell_size = 0.05;
  std::vector<double> cell_sizes = {0.1, 0.05, 0.025};
  std::optional<double> delta;
  std::vector<double> delta_factors = {0.5, 1.0, 1.5};
  FemConfig fem;
  int dns_cells_per_length = 10;
  int icdd_cells_per_length = 10;
  int cell_resolution = 0;
  KrylovConfig krylov;
  std::string text;  ///< raw config bytes, hashed into the manifest

  ObstacleSpec obstacle() const {
    if (configuration) return reference_configuration(*configuration).obstacle;
    return {ObstacleShape::square, obstacle_side.value_or(0.8)};
  }

  ValidationConfig validation() const {
    ValidationConfig v;
    v.dns.n_per_cell = dns_cells_per_length;
    v.dns.fem = fem;
    v.icdd_cells_per_length = icdd_cells_per_length;
    v.fem = fem;
    v.krylov = krylov;
    v.cell_resolution = cell_resolution;
    return v;
  }
};

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  c.text = buf.str();
  boost::property_tree::ptree tree;
  try {
    std::istringstream is(c.text);
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InputError("malformed config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::vector<std::string> unknown;
  for (const auto& [section, body] : tree) {
    const auto it = known_keys.find(section);
    if (body.empty()) {
      unknown.push_back(section);
      continue;
    }
    for (const auto& [key, value] : body) {
      if (it == known_keys.end() || !it->second.count(key)) unknown.push_back(section + "." + key);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw InputError("unknown config keys: " + list);
  }
  const auto get = [&tree](const std::string& k) { return tree.get_optional<std::string>(k); };
  if (auto v = get("run.preset")) c.preset = parse_int("run.preset", *v);
  if (auto v = get("run.configuration")) c.configuration = *v;
  if (auto v = get("run.obstacle_side")) c.obstacle_side = parse_number("run.obstacle_side", *v);
  if (auto v = get("run.cell_size")) c.cell_size = parse_number("run.cell_size", *v);
  if (auto v = get("run.cell_sizes")) c.cell_sizes = parse_list("run.cell_sizes", *v);
  if (auto v = get("run.delta")) c.delta = parse_number("run.delta", *v);
  if (auto v = get("run.delta_factors")) c.delta_factors = parse_list("run.delta_factors", *v);
  if (auto v = get("fem.order")) c.fem.order = c.fem.pressure_order = parse_int("fem.order", *v);
  if (auto v = get("fem.stabilization")) c.fem.stabilization = parse_number("fem.stabilization", *v);
  if (auto v = get("mesh.dns_cells_per_length")) c.dns_cells_per_length = parse_int("mesh.dns_cells_per_length", *v);
  if (auto v = get("mesh.icdd_cells_per_length")) {
    c.icdd_cells_per_length = parse_int("mesh.icdd_cells_per_length", *v);
  }
  if (auto v = get("mesh.cell_resolution")) c.cell_resolution = parse_int("mesh.cell_resolution", *v);
  if (auto v = get("krylov.tolerance")) c.krylov.tolerance = parse_number("krylov.tolerance", *v);
  if (auto v = get("krylov.max_iterations")) c.krylov.max_iterations = parse_int("krylov.max_iterations", *v);

  if (c.configuration && c.obstacle_side) {
    throw InputError("give either run.configuration or run.obstacle_side, not both");
  }
  if (c.configuration) reference_configuration(*c.configuration);
  c.obstacle().validate();
  c.fem.validate();
  c.krylov.validate();
  if (c.dns_cells_per_length < 1 || c.icdd_cells_per_length < 1 || c.cell_resolution < 0) {
    throw InputError("mesh resolutions must be positive");
  }
  if (!(c.cell_size > 0.0)) throw InputError("run.cell_size must be positive");
  if (c.delta && !(*c.delta > 0.0)) throw InputError("run.delta must be positive");
  return c;
}

/// Files are collected in memory and written only after the whole run succeeded.
struct Artifacts {
  std::map<std::string, std::string> files;
  std::vector<std::pair<std::string, std::string>> manifest;

  void note(const std::string& k, const std::string& v) { manifest.emplace_back(k, v); }
  void note(const std::string& k, double v) { note(k, format_number(v)); }
  void note(const std::string& k, int v) { note(k, std::to_string(v)); }
};

void require_square(const ObstacleSpec& o, const std::string& command) {
  if (o.shape != ObstacleShape::square) {
    throw InputError("'" + command + "' needs square obstacles; circle configurations are usable with 'icdd' and 'cell' only");
  }
}

double cell_k_hat(const RunConfig& c, Artifacts& a) {
  if (c.configuration) {
    a.note("k_hat_source", "published");
    return reference_configuration(*c.configuration).k_hat;
  }
  CellProblemConfig cc;
  cc.fem = c.fem;
  if (c.cell_resolution > 0) cc.n_per_cell = c.cell_resolution;
  a.note("k_hat_source", "cell problem");
  return solve_cell_problem(c.obstacle(), cc).k_hat(0, 0);
}

void run_cell(const RunConfig& c, Artifacts& a) {
  const ObstacleSpec o = c.obstacle();
  CsvTable t({"shape", "size", "porosity", "k11", "k12", "k21", "k22", "delta_hat", "source"});
  Eigen::Matrix2d k = Eigen::Matrix2d::Zero();
  std::string source = "published";
  if (o.shape == ObstacleShape::square) {
    CellProblemConfig cc;
    cc.fem = c.fem;
    if (c.cell_resolution > 0) cc.n_per_cell = c.cell_resolution;
    k = solve_cell_problem(o, cc).k_hat;
    source = "cell problem";
  } else {
    k(0, 0) = k(1, 1) = reference_configuration(*c.configuration).k_hat;
  }
  t.row({to_string(o.shape), format_number(o.size), format_number(o.porosity()), format_number(k(0, 0)),
         format_number(k(0, 1)), format_number(k(1, 0)), format_number(k(1, 1)),
         format_number(delta_star_hat(o.porosity())), source});
  a.files["cell.csv"] = t.str();
  a.note("porosity", o.porosity());
  a.note("k_hat", k(0, 0));
}

void run_icdd_command(const RunConfig& c, Artifacts& a) {
  const auto preset = make_preset(c.preset);
  const ObstacleSpec o = c.obstacle();
  const double ell = c.cell_size;
  const double k = permeability_dimensional(cell_k_hat(c, a), ell);
  const double delta = c.delta.value_or(delta_star(o.porosity(), ell));
  const IcddProblem problem(build_icdd_grid(preset.domain, ell / c.icdd_cells_per_length, delta), delta,
                            icdd_physics(preset, k), c.fem);
  const auto s = icdd_solve(problem, c.krylov);
  a.files["stokes.csv"] = field_csv(s.composite.stokes);
  a.files["darcy.csv"] = field_csv(s.composite.darcy);
  a.files["stokes.vtk"] = field_vtk(s.composite.stokes, "stokes subdomain");
  a.files["darcy.vtk"] = field_vtk(s.composite.darcy, "darcy subdomain");
  CsvTable log({"iteration", "relative_residual"});
  for (std::size_t i = 0; i < s.krylov.residual_history.size(); ++i) {
    log.row({std::to_string(i), format_number(s.krylov.residual_history[i])});
  }
  a.files["residuals.csv"] = log.str();
  a.note("permeability", k);
  a.note("gamma_f", problem.gamma_f());
  a.note("gamma_p", 0.0);
  a.note("interface_dofs", problem.interface_size());
  a.note("krylov_iterations", s.krylov.iterations);
  a.note("krylov_status", to_string(s.krylov.status));
  a.note("dual_stokes", s.check.dual_stokes);
  a.note("dual_darcy", s.check.dual_darcy);
  a.note("matching_gamma_f", s.check.matching_gamma_f);
  a.note("matching_gamma_p", s.check.matching_gamma_p);
  std::cout << "Gamma_f at y = " << format_number(problem.gamma_f()) << ", " << s.krylov.iterations
            << " Krylov iterations\n";
}

void run_dns_command(const RunConfig& c, Artifacts& a) {
  const ObstacleSpec o = c.obstacle();
  require_square(o, "dns");
  DnsConfig dc;
  dc.n_per_cell = c.dns_cells_per_length;
  dc.fem = c.fem;
  const auto preset = make_preset(c.preset);
  const auto s = solve_dns(preset, c.cell_size, o.size, dc);
  a.files["dns.csv"] = field_csv(s.field);
  a.files["dns.vtk"] = field_vtk(s.field, "pore-scale flow");
  for (double y : {0.2, 0.0, -0.2}) a.note("mean_speed_y=" + format_number(y), mean_speed_along(s.field, y));
}

void run_validate(const RunConfig& c, Artifacts& a, int threads) {
  const ObstacleSpec o = c.obstacle();
  require_square(o, "validate");
  if (c.cell_sizes.size() < 2) throw InputError("run.cell_sizes needs at least two values");
  const auto preset = make_preset(c.preset);
  const auto cfg = c.validation();
  const std::string name = c.configuration.value_or("custom");
  std::vector<ErrorReport> rows(c.cell_sizes.size());
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(threads)) {
    std::vector<std::future<ErrorReport>> jobs;
    for (std::size_t i = start; i < std::min(rows.size(), start + threads); ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] {
        return validation_run(preset, o.size, c.cell_sizes[i], cfg, c.delta).errors;
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) rows[start + i] = jobs[i].get();
  }
  CsvTable errors({"configuration", "cell_size", "metric", "value"});
  for (auto& r : rows) {
    r.configuration = name;
    const std::pair<const char*, double> metrics[] = {
        {"eu_fluid_star", r.eu_fluid},        {"ep_fluid_star", r.ep_fluid},
        {"eu_porous_minus", r.eu_porous_minus}, {"ep_porous_minus", r.ep_porous_minus},
        {"eu_porous_star", r.eu_porous_star},   {"ep_porous_star", r.ep_porous_star},
        {"krylov_iterations", static_cast<double>(r.krylov_iterations)}};
    for (const auto& [m, v] : metrics) errors.row({name, format_number(r.cell_size), m, format_number(v)});
    a.note("krylov_iterations_l=" + format_number(r.cell_size), r.krylov_iterations);
  }
  const auto s = slopes_of(rows);
  CsvTable slopes({"configuration", "metric", "slope"});
  const std::pair<const char*, double> ss[] = {
      {"eu_fluid_star", s.slope_u_fluid},        {"ep_fluid_star", s.slope_p_fluid},
      {"eu_porous_minus", s.slope_u_porous_minus}, {"ep_porous_minus", s.slope_p_porous_minus},
      {"eu_porous_star", s.slope_u_porous_star},   {"ep_porous_star", s.slope_p_porous_star}};
  for (const auto& [m, v] : ss) slopes.row({name, m, format_number(v)});
  a.files["errors.csv"] = errors.str();
  a.files["slopes.csv"] = slopes.str();
}

void run_sweep(const RunConfig& c, Artifacts& a) {
  const ObstacleSpec o = c.obstacle();
  require_square(o, "sweep");
  const auto preset = make_preset(c.preset);
  const auto cfg = c.validation();
  const auto dns = solve_dns(preset, c.cell_size, o.size, cfg.dns);
  const auto cell = cell_for(o.size, cfg);
  const double ref = c.delta.value_or(delta_star(cell.porosity, c.cell_size));
  std::vector<double> deltas;
  for (double f : c.delta_factors) deltas.push_back(f * ref);
  const auto r = delta_sweep(preset, dns, permeability_dimensional(cell.k_hat(0, 0), c.cell_size), ref, deltas, cfg);
  CsvTable t({"delta", "delta_factor", "error", "krylov_iterations"});
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    t.row({format_number(r.rows[i].delta), format_number(c.delta_factors[i]), format_number(r.rows[i].error),
           std::to_string(r.rows[i].krylov_iterations)});
  }
  a.files["sweep.csv"] = t.str();
  a.note("reference_delta", ref);
  a.note("best_delta", r.rows[r.best].delta);
}

std::string manifest_text(const RunConfig& c, const Artifacts& a) {
  std::ostringstream os;
  os << "command = " << c.command << "\nconfig_hash = fnv1a64:" << fnv1a_hex(c.text)
     << "\nicdd_version = " << library_version << "\neigen_version = " << EIGEN_WORLD_VERSION << '.'
     << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << "\numfpack_version = " << UMFPACK_MAIN_VERSION << '.'
     << UMFPACK_SUB_VERSION << '.' << UMFPACK_SUBSUB_VERSION << '\n';
  for (const auto& [k, v] : a.manifest) os << k << " = " << v << '\n';
  for (const auto& [name, body] : a.files) os << "file = " << name << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlapping Stokes-Darcy coupling with pore-scale validation"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  int threads = 1;
  app.add_option("--config", config_path, "key = value config file with [run], [fem], [mesh], [krylov] sections")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "concurrent validation runs")->check(CLI::PositiveNumber);
  for (const char* name : {"cell", "icdd", "dns", "validate", "sweep"}) {
    app.add_subcommand(name)->fallthrough();
  }
  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig c = load_config(config_path);
    c.command = app.get_subcommands().front()->get_name();
    Artifacts a;
    if (c.command == "cell") run_cell(c, a);
    else if (c.command == "icdd") run_icdd_command(c, a);
    else if (c.command == "dns") run_dns_command(c, a);
    else if (c.command == "validate") run_validate(c, a, threads);
    else run_sweep(c, a);
    a.files["manifest.txt"] = manifest_text(c, a);
    fs::create_directories(out_dir);
    for (const auto& [name, body] : a.files) {
      std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
      f << body;
      if (!f) throw Error("cannot write " + (fs::path(out_dir) / name).string());
    }
    std::cout << "wrote " << a.files.size() << " files to " << out_dir << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
