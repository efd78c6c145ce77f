#include "hho/cli.hpp"

#include "hho/errors.hpp"
#include "hho/quadrature.hpp"
#include "hho/verify.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hho {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  while (true) {
    const auto pos = s.find(sep);
    parts.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) return parts;
    s.remove_prefix(pos + 1);
  }
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  return value;
}

int positive(std::string_view text, std::string_view what) {
  const int v = parse_number<int>(text, what);
  if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

// Writes to the named file, or to `fallback` when the name is empty.
void emit(const std::string& path, const std::string& text, std::ostream& fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << text;
}

int fail(std::ostream& err, std::string_view kind, std::string_view message, int code) {
  std::string msg(message);
  for (char& c : msg)
    if (c == '\n') c = ' ';
  err << "FAILURE kind=" << kind << " exit=" << code << " message=\"" << msg << "\"\n";
  return code;
}

int run_solve(const RunConfig& cfg, std::ostream& out) {
  const PolyMesh mesh = mesh_from_spec(cfg.mesh);
  const ManufacturedCase& c = manufactured_case(cfg.case_name);
  const Discretization disc = discretize(mesh, cfg.k);
  const SparseSpdSystem sys = assemble(disc, c.f, {cfg.deterministic});
  const SolveReport rep = solve(sys, SolverOptions{cfg.solver, cfg.solver_tol});
  std::ostringstream s;
  s << "mesh=" << cfg.mesh << '\n'
    << "elements=" << mesh.num_elements() << '\n'
    << "faces=" << mesh.num_faces() << '\n'
    << "h=" << fmt(mesh.meshsize()) << '\n'
    << "k=" << cfg.k << '\n'
    << "case=" << c.name << '\n'
    << "n_dofs=" << sys.dofs.num_dofs << '\n'
    << "nnz=" << sys.nnz << '\n'
    << "solver=" << rep.method << '\n'
    << "iterations=" << rep.iterations << '\n'
    << "residual=" << fmt(rep.relative_residual) << '\n'
    << "energy_err=" << fmt(energy_error(disc, c.u, rep.solution)) << '\n'
    << "l2_err=" << fmt(l2_error(disc, c.u, rep.solution)) << '\n'
    << "solution_norm=" << fmt(discrete_h1_norm(disc, rep.solution)) << '\n';
  emit(cfg.out, s.str(), out);
  if (!cfg.matrix_dump.empty()) {
    std::ostringstream m;
    write_matrix(m, sys.matrix);
    emit(cfg.matrix_dump, m.str(), out);
  }
  return exit_ok;
}

int run_study_command(const RunConfig& cfg, std::ostream& out) {
  const MeshFamily family = make_family(family_tag_from_string(cfg.family), cfg.levels);
  family.validate();
  StudyOptions opts;
  opts.deterministic = cfg.deterministic;
  opts.solver = SolverOptions{cfg.solver, cfg.solver_tol};
  opts.poincare_tol = cfg.poincare_tol;
  const ConvergenceReport rep = run_study(family, cfg.k, manufactured_case(cfg.case_name), opts);
  const std::string csv = to_csv(rep, cfg.deterministic);
  const std::string md = to_markdown(rep, cfg.deterministic);
  if (cfg.out.empty()) {
    out << csv << '\n' << md;
  } else {
    emit(cfg.out, csv, out);
    emit(std::filesystem::path(cfg.out).replace_extension(".md").string(), md, out);
  }
  return exit_ok;
}

int run_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const PolyMesh mesh = mesh_from_spec(cfg.mesh);
  bool ok = true;
  std::ostringstream s;
  for (const CheckResult& r : run_checks(mesh, cfg.k, cfg.seed)) {
    s << (r.passed ? "PASS " : "FAIL ") << r.name << ' ' << r.detail << '\n';
    if (!r.passed) {
      ok = false;
      fail(err, "check", r.name + ": " + r.detail, exit_check_failed);
    }
  }
  emit(cfg.out, s.str(), out);
  return ok ? exit_ok : exit_check_failed;
}

}  // namespace

void RunConfig::validate() const {
  if (k < 0 || k > 3) throw ConfigError("k must be one of 0, 1, 2, 3");
  if ((command == Command::solve || command == Command::check) && mesh.empty())
    throw ConfigError("--mesh is required");
  if (command == Command::study) {
    if (levels.empty()) throw ConfigError("--levels must not be empty");
    for (int l : levels)
      if (l <= 0) throw ConfigError("levels must be positive");
    try {
      family_tag_from_string(family);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    manufactured_case(case_name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(solver_tol > 0.0) || !(poincare_tol > 0.0)) throw ConfigError("tolerances must be positive");
}

PolyMesh mesh_from_spec(std::string_view spec) {
  const auto parts = split(spec, ':');
  const std::string_view kind = parts[0];
  if (kind == "cartesian" || kind == "triangular") {
    if (parts.size() != 2) throw ConfigError("expected " + std::string(kind) + ":n");
    return generate(kind == "cartesian" ? MeshKind::cartesian : MeshKind::triangular, positive(parts[1], "n"));
  }
  if (kind == "nonconf") {
    if (parts.size() != 3) throw ConfigError("expected nonconf:n:frac");
    const double frac = parse_number<double>(parts[2], "fraction");
    if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("nonconf fraction must lie in (0, 1]");
    return generate_nonconforming(positive(parts[1], "n"), frac);
  }
  if (kind == "agglo") {
    if (parts.size() != 3) throw ConfigError("expected agglo:n:block");
    const int n = positive(parts[1], "n");
    const int block = positive(parts[2], "block");
    if (n % block != 0) throw ConfigError("agglo block must divide n");
    return generate_agglomerated(n, block);
  }
  if (!std::filesystem::exists(std::filesystem::path(std::string(spec))))
    throw ConfigError("mesh '" + std::string(spec) + "' is neither a generator spec nor a file");
  return load_mesh_file(std::string(spec));
}

RunConfig parse_args(int argc, const char* const* argv, std::string* help) {
  RunConfig cfg;
  CLI::App app{"Hybrid High-Order solver for the Poisson problem on polygonal meshes", "hho"};
  app.require_subcommand(1, 1);

  std::string solver = "direct";
  std::string levels;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--k", cfg.k, "Polynomial degree (0..3)")->capture_default_str();
    sub->add_option("--out", cfg.out, "Output file (default: standard output)");
    sub->add_option("--seed", cfg.seed, "Random seed for property checks")->capture_default_str();
  };
  auto solving = [&](CLI::App* sub) {
    sub->add_option("--case", cfg.case_name, "Manufactured case (sine, bubble)")->capture_default_str();
    sub->add_flag("--deterministic", cfg.deterministic, "Bit-reproducible assembly, zero timings in tables");
    sub->add_option("--solver", solver, "direct or cg")->capture_default_str();
    sub->add_option("--solver-tol", cfg.solver_tol, "Relative residual target")->capture_default_str();
    sub->add_option("--poincare-tol", cfg.poincare_tol, "Power-iteration tolerance")->capture_default_str();
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one problem and print a summary");
  solve_cmd->add_option("--mesh", cfg.mesh, "Mesh file or generator spec")->required();
  solve_cmd->add_option("--dump-matrix", cfg.matrix_dump, "Write the system matrix in coordinate format");
  common(solve_cmd);
  solving(solve_cmd);

  CLI::App* study_cmd = app.add_subcommand("study", "Convergence study over a mesh family");
  study_cmd->add_option("--family", cfg.family, "cartesian, triangular, nonconforming, agglomerated")
      ->capture_default_str();
  study_cmd->add_option("--levels", levels, "Comma-separated subdivisions, e.g. 4,8,16,32");
  common(study_cmd);
  solving(study_cmd);

  CLI::App* check_cmd = app.add_subcommand("check", "Run the property suite on one mesh");
  check_cmd->add_option("--mesh", cfg.mesh, "Mesh file or generator spec")->required();
  common(check_cmd);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    if (help) *help = app.help();
    return cfg;
  } catch (const CLI::CallForAllHelp&) {
    if (help) *help = app.help("", CLI::AppFormatMode::All);
    return cfg;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  if (solve_cmd->parsed()) cfg.command = Command::solve;
  if (study_cmd->parsed()) cfg.command = Command::study;
  if (check_cmd->parsed()) cfg.command = Command::check;
  if (solver == "direct")
    cfg.solver = SolverKind::direct;
  else if (solver == "cg")
    cfg.solver = SolverKind::cg;
  else
    throw ConfigError("--solver must be direct or cg");
  if (!levels.empty()) {
    cfg.levels.clear();
    for (std::string_view l : split(levels, ',')) cfg.levels.push_back(positive(l, "level"));
  }
  cfg.validate();
  return cfg;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    switch (config.command) {
      case Command::solve: return run_solve(config, out);
      case Command::study: return run_study_command(config, out);
      case Command::check: return run_check(config, out, err);
    }
    return fail(err, "config", "unknown command", exit_config);
  } catch (const ConfigError& e) {
    return fail(err, "config", e.what(), exit_config);
  } catch (const MeshError& e) {
    return fail(err, "config", e.what(), exit_config);
  } catch (const std::invalid_argument& e) {
    return fail(err, "config", e.what(), exit_config);
  } catch (const NumericalError& e) {
    return fail(err, "numerical", e.what(), exit_numerical);
  } catch (const QuadratureError& e) {
    return fail(err, "numerical", e.what(), exit_numerical);
  } catch (const std::exception& e) {
    return fail(err, "numerical", e.what(), exit_numerical);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    std::string help;
    cfg = parse_args(argc, argv, &help);
    if (!help.empty()) {
      out << help;
      return exit_ok;
    }
  } catch (const ConfigError& e) {
    return fail(err, "config", e.what(), exit_config);
  }
  return run(cfg, out, err);
}

}  // namespace hho
