#pragma once

#include "hho/assembly.hpp"
#include "hho/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hho {

/// Invalid command-line input; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Command { solve, study, check };

struct RunConfig {
  Command command = Command::solve;
  std::string mesh;                     // file path or generator spec
  std::string family = "cartesian";     // study only
  std::vector<int> levels{4, 8, 16, 32};
  int k = 1;
  std::string case_name = "sine";
  std::string out;                      // empty: standard output
  std::string matrix_dump;              // solve only
  bool deterministic = false;
  SolverKind solver = SolverKind::direct;
  double solver_tol = 1e-12;
  double poincare_tol = 1e-10;
  std::uint64_t seed = 1;

  /// Throws ConfigError when an invariant fails.
  void validate() const;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;

/// `cartesian:n`, `triangular:n`, `nonconf:n:frac`, `agglo:n:block`, or a mesh file path.
PolyMesh mesh_from_spec(std::string_view spec);

/// Parses argv into a RunConfig. Throws ConfigError; help requests set `help`.
RunConfig parse_args(int argc, const char* const* argv, std::string* help = nullptr);

/// Executes the configuration; never throws. Failures print one line
/// `FAILURE kind=<config|numerical|check> ...` on `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run, with help/usage handling.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hho
