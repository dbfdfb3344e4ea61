#pragma once

#include "tpsmg/multigrid.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tpsmg
{

/**
 * Sum of three normalized Gaussian bells with σ = 1/3 centered at (0,0,0),
 * (0.25,0.85,0.85) and (0.6,0.4,0.4); in 2D the centers are projected onto
 * the plane z = 0. The exponent is −‖x−xᵢ‖²/σ², or −‖x−xᵢ‖/σ² when
 * `squared_norm` is off.
 */
struct ManufacturedProblem
{
  int dim = 2;
  double sigma = 1. / 3.;
  bool squared_norm = true;
  std::vector<Point> centers;

  double u(const Point &x) const;
  Point gradient(const Point &x) const;
  /// −Δu.
  double f(const Point &x) const;
  /// Dirichlet data, equal to u on the boundary.
  double g(const Point &x) const { return u(x); }
};

ManufacturedProblem manufactured(int dim, bool squared_norm = true);

enum class MeshKind
{
  cartesian,
  distorted
};

enum class SolverKind
{
  cg,
  gmres
};

const char *to_string(MeshKind kind);
const char *to_string(SolverKind kind);
MeshKind parse_mesh_kind(std::string_view name);
SolverKind parse_solver_kind(std::string_view name);

struct ExperimentConfig
{
  int dim = 2;
  int degree = 3;
  std::size_t coarse_cells = 2;
  int min_level = 1;
  int max_level = 3;
  MeshKind mesh = MeshKind::cartesian;
  double distortion = 0.25;
  std::uint64_t seed = 2024;
  double penalty_hat = 1.;
  SmootherKind smoother = SmootherKind::acs;
  /// Unset: default_omega for the smoother and mesh.
  std::optional<double> omega;
  int m_pre = 1;
  int m_post = 1;
  ColoringChoice coloring = ColoringChoice::structured;
  /// Unset: CG for additive smoothers, GMRES for multiplicative ones.
  std::optional<SolverKind> solver;
  /// Unset: on exactly when a multiplicative smoother preconditions CG.
  std::optional<bool> symmetrize;
  double tolerance = 1e-8;
  int max_iterations = 200;
  CoarseSolverKind coarse_solver = CoarseSolverKind::direct;
  bool count_flops = false;
  bool squared_norm = true;
  std::string output;

  double effective_omega() const;
  SolverKind effective_solver() const;
  bool effective_symmetrize() const;
  MultigridConfig multigrid_config() const;

  /// Sets one field from its key (the long CLI flag name without dashes).
  void set(std::string_view key, std::string_view value);
  /// Throws std::invalid_argument for inconsistent combinations.
  void validate() const;
  /// Non-fatal remarks, e.g. a penalty below 4 on a distorted mesh.
  std::vector<std::string> warnings() const;
};

/// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
ExperimentConfig parse_config(std::istream &in, ExperimentConfig base = {});

/**
 * Counted operations normalized per subdomain: operator apply per cell over
 * k^{d+1}, one smoother step and its local solves per subdomain over
 * k^{d+1}, and local-solver setup per distinct solver built over k³.
 */
struct ComplexityFactors
{
  int dim = 0;
  int degree = 0;
  std::size_t n_cells = 0;
  std::size_t n_subdomains = 0;
  std::size_t setup_builds = 0;
  std::uint64_t operator_apply_flops = 0;
  std::uint64_t smoother_step_flops = 0;
  std::uint64_t local_solver_flops = 0;
  std::uint64_t setup_flops = 0;

  double operator_apply() const;
  double smoother_step() const;
  double local_solvers() const;
  double setup() const;
  /// Setup operations per built solver over operator-apply operations per cell.
  double setup_to_apply_ratio() const;
};

/**
 * Counts one operator apply and one smoother step on the smoother's level
 * through the level operator's counter, which must be enabled. The setup
 * totals are passed through from the smoother construction.
 */
ComplexityFactors measure_complexity(const SchwarzSmoother &smoother, std::uint64_t setup_flops,
                                     std::size_t setup_builds);

/// Builds a Cartesian level with `coarse_cells` per direction refined `level` times and measures it.
ComplexityFactors measure_complexity(int dim, int degree, int level, SmootherKind kind,
                                     std::size_t coarse_cells = 2);

struct RunRecord
{
  ExperimentConfig config;
  int level = 0;
  std::size_t dofs = 0;
  std::size_t cells = 0;
  bool converged = false;
  int iterations = 0;
  double fractional_iterations = 0.;
  double l2_error = 0.;
  double setup_seconds = 0.;
  double solve_seconds = 0.;
  std::uint64_t flops_total = 0;
  std::uint64_t flops_local_solvers = 0;
  std::uint64_t flops_residual = 0;
  std::map<std::string, std::uint64_t> kernel_flops;
  std::optional<ComplexityFactors> complexity;
  std::vector<double> residual_history;

  /// Local-solver factor of one smoother step; zero without counting.
  double c_cmplx() const { return complexity ? complexity->local_solvers() : 0.; }
};

/// Solves the manufactured problem on levels min_level..max_level. Deterministic given the seed.
std::vector<RunRecord> run_experiment(const ExperimentConfig &config);

enum class ReportFormat
{
  csv,
  markdown
};

ReportFormat parse_report_format(std::string_view name);

/// Column order of the CSV report.
const std::vector<std::string> &csv_columns();

/// Throws std::invalid_argument for an empty record list.
std::string report(const std::vector<RunRecord> &records, ReportFormat format);

/// Rows of a CSV text keyed by the header names.
std::vector<std::map<std::string, std::string>> parse_csv(std::string_view text);

/// One factor set per degree, from the finest level of each degree. Throws when counting was off.
std::vector<ComplexityFactors> complexity_by_degree(const std::vector<RunRecord> &records);

std::string complexity_report(const std::vector<ComplexityFactors> &factors, ReportFormat format);

} // namespace tpsmg
