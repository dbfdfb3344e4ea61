#include "tpsmg/experiment.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <random>
#include <sstream>

namespace tpsmg
{

namespace
{

double sq_distance(const Point &x, const Point &c, int dim, Point &diff)
{
  double r2 = 0.;
  diff = {0., 0., 0.};
  for (int a = 0; a < dim; ++a)
    {
      diff[a] = x[a] - c[a];
      r2 += diff[a] * diff[a];
    }
  return r2;
}

std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text)
{
  const std::string s = trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw std::invalid_argument("invalid value '" + s + "' for " + std::string(key));
  return value;
}

bool parse_bool(std::string_view key, std::string_view text)
{
  const std::string s = trim(text);
  if (s == "1" || s == "true" || s == "on" || s == "yes")
    return true;
  if (s == "0" || s == "false" || s == "off" || s == "no")
    return false;
  throw std::invalid_argument("invalid boolean '" + s + "' for " + std::string(key));
}

std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_fixed(double v, int digits)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

double ipow(int base, int exp)
{
  double r = 1.;
  for (int i = 0; i < exp; ++i)
    r *= base;
  return r;
}

double seconds_since(std::chrono::steady_clock::time_point t)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

} // namespace

double ManufacturedProblem::u(const Point &x) const
{
  const double scale = 1. / (std::sqrt(2. * M_PI) * sigma), s2 = sigma * sigma;
  double sum = 0.;
  Point diff;
  for (const Point &c : centers)
    {
      const double r2 = sq_distance(x, c, dim, diff);
      sum += std::exp(-(squared_norm ? r2 : std::sqrt(r2)) / s2);
    }
  return scale * sum;
}

Point ManufacturedProblem::gradient(const Point &x) const
{
  const double scale = 1. / (std::sqrt(2. * M_PI) * sigma), s2 = sigma * sigma;
  Point grad{0., 0., 0.}, diff;
  for (const Point &c : centers)
    {
      const double r2 = sq_distance(x, c, dim, diff);
      double factor;
      if (squared_norm)
        factor = -2. / s2 * std::exp(-r2 / s2);
      else
        {
          const double r = std::sqrt(r2);
          factor = r > 0. ? -std::exp(-r / s2) / (s2 * r) : 0.;
        }
      for (int a = 0; a < dim; ++a)
        grad[a] += scale * factor * diff[a];
    }
  return grad;
}

double ManufacturedProblem::f(const Point &x) const
{
  const double scale = 1. / (std::sqrt(2. * M_PI) * sigma), s2 = sigma * sigma;
  double laplacian = 0.;
  Point diff;
  for (const Point &c : centers)
    {
      const double r2 = sq_distance(x, c, dim, diff);
      if (squared_norm)
        laplacian += std::exp(-r2 / s2) * (4. * r2 / (s2 * s2) - 2. * dim / s2);
      else
        {
          const double r = std::sqrt(r2);
          laplacian += std::exp(-r / s2) * (1. / (s2 * s2) - (dim - 1) / (s2 * r));
        }
    }
  return -scale * laplacian;
}

ManufacturedProblem manufactured(int dim, bool squared_norm)
{
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("manufactured problem: dimension must be 2 or 3");
  ManufacturedProblem p;
  p.dim = dim;
  p.squared_norm = squared_norm;
  p.centers = {Point{0., 0., 0.}, Point{0.25, 0.85, 0.85}, Point{0.6, 0.4, 0.4}};
  if (dim == 2)
    for (Point &c : p.centers)
      c[2] = 0.;
  return p;
}

const char *to_string(MeshKind kind)
{
  return kind == MeshKind::cartesian ? "cartesian" : "distorted";
}

const char *to_string(SolverKind kind)
{
  return kind == SolverKind::cg ? "cg" : "gmres";
}

MeshKind parse_mesh_kind(std::string_view name)
{
  if (name == "cartesian")
    return MeshKind::cartesian;
  if (name == "distorted")
    return MeshKind::distorted;
  throw std::invalid_argument("unknown mesh kind '" + std::string(name) + "'");
}

SolverKind parse_solver_kind(std::string_view name)
{
  if (name == "cg")
    return SolverKind::cg;
  if (name == "gmres")
    return SolverKind::gmres;
  throw std::invalid_argument("unknown solver '" + std::string(name) + "'");
}

double ExperimentConfig::effective_omega() const
{
  return omega ? *omega : default_omega(smoother, mesh == MeshKind::distorted, dim);
}

SolverKind ExperimentConfig::effective_solver() const
{
  if (solver)
    return *solver;
  if (is_additive(smoother) || mesh == MeshKind::distorted)
    return SolverKind::cg;
  return SolverKind::gmres;
}

bool ExperimentConfig::effective_symmetrize() const
{
  if (symmetrize)
    return *symmetrize;
  return !is_additive(smoother) && effective_solver() == SolverKind::cg;
}

MultigridConfig ExperimentConfig::multigrid_config() const
{
  MultigridConfig mg;
  mg.smoother.kind = smoother;
  mg.smoother.omega = effective_omega();
  mg.smoother.m_pre = m_pre;
  mg.smoother.m_post = m_post;
  mg.smoother.coloring = coloring;
  mg.smoother.symmetrize = effective_symmetrize();
  mg.coarse = coarse_solver;
  return mg;
}

void ExperimentConfig::set(std::string_view key_in, std::string_view value_in)
{
  const std::string key = trim(key_in), value = trim(value_in);
  if (key == "dim")
    dim = parse_number<int>(key, value);
  else if (key == "degree")
    degree = parse_number<int>(key, value);
  else if (key == "levels")
    {
      const auto dots = value.find("..");
      if (dots == std::string::npos)
        min_level = max_level = parse_number<int>(key, value);
      else
        {
          min_level = parse_number<int>(key, std::string_view(value).substr(0, dots));
          max_level = parse_number<int>(key, std::string_view(value).substr(dots + 2));
        }
    }
  else if (key == "coarse")
    coarse_cells = parse_number<std::size_t>(key, value);
  else if (key == "mesh")
    mesh = parse_mesh_kind(value);
  else if (key == "distortion")
    distortion = parse_number<double>(key, value);
  else if (key == "seed")
    seed = parse_number<std::uint64_t>(key, value);
  else if (key == "penalty-hat")
    penalty_hat = parse_number<double>(key, value);
  else if (key == "smoother")
    smoother = parse_smoother_kind(value);
  else if (key == "omega")
    omega = parse_number<double>(key, value);
  else if (key == "pre")
    m_pre = parse_number<int>(key, value);
  else if (key == "post")
    m_post = parse_number<int>(key, value);
  else if (key == "coloring")
    coloring = parse_coloring(value);
  else if (key == "solver")
    solver = parse_solver_kind(value);
  else if (key == "symmetrize")
    symmetrize = parse_bool(key, value);
  else if (key == "tol")
    tolerance = parse_number<double>(key, value);
  else if (key == "max-iterations")
    max_iterations = parse_number<int>(key, value);
  else if (key == "coarse-solver")
    {
      if (value == "direct")
        coarse_solver = CoarseSolverKind::direct;
      else if (value == "chebyshev")
        coarse_solver = CoarseSolverKind::chebyshev;
      else
        throw std::invalid_argument("unknown coarse solver '" + value + "'");
    }
  else if (key == "count-flops")
    count_flops = parse_bool(key, value);
  else if (key == "exponent")
    {
      if (value == "squared")
        squared_norm = true;
      else if (value == "linear")
        squared_norm = false;
      else
        throw std::invalid_argument("exponent must be 'squared' or 'linear'");
    }
  else if (key == "out")
    output = value;
  else
    throw std::invalid_argument("unknown configuration key '" + key + "'");
}

void ExperimentConfig::validate() const
{
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("dim must be 2 or 3");
  if (degree < 1)
    throw std::invalid_argument("degree must be at least 1");
  if (coarse_cells < 1)
    throw std::invalid_argument("coarse must be at least 1");
  if (min_level < 0 || max_level < min_level)
    throw std::invalid_argument("levels must satisfy 0 <= Lmin <= Lmax");
  if (!(tolerance > 0. && tolerance < 1.))
    throw std::invalid_argument("tol must lie in (0, 1)");
  if (max_iterations < 1)
    throw std::invalid_argument("max-iterations must be positive");
  if (!(penalty_hat > 0.))
    throw std::invalid_argument("penalty-hat must be positive");
  if (mesh == MeshKind::distorted)
    {
      if (!(distortion >= 0. && distortion < 0.5))
        throw std::invalid_argument("distortion must lie in [0, 0.5)");
      if (uses_vertex_patches(smoother))
        throw std::invalid_argument("vertex-patch smoothers require a Cartesian mesh");
    }
  if (!is_additive(smoother) && effective_solver() == SolverKind::cg && !effective_symmetrize())
    throw std::invalid_argument("a multiplicative smoother preconditions CG only with symmetrize");
  multigrid_config().smoother.validate();
}

std::vector<std::string> ExperimentConfig::warnings() const
{
  std::vector<std::string> w;
  if (mesh == MeshKind::distorted && penalty_hat < 4.)
    w.push_back("penalty-hat below 4 on a distorted mesh may lose coercivity");
  return w;
}

ExperimentConfig parse_config(std::istream &in, ExperimentConfig base)
{
  std::string line;
  int number = 0;
  while (std::getline(in, line))
    {
      ++number;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#')
        continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
      base.set(std::string_view(t).substr(0, eq), std::string_view(t).substr(eq + 1));
    }
  return base;
}

double ComplexityFactors::operator_apply() const
{
  return operator_apply_flops / (n_cells * ipow(degree, dim + 1));
}

double ComplexityFactors::smoother_step() const
{
  return smoother_step_flops / (n_subdomains * ipow(degree, dim + 1));
}

double ComplexityFactors::local_solvers() const
{
  return local_solver_flops / (n_subdomains * ipow(degree, dim + 1));
}

double ComplexityFactors::setup() const
{
  return setup_flops / (setup_builds * ipow(degree, 3));
}

double ComplexityFactors::setup_to_apply_ratio() const
{
  return (static_cast<double>(setup_flops) / setup_builds) / (static_cast<double>(operator_apply_flops) / n_cells);
}

ComplexityFactors measure_complexity(const SchwarzSmoother &smoother, std::uint64_t setup_flops,
                                     std::size_t setup_builds)
{
  const DGOperator &op = smoother.level_operator();
  FlopCounter *counter = op.flop_counter();
  if (counter == nullptr || !counter->enabled())
    throw std::invalid_argument("complexity measurement needs an enabled operator counter");
  if (setup_builds == 0)
    throw std::invalid_argument("complexity measurement needs at least one built solver");
  const std::size_t n = op.n_dofs();
  Vector x(n), b(n), y(n);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> dist(-1., 1.);
  for (std::size_t i = 0; i < n; ++i)
    {
      x[i] = dist(rng);
      b[i] = dist(rng);
    }

  ComplexityFactors c;
  c.dim = op.dim();
  c.degree = op.degree();
  c.n_cells = op.n_cells();
  c.n_subdomains = smoother.subdomains().size();
  c.setup_flops = setup_flops;
  c.setup_builds = setup_builds;

  std::uint64_t before = counter->get(Kernel::operator_apply);
  op.vmult(y, x);
  c.operator_apply_flops = counter->get(Kernel::operator_apply) - before;

  before = counter->total();
  const std::uint64_t local_before = counter->get(Kernel::local_solver);
  smoother.step(x, b);
  c.smoother_step_flops = counter->total() - before;
  c.local_solver_flops = counter->get(Kernel::local_solver) - local_before;
  return c;
}

ComplexityFactors measure_complexity(int dim, int degree, int level, SmootherKind kind, std::size_t coarse_cells)
{
  const MeshHierarchy mesh = build_hierarchy(dim, coarse_cells, level);
  DGOperator op(mesh, static_cast<std::size_t>(level), degree, 1.);
  FlopCounter counter, setup;
  counter.enable();
  setup.enable();
  op.set_flop_counter(&counter);
  SmootherConfig config;
  config.kind = kind;
  config.omega = default_omega(kind, false, dim);
  const SchwarzSmoother smoother(op, config, &setup);
  return measure_complexity(smoother, setup.get(Kernel::smoother_setup), smoother.solvers().n_unique());
}

std::vector<RunRecord> run_experiment(const ExperimentConfig &config)
{
  config.validate();
  MeshHierarchy mesh = build_hierarchy(config.dim, config.coarse_cells, config.max_level);
  if (config.mesh == MeshKind::distorted)
    distort(mesh, config.distortion, config.seed);
  const ManufacturedProblem problem = manufactured(config.dim, config.squared_norm);
  const ScalarFunction u = [&](const Point &x) { return problem.u(x); };
  const ScalarFunction f = [&](const Point &x) { return problem.f(x); };

  std::vector<RunRecord> records;
  for (int level = config.min_level; level <= config.max_level; ++level)
    {
      FlopCounter counter, setup_counter;
      counter.enable(config.count_flops);
      setup_counter.enable(config.count_flops);

      const auto t_setup = std::chrono::steady_clock::now();
      const Multigrid mg(mesh, static_cast<std::size_t>(level), config.degree, config.penalty_hat,
                         config.multigrid_config(), &counter, &setup_counter);
      const DGOperator &op = mg.level_operator(static_cast<std::size_t>(level));
      const Vector b = compute_rhs(op, f, u);
      RunRecord record;
      record.setup_seconds = seconds_since(t_setup);

      counter.reset();
      Vector x(op.n_dofs(), 0.);
      KrylovOptions options;
      options.reduction = config.tolerance;
      options.max_iterations = config.max_iterations;
      options.restart = config.max_iterations;
      const auto t_solve = std::chrono::steady_clock::now();
      const KrylovResult result = config.effective_solver() == SolverKind::cg
                                    ? pcg(mg.as_operator(), b, x, mg.as_preconditioner(), options)
                                    : pgmres(mg.as_operator(), b, x, mg.as_preconditioner(), options);
      record.solve_seconds = seconds_since(t_solve);

      record.config = config;
      record.level = level;
      record.dofs = op.n_dofs();
      record.cells = op.n_cells();
      record.converged = result.converged;
      record.iterations = result.iterations;
      record.fractional_iterations = result.fractional_iterations;
      record.residual_history = result.residual_history;
      record.l2_error = l2_error(op, x, u);
      if (config.count_flops)
        {
          record.flops_total = counter.total();
          record.flops_local_solvers = counter.get(Kernel::local_solver);
          record.flops_residual = counter.get(Kernel::operator_apply);
          record.kernel_flops = counter.counts();
          if (level > 0)
            {
              std::size_t builds = 0;
              for (int l = 1; l <= level; ++l)
                builds += mg.smoother(static_cast<std::size_t>(l)).solvers().n_unique();
              record.complexity = measure_complexity(mg.smoother(static_cast<std::size_t>(level)),
                                                     setup_counter.get(Kernel::smoother_setup), builds);
            }
        }
      records.push_back(std::move(record));
    }
  return records;
}

ReportFormat parse_report_format(std::string_view name)
{
  if (name == "csv")
    return ReportFormat::csv;
  if (name == "markdown")
    return ReportFormat::markdown;
  throw std::invalid_argument("unknown report format '" + std::string(name) + "'");
}

const std::vector<std::string> &csv_columns()
{
  static const std::vector<std::string> columns{
    "level",      "dofs",       "smoother",      "omega",         "nu",
    "nu_frac",    "flops_total", "flops_local_solvers", "flops_residual", "C_cmplx",
    "dim",        "degree",     "mesh",          "solver",        "converged",
    "l2_error",   "setup_seconds", "solve_seconds"};
  return columns;
}

std::string report(const std::vector<RunRecord> &records, ReportFormat format)
{
  if (records.empty())
    throw std::invalid_argument("report: no records");
  std::ostringstream out;
  if (format == ReportFormat::csv)
    {
      const auto &columns = csv_columns();
      for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? "," : "") << columns[i];
      out << '\n';
      for (const RunRecord &r : records)
        {
          const ExperimentConfig &c = r.config;
          out << r.level << ',' << r.dofs << ',' << to_string(c.smoother) << ',' << format_double(c.effective_omega())
              << ',' << r.iterations << ',' << format_double(r.fractional_iterations) << ',' << r.flops_total << ','
              << r.flops_local_solvers << ',' << r.flops_residual << ',' << format_double(r.c_cmplx()) << ','
              << c.dim << ',' << c.degree << ',' << to_string(c.mesh) << ',' << to_string(c.effective_solver()) << ','
              << (r.converged ? 1 : 0) << ',' << format_double(r.l2_error) << ','
              << format_double(r.setup_seconds) << ',' << format_double(r.solve_seconds) << '\n';
        }
      return out.str();
    }

  out << "| L | DoFs | smoother | ω | solver | ν | ν_frac | L² error |\n";
  out << "|---:|---:|:---|---:|:---|---:|---:|---:|\n";
  for (const RunRecord &r : records)
    {
      char err[32];
      std::snprintf(err, sizeof err, "%.3e", r.l2_error);
      out << "| " << r.level << " | " << r.dofs << " | " << to_string(r.config.smoother) << " | "
          << format_fixed(r.config.effective_omega(), 2) << " | " << to_string(r.config.effective_solver()) << " | "
          << r.iterations << (r.converged ? "" : "*") << " | " << format_fixed(r.fractional_iterations, 1) << " | "
          << err << " |\n";
    }
  return out.str();
}

std::vector<std::map<std::string, std::string>> parse_csv(std::string_view text)
{
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size())
    {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos)
        end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
      pos = end + 1;
      if (line.empty())
        continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      while (true)
        {
          const auto comma = line.find(',', start);
          fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
          if (comma == std::string_view::npos)
            break;
          start = comma + 1;
        }
      rows.push_back(std::move(fields));
    }
  if (rows.empty())
    throw std::invalid_argument("parse_csv: missing header");
  std::vector<std::map<std::string, std::string>> result;
  for (std::size_t r = 1; r < rows.size(); ++r)
    {
      if (rows[r].size() != rows[0].size())
        throw std::invalid_argument("parse_csv: row " + std::to_string(r) + " has the wrong number of fields");
      std::map<std::string, std::string> row;
      for (std::size_t i = 0; i < rows[0].size(); ++i)
        row[rows[0][i]] = rows[r][i];
      result.push_back(std::move(row));
    }
  return result;
}

std::vector<ComplexityFactors> complexity_by_degree(const std::vector<RunRecord> &records)
{
  std::map<int, const RunRecord *> finest;
  for (const RunRecord &r : records)
    {
      if (!r.complexity)
        throw std::invalid_argument("complexity report needs records with FLOP counting enabled");
      const RunRecord *&slot = finest[r.config.degree];
      if (slot == nullptr || r.level > slot->level)
        slot = &r;
    }
  std::vector<ComplexityFactors> factors;
  for (const auto &[degree, r] : finest)
    factors.push_back(*r->complexity);
  return factors;
}

std::string complexity_report(const std::vector<ComplexityFactors> &factors, ReportFormat format)
{
  if (factors.empty())
    throw std::invalid_argument("complexity report: no factors");
  std::ostringstream out;
  if (format == ReportFormat::csv)
    {
      out << "dim,degree,operator_apply,smoother_step,local_solvers,setup,setup_to_apply\n";
      for (const auto &f : factors)
        out << f.dim << ',' << f.degree << ',' << format_double(f.operator_apply()) << ','
            << format_double(f.smoother_step()) << ',' << format_double(f.local_solvers()) << ','
            << format_double(f.setup()) << ',' << format_double(f.setup_to_apply_ratio()) << '\n';
      return out.str();
    }
  out << "| kernel | order |";
  for (const auto &f : factors)
    out << " k=" << f.degree << " |";
  out << "\n|:---|:---|";
  for (std::size_t i = 0; i < factors.size(); ++i)
    out << "---:|";
  out << '\n';
  const auto row = [&](const char *name, const char *order, double (ComplexityFactors::*get)() const) {
    out << "| " << name << " | " << order << " |";
    for (const auto &f : factors)
      out << ' ' << format_fixed((f.*get)(), 1) << " |";
    out << '\n';
  };
  row("operator apply", "k^{d+1}", &ComplexityFactors::operator_apply);
  row("smoother step", "k^{d+1}", &ComplexityFactors::smoother_step);
  row("local solvers", "k^{d+1}", &ComplexityFactors::local_solvers);
  row("local solver setup", "k^3", &ComplexityFactors::setup);
  return out.str();
}

} // namespace tpsmg
