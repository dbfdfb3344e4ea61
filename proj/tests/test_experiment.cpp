#include "doctest.h"

#include "tpsmg/experiment.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

using namespace tpsmg;

namespace
{

std::vector<Point> random_points(int dim, int count, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<Point> pts;
  for (int i = 0; i < count; ++i)
    {
      Point p{0., 0., 0.};
      for (int a = 0; a < dim; ++a)
        p[a] = u(rng);
      pts.push_back(p);
    }
  return pts;
}

ExperimentConfig small_config()
{
  ExperimentConfig c;
  c.dim = 2;
  c.degree = 2;
  c.min_level = 1;
  c.max_level = 2;
  return c;
}

bool same_bits(double a, double b)
{
  return std::memcmp(&a, &b, sizeof a) == 0;
}

} // namespace

TEST_CASE("manufactured solution")
{
  for (int dim : {2, 3})
    {
      CAPTURE(dim);
      const ManufacturedProblem p = manufactured(dim);
      const double peak = 1. / (std::sqrt(2. * M_PI) * p.sigma);
      CHECK(p.u(p.centers[0]) > peak);
      CHECK(p.u(p.centers[0]) < 1.5 * peak);
      if (dim == 2)
        for (const Point &c : p.centers)
          CHECK(c[2] == 0.);
      CHECK(p.centers[1][0] == 0.25);
      CHECK(p.centers[1][1] == 0.85);

      for (bool squared : {true, false})
        {
          CAPTURE(squared);
          const ManufacturedProblem q = manufactured(dim, squared);
          for (const Point &x : random_points(dim, 10, 7))
            {
              const double h = 1e-5;
              const Point grad = q.gradient(x);
              double laplacian = 0.;
              for (int a = 0; a < dim; ++a)
                {
                  Point xp = x, xm = x;
                  xp[a] += h;
                  xm[a] -= h;
                  const double fd = (q.u(xp) - q.u(xm)) / (2. * h);
                  CHECK(std::abs(fd - grad[a]) <= 1e-6 * std::max(1., std::abs(grad[a])));
                  // fourth-order central stencil for the second derivative
                  const double s = 2e-3;
                  std::array<double, 5> v;
                  for (int o = -2; o <= 2; ++o)
                    {
                      Point y = x;
                      y[a] += o * s;
                      v[o + 2] = q.u(y);
                    }
                  laplacian += (-v[0] + 16. * v[1] - 30. * v[2] + 16. * v[3] - v[4]) / (12. * s * s);
                }
              CHECK(std::abs(-laplacian - q.f(x)) <= 1e-5 * std::max(1., std::abs(q.f(x))));
              CHECK(q.g(x) == q.u(x));
            }
        }
    }
  CHECK_THROWS(manufactured(1));
}

TEST_CASE("experiment configuration")
{
  std::istringstream text("# comment\n"
                          "dim = 3\n"
                          "degree=5\n"
                          "levels = 2..4\n"
                          "mesh = distorted\n"
                          "penalty-hat = 2\n"
                          "smoother = mcs\n"
                          "\n"
                          "seed = 17\n");
  ExperimentConfig c = parse_config(text);
  CHECK(c.dim == 3);
  CHECK(c.degree == 5);
  CHECK(c.min_level == 2);
  CHECK(c.max_level == 4);
  CHECK(c.mesh == MeshKind::distorted);
  CHECK(c.seed == 17);
  CHECK(c.effective_omega() == 0.75);
  CHECK(c.effective_solver() == SolverKind::cg);
  CHECK(c.effective_symmetrize());
  CHECK_NOTHROW(c.validate());
  CHECK(c.warnings().size() == 1);
  c.set("levels", "3");
  CHECK(c.min_level == 3);
  CHECK(c.max_level == 3);

  ExperimentConfig m;
  m.smoother = SmootherKind::mvs;
  CHECK(m.effective_solver() == SolverKind::gmres);
  CHECK_FALSE(m.effective_symmetrize());
  CHECK(m.effective_omega() == 1.);
  m.solver = SolverKind::cg;
  CHECK(m.effective_symmetrize());
  m.symmetrize = false;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m.symmetrize = true;
  CHECK_NOTHROW(m.validate());
  m.mesh = MeshKind::distorted;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  ExperimentConfig a;
  CHECK(a.effective_omega() == 0.7);
  CHECK(a.effective_solver() == SolverKind::cg);
  CHECK(a.warnings().empty());
  CHECK_THROWS(a.set("bogus", "1"));
  CHECK_THROWS(a.set("degree", "three"));
  CHECK_THROWS(a.set("levels", "4..x"));
  CHECK_THROWS(a.set("count-flops", "maybe"));
  a.set("levels", "3..1");
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  std::istringstream bad("dim 3\n");
  CHECK_THROWS(parse_config(bad));
}

TEST_CASE("experiment runs are deterministic and reported")
{
  ExperimentConfig c = small_config();
  c.count_flops = true;
  const auto first = run_experiment(c);
  const auto second = run_experiment(c);
  REQUIRE(first.size() == 2);
  for (std::size_t i = 0; i < first.size(); ++i)
    {
      CHECK(first[i].converged);
      CHECK(first[i].level == static_cast<int>(i) + 1);
      CHECK(first[i].dofs == first[i].cells * 9);
      CHECK(same_bits(first[i].fractional_iterations, second[i].fractional_iterations));
      CHECK(same_bits(first[i].l2_error, second[i].l2_error));
      CHECK(first[i].flops_total == second[i].flops_total);
      CHECK(first[i].flops_local_solvers == second[i].flops_local_solvers);
      CHECK(first[i].residual_history == second[i].residual_history);
      CHECK(first[i].c_cmplx() > 0.);
      CHECK(first[i].flops_residual > 0);
      CHECK(first[i].flops_local_solvers > 0);
      CHECK(first[i].flops_total >= first[i].flops_residual + first[i].flops_local_solvers);
    }

  const std::string csv = report(first, ReportFormat::csv);
  const auto rows = parse_csv(csv);
  REQUIRE(rows.size() == first.size());
  CHECK(csv.substr(0, csv.find('\n')) ==
        "level,dofs,smoother,omega,nu,nu_frac,flops_total,flops_local_solvers,flops_residual,C_cmplx,"
        "dim,degree,mesh,solver,converged,l2_error,setup_seconds,solve_seconds");
  for (std::size_t i = 0; i < rows.size(); ++i)
    {
      CHECK(same_bits(std::stod(rows[i].at("nu_frac")), first[i].fractional_iterations));
      CHECK(same_bits(std::stod(rows[i].at("C_cmplx")), first[i].c_cmplx()));
      CHECK(same_bits(std::stod(rows[i].at("l2_error")), first[i].l2_error));
      CHECK(same_bits(std::stod(rows[i].at("omega")), 0.7));
      CHECK(std::stoull(rows[i].at("flops_total")) == first[i].flops_total);
      CHECK(std::stoi(rows[i].at("nu")) == first[i].iterations);
      CHECK(parse_smoother_kind(rows[i].at("smoother")) == SmootherKind::acs);
    }

  const std::string md = report(first, ReportFormat::markdown);
  std::size_t lines = 0;
  for (char ch : md)
    lines += ch == '\n';
  CHECK(lines == 2 + first.size());

  CHECK_THROWS_AS(report({}, ReportFormat::csv), std::invalid_argument);
  CHECK_THROWS(parse_csv("a,b\n1\n"));
  CHECK_THROWS(parse_report_format("xml"));

  const auto factors = complexity_by_degree(first);
  REQUIRE(factors.size() == 1);
  CHECK(factors[0].n_cells == first.back().cells);
  CHECK(complexity_report(factors, ReportFormat::markdown).find("k=2") != std::string::npos);

  ExperimentConfig off = small_config();
  off.max_level = 1;
  const auto plain = run_experiment(off);
  CHECK(plain[0].c_cmplx() == 0.);
  CHECK_THROWS_AS(complexity_by_degree(plain), std::invalid_argument);
}

TEST_CASE("multiplicative and patch smoothers through the driver")
{
  for (SmootherKind kind : {SmootherKind::mcs, SmootherKind::avs, SmootherKind::mvs})
    {
      ExperimentConfig c = small_config();
      c.smoother = kind;
      const auto records = run_experiment(c);
      for (const auto &r : records)
        {
          CAPTURE(std::string(to_string(kind)));
          CHECK(r.converged);
          CHECK(r.fractional_iterations > 0.);
        }
    }
  ExperimentConfig d = small_config();
  d.mesh = MeshKind::distorted;
  d.coarse_cells = 4;
  d.penalty_hat = 4.;
  d.max_level = 1;
  const auto distorted = run_experiment(d);
  CHECK(distorted[0].converged);
}

TEST_CASE("DG convergence canary")
{
  ExperimentConfig c;
  c.dim = 2;
  c.degree = 3;
  c.min_level = 2;
  c.max_level = 3;
  c.tolerance = 1e-12;
  const auto records = run_experiment(c);
  REQUIRE(records.size() == 2);
  const double ratio = records[0].l2_error / records[1].l2_error;
  CAPTURE(records[0].l2_error);
  CAPTURE(records[1].l2_error);
  CHECK(ratio >= 10.);
  CHECK(ratio <= 22.);
}

TEST_CASE("complexity factors")
{
  std::vector<ComplexityFactors> f;
  for (int k : {2, 3, 4, 5})
    f.push_back(measure_complexity(2, k, 2, SmootherKind::acs));
  for (std::size_t i = 1; i < f.size(); ++i)
    CHECK(f[i].operator_apply() < f[i - 1].operator_apply());
  for (const auto &x : f)
    {
      CHECK(x.n_subdomains == x.n_cells);
      CHECK(x.local_solvers() > 0.);
      CHECK(x.smoother_step() > x.local_solvers());
      CHECK(x.setup() > 0.);
      CHECK(x.setup_builds <= 9);
    }
  const ComplexityFactors patch = measure_complexity(2, 3, 2, SmootherKind::mvs);
  CHECK(patch.n_subdomains == 49);
  const std::string csv = complexity_report(f, ReportFormat::csv);
  CHECK(parse_csv(csv).size() == f.size());
}
