#include "doctest.h"

#include "tpsmg/krylov.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace tpsmg;

namespace
{

Eigen::MatrixXd random_spd(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1., 1.);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = u(rng);
  return g * g.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

LinearOperator matrix_operator(const Eigen::MatrixXd &m)
{
  return [&m](std::span<double> dst, std::span<const double> src) {
    Eigen::Map<Eigen::VectorXd>(dst.data(), dst.size()) =
      m * Eigen::Map<const Eigen::VectorXd>(src.data(), src.size());
  };
}

Vector ones(std::size_t n)
{
  return Vector(n, 1.);
}

} // namespace

TEST_CASE("fractional iterations")
{
  const std::vector<double> two{1., 1e-9};
  CHECK(fractional_iterations(two, 1e-8) == doctest::Approx(8. / 9.).epsilon(1e-14));
  std::vector<double> geometric;
  for (int i = 0; i <= 9; ++i)
    geometric.push_back(std::pow(0.1, i));
  CHECK(fractional_iterations(geometric, 1e-8) == doctest::Approx(8.).epsilon(1e-12));
  // e_ν exactly at the tolerance
  const std::vector<double> exact{4., 2., 1.};
  CHECK(fractional_iterations(exact, 0.25) == 2.);
  // continuity under a 1% perturbation of δ_red
  std::vector<double> geo3;
  for (int i = 0; i <= 30; ++i)
    geo3.push_back(std::pow(0.35, i));
  const double a = fractional_iterations(geo3, 1e-8), b = fractional_iterations(geo3, 1.01e-8);
  CHECK(std::abs(a - b) <= 0.05);
  CHECK(a > 17.);
  CHECK(a <= 18.);
  // the crossing is the first index below the tolerance, even after a non-monotone stretch
  const std::vector<double> jump{1., 1e-3, 2e-3, 1e-9};
  CHECK(fractional_iterations(jump, 1e-8) == doctest::Approx(2. + std::log(2e-3 / 1e-8) / std::log(2e-3 / 1e-9)));
  CHECK(fractional_iterations(std::vector<double>{1., 0.}, 1e-8) == 1.);
  CHECK_THROWS(fractional_iterations(std::vector<double>{1., 0.5}, 1e-8));
  CHECK_THROWS(fractional_iterations(std::vector<double>{}, 1e-8));
}

TEST_CASE("conjugate gradients")
{
  SUBCASE("finite termination on diag(1,2,3)")
  {
    Eigen::MatrixXd d = Eigen::Vector3d(1., 2., 3.).asDiagonal();
    const auto a = matrix_operator(d);
    const Vector b{1., 1., 1.};
    Vector x(3, 0.);
    const KrylovResult r = pcg(a, b, x, nullptr);
    CHECK(r.converged);
    CHECK(r.iterations <= 3);
    CHECK(x[0] == doctest::Approx(1.));
    CHECK(x[1] == doctest::Approx(0.5));
    CHECK(x[2] == doctest::Approx(1. / 3.));
    CHECK(r.fractional_iterations > r.iterations - 1);
    CHECK(r.fractional_iterations <= r.iterations);
  }
  SUBCASE("exact preconditioner converges in one step")
  {
    const Eigen::MatrixXd m = random_spd(20, 1);
    const Eigen::MatrixXd minv = m.inverse();
    Vector b = ones(20), x(20, 0.);
    const KrylovResult r = pcg(matrix_operator(m), b, x, matrix_operator(minv));
    CHECK(r.converged);
    CHECK(r.iterations == 1);
  }
  SUBCASE("residual orthogonality in the preconditioner inner product")
  {
    const Eigen::MatrixXd m = random_spd(40, 2);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(40, 40);
    for (int i = 0; i < 40; ++i)
      p(i, i) = 1. / m(i, i);
    std::vector<Vector> rs, zs;
    KrylovOptions opt;
    opt.monitor = [&](int it, std::span<const double> r, std::span<const double> z) {
      if (it < 5)
        {
          rs.emplace_back(r.begin(), r.end());
          zs.emplace_back(z.begin(), z.end());
        }
    };
    Vector b = ones(40), x(40, 0.);
    const KrylovResult res = pcg(matrix_operator(m), b, x, matrix_operator(p), opt);
    CHECK(res.converged);
    REQUIRE(rs.size() == 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        if (i != j)
          CHECK(std::abs(dot(rs[i], zs[j])) <= 1e-8 * l2_norm(rs[i]) * l2_norm(zs[j]));
    CHECK(res.energy_history.size() == res.residual_history.size());
    for (double e : res.energy_history)
      CHECK(e > 0.);
  }
  SUBCASE("zero right-hand side")
  {
    const Eigen::MatrixXd m = random_spd(5, 3);
    Vector b(5, 0.), x(5, 0.);
    const KrylovResult r = pcg(matrix_operator(m), b, x, nullptr);
    CHECK(r.converged);
    CHECK(r.iterations == 0);
  }
  SUBCASE("iteration cap reports non-convergence")
  {
    const Eigen::MatrixXd m = random_spd(50, 4);
    Vector b = ones(50), x(50, 0.);
    KrylovOptions opt;
    opt.max_iterations = 2;
    const KrylovResult r = pcg(matrix_operator(m), b, x, nullptr, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
  }
}

TEST_CASE("GMRES")
{
  const Eigen::MatrixXd m = random_spd(60, 5);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(60, 60);
  for (int i = 0; i < 60; ++i)
    p(i, i) = 1. / m(i, i);
  const Vector b = ones(60);

  Vector xg(60, 0.), xc(60, 0.);
  const KrylovResult g = pgmres(matrix_operator(m), b, xg, matrix_operator(p));
  const KrylovResult c = pcg(matrix_operator(m), b, xc, matrix_operator(p));
  CHECK(g.converged);
  CHECK(std::abs(g.iterations - c.iterations) <= 1);
  for (std::size_t i = 1; i < g.residual_history.size(); ++i)
    CHECK(g.residual_history[i] <= g.residual_history[i - 1] * (1. + 1e-12));
  Vector r(60);
  matrix_operator(m)(r, xg);
  for (int i = 0; i < 60; ++i)
    r[i] = b[i] - r[i];
  CHECK(l2_norm(r) <= 1e-8 * l2_norm(b));

  Vector x1(60, 0.);
  const Eigen::MatrixXd minv = m.inverse();
  const KrylovResult one = pgmres(matrix_operator(m), b, x1, matrix_operator(minv));
  CHECK(one.iterations == 1);

  // nonsymmetric system with restarts
  Eigen::MatrixXd ns = m;
  ns(0, 5) += 3.;
  ns(7, 2) -= 2.;
  Vector xr(60, 0.);
  KrylovOptions opt;
  opt.restart = 5;
  opt.max_iterations = 500;
  const KrylovResult rr = pgmres(matrix_operator(ns), b, xr, nullptr, opt);
  CHECK(rr.converged);
  const Eigen::VectorXd ref = ns.lu().solve(Eigen::VectorXd::Ones(60));
  for (int i = 0; i < 60; ++i)
    CHECK(std::abs(xr[i] - ref(i)) <= 1e-6 * ref.cwiseAbs().maxCoeff());
  KrylovOptions bad;
  bad.restart = 0;
  CHECK_THROWS(pgmres(matrix_operator(ns), b, xr, nullptr, bad));
}

TEST_CASE("Lanczos eigenvalue estimate")
{
  Eigen::VectorXd diag(100);
  for (int i = 0; i < 100; ++i)
    diag(i) = 1. + i;
  const Eigen::MatrixXd d = diag.asDiagonal();
  const double lmax = estimate_largest_eigenvalue(matrix_operator(d), nullptr, 100, 20);
  CHECK(lmax <= 100. * (1. + 1e-12));
  CHECK(lmax >= 90.);
}
