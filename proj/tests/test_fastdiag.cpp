#include "doctest.h"

#include "tpsmg/fastdiag.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace tpsmg;

namespace
{

Eigen::MatrixXd to_eigen(const DenseMatrix &a)
{
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      m(i, j) = a(i, j);
  return m;
}

Vector random_vector(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1., 1.);
  Vector v(n);
  for (auto &x : v)
    x = u(rng);
  return v;
}

DenseMatrix random_matrix(std::size_t n, std::uint64_t seed)
{
  const Vector v = random_vector(n * n, seed);
  DenseMatrix m(n, n);
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

/// ‖A_j A_j^{-1} r - r‖ / ‖r‖ over random r.
double inverse_residual(const DenseMatrix &a_j, const LocalSolver &solver, int trials = 5)
{
  double worst = 0.;
  for (int t = 0; t < trials; ++t)
    {
      const Vector r = random_vector(solver.size(), 31 + t);
      Vector x(r.size()), ax(r.size());
      solver.apply_inverse(r, x);
      a_j.vmult(x, ax);
      double num = 0.;
      for (std::size_t i = 0; i < r.size(); ++i)
        num += (ax[i] - r[i]) * (ax[i] - r[i]);
      worst = std::max(worst, std::sqrt(num) / l2_norm(r));
    }
  return worst;
}

} // namespace

TEST_CASE("Kronecker matrix-vector products")
{
  const DenseMatrix id = DenseMatrix::identity(3);
  const Vector u = random_vector(27, 1);
  Vector out(27);
  kronecker_matvec({&id, &id, &id}, u, out);
  CHECK(out == u);

  const DenseMatrix z0 = random_matrix(2, 2), z1 = random_matrix(2, 3);
  const Vector v = random_vector(4, 4);
  Vector w(4), ref(4);
  kronecker_matvec({&z0, &z1}, v, w);
  kronecker(z1, z0).vmult(v, ref);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(w[i] - ref[i]) < 1e-13);

  // orthogonal factors: kron(Zᵀ) kron(Z) u = u
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(to_eigen(random_matrix(4, 9)));
  const Eigen::MatrixXd q = qr.householderQ();
  DenseMatrix zq(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      zq(i, j) = q(i, j);
  const Vector x = random_vector(64, 5);
  Vector y(64), back(64);
  kronecker_matvec({&zq, &zq, &zq}, x, y);
  kronecker_matvec({&zq, &zq, &zq}, y, back, true);
  for (std::size_t i = 0; i < 64; ++i)
    CHECK(std::abs(back[i] - x[i]) < 1e-13);

  CHECK_THROWS(kronecker_matvec({&z0, &zq}, v, w));
  CHECK_THROWS(kronecker_matvec({&z0, &z1}, x, w));
}

TEST_CASE("identity pencil")
{
  UnivariateFactors f;
  f.mass = DenseMatrix::identity(3);
  f.matrix = DenseMatrix::identity(3);
  const LocalSolver solver({f, f}, SubdomainKind::cell, SolverProvenance::exact);
  const Vector r = random_vector(9, 2);
  Vector x(9);
  solver.apply_inverse(r, x);
  for (int i = 0; i < 9; ++i)
    CHECK(std::abs(x[i] - r[i] / 2.) < 1e-15);
  const Vector zero(9, 0.);
  solver.apply_inverse(zero, x);
  for (double v : x)
    CHECK(v == 0.);
  CHECK_THROWS(solver.apply_inverse(Vector(8, 0.), x));

  UnivariateFactors singular = f;
  singular.matrix = DenseMatrix(3, 3);
  singular.matrix(0, 0) = -1.;
  CHECK_THROWS_AS(LocalSolver({singular}, SubdomainKind::cell, SolverProvenance::exact), NumericalError);
}

TEST_CASE("cell solvers match the restricted operator")
{
  for (int d = 2; d <= 3; ++d)
    for (int k = 1; k <= 3; ++k)
      {
        CAPTURE(d);
        CAPTURE(k);
        auto h = build_hierarchy(d, 3, 0);
        const DGOperator op(h, 0, k, 1.);
        const DenseMatrix a = assemble_dense(op);
        for (std::size_t c = 0; c < op.n_cells(); c += (d == 2 ? 1 : 4))
          {
            const LocalSolver solver = build_cell_solver(op, c);
            const DenseMatrix a_j = restrict_dense(a, cell_dof_indices(op, c));
            const DenseMatrix kron_sum = solver.dense_matrix();
            CHECK((to_eigen(a_j) - to_eigen(kron_sum)).cwiseAbs().maxCoeff() <=
                  1e-12 * to_eigen(a_j).cwiseAbs().maxCoeff());
            CHECK(inverse_residual(a_j, solver) <= 1e-10);

            // mixed product: kron(Z)ᵀ A kron(Z) = Λ
            const std::size_t m = solver.size();
            const int n = solver.extent();
            DenseMatrix z = DenseMatrix::identity(1);
            for (int t = d - 1; t >= 0; --t)
              {
                DenseMatrix zt(n, n);
                std::copy(solver.eigenvectors(t), solver.eigenvectors(t) + n * n, zt.data());
                z = kronecker(z, zt);
              }
            const Eigen::MatrixXd zte = to_eigen(z);
            const Eigen::MatrixXd diag = zte.transpose() * to_eigen(a_j) * zte;
            Eigen::MatrixXd lam = Eigen::MatrixXd::Zero(m, m);
            for (std::size_t i = 0; i < m; ++i)
              lam(i, i) = solver.eigenvalue_sum(i);
            CHECK((diag - lam).norm() <= 1e-10 * lam.norm());
          }
      }
}

TEST_CASE("univariate eigen residuals of local solvers")
{
  auto h = build_hierarchy(3, 2, 1);
  const DGOperator op(h, 1, 3, 1.);
  const auto patches = enumerate_vertex_patches(op.level());
  for (const LocalSolver &solver : {build_cell_solver(op, 0), build_patch_solver(op, patches[13])})
    for (int t = 0; t < 3; ++t)
      {
        const int n = solver.extent();
        const Eigen::MatrixXd a = to_eigen(solver.matrix(t)), m = to_eigen(solver.mass(t));
        Eigen::MatrixXd z(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            z(i, j) = solver.eigenvectors(t)[i * n + j];
        Eigen::VectorXd lam(n);
        for (int i = 0; i < n; ++i)
          lam(i) = solver.eigenvalues(t)[i];
        CHECK((z.transpose() * a * z - Eigen::MatrixXd(lam.asDiagonal())).norm() <= 1e-10 * a.norm());
        CHECK((z.transpose() * m * z - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-10);
      }
}

TEST_CASE("vertex patch solvers match the restricted operator")
{
  for (int d = 2; d <= 3; ++d)
    for (int k = 1; k <= 3; ++k)
      {
        CAPTURE(d);
        CAPTURE(k);
        auto h = build_hierarchy(d, 2, d == 2 ? 1 : 1);
        const DGOperator op(h, 1, k, 1.);
        const DenseMatrix a = assemble_dense(op);
        const auto patches = enumerate_vertex_patches(op.level());
        for (std::size_t j = 0; j < patches.size(); j += (d == 2 ? 1 : 3))
          {
            const LocalSolver solver = build_patch_solver(op, patches[j]);
            const DenseMatrix a_j = restrict_dense(a, patch_dof_indices(op, patches[j]));
            CHECK((to_eigen(a_j) - to_eigen(solver.dense_matrix())).cwiseAbs().maxCoeff() <=
                  1e-12 * to_eigen(a_j).cwiseAbs().maxCoeff());
            CHECK(inverse_residual(a_j, solver) <= 1e-10);
          }
      }
}

TEST_CASE("single-patch coarse mesh: patch inverse is the global inverse")
{
  for (int d = 2; d <= 3; ++d)
    {
      auto h = build_hierarchy(d, 2, 0);
      const DGOperator op(h, 0, 2, 1.);
      const auto patches = enumerate_vertex_patches(op.level());
      REQUIRE(patches.size() == 1);
      const LocalSolver solver = build_patch_solver(op, patches[0]);
      const auto idx = patch_dof_indices(op, patches[0]);
      const Eigen::MatrixXd a = to_eigen(assemble_dense(op));
      const Vector r = random_vector(op.n_dofs(), 12);
      Vector r_local(idx.size()), x_local(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i)
        r_local[i] = r[idx[i]];
      solver.apply_inverse(r_local, x_local);
      const Eigen::VectorXd x = a.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()));
      double err = 0.;
      for (std::size_t i = 0; i < idx.size(); ++i)
        err = std::max(err, std::abs(x_local[i] - x(idx[i])));
      CHECK(err <= 1e-10 * x.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("surrogate solvers")
{
  auto h = build_hierarchy(2, 3, 0);
  const DGOperator op(h, 0, 3, 1.);
  for (std::size_t c = 0; c < op.n_cells(); ++c)
    {
      const LocalSolver exact = build_cell_solver(op, c);
      const LocalSolver surrogate = build_cell_solver(op, c, true);
      CHECK(surrogate.provenance() == SolverProvenance::surrogate);
      for (int t = 0; t < 2; ++t)
        for (int i = 0; i < 16; ++i)
          CHECK(exact.eigenvectors(t)[i] == surrogate.eigenvectors(t)[i]);
      CHECK(estimate_local_stability(op, cell_dof_indices(op, c), exact) == doctest::Approx(1.).epsilon(1e-10));
    }

  auto hd = build_hierarchy(2, 4, 0);
  distort(hd, 0.25, 77);
  const DGOperator opd(hd, 0, 3, 4.);
  CHECK_THROWS(build_cell_solver(opd, 0));
  CHECK_THROWS(build_patch_solver(opd, enumerate_vertex_patches(opd.level())[0]));
  for (std::size_t c : {0u, 5u, 10u})
    {
      const LocalSolver s = build_cell_solver(opd, c, true);
      const double eta = estimate_local_stability(opd, cell_dof_indices(opd, c), s);
      CHECK(std::isfinite(eta));
      CHECK(eta > 0.);
      MESSAGE("local stability estimate, cell " << c << ": " << eta);
      CHECK(estimate_local_stability(opd, cell_dof_indices(opd, c), build_cell_solver(opd, c, true)) ==
            doctest::Approx(eta).epsilon(1e-12));
    }
  const LocalSolver big = build_patch_solver(op, enumerate_vertex_patches(op.level())[0]);
  CHECK_THROWS(estimate_local_stability(op, patch_dof_indices(op, enumerate_vertex_patches(op.level())[0]), big, 10));
}

TEST_CASE("solver sharing reproduces per-subdomain builds")
{
  auto h = build_hierarchy(3, 2, 1);
  const DGOperator op(h, 1, 2, 1.);
  const SolverSet cells = SolverSet::for_cells(op);
  CHECK(cells.size() == op.n_cells());
  CHECK(cells.n_unique() <= 27);
  const auto patches = enumerate_vertex_patches(op.level());
  const SolverSet patch_set = SolverSet::for_patches(op, patches);
  CHECK(patch_set.size() == patches.size());
  for (std::size_t c = 0; c < op.n_cells(); ++c)
    {
      const LocalSolver own = build_cell_solver(op, c);
      const Vector r = random_vector(own.size(), c);
      Vector x1(r.size()), x2(r.size());
      own.apply_inverse(r, x1);
      cells[c].apply_inverse(r, x2);
      CHECK(x1 == x2);
    }
  for (std::size_t j = 0; j < patches.size(); ++j)
    {
      const LocalSolver own = build_patch_solver(op, patches[j]);
      const Vector r = random_vector(own.size(), j);
      Vector x1(r.size()), x2(r.size());
      own.apply_inverse(r, x1);
      patch_set[j].apply_inverse(r, x2);
      CHECK(x1 == x2);
    }

  auto hd = build_hierarchy(2, 2, 1);
  distort(hd, 0.2, 1);
  const DGOperator opd(hd, 1, 2, 4.);
  const SolverSet dist = SolverSet::for_cells(opd);
  CHECK(dist.n_unique() == opd.n_cells());
  CHECK(dist[3].provenance() == SolverProvenance::surrogate);
  CHECK_FALSE(dist[3].has_factors());
}

TEST_CASE("local solver flop counts")
{
  auto h = build_hierarchy(3, 2, 0);
  const DGOperator op(h, 0, 3, 1.);
  const LocalSolver s = build_cell_solver(op, 0);
  FlopCounter counter;
  counter.enable();
  Vector r(64, 1.), x(64);
  s.apply_inverse(r, x, &counter);
  CHECK(counter.get(Kernel::local_solver) == s.apply_inverse_flops());
  CHECK(s.apply_inverse_flops() == 2 * 3 * 2 * 256 + 3 * 64);
}
