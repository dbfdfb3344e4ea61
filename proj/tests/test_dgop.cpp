#include "doctest.h"

#include "tpsmg/dgop.hpp"
#include "tpsmg/tensor.hpp"

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

double max_abs(const Eigen::MatrixXd &a)
{
  return a.cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("sum factorization kernels")
{
  auto h = build_hierarchy(2, 2, 0);
  SUBCASE("constant field")
  {
    const DGOperator op(h, 0, 3, 1.);
    Vector u(op.dofs_per_cell(), 1.), uq(op.dofs_per_cell());
    op.interpolate_to_quad(u.data(), uq.data());
    for (double v : uq)
      CHECK(std::abs(v - 1.) < 1e-14);
    Vector zero(op.dofs_per_cell(), 0.), out(op.dofs_per_cell(), 5.);
    op.integrate_against_basis(zero.data(), out.data());
    for (double v : out)
      CHECK(v == 0.);
  }
  SUBCASE("linear in 1D")
  {
    auto h1 = build_hierarchy(1, 1, 0);
    const DGOperator op(h1, 0, 1, 1.);
    const double u[2] = {0., 1.};
    double uq[2];
    op.interpolate_to_quad(u, uq);
    for (int q = 0; q < 2; ++q)
      CHECK(std::abs(uq[q] - op.basis().quadrature().points[q]) < 1e-15);
  }
  for (int d = 1; d <= 3; ++d)
    for (int k = 1; k <= 5; ++k)
      {
        auto hd = build_hierarchy(d, 1, 0);
        const DGOperator op(hd, 0, k, 1.);
        const std::size_t nd = op.dofs_per_cell();
        const Vector u = random_vector(nd, 3 + k), w = random_vector(nd, 17 + k);
        Vector uq(nd), iw(nd);
        op.interpolate_to_quad(u.data(), uq.data());
        op.integrate_against_basis(w.data(), iw.data());
        // naive O(k^{2d}) evaluation
        for (std::size_t q = 0; q < nd; ++q)
          {
            const Point x = op.reference_quad_point(q);
            CHECK(std::abs(uq[q] - evaluate(op, u, 0, x)) < 1e-13);
          }
        double lhs = 0., rhs = 0.;
        for (std::size_t i = 0; i < nd; ++i)
          {
            lhs += iw[i] * u[i];
            rhs += w[i] * uq[i];
          }
        CHECK(std::abs(lhs - rhs) < 1e-13 * std::max(1., std::abs(lhs)));
      }
}

TEST_CASE("cell mass matrix through sum factorization")
{
  auto h = build_hierarchy(2, 4, 0);
  const DGOperator op(h, 0, 3, 1.);
  const std::size_t nd = op.dofs_per_cell();
  const double hc = op.level().cartesian_length();
  const Basis1D &b = op.basis();
  const auto m1 = univariate_cell_factors(b, hc, FaceSide::at_boundary(), FaceSide::at_boundary(), 1.).mass;
  const auto mass = kronecker(m1, m1);
  const Vector u = random_vector(nd, 5);
  Vector uq(nd), v(nd), ref(nd);
  op.interpolate_to_quad(u.data(), uq.data());
  const auto &w = b.quadrature().weights;
  for (std::size_t q = 0; q < nd; ++q)
    uq[q] *= hc * hc * w[q % 4] * w[q / 4];
  op.integrate_against_basis(uq.data(), v.data());
  mass.vmult(u, ref);
  for (std::size_t i = 0; i < nd; ++i)
    CHECK(std::abs(v[i] - ref[i]) < 1e-12 * std::abs(ref[i]) + 1e-15);
}

TEST_CASE("operator equals dense assembly")
{
  struct Case
  {
    int d, levels, k;
    bool distorted;
  };
  std::vector<Case> cases;
  for (int k = 1; k <= 3; ++k)
    for (bool dist : {false, true})
      cases.push_back({2, 2, k, dist});
  for (int k = 1; k <= 2; ++k)
    for (bool dist : {false, true})
      cases.push_back({3, 1, k, dist});
  for (const auto &c : cases)
    {
      CAPTURE(c.d);
      CAPTURE(c.k);
      CAPTURE(c.distorted);
      auto h = build_hierarchy(c.d, 2, c.levels);
      if (c.distorted)
        distort(h, 0.25, 42);
      const DGOperator op(h, c.levels, c.k, 1.);
      CHECK(op.uses_cartesian_path() == !c.distorted);
      const Eigen::MatrixXd a = to_eigen(assemble_dense(op));
      const Eigen::MatrixXd aq = to_eigen(assemble_dense_quadrature(op));
      const double scale = max_abs(aq);
      CHECK(max_abs(a - aq) <= 1e-12 * scale);
      CHECK(max_abs(a - a.transpose()) <= 1e-12 * scale);
      CHECK(max_abs(aq - aq.transpose()) <= 1e-12 * scale);
      // matrix-free vs assembled multiply
      const Vector u = random_vector(op.n_dofs(), 9);
      Vector v(op.n_dofs());
      op.vmult(v, u);
      const Eigen::VectorXd ref = aq * Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
      CHECK((Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()) - ref).norm() <= 1e-12 * ref.norm());
      if (!c.distorted)
        {
          const DGOperator general(h, c.levels, c.k, 1., true);
          Vector vg(op.n_dofs());
          general.vmult(vg, u);
          CHECK((Eigen::Map<const Eigen::VectorXd>(vg.data(), vg.size()) - ref).norm() <= 1e-12 * ref.norm());
        }
    }
}

TEST_CASE("operator symmetry and definiteness")
{
  for (bool dist : {false, true})
    {
      auto h = build_hierarchy(2, 2, 2);
      if (dist)
        distort(h, 0.25, 3);
      const DGOperator op(h, 1, 3, dist ? 4. : 1.);
      for (int trial = 0; trial < 3; ++trial)
        {
          const Vector u = random_vector(op.n_dofs(), 100 + trial), w = random_vector(op.n_dofs(), 200 + trial);
          Vector au(op.n_dofs()), aw(op.n_dofs());
          op.vmult(au, u);
          op.vmult(aw, w);
          const double s1 = dot(au, w), s2 = dot(u, aw);
          CHECK(std::abs(s1 - s2) <= 1e-12 * std::max(std::abs(s1), l2_norm(au) * l2_norm(w)));
          CHECK(dot(au, u) > 0.);
        }
      const Eigen::MatrixXd a = to_eigen(assemble_dense(op));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
      CHECK(eig.eigenvalues().minCoeff() > 0.);
    }
}

TEST_CASE("one-dimensional two-cell operator equals patch factor")
{
  for (int k = 1; k <= 4; ++k)
    {
      auto h = build_hierarchy(1, 2, 0);
      const DGOperator op(h, 0, k, 1.3);
      const Eigen::MatrixXd a = to_eigen(assemble_dense(op));
      const auto f = univariate_patch_factors(op.basis(), 0.5, 0.5, FaceSide::at_boundary(),
                                              FaceSide::at_boundary(), 1.3);
      CHECK(max_abs(a - to_eigen(f.matrix)) < 1e-12 * max_abs(a));
    }
}

TEST_CASE("face lengths")
{
  auto h = build_hierarchy(2, 4, 0);
  const DGOperator op(h, 0, 2, 1.);
  CHECK(op.face_length(3, 1) == 0.25);
  auto hd = build_hierarchy(2, 4, 0);
  distort(hd, 0.2, 8);
  const DGOperator opd(hd, 0, 2, 1.);
  for (std::size_t c = 0; c < opd.n_cells(); ++c)
    for (int f = 0; f < 4; ++f)
      {
        CHECK(opd.face_length(c, f) > 0.5 * 0.25);
        CHECK(opd.face_length(c, f) < 1.5 * 0.25);
      }
}

TEST_CASE("right-hand side")
{
  auto h = build_hierarchy(2, 2, 1);
  const DGOperator op(h, 1, 3, 1.);
  const auto zero = [](const Point &) { return 0.; };
  for (double v : compute_rhs(op, zero, zero))
    CHECK(v == 0.);

  const auto f1 = [](const Point &x) { return std::sin(x[0]) + x[1]; };
  const auto f2 = [](const Point &x) { return x[0] * x[1]; };
  const auto g = [](const Point &x) { return 1. + x[0]; };
  const auto sum = [&](const Point &x) { return f1(x) + f2(x); };
  const Vector r12 = compute_rhs(op, sum, g), r1 = compute_rhs(op, f1, g), r2 = compute_rhs(op, f2, zero);
  for (std::size_t i = 0; i < r12.size(); ++i)
    CHECK(std::abs(r12[i] - r1[i] - r2[i]) < 1e-13);
}

TEST_CASE("polynomial exactness of the discretization")
{
  // u = x^3 + 2 x y^2 - y^3 + 1 is reproduced exactly with k = 3
  const auto u = [](const Point &x) { return x[0] * x[0] * x[0] + 2. * x[0] * x[1] * x[1] - x[1] * x[1] * x[1] + 1.; };
  const auto f = [](const Point &x) { return -(6. * x[0] + 4. * x[0] - 6. * x[1]); };
  for (bool dist : {false, true})
    {
      auto h = build_hierarchy(2, 2, 1);
      if (dist)
        distort(h, 0.2, 5);
      const DGOperator op(h, 1, 3, 2.);
      const Eigen::MatrixXd a = to_eigen(assemble_dense(op));
      const Vector rhs = compute_rhs(op, f, u);
      const Eigen::VectorXd x = a.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size()));
      const Vector exact = interpolate(op, u);
      double err = 0.;
      for (std::size_t i = 0; i < exact.size(); ++i)
        err = std::max(err, std::abs(x(i) - exact[i]));
      CAPTURE(dist);
      if (!dist)
        CHECK(err < 1e-10);
      else
        CHECK(err < 1e-2); // mapped cells do not contain all cubics
      std::vector<double> xs(x.data(), x.data() + x.size());
      if (!dist)
        CHECK(l2_error(op, xs, u) < 1e-10);
    }
}

TEST_CASE("probing recovers the dense matrix")
{
  auto h = build_hierarchy(2, 4, 0);
  distort(h, 0.2, 4);
  const DGOperator op(h, 0, 2, 4.);
  const Eigen::MatrixXd a = to_eigen(assemble_dense(op));
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  probe_couplings(op, [&](std::size_t r, std::size_t c, double v) { p(r, c) = v; });
  CHECK(max_abs(a - p) == 0.);
}

TEST_CASE("flop counter for operator application")
{
  auto h = build_hierarchy(3, 2, 1);
  FlopCounter counter;
  counter.enable();
  DGOperator op(h, 1, 3, 1.);
  op.set_flop_counter(&counter);
  Vector u(op.n_dofs(), 1.), v(op.n_dofs());
  op.vmult(v, u);
  CHECK(counter.get(Kernel::operator_apply) == op.vmult_flops());
  CHECK(counter.get(Kernel::operator_apply) > 0);
  CHECK_THROWS(op.vmult(std::span<double>(v.data(), 3), u));
}
