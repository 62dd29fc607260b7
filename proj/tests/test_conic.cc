#include <doctest.h>

#include <random>

#include "etisac/conic_solver.h"

using namespace etisac;

namespace {

CMat random_herm(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
  return 0.5 * (a + a.adjoint());
}

// minimize <C, X> subject to tr X = 1, X >= 0: the smallest eigenvalue of C.
ConeProblem min_eig_problem(const CMat& c) {
  ConeProblem p;
  p.herm_dims = {static_cast<int>(c.rows())};
  const int op_c = p.add_op(HermOp::matrix(c));
  const int op_i = p.add_op(HermOp::identity());
  p.objective.herm.push_back({0, op_c, 1.0});
  ConeExpr tr;
  tr.herm.push_back({0, op_i, 1.0});
  tr.constant = -1.0;
  p.add_equality(tr);
  return p;
}

}  // namespace

TEST_SUITE("conic") {

TEST_CASE("smallest eigenvalue as a semidefinite program") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const CMat c = random_herm(6, seed);
    const Eigen::SelfAdjointEigenSolver<CMat> es(c);
    const ConeResult r = solve_cone(min_eig_problem(c));
    REQUIRE(r.converged);
    CHECK(r.status == "optimal");
    CHECK(r.primal_objective == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-6));
    CHECK(r.dual_objective == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-6));
    // The minimizer is the projector onto the bottom eigenvector.
    const CVec v = es.eigenvectors().col(0);
    CHECK((r.x.herm[0] - v * v.adjoint()).norm() < 1e-3);
  }
}

TEST_CASE("linear program with a known vertex") {
  // minimize x0 + 2 x1 + 3 x2 subject to x0 + x1 + x2 = 1, x1 - x2 >= 0.5.
  ConeProblem p;
  const int x = p.add_lin(3);
  p.objective = ConeExpr::lin_var(x, 1.0).add(ConeExpr::lin_var(x + 1, 2.0)).add(ConeExpr::lin_var(x + 2, 3.0));
  ConeExpr sum = ConeExpr::lin_var(x).add(ConeExpr::lin_var(x + 1)).add(ConeExpr::lin_var(x + 2));
  sum.constant = -1.0;
  p.add_equality(sum);
  ConeExpr diff = ConeExpr::lin_var(x + 1).add(ConeExpr::lin_var(x + 2), -1.0);
  diff.constant = -0.5;
  p.add_inequality(diff);
  const ConeResult r = solve_cone(p);
  REQUIRE(r.converged);
  // x = (0.5, 0.5, 0).
  CHECK(r.primal_objective == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(r.x.lin[x + 1] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("real symmetric block: inverse bound through a 2x2 LMI") {
  // [[a, 1], [1, t]] >= 0 with a = 4 gives t >= 1/4.
  ConeProblem p;
  const int y = p.add_sym(2);
  ConeExpr a = ConeExpr::sym_entry(y, 0, 0);
  a.constant = -4.0;
  p.add_equality(a);
  ConeExpr off = ConeExpr::sym_entry(y, 0, 1);
  off.constant = -1.0;
  p.add_equality(off);
  p.objective = ConeExpr::sym_entry(y, 1, 1);
  const ConeResult r = solve_cone(p);
  REQUIRE(r.converged);
  CHECK(r.primal_objective == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("infeasible problems do not report optimal") {
  // x >= 0 with x = -1.
  ConeProblem p;
  const int x = p.add_lin();
  ConeExpr e = ConeExpr::lin_var(x);
  e.constant = 1.0;
  p.add_equality(e);
  p.objective = ConeExpr::lin_var(x);
  const ConeResult r = solve_cone(p);
  CHECK_FALSE(r.converged);
}

TEST_CASE("Schur complement kernels agree") {
  const CMat c = random_herm(5, 7);
  ConeProblem p = min_eig_problem(c);
  const int op_u = p.add_op(HermOp::outer(CVec::Ones(5)));
  ConeExpr e;
  e.herm.push_back({0, op_u, 1.0});
  e.constant = -0.3;
  p.add_equality(e);
  ConePoint x, z;
  const CMat a = random_herm(5, 8);
  x.herm = {a * a + CMat::Identity(5, 5)};
  z.herm = {CMat::Identity(5, 5) * 2.0 + 0.1 * a};
  x.lin = z.lin = VecX();
  const MatX s = schur_complement_serial(p, x, z);
  const MatX q = schur_complement_parallel(p, x, z);
  CHECK((s - q).norm() <= 1e-13 * s.norm());
  CHECK((s - s.transpose()).norm() <= 1e-12 * s.norm());
}

TEST_CASE("evaluate applies the operators") {
  const CMat c = random_herm(3, 4);
  ConeProblem p = min_eig_problem(c);
  ConePoint x;
  x.herm = {CMat::Identity(3, 3)};
  x.lin = VecX();
  CHECK(evaluate(p, p.objective, x) == doctest::Approx(c.trace().real()));
}

TEST_CASE("malformed problems are rejected") {
  ConeProblem p;
  p.herm_dims = {2};
  ConeExpr e;
  e.herm.push_back({3, 0, 1.0});
  p.add_equality(e);
  CHECK_THROWS(solve_cone(p));
}

}
