#include <doctest.h>

#include <random>

#include "etisac/crb_engine.h"
#include "etisac/fim_oracle.h"

using namespace etisac;

namespace {

SensingScenario small_scene(JacobianModel model = JacobianModel::kFarField) {
  SensingScenario s;
  s.tx = s.rx = UpaConfig{4, 4, 0.5};
  s.kin = {15.0, deg2rad(12), deg2rad(-18), deg2rad(40)};
  s.set = discretize_visible(sphere_shape(1.0), s.kin, 3, 3);
  s.model = model;
  return s;
}

CMat random_psd(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
  const CMat r = a * a.adjoint();
  return r / r.trace().real();
}

double rel_diff(const FisherBlocks& a, const FisherBlocks& b) {
  const double num = (a.f_kappa - b.f_kappa).norm() + (a.f_kappa_g - b.f_kappa_g).norm() + std::abs(a.f_g - b.f_g);
  const double den = b.f_kappa.norm() + b.f_kappa_g.norm() + std::abs(b.f_g);
  return num / den;
}

}  // namespace

TEST_SUITE("crb") {

TEST_CASE("exact Jacobian matches differences of the scatterer coordinates") {
  const SensingScenario s = small_scene();
  REQUIRE(s.set.size() > 0);
  const double h = 1e-6;
  for (const auto& sc : s.set.scatterers) {
    const ThetaJacobian jac = theta_jacobian(s.kin, sc, JacobianModel::kExact);
    for (int i = 0; i < 4; ++i) {
      Vec4 kp = s.kin.as_vector(), km = kp;
      kp[i] += h;
      km[i] -= h;
      const Scatterer a = place_scatterer(Kinematics::from_vector(kp), sc.u, sc.v, sc.rho, sc.area);
      const Scatterer b = place_scatterer(Kinematics::from_vector(km), sc.u, sc.v, sc.rho, sc.area);
      CHECK(jac(0, i) == doctest::Approx((a.d_k - b.d_k) / (2 * h)).epsilon(1e-6));
      CHECK(jac(1, i) == doctest::Approx((a.theta_k - b.theta_k) / (2 * h)).epsilon(1e-6));
      CHECK(jac(2, i) == doctest::Approx((a.phi_k - b.phi_k) / (2 * h)).epsilon(1e-6));
    }
  }
}

TEST_CASE("range lever of the far-field model approaches the exact one with distance") {
  SensingScenario s = small_scene();
  s.kin.d_o = 5000.0;
  const Scatterer sc = place_scatterer(s.kin, 0.3, 1.2, tfs_eval(sphere_shape(1.0), 0.3, 1.2), 0.1);
  const MuVectors mu = mu_vectors(s.kin, sc);
  const ThetaJacobian exact = theta_jacobian(s.kin, sc, JacobianModel::kExact);
  CHECK((mu.mu1 - exact.row(0).transpose()).norm() < 1e-3);
}

TEST_CASE("isotropic illumination delivers the power on every direction") {
  SensingScenario s = small_scene();
  const CMat r = CMat::Identity(16, 16) * (2.0 / 16);
  const CVec a = steering(s.tx, 0.3, -0.2);
  CHECK(a.dot(r * a).real() == doctest::Approx(2.0));
  // A matched beam collects the full array gain P_t N_t.
  const CMat m = 2.0 / 16 * a * a.adjoint();
  CHECK(a.dot(m * a).real() == doctest::Approx(2.0 * 16));
}

TEST_CASE("point target carries no heading information") {
  SensingScenario s = small_scene();
  s.set = point_target_set(s.kin);
  REQUIRE(s.set.size() == 1);
  const FisherBlocks fb = fisher_blocks(s, random_psd(16, 4));
  CHECK(fb.f_kappa.row(3).norm() <= 1e-12 * fb.f_kappa.norm());
  CHECK(std::abs(fb.f_kappa_g[3]) <= 1e-12 * fb.f_kappa_g.norm());
  const CrbReport r = crb_from_efim(efim(fb));
  CHECK(r.singular);
  CHECK(std::isinf(r.crb_orient));
  CHECK(r.crb_d > 0.0);
}

TEST_CASE("Fisher information is linear in the covariance") {
  const SensingScenario s = small_scene();
  const CMat r = random_psd(16, 9);
  const FisherBlocks a = fisher_blocks(s, r), b = fisher_blocks(s, 3.5 * r);
  CHECK((b.f_kappa - 3.5 * a.f_kappa).norm() <= 1e-12 * b.f_kappa.norm());
  CHECK(b.f_g == doctest::Approx(3.5 * a.f_g));
  const CrbReport ca = crb(s, r), cb = crb(s, 3.5 * r);
  CHECK(cb.trace_crb == doctest::Approx(ca.trace_crb / 3.5).epsilon(1e-10));
}

TEST_CASE("linear operator reproduces the direct Fisher blocks") {
  for (auto model : {JacobianModel::kFarField, JacobianModel::kPrinted, JacobianModel::kExact}) {
    const SensingScenario s = small_scene(model);
    const FisherOperator op(s);
    CHECK(op.num_forms() == FisherOperator::kFormsPerScatterer * static_cast<int>(s.set.size()));
    const CMat r = random_psd(16, 11);
    CHECK(rel_diff(op.apply(op.forms(r)), fisher_blocks(s, r)) < 1e-12);
  }
}

TEST_CASE("closed-form EFIM equals the block Schur complement") {
  const SensingScenario s = small_scene();
  const CMat r = random_psd(16, 13);
  const Mat4 a = efim_from_terms(s, nu_terms(r, s));
  const Mat4 b = efim(fisher_blocks(s, r));
  CHECK((a - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("EFIM is positive semidefinite and the CRB inverts it") {
  const SensingScenario s = small_scene();
  const CrbReport r = crb(s, random_psd(16, 17));
  CHECK_FALSE(r.singular);
  const Eigen::SelfAdjointEigenSolver<Mat4> es(r.efim);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK((r.efim * r.crb - Mat4::Identity()).norm() < 1e-8);
  CHECK(r.trace_crb == doctest::Approx(r.crb.trace()));
}

TEST_CASE("analytic blocks agree with the simulated-echo oracle") {
  SensingScenario s = small_scene(JacobianModel::kExact);
  const CMat r = random_psd(16, 21);
  const OracleResult o = numeric_fim_oracle(s, r);
  const FisherBlocks a = fisher_blocks(s, r);
  for (int i = 0; i < 4; ++i) CHECK(a.f_kappa(i, i) == doctest::Approx(o.blocks.f_kappa(i, i)).epsilon(1e-4));
  CHECK(a.f_g == doctest::Approx(o.blocks.f_g).epsilon(1e-4));
  CHECK(o.covariance_deviation < 1e-10);
}

TEST_CASE("covariance shape is checked") {
  const SensingScenario s = small_scene();
  CHECK_THROWS(fisher_blocks(s, CMat::Identity(8, 8)));
}

}
