#include <doctest.h>

#include <random>

#include "etisac/tfs_geometry.h"

using namespace etisac;

TEST_SUITE("geometry") {

TEST_CASE("sphere fit reproduces the sampled surface") {
  const auto samples = sample_sphere(1.3, 24, 24);
  const FitResult f = fit_tfs(samples, 2, 2);
  CHECK(f.rms_residual < 1e-9);
  for (const auto& s : samples) CHECK((tfs_eval(f.shape, s.u, s.v) - s.xyz).norm() < 1e-8);
}

TEST_CASE("fit rejects too few samples") {
  const auto samples = sample_sphere(1.0, 3, 3);
  CHECK_THROWS_AS(fit_tfs(samples, 8, 8), SingularFitError);
}

TEST_CASE("jet matches central differences") {
  const TfsShape shape = vehicle_shape();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-kPi + 0.1, kPi - 0.1), v(-kPi / 2 + 0.1, kPi / 2 - 0.1);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const double uu = u(rng), vv = v(rng);
    const TfsJet j = tfs_eval_jet(shape, uu, vv);
    CHECK((j.rho - tfs_eval(shape, uu, vv)).norm() < 1e-12);
    const Vec3 du = (tfs_eval(shape, uu + h, vv) - tfs_eval(shape, uu - h, vv)) / (2 * h);
    const Vec3 dv = (tfs_eval(shape, uu, vv + h) - tfs_eval(shape, uu, vv - h)) / (2 * h);
    CHECK((j.d_du - du).norm() < 1e-6 * (1 + du.norm()));
    CHECK((j.d_dv - dv).norm() < 1e-6 * (1 + dv.norm()));
  }
}

TEST_CASE("coefficient layout is validated") {
  TfsShape s = TfsShape::zeros(2, 3);
  CHECK(s.coeffs_per_axis() == 1 + 3 + 12);
  CHECK_NOTHROW(s.validate());
  s.coeff_y.resize(3);
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("center position and spherical round trip") {
  const Kinematics kin{8.7, 0.0, deg2rad(-23), 0.0};
  const Vec3 p = center_position(kin);
  CHECK(p.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(8.008).epsilon(1e-3));
  CHECK(p.z() == doctest::Approx(-3.399).epsilon(1e-3));
  const Kinematics k2{12.0, deg2rad(31), deg2rad(-14), 0.3};
  const Spherical s = to_spherical(center_position(k2));
  CHECK(s.range == doctest::Approx(12.0));
  CHECK(s.theta == doctest::Approx(k2.theta_o));
  CHECK(s.phi == doctest::Approx(k2.phi_o));
}

TEST_CASE("rotation is orthonormal about z") {
  const Mat3 r = rotation_matrix(0.7);
  CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-14);
  CHECK(r.determinant() == doctest::Approx(1.0));
  CHECK((r * Vec3::UnitZ() - Vec3::UnitZ()).norm() < 1e-15);
}

TEST_CASE("default vehicle grid keeps 38 visible patches") {
  const ScattererSet set = discretize_visible(vehicle_shape(), {8.7, 0.0, deg2rad(-23), 0.0}, 13, 6);
  CHECK(set.size() == 38);
  for (const auto& s : set.scatterers) {
    CHECK(s.area > 0.0);
    CHECK((s.p_global - (center_position({8.7, 0.0, deg2rad(-23), 0.0}) + s.rho)).norm() < 1e-9);
  }
}

TEST_CASE("visible half of a distant sphere has area close to 2 pi") {
  const ScattererSet set = discretize_visible(sphere_shape(1.0), {1e4, 0.2, -0.1, 0.0}, 60, 60);
  CHECK(set.total_area() == doctest::Approx(2 * kPi).epsilon(0.03));
  const ScattererSet n = set.normalized_copy();
  CHECK(n.total_area() == doctest::Approx(1.0));
  CHECK(n.normalized);
}

TEST_CASE("kinematics validation") {
  CHECK_THROWS_AS(Kinematics({-1.0, 0, 0, 0}).validate(), DomainError);
  CHECK_THROWS_AS(Kinematics({5.0, 0, 0, 4.0}).validate(), DomainError);
  CHECK_NOTHROW(Kinematics({5.0, 0.1, -0.2, 3.0}).validate());
}

}
