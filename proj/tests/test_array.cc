#include <doctest.h>

#include <random>

#include "etisac/upa_array.h"

using namespace etisac;

TEST_SUITE("array") {

TEST_CASE("steering vectors have unit-modulus entries") {
  const UpaConfig cfg{8, 4, 0.5};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ang(-1.2, 1.2);
  for (int i = 0; i < 10; ++i) {
    const CVec a = steering(cfg, ang(rng), ang(rng));
    REQUIRE(a.size() == 32);
    for (Eigen::Index k = 0; k < a.size(); ++k) CHECK(std::abs(a[k]) == doctest::Approx(1.0));
  }
  const CVec broadside = steering(cfg, 0.0, 0.0);
  CHECK((broadside - CVec::Ones(32)).norm() < 1e-12);
}

TEST_CASE("centered offsets are symmetric") {
  const VecX m = centered_offsets(4);
  CHECK(m[0] == doctest::Approx(-1.5));
  CHECK(m[3] == doctest::Approx(1.5));
  CHECK(m.sum() == doctest::Approx(0.0));
}

TEST_CASE("analytic derivatives match central differences") {
  const UpaConfig cfg{8, 8, 0.5};
  const double h = 1e-6;
  for (double th : {-0.7, 0.0, 0.4})
    for (double ph : {-0.5, 0.2}) {
      const SteeringBundle b = steering_derivs(cfg, th, ph);
      CHECK((b.a - steering(cfg, th, ph)).norm() < 1e-12);
      const CVec dt = (steering(cfg, th + h, ph) - steering(cfg, th - h, ph)) / (2 * h);
      const CVec dp = (steering(cfg, th, ph + h) - steering(cfg, th, ph - h)) / (2 * h);
      CHECK((b.da_dtheta - dt).norm() < 1e-6 * dt.norm() + 1e-8);
      CHECK((b.da_dphi - dp).norm() < 1e-6 * dp.norm() + 1e-8);
    }
}

TEST_CASE("a^H da is purely imaginary for a centered array") {
  const UpaConfig cfg{6, 4, 0.5};
  const SteeringBundle b = steering_derivs(cfg, 0.3, -0.4);
  CHECK(std::abs(b.a.dot(b.da_dtheta).real()) < 1e-9);
  CHECK(std::abs(b.a.dot(b.da_dphi).real()) < 1e-9);
  // The phase reference at the array center makes the projections vanish
  // entirely.
  CHECK(std::abs(b.a.dot(b.da_dtheta)) < 1e-9);
  CHECK(std::abs(b.a.dot(b.da_dphi)) < 1e-9);
}

TEST_CASE("Z coefficients match finite-difference inner products") {
  const UpaConfig cfg{8, 8, 0.5};
  const double th = 0.25, ph = -0.35, h = 1e-6;
  const CVec dt = (steering(cfg, th + h, ph) - steering(cfg, th - h, ph)) / (2 * h);
  const CVec dp = (steering(cfg, th, ph + h) - steering(cfg, th, ph - h)) / (2 * h);
  const ZCoeffs z = z_coeffs(cfg, th, ph);
  const double n = cfg.size();
  CHECK(z.z00 == doctest::Approx(dt.squaredNorm() / n).epsilon(1e-6));
  CHECK(z.z01 == doctest::Approx(dt.dot(dp).real() / n).epsilon(1e-5));
  CHECK(z.z11 == doctest::Approx(dp.squaredNorm() / n).epsilon(1e-6));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(UpaConfig({0, 4, 0.5}).validate(), DomainError);
  CHECK_THROWS_AS(UpaConfig({4, 4, -0.5}).validate(), DomainError);
}

}
