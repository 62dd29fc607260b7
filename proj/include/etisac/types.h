#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace etisac {

using cplx = std::complex<double>;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }
inline double db2lin(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm2watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Error categories. Each carries a human-readable message; callers that need
// to branch catch the specific type.
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VisibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroIlluminationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidBlocksError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConditioningError : std::runtime_error {
  ConditioningError(const std::string& what, double cond)
      : std::runtime_error(what), condition_number(cond) {}
  double condition_number;
};
struct InfeasibleError : std::runtime_error {
  InfeasibleError(const std::string& what, double phase1_value)
      : std::runtime_error(what), certificate(phase1_value) {}
  // Optimal value of the phase-I problem (> 0 proves infeasibility).
  double certificate;
};
struct MaxIterationsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RandomizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace etisac
