#pragma once

#include <array>
#include <limits>
#include <vector>

#include <json.hpp>

#include "etisac/tfs_geometry.h"
#include "etisac/upa_array.h"

namespace etisac {

struct SensingConfig {
  double sigma_s2 = 1e-11;     // W
  double bandwidth_b = 1e9;    // Hz, RMS bandwidth of the baseband symbols
  double t_s = 1.0;            // s
  double p0 = 0.0;             // reference path loss at 1 m; 0 selects the free-space value at carrier_hz
  double carrier_hz = 30e9;
  double c = kSpeedOfLight;

  void validate() const;
  double reference_loss() const;  // p0, or (lambda / 4 pi)^2 when p0 == 0
  double path_gain(double d_o) const { return std::sqrt(reference_loss()) / (d_o * d_o); }
};

/// How the scatterer range/angle derivatives with respect to the kinematics
/// are formed.
enum class JacobianModel {
  kFarField,  // far-field limit: angle rows are unit selectors
  kPrinted,   // angle rows scaled by cos^2(phi_o) and cos(phi_o)
  kExact,     // exact derivatives of the scatterer spherical coordinates
};

struct SensingScenario {
  Kinematics kin;
  ScattererSet set;
  UpaConfig tx;
  UpaConfig rx;
  SensingConfig sense;
  JacobianModel model = JacobianModel::kFarField;
  // When positive, replaces the distance-dependent path gain.
  double gain_override = 0.0;

  double gain() const { return gain_override > 0.0 ? gain_override : sense.path_gain(kin.d_o); }
};

using ThetaJacobian = Eigen::Matrix<double, 3, 4>;

struct MuVectors {
  Vec4 mu1;
  Vec4 mu2;
  Vec4 mu3;
};

/// Range-lever vector and angular selectors for one scatterer.
MuVectors mu_vectors(const Kinematics& kin, const Scatterer& sc, JacobianModel model = JacobianModel::kFarField);

/// d(range, azimuth, elevation of scatterer) / d(kinematics).
ThetaJacobian theta_jacobian(const Kinematics& kin, const Scatterer& sc, JacobianModel model);

struct MuNuTerms {
  std::vector<Vec4> mu1;
  Vec4 mu2 = Vec4::Zero();
  Vec4 mu3 = Vec4::Zero();
  Vec4 mu4 = Vec4::Zero();
  std::vector<double> nu1, nu2, nu23, nu3;
  double nu4 = 0.0;
  bool far_field_ok = true;  // d_o > 2 max ||rho||
};

MuNuTerms nu_terms(const CMat& r_x, const SensingScenario& sc);

struct FisherBlocks {
  Mat4 f_kappa = Mat4::Zero();
  Vec4 f_kappa_g = Vec4::Zero();
  double f_g = 0.0;
};

FisherBlocks fisher_blocks(const SensingScenario& sc, const CMat& r_x);

/// Block assembly from per-scatterer Jacobians; lets callers supply their own
/// geometry derivatives.
FisherBlocks fisher_from_jacobians(const SensingScenario& sc, const CMat& r_x,
                                   std::span<const ThetaJacobian> jacobians);

/// The closed-form EFIM written directly in mu/nu form (no block composition).
Mat4 efim_from_terms(const SensingScenario& sc, const MuNuTerms& t);

Mat4 efim(const FisherBlocks& blocks);

struct CrbReport {
  Mat4 efim = Mat4::Zero();
  Mat4 crb = Mat4::Zero();
  double trace_crb = 0.0;
  double crb_d = 0.0;
  double crb_theta = 0.0;
  double crb_phi = 0.0;
  double crb_orient = 0.0;
  bool singular = false;
  double condition_number = 0.0;
};

CrbReport crb_from_efim(const Mat4& j);
CrbReport crb(const SensingScenario& sc, const CMat& r_x);

/// Single centered scatterer with unit area at the same kinematics.
ScattererSet point_target_set(const Kinematics& kin);

/// Fisher blocks as a linear map of transmit-side quadratic forms. For each
/// scatterer k the six forms are
///   Re(a^H R a), Re(at^H R at), Re(ap^H R ap), Re(at^H R ap), Re(a^H R at), Re(a^H R ap)
/// with at, ap the azimuth and elevation derivatives of a. Applying the
/// coefficient matrix to the stacked forms yields the packed blocks
///   [upper triangle of F (10, row major) | f_kappa_g (4) | f_g].
class FisherOperator {
 public:
  static constexpr int kFormsPerScatterer = 6;
  static constexpr int kPacked = 15;

  explicit FisherOperator(const SensingScenario& sc);

  int num_forms() const { return static_cast<int>(coeffs_.cols()); }
  const MatX& coefficients() const { return coeffs_; }
  // Vector dictionary: for scatterer k, entries 3k, 3k+1, 3k+2 hold a, at, ap.
  const std::vector<CVec>& vectors() const { return vectors_; }
  // (left, right) dictionary indices of each form.
  const std::vector<std::array<int, 2>>& form_pairs() const { return pairs_; }

  VecX forms(const CMat& r_x) const;
  FisherBlocks apply(const VecX& forms) const;
  static FisherBlocks unpack(const VecX& packed);

 private:
  MatX coeffs_;
  std::vector<CVec> vectors_;
  std::vector<std::array<int, 2>> pairs_;
};

void to_json(nlohmann::json& j, const CrbReport& r);

}  // namespace etisac
