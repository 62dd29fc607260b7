#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "etisac/types.h"

namespace etisac {

/// Second-order truncated Fourier series surface, one coefficient vector per
/// local axis. Per-axis layout:
///   [c1 | s_1..s_Q2 | (a_11, b_11), (a_12, b_12), ..., (a_Q1Q2, b_Q1Q2)]
/// evaluating to
///   c1 cos v + sum_m s_m sin(mv) + sum_{l,m} [a_lm T(lu) sin(mv) + b_lm T(lu) cos(mv)]
/// where T = cos for the x and z axes and T = sin for the y axis.
struct TfsShape {
  int q1 = 1;
  int q2 = 1;
  VecX coeff_x;
  VecX coeff_y;
  VecX coeff_z;

  static TfsShape zeros(int q1, int q2);
  static int coeffs_per_axis(int q1, int q2) { return 1 + q2 + 2 * q1 * q2; }
  int coeffs_per_axis() const { return coeffs_per_axis(q1, q2); }
  int total_coeffs() const { return 3 * coeffs_per_axis(); }
  // Throws DomainError when the coefficient vectors disagree with (q1, q2).
  void validate() const;
};

/// Estimand: center range, azimuth, elevation and heading of the target.
struct Kinematics {
  double d_o = 1.0;
  double theta_o = 0.0;
  double phi_o = 0.0;
  double orient = 0.0;

  void validate() const;
  Vec4 as_vector() const { return {d_o, theta_o, phi_o, orient}; }
  static Kinematics from_vector(const Vec4& k) { return {k[0], k[1], k[2], k[3]}; }
};

struct Scatterer {
  double u = 0.0;
  double v = 0.0;
  Vec3 rho = Vec3::Zero();
  Vec3 p_global = Vec3::Zero();
  double area = 0.0;
  double theta_k = 0.0;
  double phi_k = 0.0;
  double d_k = 0.0;
};

struct ScattererSet {
  std::vector<Scatterer> scatterers;
  bool normalized = false;

  std::size_t size() const { return scatterers.size(); }
  double total_area() const;
  double max_offset() const;  // max ||rho_k||
  // Copy with areas rescaled so that they sum to one.
  ScattererSet normalized_copy() const;
};

struct SurfaceSample {
  double u = 0.0;
  double v = 0.0;
  Vec3 xyz = Vec3::Zero();
};

struct FitResult {
  TfsShape shape;
  double rms_residual = 0.0;
};

/// Surface point and its partial derivatives in (u, v).
struct TfsJet {
  Vec3 rho;
  Vec3 d_du;
  Vec3 d_dv;
};

Vec3 tfs_eval(const TfsShape& shape, double u, double v);
TfsJet tfs_eval_jet(const TfsShape& shape, double u, double v);

/// Ordinary least squares fit of the Fourier basis to surface samples.
FitResult fit_tfs(std::span<const SurfaceSample> samples, int q1, int q2);

/// Rotation about the global +z axis.
Mat3 rotation_matrix(double orient);

/// p_o = d_o [sin(theta) cos(phi), cos(theta) cos(phi), sin(phi)].
Vec3 center_position(const Kinematics& kin);
Vec3 direction_vector(double theta, double phi);

/// Global azimuth/elevation/range of a point under the convention of
/// center_position.
struct Spherical {
  double range;
  double theta;
  double phi;
};
Spherical to_spherical(const Vec3& p);

/// Builds a fully populated scatterer from its local surface coordinates.
Scatterer place_scatterer(const Kinematics& kin, double u, double v, const Vec3& rho, double area);

/// Tiles (u, v) into n_u x n_v cells and keeps the cells whose outward normal
/// faces the base station at the origin.
ScattererSet discretize_visible(const TfsShape& shape, const Kinematics& kin, int n_u, int n_v);

// Analytic sample meshes. Each returns an n_u x n_v grid of (u, v, xyz) on the
// star-shaped surface seen from the body center.
std::vector<SurfaceSample> sample_sphere(double radius, int n_u, int n_v);
std::vector<SurfaceSample> sample_cuboid(double length, double width, double height, int n_u, int n_v);
/// Quadcopter-like body: two crossed arms of half-span `arm` plus a central
/// hub of the given height.
std::vector<SurfaceSample> sample_drone(double arm, double height, int n_u, int n_v);

// Fitted shapes used by the built-in scenarios.
TfsShape vehicle_shape();  // 5 x 2 x 1.2 m cuboid, Q1 = Q2 = 8
TfsShape drone_shape();    // arm 1.15 m, height 0.65 m, Q1 = Q2 = 8
TfsShape sphere_shape(double radius = 1.0);

std::vector<SurfaceSample> read_samples_csv(const std::string& path);

void to_json(nlohmann::json& j, const TfsShape& s);
void from_json(const nlohmann::json& j, TfsShape& s);

}  // namespace etisac
