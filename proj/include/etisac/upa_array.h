#pragma once

#include "etisac/types.h"

namespace etisac {

/// Uniform planar array in the global Oxz plane. Elements are indexed z-major:
/// element (ix, iz) sits at position iz * n_x + ix.
struct UpaConfig {
  int n_x = 8;
  int n_z = 8;
  double spacing = 0.5;  // in wavelengths

  int size() const { return n_x * n_z; }
  void validate() const;
};

struct SteeringBundle {
  CVec a;
  CVec da_dtheta;
  CVec da_dphi;
};

/// Steering vector referenced to the array center.
CVec steering(const UpaConfig& cfg, double theta, double phi);

/// Steering vector and its analytic derivatives in azimuth and elevation.
SteeringBundle steering_derivs(const UpaConfig& cfg, double theta, double phi);

/// Receive-side inner products of the steering derivatives, normalized by N.
struct ZCoeffs {
  double z00 = 0.0;
  double z01 = 0.0;
  double z11 = 0.0;
};
ZCoeffs z_coeffs(const UpaConfig& cfg, double theta, double phi);

/// Centered element offsets along one axis: i - (n - 1) / 2.
VecX centered_offsets(int n);

}  // namespace etisac
