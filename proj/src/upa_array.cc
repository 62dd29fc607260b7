#include "etisac/upa_array.h"

#include <cmath>

namespace etisac {

void UpaConfig::validate() const {
  if (n_x < 1 || n_z < 1) throw DomainError("array dimensions must be >= 1");
  if (!(spacing > 0.0)) throw DomainError("element spacing must be positive");
}

VecX centered_offsets(int n) {
  VecX m(n);
  for (int i = 0; i < n; ++i) m[i] = i - 0.5 * (n - 1);
  return m;
}

namespace {

// Phase slope per unit offset along x and z, and their angular derivatives.
struct PhaseSlopes {
  double kx, kz;
  double dkx_dtheta, dkx_dphi, dkz_dphi;
};

PhaseSlopes slopes(const UpaConfig& cfg, double theta, double phi) {
  const double w = -kPi * 2.0 * cfg.spacing;
  return {w * std::sin(theta) * std::cos(phi), w * std::sin(phi), w * std::cos(theta) * std::cos(phi),
          -w * std::sin(theta) * std::sin(phi), w * std::cos(phi)};
}

}  // namespace

CVec steering(const UpaConfig& cfg, double theta, double phi) {
  cfg.validate();
  const PhaseSlopes s = slopes(cfg, theta, phi);
  const VecX mx = centered_offsets(cfg.n_x);
  const VecX mz = centered_offsets(cfg.n_z);
  CVec a(cfg.size());
  for (int iz = 0; iz < cfg.n_z; ++iz) {
    for (int ix = 0; ix < cfg.n_x; ++ix) {
      a[iz * cfg.n_x + ix] = std::polar(1.0, s.kx * mx[ix] + s.kz * mz[iz]);
    }
  }
  return a;
}

SteeringBundle steering_derivs(const UpaConfig& cfg, double theta, double phi) {
  const PhaseSlopes s = slopes(cfg, theta, phi);
  const VecX mx = centered_offsets(cfg.n_x);
  const VecX mz = centered_offsets(cfg.n_z);
  SteeringBundle b{steering(cfg, theta, phi), CVec(cfg.size()), CVec(cfg.size())};
  const cplx j(0.0, 1.0);
  for (int iz = 0; iz < cfg.n_z; ++iz) {
    for (int ix = 0; ix < cfg.n_x; ++ix) {
      const int idx = iz * cfg.n_x + ix;
      b.da_dtheta[idx] = j * (s.dkx_dtheta * mx[ix]) * b.a[idx];
      b.da_dphi[idx] = j * (s.dkx_dphi * mx[ix] + s.dkz_dphi * mz[iz]) * b.a[idx];
    }
  }
  return b;
}

ZCoeffs z_coeffs(const UpaConfig& cfg, double theta, double phi) {
  const SteeringBundle b = steering_derivs(cfg, theta, phi);
  const double n = cfg.size();
  return {b.da_dtheta.squaredNorm() / n, b.da_dtheta.dot(b.da_dphi).real() / n, b.da_dphi.squaredNorm() / n};
}

}  // namespace etisac
