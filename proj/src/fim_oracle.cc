#include "etisac/fim_oracle.h"

#include <cmath>
#include <cstdint>
#include <unordered_set>

namespace etisac {

namespace {

struct Tone {
  std::int64_t harmonic;  // frequency = harmonic / t_s
  double amplitude;
};

// Array response built from element positions (in wavelengths) and the
// propagation direction.
CVec array_response(const UpaConfig& cfg, double theta, double phi) {
  const Vec3 dir(std::sin(theta) * std::cos(phi), std::cos(theta) * std::cos(phi), std::sin(phi));
  CVec out(cfg.n_x * cfg.n_z);
  for (int iz = 0; iz < cfg.n_z; ++iz) {
    for (int ix = 0; ix < cfg.n_x; ++ix) {
      const Vec3 pos(cfg.spacing * (ix - 0.5 * (cfg.n_x - 1)), 0.0, cfg.spacing * (iz - 0.5 * (cfg.n_z - 1)));
      out[iz * cfg.n_x + ix] = std::polar(1.0, -2.0 * kPi * pos.dot(dir));
    }
  }
  return out;
}

std::vector<std::vector<Tone>> design_streams(int n_streams, double bandwidth, double t_s) {
  const auto centre = static_cast<std::int64_t>(std::llround(bandwidth * t_s));
  if (centre <= 2 * (n_streams + 1)) {
    throw DomainError("bandwidth-time product too small for distinct per-stream tones");
  }
  std::vector<std::vector<Tone>> streams(n_streams);
  for (int i = 0; i < n_streams; ++i) {
    const std::int64_t lo = centre - (i + 1);
    const std::int64_t hi = centre + (i + 1);
    const double flo = lo / t_s, fhi = hi / t_s;
    const double w_hi = (bandwidth * bandwidth - flo * flo) / (fhi * fhi - flo * flo);
    const double w_lo = 1.0 - w_hi;
    for (std::int64_t sgn : {-1, 1}) {
      streams[i].push_back({sgn * lo, std::sqrt(w_lo / 2)});
      streams[i].push_back({sgn * hi, std::sqrt(w_hi / 2)});
    }
  }
  return streams;
}

int alias_free_samples(const std::vector<std::vector<Tone>>& streams, int at_least) {
  for (int n = std::max(at_least, 8);; ++n) {
    std::unordered_set<std::int64_t> bins;
    bool ok = true;
    for (const auto& s : streams) {
      for (const auto& t : s) {
        const std::int64_t r = ((t.harmonic % n) + n) % n;
        if (!bins.insert(r).second) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) return n;
  }
}

class EchoModel {
 public:
  EchoModel(const SensingScenario& sc, const CMat& r_x, int min_samples) : sc_(sc) {
    const int nt = sc.tx.size();
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (r_x + r_x.adjoint()));
    const VecX lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    precoder_ = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    streams_ = design_streams(nt, sc.sense.bandwidth_b, sc.sense.t_s);
    n_ = alias_free_samples(streams_, min_samples);
  }

  int samples() const { return n_; }

  double covariance_deviation() const {
    const int ns = static_cast<int>(streams_.size());
    CMat s(ns, n_);
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < n_; ++j) s(i, j) = stream_value(i, j, 0.0);
    const CMat cov = s * s.adjoint() / static_cast<double>(n_);
    return (cov - CMat::Identity(ns, ns)).cwiseAbs().maxCoeff();
  }

  // Echo of one scatterer (without the random cross section), sampled on the
  // time grid, flattened receive-element-major.
  CVec echo(const Scatterer& base, const Vec4& kin_vec, double gain) const {
    const Kinematics kin = Kinematics::from_vector(kin_vec);
    const Scatterer s = place_scatterer(kin, base.u, base.v, base.rho, base.area);
    const CVec a = array_response(sc_.tx, s.theta_k, s.phi_k);
    const CVec b = array_response(sc_.rx, s.theta_k, s.phi_k);
    const CVec weights = precoder_.adjoint() * a;  // conj of a^H W
    const double delay = 2.0 * s.d_k / sc_.sense.c;
    CVec y = CVec::Zero(n_);
    for (int i = 0; i < weights.size(); ++i) {
      const cplx wi = std::conj(weights[i]);
      for (int j = 0; j < n_; ++j) y[j] += wi * stream_value(i, j, delay);
    }
    CVec out(b.size() * n_);
    for (int r = 0; r < b.size(); ++r) out.segment(static_cast<Eigen::Index>(r) * n_, n_) = gain * b[r] * y;
    return out;
  }

 private:
  cplx stream_value(int stream, int sample, double delay) const {
    cplx v = 0.0;
    for (const auto& t : streams_[stream]) {
      const std::int64_t grid = ((t.harmonic * sample) % n_ + n_) % n_;
      const double shift = std::fmod(static_cast<double>(t.harmonic) * (delay / sc_.sense.t_s), 1.0);
      v += std::polar(t.amplitude, 2.0 * kPi * (static_cast<double>(grid) / n_ - shift));
    }
    return v;
  }

  const SensingScenario& sc_;
  CMat precoder_;
  std::vector<std::vector<Tone>> streams_;
  int n_ = 0;
};

// Full 5 x 5 Fisher matrix over (kinematics, gain) by central differences.
Eigen::Matrix<double, 5, 5> differenced_fim(const SensingScenario& sc, const EchoModel& model, double h) {
  Eigen::Matrix<double, 5, 1> xi;
  xi << sc.kin.as_vector(), sc.gain();
  const double dt = sc.sense.t_s / model.samples();
  Eigen::Matrix<double, 5, 5> fim = Eigen::Matrix<double, 5, 5>::Zero();
  for (const auto& s : sc.set.scatterers) {
    std::array<CVec, 5> deriv;
    for (int p = 0; p < 5; ++p) {
      Eigen::Matrix<double, 5, 1> up = xi, dn = xi;
      up[p] += h;
      dn[p] -= h;
      deriv[p] = (model.echo(s, up.head<4>(), up[4]) - model.echo(s, dn.head<4>(), dn[4])) / (2 * h);
    }
    for (int p = 0; p < 5; ++p)
      for (int q = p; q < 5; ++q) {
        const double v = s.area * deriv[p].dot(deriv[q]).real() * dt;
        fim(p, q) += v;
        if (q != p) fim(q, p) += v;
      }
  }
  return fim * (2.0 / sc.sense.sigma_s2);
}

}  // namespace

OracleResult numeric_fim_oracle(const SensingScenario& sc, const CMat& r_x, const OracleOptions& opts) {
  if (!(opts.fd_step >= 1e-7 && opts.fd_step <= 1e-4)) throw DomainError("fd_step must lie in [1e-7, 1e-4]");
  if (r_x.rows() != sc.tx.size() || r_x.cols() != sc.tx.size())
    throw DomainError("transmit covariance must be N_t x N_t");
  sc.sense.validate();
  const EchoModel model(sc, r_x, opts.n_time_samples);

  const auto coarse = differenced_fim(sc, model, opts.fd_step);
  const auto fine = differenced_fim(sc, model, opts.fd_step / 2);
  const Eigen::Matrix<double, 5, 5> extrapolated = (4.0 * fine - coarse) / 3.0;

  OracleResult out;
  out.n_time_samples = model.samples();
  out.covariance_deviation = model.covariance_deviation();
  out.richardson_gap = (fine.topLeftCorner<4, 4>() - coarse.topLeftCorner<4, 4>()).norm() /
                       std::max(fine.topLeftCorner<4, 4>().norm(), 1e-300);
  out.precision_warning = out.richardson_gap > 1e-4;
  out.blocks.f_kappa = extrapolated.topLeftCorner<4, 4>();
  out.blocks.f_kappa_g = extrapolated.block<4, 1>(0, 4);
  out.blocks.f_g = extrapolated(4, 4);
  return out;
}

}  // namespace etisac
