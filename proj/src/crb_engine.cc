#include "etisac/crb_engine.h"

#include <cmath>

namespace etisac {

namespace {

Mat4 symmetrized(const Mat4& m) { return 0.5 * (m + m.transpose()); }

struct QuadForms {
  double e, tt, pp, tp, at, ap;
};

QuadForms quad_forms(const CMat& r_x, const SteeringBundle& b) {
  const CVec ra = r_x * b.a;
  const CVec rt = r_x * b.da_dtheta;
  const CVec rp = r_x * b.da_dphi;
  return {b.a.dot(ra).real(),          b.da_dtheta.dot(rt).real(), b.da_dphi.dot(rp).real(),
          b.da_dtheta.dot(rp).real(),  b.a.dot(rt).real(),         b.a.dot(rp).real()};
}

void check_covariance(const CMat& r_x, const UpaConfig& tx) {
  if (r_x.rows() != tx.size() || r_x.cols() != tx.size())
    throw DomainError("transmit covariance must be N_t x N_t");
  if ((r_x - r_x.adjoint()).norm() > 1e-9 * std::max(1.0, r_x.norm()))
    throw DomainError("transmit covariance must be Hermitian");
}

}  // namespace

void SensingConfig::validate() const {
  if (!(sigma_s2 > 0) || !(bandwidth_b > 0) || !(t_s > 0) || !(c > 0) || p0 < 0 || !(carrier_hz > 0))
    throw DomainError("sensing configuration values must be positive");
}

double SensingConfig::reference_loss() const {
  if (p0 > 0) return p0;
  const double lambda = c / carrier_hz;
  const double r = lambda / (4 * kPi);
  return r * r;
}

MuVectors mu_vectors(const Kinematics& kin, const Scatterer& sc, JacobianModel model) {
  const double st = std::sin(kin.theta_o), ct = std::cos(kin.theta_o);
  const double sp = std::sin(kin.phi_o), cp = std::cos(kin.phi_o);
  // Columns: sensitivity of the range to azimuth, elevation and heading,
  // per unit of the rotated local offset.
  Mat3 lever;
  lever << ct * cp, -st * sp, ct * cp,
           -st * cp, -ct * sp, -st * cp,
           0.0, cp, 0.0;
  const Vec3 rotated = rotation_matrix(kin.orient) * sc.rho;
  MuVectors mu;
  mu.mu1 << 1.0, (rotated.transpose() * lever).transpose();
  if (model == JacobianModel::kPrinted) {
    mu.mu2 << 0.0, cp * cp, 0.0, 0.0;
    mu.mu3 << 0.0, 0.0, cp, 0.0;
  } else {
    mu.mu2 << 0.0, 1.0, 0.0, 0.0;
    mu.mu3 << 0.0, 0.0, 1.0, 0.0;
  }
  return mu;
}

ThetaJacobian theta_jacobian(const Kinematics& kin, const Scatterer& sc, JacobianModel model) {
  ThetaJacobian jac;
  if (model != JacobianModel::kExact) {
    const MuVectors mu = mu_vectors(kin, sc, model);
    jac.row(0) = mu.mu1.transpose();
    jac.row(1) = mu.mu2.transpose();
    jac.row(2) = mu.mu3.transpose();
    return jac;
  }
  const double st = std::sin(kin.theta_o), ct = std::cos(kin.theta_o);
  const double sp = std::sin(kin.phi_o), cp = std::cos(kin.phi_o);
  const double so = std::sin(kin.orient), co = std::cos(kin.orient);
  Eigen::Matrix<double, 3, 4> dp;
  dp.col(0) << st * cp, ct * cp, sp;
  dp.col(1) << kin.d_o * ct * cp, -kin.d_o * st * cp, 0.0;
  dp.col(2) << -kin.d_o * st * sp, -kin.d_o * ct * sp, kin.d_o * cp;
  Mat3 dv;
  dv << -so, -co, 0, co, -so, 0, 0, 0, 0;
  dp.col(3) = dv * sc.rho;

  const Vec3 p = center_position(kin) + rotation_matrix(kin.orient) * sc.rho;
  const double d = p.norm();
  const double horiz2 = p.x() * p.x() + p.y() * p.y();
  const double horiz = std::sqrt(horiz2);
  if (horiz < 1e-12) throw DomainError("scatterer on the array broadside-normal axis; azimuth undefined");
  for (int i = 0; i < 4; ++i) {
    const Vec3 g = dp.col(i);
    const double dd = p.dot(g) / d;
    jac(0, i) = dd;
    jac(1, i) = (p.y() * g.x() - p.x() * g.y()) / horiz2;
    jac(2, i) = (g.z() - p.z() * dd / d) / horiz;
  }
  return jac;
}

MuNuTerms nu_terms(const CMat& r_x, const SensingScenario& sc) {
  check_covariance(r_x, sc.tx);
  sc.sense.validate();
  const double range_scale = std::pow(4 * kPi * sc.sense.bandwidth_b / sc.sense.c, 2);
  const double ts = sc.sense.t_s;
  MuNuTerms t;
  const MuVectors center = mu_vectors(sc.kin, Scatterer{}, sc.model);
  t.mu2 = center.mu2;
  t.mu3 = center.mu3;
  t.far_field_ok = sc.kin.d_o > 2.0 * sc.set.max_offset();
  double illum = 0.0;
  for (const auto& s : sc.set.scatterers) {
    const SteeringBundle tx = steering_derivs(sc.tx, s.theta_k, s.phi_k);
    const ZCoeffs z = z_coeffs(sc.rx, s.theta_k, s.phi_k);
    const QuadForms q = quad_forms(r_x, tx);
    const ThetaJacobian jac = theta_jacobian(sc.kin, s, sc.model);
    t.mu1.push_back(jac.row(0).transpose());
    t.nu1.push_back(range_scale * ts * s.area * q.e);
    t.nu2.push_back(ts * s.area * (z.z00 * q.e + q.tt));
    t.nu23.push_back(ts * s.area * (z.z01 * q.e + q.tp));
    t.nu3.push_back(ts * s.area * (z.z11 * q.e + q.pp));
    t.mu4 += s.area * (q.at * jac.row(1).transpose() + q.ap * jac.row(2).transpose());
    illum += s.area * q.e;
  }
  if (!(illum > 0.0)) throw ZeroIlluminationError("transmit covariance does not illuminate the target");
  t.nu4 = 1.0 / illum;
  return t;
}

FisherBlocks fisher_from_jacobians(const SensingScenario& sc, const CMat& r_x,
                                   std::span<const ThetaJacobian> jacobians) {
  check_covariance(r_x, sc.tx);
  sc.sense.validate();
  if (jacobians.size() != sc.set.size()) throw DomainError("one Jacobian per scatterer required");
  const double g = sc.gain();
  const double nr = sc.rx.size();
  const double ts = sc.sense.t_s;
  const double s2 = sc.sense.sigma_s2;
  const double range_scale = std::pow(4 * kPi * sc.sense.bandwidth_b / sc.sense.c, 2);

  FisherBlocks fb;
  double illum = 0.0;
  for (std::size_t k = 0; k < sc.set.size(); ++k) {
    const Scatterer& s = sc.set.scatterers[k];
    const SteeringBundle tx = steering_derivs(sc.tx, s.theta_k, s.phi_k);
    const ZCoeffs z = z_coeffs(sc.rx, s.theta_k, s.phi_k);
    const QuadForms q = quad_forms(r_x, tx);
    // Per-unit-area information on (range, azimuth, elevation) of the scatterer.
    Mat3 info;
    info << range_scale * ts * q.e, 0, 0,
            0, ts * (z.z00 * q.e + q.tt), ts * (z.z01 * q.e + q.tp),
            0, ts * (z.z01 * q.e + q.tp), ts * (z.z11 * q.e + q.pp);
    const ThetaJacobian& jac = jacobians[k];
    fb.f_kappa += s.area * jac.transpose() * info * jac;
    fb.f_kappa_g += s.area * jac.transpose() * Vec3(0.0, q.at, q.ap);
    illum += s.area * q.e;
  }
  if (!(illum > 0.0)) throw ZeroIlluminationError("transmit covariance does not illuminate the target");
  fb.f_kappa = symmetrized(fb.f_kappa * (2 * g * g * nr / s2));
  fb.f_kappa_g *= 2 * g * ts * nr / s2;
  fb.f_g = 2 * ts * nr / s2 * illum;
  return fb;
}

FisherBlocks fisher_blocks(const SensingScenario& sc, const CMat& r_x) {
  std::vector<ThetaJacobian> jac;
  jac.reserve(sc.set.size());
  for (const auto& s : sc.set.scatterers) jac.push_back(theta_jacobian(sc.kin, s, sc.model));
  return fisher_from_jacobians(sc, r_x, jac);
}

Mat4 efim_from_terms(const SensingScenario& sc, const MuNuTerms& t) {
  if (sc.model == JacobianModel::kExact)
    throw DomainError("closed-form EFIM needs a far-field or printed Jacobian model");
  const double g = sc.gain();
  Mat4 sum = Mat4::Zero();
  for (std::size_t k = 0; k < t.mu1.size(); ++k) {
    sum += t.nu1[k] * t.mu1[k] * t.mu1[k].transpose() + t.nu2[k] * t.mu2 * t.mu2.transpose() +
           t.nu23[k] * (t.mu2 * t.mu3.transpose() + t.mu3 * t.mu2.transpose()) +
           t.nu3[k] * t.mu3 * t.mu3.transpose();
  }
  sum -= sc.sense.t_s * t.nu4 * t.mu4 * t.mu4.transpose();
  return symmetrized(sum * (2 * g * g * sc.rx.size() / sc.sense.sigma_s2));
}

Mat4 efim(const FisherBlocks& blocks) {
  if (!(blocks.f_g > 0.0)) throw InvalidBlocksError("path-gain information must be positive");
  return symmetrized(blocks.f_kappa - blocks.f_kappa_g * blocks.f_kappa_g.transpose() / blocks.f_g);
}

CrbReport crb_from_efim(const Mat4& j_in) {
  CrbReport r;
  r.efim = symmetrized(j_in);
  const double scale = r.efim.norm();
  if (!(scale > 0.0)) throw ConditioningError("Fisher information is identically zero", INFINITY);
  const double orient_norm = r.efim.row(3).norm();
  const int n = orient_norm <= 1e-12 * scale ? 3 : 4;
  r.singular = n == 3;

  // Jacobi scaling keeps the condition estimate meaningful across units.
  const MatX block = r.efim.topLeftCorner(n, n);
  const VecX dscale = block.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const MatX scaled = dscale.asDiagonal() * block * dscale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatX> es(scaled);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  r.condition_number = lmin > 0 ? lmax / lmin : INFINITY;
  if (!(lmin > 0) || r.condition_number > 1e13) {
    throw ConditioningError("identifiable Fisher block is numerically singular", r.condition_number);
  }
  Eigen::LLT<MatX> llt(scaled);
  const MatX inv_scaled = llt.solve(MatX::Identity(n, n));
  const MatX inv = dscale.asDiagonal() * inv_scaled * dscale.asDiagonal();
  r.crb.setZero();
  r.crb.topLeftCorner(n, n) = 0.5 * (inv + inv.transpose());
  if (r.singular) r.crb(3, 3) = std::numeric_limits<double>::infinity();
  r.crb_d = r.crb(0, 0);
  r.crb_theta = r.crb(1, 1);
  r.crb_phi = r.crb(2, 2);
  r.crb_orient = r.crb(3, 3);
  r.trace_crb = r.crb_d + r.crb_theta + r.crb_phi + r.crb_orient;
  return r;
}

CrbReport crb(const SensingScenario& sc, const CMat& r_x) { return crb_from_efim(efim(fisher_blocks(sc, r_x))); }

ScattererSet point_target_set(const Kinematics& kin) {
  ScattererSet set;
  set.scatterers.push_back(place_scatterer(kin, 0.0, 0.0, Vec3::Zero(), 1.0));
  set.normalized = true;
  return set;
}

FisherOperator::FisherOperator(const SensingScenario& sc) {
  sc.sense.validate();
  const int k_count = static_cast<int>(sc.set.size());
  const double g = sc.gain();
  const double nr = sc.rx.size();
  const double ts = sc.sense.t_s;
  const double s2 = sc.sense.sigma_s2;
  const double range_scale = std::pow(4 * kPi * sc.sense.bandwidth_b / sc.sense.c, 2);
  const double f_pre = 2 * g * g * nr / s2;
  const double cross_pre = 2 * g * ts * nr / s2;
  const double g_pre = 2 * ts * nr / s2;

  coeffs_ = MatX::Zero(kPacked, kFormsPerScatterer * k_count);
  auto pack_sym = [](const Mat4& m) {
    Eigen::Matrix<double, 10, 1> out;
    int idx = 0;
    for (int r = 0; r < 4; ++r)
      for (int c = r; c < 4; ++c) out[idx++] = m(r, c);
    return out;
  };
  for (int k = 0; k < k_count; ++k) {
    const Scatterer& s = sc.set.scatterers[k];
    const SteeringBundle tx = steering_derivs(sc.tx, s.theta_k, s.phi_k);
    const ZCoeffs z = z_coeffs(sc.rx, s.theta_k, s.phi_k);
    const ThetaJacobian jac = theta_jacobian(sc.kin, s, sc.model);
    const Vec4 r0 = jac.row(0).transpose();
    const Vec4 r1 = jac.row(1).transpose();
    const Vec4 r2 = jac.row(2).transpose();
    const Mat4 sym12 = r1 * r2.transpose() + r2 * r1.transpose();
    const double w = f_pre * s.area * ts;

    const int base = kFormsPerScatterer * k;
    const Mat4 f_illum = w * (range_scale * r0 * r0.transpose() + z.z00 * r1 * r1.transpose() + z.z01 * sym12 +
                              z.z11 * r2 * r2.transpose());
    coeffs_.col(base).head<10>() = pack_sym(f_illum);
    coeffs_(14, base) = g_pre * s.area;
    coeffs_.col(base + 1).head<10>() = pack_sym(w * r1 * r1.transpose());
    coeffs_.col(base + 2).head<10>() = pack_sym(w * r2 * r2.transpose());
    coeffs_.col(base + 3).head<10>() = pack_sym(w * sym12);
    coeffs_.col(base + 4).segment<4>(10) = cross_pre * s.area * r1;
    coeffs_.col(base + 5).segment<4>(10) = cross_pre * s.area * r2;

    const int v = static_cast<int>(vectors_.size());
    vectors_.push_back(tx.a);
    vectors_.push_back(tx.da_dtheta);
    vectors_.push_back(tx.da_dphi);
    pairs_.push_back({v, v});
    pairs_.push_back({v + 1, v + 1});
    pairs_.push_back({v + 2, v + 2});
    pairs_.push_back({v + 1, v + 2});
    pairs_.push_back({v, v + 1});
    pairs_.push_back({v, v + 2});
  }
}

VecX FisherOperator::forms(const CMat& r_x) const {
  std::vector<CVec> rv;
  rv.reserve(vectors_.size());
  for (const auto& v : vectors_) rv.push_back(r_x * v);
  VecX out(pairs_.size());
  for (std::size_t i = 0; i < pairs_.size(); ++i) out[i] = vectors_[pairs_[i][0]].dot(rv[pairs_[i][1]]).real();
  return out;
}

FisherBlocks FisherOperator::unpack(const VecX& packed) {
  FisherBlocks fb;
  int idx = 0;
  for (int r = 0; r < 4; ++r)
    for (int c = r; c < 4; ++c) fb.f_kappa(r, c) = fb.f_kappa(c, r) = packed[idx++];
  fb.f_kappa_g = packed.segment<4>(10);
  fb.f_g = packed[14];
  return fb;
}

FisherBlocks FisherOperator::apply(const VecX& forms) const {
  if (forms.size() != coeffs_.cols()) throw DomainError("form vector length mismatch");
  return unpack(coeffs_ * forms);
}

void to_json(nlohmann::json& j, const CrbReport& r) {
  auto mat = [](const Mat4& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 4; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < 4; ++c) {
        if (std::isfinite(m(i, c))) row.push_back(m(i, c));
        else row.push_back(nullptr);
      }
      rows.push_back(row);
    }
    return rows;
  };
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  j = {{"efim", mat(r.efim)},          {"crb", mat(r.crb)},         {"trace", num(r.trace_crb)},
       {"crb_d", num(r.crb_d)},        {"crb_theta", num(r.crb_theta)}, {"crb_phi", num(r.crb_phi)},
       {"crb_orient", num(r.crb_orient)}, {"singular", r.singular},  {"condition_number", num(r.condition_number)}};
}

}  // namespace etisac
