#include "etisac/beamform_opt.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>

namespace etisac {

void SolverOptions::validate() const {
  if (!(primal_tol > 0) || !(dual_tol > 0) || !(gap_tol > 0)) throw DomainError("tolerances must be positive");
  if (!(eta >= 1.0)) throw DomainError("coverage factor eta must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("trade-off alpha must lie in [0, 1]");
  if (!(beta > 0.0)) throw DomainError("scale factor beta must be positive");
  if (max_iters < 1 || sca_iters < 1 || randomization_trials < 0) throw DomainError("iteration counts must be positive");
}

namespace {

constexpr double kLn2 = 0.69314718055994530942;

using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec5 = Eigen::Matrix<double, 5, 1>;

// Design quantities as linear functionals of the conic variables. Energies
// are in units of the power budget; user terms are also divided by the user
// noise power.
struct Model {
  ConeProblem prob;             // variables and operators
  std::vector<ConeExpr> ineqs;  // each >= 0
  std::vector<ConeExpr> fisher;  // packed (F upper, f, f_g), physical units
  std::vector<ConeExpr> illum;   // a_k^H R a_k / P_t
  ConeExpr power;                // tr(R) / P_t
  std::vector<std::vector<ConeExpr>> user;  // [n][i]: h_n^H W_i h_n / sigma^2
  ConeExpr center;
  std::vector<ConeExpr> grid;
  int n_power = 0;  // leading linear variables that are beam powers
};

struct DesignSpec {
  double gamma = 0.0;
  bool coverage = true;
  bool center = false;
  const AngleGrid* grid = nullptr;
};

CVec scaled_channel(const IsacScenario& sc, int n) {
  return sc.channels[n].h * std::sqrt(sc.power_pt / sc.sigma_n2);
}

ConeExpr on_all_blocks(int op, int blocks, double coeff = 1.0) {
  ConeExpr e;
  for (int b = 0; b < blocks; ++b) e.herm.push_back({b, op, coeff});
  return e;
}

// One covariance block per user (one block when there are no users).
Model block_model(const IsacScenario& sc, const FisherOperator& fop, const DesignSpec& spec) {
  Model m;
  auto& p = m.prob;
  const int nu = sc.n_users();
  const int nb = std::max(1, nu);
  const int nt = sc.n_tx();
  p.herm_dims.assign(nb, nt);

  // Each packed Fisher entry is one dense Hermitian functional, scaled to unit
  // Frobenius norm so the constraint rows stay commensurate.
  const auto& vecs = fop.vectors();
  const auto& pairs = fop.form_pairs();
  const MatX& coeffs = fop.coefficients();
  const int nf = fop.num_forms();
  m.fisher.resize(FisherOperator::kPacked);
  for (int e = 0; e < FisherOperator::kPacked; ++e) {
    CMat mat = CMat::Zero(nt, nt);
    for (int k = 0; k < nf; ++k) {
      const double c = coeffs(e, k);
      if (c == 0.0) continue;
      const CVec& xl = vecs[pairs[k][0]];
      const CVec& xr = vecs[pairs[k][1]];
      mat += (0.5 * c) * (xr * xl.adjoint() + xl * xr.adjoint());
    }
    const double nrm = mat.norm() > 0.0 ? mat.norm() : 1.0;
    m.fisher[e] = on_all_blocks(p.add_op(HermOp::matrix(mat / nrm)), nb, sc.power_pt * nrm);
  }
  for (int k = 0; k < nf; k += FisherOperator::kFormsPerScatterer)
    m.illum.push_back(on_all_blocks(p.add_op(HermOp::outer(vecs[pairs[k][0]])), nb));
  m.power = on_all_blocks(p.add_op(HermOp::identity()), nb);
  m.user.assign(nu, std::vector<ConeExpr>(nu));
  for (int n = 0; n < nu; ++n) {
    const int op = p.add_op(HermOp::outer(scaled_channel(sc, n)));
    for (int i = 0; i < nu; ++i) m.user[n][i].herm.push_back({i, op, 1.0});
  }
  if (spec.center)
    m.center = on_all_blocks(
        p.add_op(HermOp::outer(steering(sc.sensing.tx, sc.sensing.kin.theta_o, sc.sensing.kin.phi_o))), nb);
  if (spec.grid)
    for (const auto& [th, ph] : *spec.grid)
      m.grid.push_back(on_all_blocks(p.add_op(HermOp::outer(steering(sc.sensing.tx, th, ph))), nb));
  return m;
}

// Quantities over per-beam powers for fixed unit-norm directions.
Model power_model(const IsacScenario& sc, const FisherOperator& fop, const std::vector<CVec>& dirs,
                  const DesignSpec& spec) {
  Model m;
  const int nb = static_cast<int>(dirs.size());
  m.prob.add_lin(nb);
  m.n_power = nb;
  const double pt = sc.power_pt;
  m.fisher.resize(FisherOperator::kPacked);
  m.illum.resize(sc.sensing.set.size());
  m.user.assign(sc.n_users(), std::vector<ConeExpr>(nb));
  const CVec ao = steering(sc.sensing.tx, sc.sensing.kin.theta_o, sc.sensing.kin.phi_o);
  std::vector<CVec> grid_vecs;
  if (spec.grid)
    for (const auto& [th, ph] : *spec.grid) grid_vecs.push_back(steering(sc.sensing.tx, th, ph));
  m.grid.resize(grid_vecs.size());
  for (int i = 0; i < nb; ++i) {
    const VecX forms = fop.forms(dirs[i] * dirs[i].adjoint());
    const VecX packed = fop.coefficients() * forms;
    for (int e = 0; e < FisherOperator::kPacked; ++e)
      if (packed[e] != 0.0) m.fisher[e].lin.push_back({i, pt * packed[e]});
    for (std::size_t k = 0; k < sc.sensing.set.size(); ++k)
      m.illum[k].lin.push_back({i, forms[static_cast<Eigen::Index>(k) * FisherOperator::kFormsPerScatterer]});
    m.power.lin.push_back({i, 1.0});
    for (int n = 0; n < sc.n_users(); ++n) m.user[n][i].lin.push_back({i, std::norm(scaled_channel(sc, n).dot(dirs[i]))});
    if (spec.center) m.center.lin.push_back({i, std::norm(ao.dot(dirs[i]))});
    for (std::size_t g = 0; g < grid_vecs.size(); ++g) m.grid[g].lin.push_back({i, std::norm(grid_vecs[g].dot(dirs[i]))});
  }
  return m;
}

void add_constraints(Model& m, const DesignSpec& spec, double eta) {
  ConeExpr budget = m.power.scaled(-1.0);
  budget.constant += 1.0;
  m.ineqs.push_back(budget);
  if (spec.gamma > 0.0) {
    const int nu = static_cast<int>(m.user.size());
    for (int n = 0; n < nu; ++n) {
      ConeExpr s = m.user[n][n].scaled(1.0 + 1.0 / spec.gamma);
      s.constant -= 1.0;
      for (int i = 0; i < nu; ++i) s.add(m.user[n][i], -1.0);
      m.ineqs.push_back(s);
    }
  }
  if (spec.coverage) {
    const int lo = m.prob.add_lin(2);
    const ConeExpr elo = ConeExpr::lin_var(lo), ehi = ConeExpr::lin_var(lo + 1);
    for (const auto& e : m.illum) {
      m.ineqs.push_back(ConeExpr(e).add(elo, -1.0));
      m.ineqs.push_back(ConeExpr(ehi).add(e, -1.0));
    }
    m.ineqs.push_back(elo.scaled(eta).add(ehi, -1.0));
  }
}

// Position of the symmetric 5x5 entry (a, b) in the packed Fisher layout.
int packed_index(int a, int b) {
  if (a > b) std::swap(a, b);
  if (b == 4) return a == 4 ? 14 : 10 + a;
  return a * 4 - a * (a - 1) / 2 + (b - a);
}

// Design with equal power on every block (or beam).
ConePoint uniform_point(const Model& m) {
  ConePoint x;
  const int nb = static_cast<int>(m.prob.herm_dims.size());
  for (int n : m.prob.herm_dims) x.herm.push_back(CMat::Identity(n, n) / (static_cast<double>(nb) * n));
  x.lin = VecX::Zero(m.prob.n_lin);
  if (m.n_power > 0) x.lin.head(m.n_power).setConstant(1.0 / m.n_power);
  return x;
}

FisherBlocks fisher_at(const Model& m, const ConePoint& x) {
  VecX packed(FisherOperator::kPacked);
  for (int e = 0; e < FisherOperator::kPacked; ++e) packed[e] = evaluate(m.prob, m.fisher[e], x);
  return FisherOperator::unpack(packed);
}

// Congruence that whitens the 5x5 Fisher matrix at a reference design, plus
// a per-parameter normalization of the kinematic bounds. Theta and the
// orientation are close to collinear, so a diagonal scaling alone leaves the
// epigraph block nearly singular and the interior-point Schur system loses
// accuracy near the optimum.
struct CrbTransform {
  Mat5 l = Mat5::Identity();  // L F_ref L^T = I
  Vec4 d = Vec4::Ones();      // d_j^2 CRB_ref(j, j) = 1
};

CrbTransform crb_transform(const Model& m, const ConePoint& x) {
  const FisherBlocks fb = fisher_at(m, x);
  Mat5 f;
  f.topLeftCorner<4, 4>() = fb.f_kappa;
  f.topRightCorner<4, 1>() = fb.f_kappa_g;
  f.bottomLeftCorner<1, 4>() = fb.f_kappa_g.transpose();
  f(4, 4) = fb.f_g;
  const Eigen::SelfAdjointEigenSolver<Mat5> es(f);
  const Vec5 ev = es.eigenvalues();
  if (!(ev[0] > 1e-12 * ev[4])) throw DomainError("the Fisher matrix is singular at the reference design");
  CrbTransform t;
  t.l = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  const Mat5 finv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  for (int j = 0; j < 4; ++j) t.d[j] = 1.0 / std::sqrt(finv(j, j));
  return t;
}

// coeff * y0 / arg(x), a convex majorant term.
struct Reciprocal {
  ConeExpr arg;
  double y0 = 1.0;
  double coeff = 0.0;
};

struct Objective {
  ConeExpr linear;
  double crb_weight = 0.0;  // > 0 adds crb_weight * tr(CRB)
  CrbTransform crb;
  std::vector<Reciprocal> reciprocals;
};

ConeProblem build(const Model& m, const Objective& obj) {
  ConeProblem p = m.prob;
  for (const auto& e : m.ineqs) p.add_inequality(e);
  p.objective = obj.linear;
  if (obj.crb_weight > 0.0) {
    // With G = L F L^T and B = L E D, E = [I4; 0], the block
    // [[G, B], [B^T, T]] >= 0 bounds T >= D E^T F^{-1} E D.
    const Mat5& l = obj.crb.l;
    const Vec4& d = obj.crb.d;
    const int y = p.add_sym(9);
    for (int a = 0; a < 5; ++a)
      for (int b = a; b < 5; ++b) {
        ConeExpr row = ConeExpr::sym_entry(y, a, b);
        for (int c = 0; c < 5; ++c)
          for (int e = 0; e < 5; ++e) {
            const double w = l(a, c) * l(b, e);
            if (w != 0.0) row.add(m.fisher[packed_index(c, e)], -w);
          }
        p.add_equality(row);
      }
    for (int a = 0; a < 5; ++a)
      for (int j = 0; j < 4; ++j) {
        ConeExpr row = ConeExpr::sym_entry(y, a, 5 + j);
        row.constant = -l(a, j) * d[j];
        p.add_equality(row);
      }
    for (int j = 0; j < 4; ++j) p.objective.add(ConeExpr::sym_entry(y, 5 + j, 5 + j, obj.crb_weight / (d[j] * d[j])));
  }
  for (const auto& r : obj.reciprocals) {
    // [[arg, sqrt(y0)], [sqrt(y0), rho]] >= 0 gives rho >= y0 / arg.
    const int y = p.add_sym(2);
    p.add_equality(ConeExpr::sym_entry(y, 0, 0).add(r.arg, -1.0));
    ConeExpr off = ConeExpr::sym_entry(y, 0, 1);
    off.constant = -std::sqrt(r.y0);
    p.add_equality(off);
    p.objective.add(ConeExpr::sym_entry(y, 1, 1, r.coeff));
  }
  return p;
}

ConeOptions cone_options(const SolverOptions& opts, bool parallel) {
  ConeOptions c;
  c.gap_tol = opts.gap_tol;
  c.feas_tol = std::min(opts.primal_tol, opts.dual_tol);
  c.max_iters = opts.max_iters;
  c.parallel = parallel;
  return c;
}

// Maximizes the uniform margin tau by which every inequality can be
// tightened. A certified negative optimum proves infeasibility.
void certify_infeasible(const Model& m, const SolverOptions& opts, bool parallel) {
  ConeProblem p = m.prob;
  const int tp = p.add_lin(2), tm = tp + 1;
  ConeExpr tau;
  tau.lin = {{tp, 1.0}, {tm, -1.0}};
  for (const auto& e : m.ineqs) p.add_inequality(ConeExpr(e).add(tau, -1.0));
  ConeExpr cap = ConeExpr::lin_var(tp, -1.0);
  cap.constant = 1.0;
  p.add_inequality(cap);
  cap = ConeExpr::lin_var(tm, -1.0);
  cap.constant = 2.0;
  p.add_inequality(cap);
  p.objective = tau.scaled(-1.0);
  const ConeResult r = solve_cone(p, cone_options(opts, parallel));
  // The dual objective bounds -tau from below.
  const double tau_max = -r.dual_objective;
  if (r.converged && tau_max < -opts.primal_tol)
    throw InfeasibleError("SINR / power / coverage constraints admit no feasible point", -tau_max);
}

ConeResult solve_model(const Model& m, const Objective& obj, const SolverOptions& opts, bool parallel) {
  ConeResult r;
  try {
    r = solve_cone(build(m, obj), cone_options(opts, parallel));
  } catch (const ConditioningError&) {
    certify_infeasible(m, opts, parallel);
    throw;
  }
  if (!r.converged) certify_infeasible(m, opts, parallel);
  return r;
}

CovarianceSet to_physical(const IsacScenario& sc, const std::vector<CMat>& w) {
  std::vector<CMat> blocks;
  for (const auto& b : w) blocks.push_back(sc.power_pt * 0.5 * (b + b.adjoint()));
  return CovarianceSet::from_blocks(std::move(blocks));
}

void fill_reports(DesignResult& out, const IsacScenario& sc, double gamma, const SolverOptions& opts) {
  out.residuals = residuals(out.cov, sc, gamma, opts.enforce_coverage ? opts.eta : 1.0);
  try {
    out.crb = crb(sc.sensing, out.cov.r_x);
  } catch (const std::exception&) {
    out.crb = CrbReport{};
  }
  out.sum_rate = sc.n_users() > 0 ? sum_rate(out.cov, sc.channels, sc.sigma_n2) : 0.0;
}

void finish(DesignResult& out, const IsacScenario& sc, const ConeResult& r, double gamma, const SolverOptions& opts,
            DesignObjective kind, const AngleGrid& grid) {
  out.cov = to_physical(sc, r.x.herm);
  out.iterations += r.iterations;
  out.gap = r.rel_gap;
  out.status = r.converged ? "optimal" : "not_converged";
  out.objective = design_objective(out.cov, sc, kind, opts, grid);
  out.objective_trace = {out.objective};
  fill_reports(out, sc, gamma, opts);
}

double isotropic_trace_crb(const IsacScenario& sc) {
  const CMat r = CMat::Identity(sc.n_tx(), sc.n_tx()) * (sc.power_pt / sc.n_tx());
  return crb(sc.sensing, r).trace_crb;
}

}  // namespace

DesignResult solve_crb_min(const IsacScenario& sc, double gamma, const SolverOptions& opts) {
  opts.validate();
  const FisherOperator fop(sc.sensing);
  const DesignSpec spec{gamma, opts.enforce_coverage, false, nullptr};
  Model m = block_model(sc, fop, spec);
  add_constraints(m, spec, opts.eta);
  Objective obj;
  obj.crb_weight = 1.0 / isotropic_trace_crb(sc);
  obj.crb = crb_transform(m, uniform_point(m));
  const ConeResult r = solve_model(m, obj, opts, opts.parallel);
  DesignResult out;
  finish(out, sc, r, gamma, opts, DesignObjective::kCrb, {});
  out.lower_bound = r.dual_objective / obj.crb_weight;
  return out;
}

DesignResult center_design(const IsacScenario& sc, double gamma, const SolverOptions& opts) {
  opts.validate();
  const FisherOperator fop(sc.sensing);
  const DesignSpec spec{gamma, false, true, nullptr};
  Model m = block_model(sc, fop, spec);
  add_constraints(m, spec, opts.eta);
  Objective obj;
  obj.linear = m.center.scaled(-1.0 / sc.n_tx());
  const ConeResult r = solve_model(m, obj, opts, opts.parallel);
  DesignResult out;
  finish(out, sc, r, gamma, opts, DesignObjective::kCenter, {});
  out.lower_bound = sc.power_pt * sc.n_tx() * r.dual_objective;
  return out;
}

DesignResult average_design(const IsacScenario& sc, double gamma, const AngleGrid& grid, const SolverOptions& opts) {
  opts.validate();
  if (grid.empty()) throw DomainError("average design needs a nonempty angle grid");
  const FisherOperator fop(sc.sensing);
  const DesignSpec spec{gamma, false, false, &grid};
  Model m = block_model(sc, fop, spec);
  add_constraints(m, spec, opts.eta);
  const ConeExpr t = ConeExpr::lin_var(m.prob.add_lin());
  for (const auto& g : m.grid) m.ineqs.push_back(ConeExpr(g).add(t, -1.0));
  Objective obj;
  obj.linear = t.scaled(-1.0 / sc.n_tx());
  const ConeResult r = solve_model(m, obj, opts, opts.parallel);
  DesignResult out;
  finish(out, sc, r, gamma, opts, DesignObjective::kAverage, grid);
  out.lower_bound = sc.power_pt * sc.n_tx() * r.dual_objective;
  return out;
}

DesignResult solve_wim_sca(const IsacScenario& sc, const SolverOptions& opts) {
  opts.validate();
  const int nu = sc.n_users();
  const double a = opts.alpha;
  if (nu == 0 && a < 1.0) throw DomainError("weighted design with a rate term needs at least one user");
  const FisherOperator fop(sc.sensing);
  const DesignSpec spec{0.0, opts.enforce_coverage, false, nullptr};

  std::vector<CMat> current(std::max(1, nu), CMat::Identity(sc.n_tx(), sc.n_tx()) *
                                                 (sc.power_pt / (std::max(1, nu) * sc.n_tx())));
  DesignResult out;
  CovarianceSet cov = CovarianceSet::from_blocks(current);
  double value = design_objective(cov, sc, DesignObjective::kWim, opts);
  out.objective_trace.push_back(value);
  const double sense_ref = a > 0 ? a * opts.beta * isotropic_trace_crb(sc) : 0.0;
  const double rate_ref = a < 1 ? (1 - a) * std::max(1.0, sum_rate(cov, sc.channels, sc.sigma_n2)) : 0.0;
  const double scale = 1.0 / (sense_ref + rate_ref);
  ConeResult last;

  for (int it = 0; it < opts.sca_iters; ++it) {
    Model m = block_model(sc, fop, spec);
    add_constraints(m, spec, opts.eta);
    ConePoint at;
    for (const auto& w : current) at.herm.push_back(w / sc.power_pt);
    at.lin = VecX::Zero(m.prob.n_lin);

    // Each rate log2(1 + S + I) - log2(1 + I) is bounded below by a tangent
    // minorant of the first log and the tangent of the second; both are tight
    // at the current design, so the rounds never increase the objective.
    Objective obj;
    for (int n = 0; n < nu && a < 1.0; ++n) {
      Reciprocal rec;
      rec.arg.constant = 1.0;
      double interference = 1.0;
      for (int i = 0; i < nu; ++i) {
        rec.arg.add(m.user[n][i]);
        if (i != n) interference += evaluate(m.prob, m.user[n][i], at);
      }
      rec.y0 = evaluate(m.prob, rec.arg, at);
      rec.coeff = scale * (1 - a) / kLn2;
      obj.reciprocals.push_back(rec);
      for (int i = 0; i < nu; ++i)
        if (i != n) obj.linear.add(m.user[n][i], scale * (1 - a) / (kLn2 * interference));
    }
    if (a > 0.0) {
      obj.crb_weight = scale * a * opts.beta;
      obj.crb = crb_transform(m, at);
    }
    last = solve_model(m, obj, opts, opts.parallel);
    out.iterations += last.iterations;
    CovarianceSet cand = to_physical(sc, last.x.herm);
    const double cand_value = design_objective(cand, sc, DesignObjective::kWim, opts);
    if (!(cand_value <= value)) {
      out.status = "plateau";
      break;
    }
    const double change = value - cand_value;
    value = cand_value;
    current = cand.w;
    cov = cand;
    out.objective_trace.push_back(value);
    if (change <= opts.sca_tol * std::max(1.0, std::abs(value))) break;
  }
  out.cov = cov;
  out.objective = value;
  out.lower_bound = std::numeric_limits<double>::quiet_NaN();
  out.gap = last.rel_gap;
  if (out.status != "plateau") out.status = last.converged ? "optimal" : "not_converged";
  fill_reports(out, sc, 0.0, opts);
  return out;
}

AngleGrid visible_angle_grid(const ScattererSet& set, double step_deg) {
  if (set.scatterers.empty()) throw DomainError("empty scatterer set");
  if (!(step_deg > 0)) throw DomainError("grid step must be positive");
  double tmin = INFINITY, tmax = -INFINITY, pmin = INFINITY, pmax = -INFINITY;
  for (const auto& s : set.scatterers) {
    tmin = std::min(tmin, rad2deg(s.theta_k));
    tmax = std::max(tmax, rad2deg(s.theta_k));
    pmin = std::min(pmin, rad2deg(s.phi_k));
    pmax = std::max(pmax, rad2deg(s.phi_k));
  }
  AngleGrid grid;
  for (double t = std::floor(tmin / step_deg) * step_deg; t <= tmax + 1e-9; t += step_deg)
    for (double p = std::floor(pmin / step_deg) * step_deg; p <= pmax + 1e-9; p += step_deg)
      grid.emplace_back(deg2rad(t), deg2rad(p));
  return grid;
}

double design_objective(const CovarianceSet& cov, const IsacScenario& sc, DesignObjective kind,
                        const SolverOptions& opts, const AngleGrid& grid) {
  switch (kind) {
    case DesignObjective::kCrb:
      return crb(sc.sensing, cov.r_x).trace_crb;
    case DesignObjective::kCenter: {
      const CVec ao = steering(sc.sensing.tx, sc.sensing.kin.theta_o, sc.sensing.kin.phi_o);
      return -ao.dot(cov.r_x * ao).real();
    }
    case DesignObjective::kAverage: {
      double lo = INFINITY;
      for (const auto& [th, ph] : grid) {
        const CVec a = steering(sc.sensing.tx, th, ph);
        lo = std::min(lo, a.dot(cov.r_x * a).real());
      }
      return -lo;
    }
    case DesignObjective::kWim: {
      double v = 0.0;
      if (opts.alpha > 0) v += opts.alpha * opts.beta * crb(sc.sensing, cov.r_x).trace_crb;
      if (opts.alpha < 1) v -= (1 - opts.alpha) * sum_rate(cov, sc.channels, sc.sigma_n2);
      return v;
    }
  }
  return 0.0;
}

Residuals residuals(const CovarianceSet& cov, const IsacScenario& sc, double gamma, double eta) {
  Residuals r;
  r.power = sc.power_pt - cov.total_power();
  if (gamma > 0 && sc.n_users() > 0) {
    for (double v : sinr_feasible(cov, sc.channels, gamma, sc.sigma_n2)) r.sinr.push_back(v / sc.sigma_n2);
  }
  r.coverage = coverage_residual(cov.r_x, sc.sensing.set, sc.sensing.tx, eta) / sc.power_pt;
  return r;
}

namespace {

struct Candidate {
  bool ok = false;
  double objective = INFINITY;
  BeamformerSet beams;
};

std::optional<VecX> reallocate(const IsacScenario& sc, const FisherOperator& fop, const std::vector<CVec>& dirs,
                               double gamma, DesignObjective kind, const SolverOptions& opts, const AngleGrid& grid) {
  const int nb = static_cast<int>(dirs.size());
  DesignSpec spec{gamma, opts.enforce_coverage, kind == DesignObjective::kCenter,
                  kind == DesignObjective::kAverage ? &grid : nullptr};
  Model m = power_model(sc, fop, dirs, spec);
  add_constraints(m, spec, opts.eta);
  Objective obj;
  try {
    if (kind == DesignObjective::kAverage) {
      const ConeExpr t = ConeExpr::lin_var(m.prob.add_lin());
      for (const auto& g : m.grid) m.ineqs.push_back(ConeExpr(g).add(t, -1.0));
      obj.linear = t.scaled(-1.0);
    } else if (kind == DesignObjective::kCenter) {
      obj.linear = m.center.scaled(-1.0 / sc.n_tx());
    } else if (kind == DesignObjective::kCrb) {
      const ConePoint at = uniform_point(m);
      obj.crb_weight = 1.0 / crb_from_efim(efim(fisher_at(m, at))).trace_crb;
      obj.crb = crb_transform(m, at);
    }
    const ConeResult r = solve_model(m, obj, opts, false);
    return VecX(r.x.lin.head(nb));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Candidate evaluate_candidate(const IsacScenario& sc, const FisherOperator& fop, std::vector<CVec> w, double gamma,
                             DesignObjective kind, const SolverOptions& opts, const AngleGrid& grid) {
  Candidate c;
  std::vector<CVec> dirs;
  for (const auto& v : w) {
    const double n = v.norm();
    if (!(n > 0.0)) return c;
    dirs.push_back(v / n);
  }
  VecX power;
  if (kind == DesignObjective::kWim) {
    power = VecX::Constant(static_cast<Eigen::Index>(dirs.size()), 1.0);
    for (std::size_t i = 0; i < dirs.size(); ++i) power[static_cast<Eigen::Index>(i)] = w[i].squaredNorm();
    power /= power.sum();
  } else {
    const auto p = reallocate(sc, fop, dirs, gamma, kind, opts, grid);
    if (!p) return c;
    power = p->cwiseMax(0.0);
    const double total = power.sum();
    if (total > 1.0) power /= total;
  }
  for (std::size_t i = 0; i < dirs.size(); ++i)
    c.beams.w.push_back(dirs[i] * std::sqrt(power[static_cast<Eigen::Index>(i)] * sc.power_pt));
  const CovarianceSet cov = CovarianceSet::from_beamformers(c.beams);
  const Residuals res = residuals(cov, sc, gamma, opts.eta);
  if (res.power < -1e-8 * sc.power_pt) return c;
  for (double s : res.sinr)
    if (s < -opts.primal_tol) return c;
  if (opts.enforce_coverage && res.coverage < -opts.primal_tol) return c;
  try {
    c.objective = design_objective(cov, sc, kind, opts, grid);
  } catch (const std::exception&) {
    return c;
  }
  c.ok = std::isfinite(c.objective);
  return c;
}

}  // namespace

RecoveryResult randomize_rank1(const CovarianceSet& cov, const IsacScenario& sc, double gamma, DesignObjective kind,
                               const SolverOptions& opts, double lower_bound, const AngleGrid& grid) {
  opts.validate();
  const FisherOperator fop(sc.sensing);
  const int nb = static_cast<int>(cov.w.size());
  std::vector<CMat> factors(nb);
  std::vector<CVec> principal(nb);
  bool rank_one = true;
  for (int b = 0; b < nb; ++b) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (cov.w[b] + cov.w[b].adjoint()));
    const VecX lam = es.eigenvalues().cwiseMax(0.0);
    const Eigen::Index top = lam.size() - 1;
    if (lam.size() > 1 && lam[top - 1] > 1e-9 * lam[top]) rank_one = false;
    principal[b] = es.eigenvectors().col(top) * std::sqrt(lam[top]);
    factors[b] = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  }

  RecoveryResult out;
  out.lower_bound = lower_bound;
  if (rank_one) {
    out.beams.w = principal;
    const CovarianceSet c = CovarianceSet::from_beamformers(out.beams);
    out.objective = design_objective(c, sc, kind, opts, grid);
    out.feasible_trials = 1;
    out.gap = lower_bound > 0 ? out.objective / lower_bound - 1.0 : 0.0;
    return out;
  }

  const int trials = opts.randomization_trials;
  std::vector<Candidate> cands(trials + 1);
  cands[0] = evaluate_candidate(sc, fop, principal, gamma, kind, opts, grid);
#pragma omp parallel for if (opts.parallel) schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(t) + 1);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::vector<CVec> w;
    for (int b = 0; b < nb; ++b) {
      CVec xi(factors[b].cols());
      for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = cplx(gauss(rng), gauss(rng));
      w.push_back(factors[b] * xi);
    }
    cands[t + 1] = evaluate_candidate(sc, fop, std::move(w), gamma, kind, opts, grid);
  }
  int best = -1;
  for (int i = 0; i <= trials; ++i) {
    if (!cands[i].ok) continue;
    ++out.feasible_trials;
    if (best < 0 || cands[i].objective < cands[best].objective) best = i;
  }
  if (best < 0) throw RandomizationFailure("no randomized candidate satisfied the constraints");
  out.beams = cands[best].beams;
  out.objective = cands[best].objective;
  out.best_trial = best - 1;
  out.gap = (kind == DesignObjective::kCrb && lower_bound > 0) ? out.objective / lower_bound - 1.0 : 0.0;
  return out;
}

MatX beampattern_serial(const CMat& r_x, const UpaConfig& upa, std::span<const double> theta_grid,
                        std::span<const double> phi_grid, bool normalize) {
  MatX out(theta_grid.size(), phi_grid.size());
  for (std::size_t i = 0; i < theta_grid.size(); ++i)
    for (std::size_t j = 0; j < phi_grid.size(); ++j) {
      const CVec a = steering(upa, theta_grid[i], phi_grid[j]);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::max(0.0, a.dot(r_x * a).real());
    }
  if (normalize && out.maxCoeff() > 0) out /= out.maxCoeff();
  return out;
}

MatX beampattern(const CMat& r_x, const UpaConfig& upa, std::span<const double> theta_grid,
                 std::span<const double> phi_grid, bool normalize) {
  const auto nt = static_cast<Eigen::Index>(theta_grid.size());
  const auto np = static_cast<Eigen::Index>(phi_grid.size());
  MatX out(nt, np);
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index i = 0; i < nt; ++i)
    for (Eigen::Index j = 0; j < np; ++j) {
      const CVec a = steering(upa, theta_grid[static_cast<std::size_t>(i)], phi_grid[static_cast<std::size_t>(j)]);
      out(i, j) = std::max(0.0, a.dot(r_x * a).real());
    }
  if (normalize && out.maxCoeff() > 0) out /= out.maxCoeff();
  return out;
}

double coverage_residual(const CMat& r_x, const ScattererSet& set, const UpaConfig& upa, double eta) {
  if (set.scatterers.empty()) throw DomainError("empty scatterer set");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : set.scatterers) {
    const CVec a = steering(upa, s.theta_k, s.phi_k);
    const double e = a.dot(r_x * a).real();
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  return eta * lo - hi;
}

void to_json(nlohmann::json& j, const DesignResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& w : r.cov.w) blocks.push_back(complex_to_json(w));
  nlohmann::json trace = nlohmann::json::array();
  for (double v : r.objective_trace) trace.push_back(num(v));
  j = {{"status", r.status},
       {"objective", num(r.objective)},
       {"lower_bound", num(r.lower_bound)},
       {"relative_gap", num(r.gap)},
       {"iterations", r.iterations},
       {"objective_trace", trace},
       {"residuals", {{"power", r.residuals.power}, {"sinr", r.residuals.sinr}, {"coverage", r.residuals.coverage}}},
       {"crb", r.crb},
       {"sum_rate", r.sum_rate},
       {"w_mats", blocks}};
}

void to_json(nlohmann::json& j, const RecoveryResult& r) {
  nlohmann::json beams = nlohmann::json::array();
  for (const auto& w : r.beams.w) beams.push_back(complex_to_json(w));
  j = {{"objective", r.objective},     {"lower_bound", r.lower_bound}, {"gap", r.gap},
       {"feasible_trials", r.feasible_trials}, {"best_trial", r.best_trial}, {"w_vecs", beams}};
}

}  // namespace etisac
