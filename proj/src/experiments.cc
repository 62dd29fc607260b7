#include "etisac/experiments.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "etisac/fim_oracle.h"

namespace etisac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Applies one sweep value to a copy of the scenario.
Scenario with_value(Scenario sc, SweepSpec::Variable var, double v) {
  switch (var) {
    case SweepSpec::Variable::kDistance: sc.kin.d_o = v; break;
    case SweepSpec::Variable::kGammaDb: sc.comm.gamma_db = v; break;
    case SweepSpec::Variable::kAlpha: sc.opts.alpha = v; break;
    case SweepSpec::Variable::kPower: sc.power_pt = dbm2watt(v); break;
  }
  return sc;
}

CrbSweepRow crb_point(const Scenario& base, const SweepSpec& sweep, double v, double fixed_gain) {
  const Scenario sc = with_value(base, sweep.variable, v);
  SensingScenario s = sc.sensing();
  s.set = s.set.normalized_copy();
  if (sweep.fixed_snr) s.gain_override = fixed_gain;
  const int n = s.tx.size();
  const CMat r = CMat::Identity(n, n) * (sc.power_pt / n);
  CrbSweepRow row;
  row.value = v;
  row.n_scatterers = static_cast<int>(s.set.size());
  row.snr = sc.power_pt * s.gain() * s.gain() / s.sense.sigma_s2;
  row.et = crb(s, r);
  SensingScenario p = s;
  p.set = point_target_set(s.kin);
  row.pt = crb(p, r);
  return row;
}

CrbSweepTable crb_sweep(const Scenario& sc, const SweepSpec& sweep, bool parallel) {
  sc.validate();
  sweep.validate();
  if (sweep.variable != SweepSpec::Variable::kDistance && sweep.variable != SweepSpec::Variable::kPower)
    throw DomainError("CRB sweeps support the d_o and power_dbm variables");
  CrbSweepTable t;
  t.hash = sc.hash();
  t.spec = sweep;
  t.rows.resize(sweep.values.size());
  const double g0 = sc.sense.path_gain(sc.kin.d_o);
  const auto n = static_cast<std::ptrdiff_t>(sweep.values.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) t.rows[i] = crb_point(sc, sweep, sweep.values[i], g0);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) t.rows[i] = crb_point(sc, sweep, sweep.values[i], g0);
  }
  return t;
}

std::array<double, 5> crb_columns(const CrbReport& r) {
  return {r.crb_d, r.crb_theta, r.crb_phi, r.crb_orient, r.trace_crb};
}

// CSV needs a round-trip representation so that outputs are byte-stable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double min_sinr_db(const DesignResult& d, const IsacScenario& sc) {
  if (sc.n_users() == 0) return kNaN;
  double lo = INFINITY;
  for (int n = 0; n < sc.n_users(); ++n) lo = std::min(lo, sinr(d.cov, sc.channels[n], n, sc.sigma_n2));
  return 10.0 * std::log10(lo);
}

DesignResult dispatch(const IsacScenario& isac, const Scenario& sc, Method m, const SolverOptions& opts) {
  const double gamma = sc.comm.gamma();
  switch (m) {
    case Method::kCrbMin: return solve_crb_min(isac, gamma, opts);
    case Method::kCenter: return center_design(isac, gamma, opts);
    case Method::kAverage: return average_design(isac, gamma, visible_angle_grid(isac.sensing.set), opts);
    case Method::kWim: return solve_wim_sca(isac, opts);
  }
  throw DomainError("unknown method");
}

DesignObjective objective_of(Method m) {
  switch (m) {
    case Method::kCrbMin: return DesignObjective::kCrb;
    case Method::kCenter: return DesignObjective::kCenter;
    case Method::kAverage: return DesignObjective::kAverage;
    case Method::kWim: return DesignObjective::kWim;
  }
  return DesignObjective::kCrb;
}

Eigen::Matrix<double, 5, 5> full_fisher(const FisherBlocks& b) {
  Eigen::Matrix<double, 5, 5> f;
  f.topLeftCorner<4, 4>() = b.f_kappa;
  f.topRightCorner<4, 1>() = b.f_kappa_g;
  f.bottomLeftCorner<1, 4>() = b.f_kappa_g.transpose();
  f(4, 4) = b.f_g;
  return f;
}

// Relative Frobenius error after scaling both matrices by the reference
// diagonal, so that the range entries do not drown the angular ones.
double rel_frobenius(const FisherBlocks& a, const FisherBlocks& ref) {
  const Eigen::Matrix<double, 5, 5> r = full_fisher(ref);
  Eigen::Matrix<double, 5, 1> s;
  for (int i = 0; i < 5; ++i) s[i] = r(i, i) > 0 ? 1.0 / std::sqrt(r(i, i)) : 0.0;
  const Eigen::Matrix<double, 5, 5> d = s.asDiagonal() * (full_fisher(a) - r) * s.asDiagonal();
  return d.norm() / (s.asDiagonal() * r * s.asDiagonal()).norm();
}

CMat random_covariance(int n, double power, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = {gauss(rng), gauss(rng)};
  CMat r = a * a.adjoint();
  return r * (power / r.trace().real());
}

CheckResult at_most(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value, tol, value <= tol, std::move(detail)};
}

CheckResult at_least(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value, tol, value >= tol, std::move(detail)};
}

}  // namespace

CrbSweepTable run_crb_sweep(const Scenario& sc, const SweepSpec& sweep) { return crb_sweep(sc, sweep, true); }
CrbSweepTable run_crb_sweep_serial(const Scenario& sc, const SweepSpec& sweep) { return crb_sweep(sc, sweep, false); }

void write_crb_sweep_csv(std::ostream& os, const CrbSweepTable& t) {
  static const char* names[] = {"crb_d", "crb_theta", "crb_phi", "crb_orient", "trace"};
  os << "hash," << sweep_variable_name(t.spec.variable) << ",n_scatterers,snr";
  for (const char* n : names) os << ',' << n;
  for (const char* n : names) os << ",pt_" << n;
  for (const char* n : names) os << ",maxnorm_" << n;
  for (const char* n : names) os << ",pt_maxnorm_" << n;
  for (const char* n : names) os << ",snrnorm_" << n;
  for (const char* n : names) os << ",pt_snrnorm_" << n;
  os << '\n';
  // Max normalization shares one finite column maximum between the target and
  // the point target, so the two curves stay comparable. The point target has
  // no orientation information and reports inf there.
  std::array<double, 5> mx{};
  for (const auto& r : t.rows) {
    const auto e = crb_columns(r.et);
    const auto p = crb_columns(r.pt);
    for (int i = 0; i < 5; ++i)
      for (double v : {e[i], p[i]})
        if (std::isfinite(v)) mx[i] = std::max(mx[i], v);
  }
  for (const auto& r : t.rows) {
    const auto e = crb_columns(r.et);
    const auto p = crb_columns(r.pt);
    os << t.hash << ',' << num(r.value) << ',' << r.n_scatterers << ',' << num(r.snr);
    for (double v : e) os << ',' << num(v);
    for (double v : p) os << ',' << num(v);
    for (int i = 0; i < 5; ++i) os << ',' << num(e[i] / mx[i]);
    for (int i = 0; i < 5; ++i) os << ',' << num(p[i] / mx[i]);
    for (double v : e) os << ',' << num(v * r.snr);
    for (double v : p) os << ',' << num(v * r.snr);
    os << '\n';
  }
}

Method parse_method(const std::string& name) {
  if (name == "crb_min") return Method::kCrbMin;
  if (name == "center") return Method::kCenter;
  if (name == "average") return Method::kAverage;
  if (name == "wim") return Method::kWim;
  throw DomainError("unknown method '" + name + "' (expected crb_min, center, average or wim)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kCrbMin: return "crb_min";
    case Method::kCenter: return "center";
    case Method::kAverage: return "average";
    case Method::kWim: return "wim";
  }
  return "crb_min";
}

SolveOutput run_solve(const Scenario& sc, Method method, bool randomize) {
  const IsacScenario isac = sc.build();
  SolveOutput out;
  out.hash = sc.hash();
  out.method = method;
  out.gamma = method == Method::kWim ? 0.0 : sc.comm.gamma();
  out.design = dispatch(isac, sc, method, sc.opts);
  if (randomize) {
    const AngleGrid grid = method == Method::kAverage ? visible_angle_grid(isac.sensing.set) : AngleGrid{};
    const double lb = method == Method::kCrbMin ? out.design.lower_bound : 0.0;
    out.recovery = randomize_rank1(out.design.cov, isac, out.gamma, objective_of(method), sc.opts, lb, grid);
  }
  return out;
}

nlohmann::json to_json_output(const SolveOutput& out) {
  nlohmann::json j = {{"hash", out.hash}, {"method", method_name(out.method)}, {"gamma", out.gamma},
                      {"design", out.design}};
  if (out.recovery) j["rank_one"] = *out.recovery;
  return j;
}

PatternGrid make_pattern(const CMat& r_x, const UpaConfig& upa, double theta_lo, double theta_hi, double phi_lo,
                         double phi_hi, double step, bool parallel) {
  if (!(step > 0) || theta_hi < theta_lo || phi_hi < phi_lo) throw DomainError("invalid beampattern grid");
  PatternGrid p;
  for (int i = 0; theta_lo + i * step <= theta_hi + 1e-9; ++i) p.theta_deg.push_back(theta_lo + i * step);
  for (int i = 0; phi_lo + i * step <= phi_hi + 1e-9; ++i) p.phi_deg.push_back(phi_lo + i * step);
  std::vector<double> th, ph;
  for (double t : p.theta_deg) th.push_back(deg2rad(t));
  for (double f : p.phi_deg) ph.push_back(deg2rad(f));
  p.energy = parallel ? beampattern(r_x, upa, th, ph, true) : beampattern_serial(r_x, upa, th, ph, true);
  return p;
}

void write_pattern_csv(std::ostream& os, const PatternGrid& p, const std::string& hash) {
  os << "hash,theta_deg,phi_deg,energy\n";
  for (std::size_t i = 0; i < p.theta_deg.size(); ++i)
    for (std::size_t j = 0; j < p.phi_deg.size(); ++j)
      os << hash << ',' << num(p.theta_deg[i]) << ',' << num(p.phi_deg[j]) << ','
         << num(p.energy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << '\n';
}

PatternStats analyze_pattern(const PatternGrid& p, double min_sep_deg) {
  const MatX& e = p.energy;
  const double top = e.maxCoeff();
  PatternStats st;
  if (!(top > 0)) return st;
  const double half = 0.5 * top;
  const double dt = p.theta_deg.size() > 1 ? p.theta_deg[1] - p.theta_deg[0] : 1.0;
  const double dp = p.phi_deg.size() > 1 ? p.phi_deg[1] - p.phi_deg[0] : 1.0;
  std::vector<std::pair<double, std::array<double, 2>>> maxima;
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      const double v = e(i, j);
      if (v >= half) st.area_3db += dt * dp;
      if (v < half) continue;
      bool is_max = true;
      for (Eigen::Index a = std::max<Eigen::Index>(0, i - 1); a <= std::min(e.rows() - 1, i + 1) && is_max; ++a)
        for (Eigen::Index b = std::max<Eigen::Index>(0, j - 1); b <= std::min(e.cols() - 1, j + 1); ++b)
          if (e(a, b) > v) {
            is_max = false;
            break;
          }
      if (is_max) maxima.push_back({v, {p.theta_deg[i], p.phi_deg[j]}});
    }
  std::stable_sort(maxima.begin(), maxima.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [v, at] : maxima) {
    bool merged = false;
    for (const auto& q : st.peaks)
      if (std::hypot(q[0] - at[0], q[1] - at[1]) < min_sep_deg) merged = true;
    if (!merged) st.peaks.push_back(at);
  }
  st.n_peaks = static_cast<int>(st.peaks.size());
  return st;
}

double scatterer_footprint_deg2(const ScattererSet& set) {
  if (set.scatterers.empty()) return 0.0;
  double tmin = INFINITY, tmax = -INFINITY, pmin = INFINITY, pmax = -INFINITY;
  for (const auto& s : set.scatterers) {
    tmin = std::min(tmin, rad2deg(s.theta_k));
    tmax = std::max(tmax, rad2deg(s.theta_k));
    pmin = std::min(pmin, rad2deg(s.phi_k));
    pmax = std::max(pmax, rad2deg(s.phi_k));
  }
  return (tmax - tmin) * (pmax - pmin);
}

TradeoffTable run_tradeoff(const Scenario& sc, const SweepSpec& sweep, std::vector<Method> methods) {
  sc.validate();
  sweep.validate();
  if (methods.empty()) {
    if (sweep.variable == SweepSpec::Variable::kAlpha) methods = {Method::kWim};
    else methods = {Method::kCrbMin, Method::kCenter, Method::kAverage};
  }
  struct Job {
    double value;
    int realization;
    Method method;
  };
  std::vector<Job> jobs;
  for (double v : sweep.values)
    for (int r = 0; r < sweep.realizations; ++r)
      for (Method m : methods) jobs.push_back({v, r, m});

  TradeoffTable t;
  t.hash = sc.hash();
  t.spec = sweep;
  t.rows.resize(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Job& job = jobs[static_cast<std::size_t>(i)];
    TradeoffRow& row = t.rows[static_cast<std::size_t>(i)];
    row.value = job.value;
    row.method = job.method;
    row.realization = job.realization;
    row.trace_crb = row.min_sinr_db = row.sum_rate = kNaN;
    try {
      Scenario s = with_value(sc, sweep.variable, job.value);
      s.comm.seed = sc.comm.seed + static_cast<std::uint64_t>(job.realization);
      s.opts.parallel = false;
      const IsacScenario isac = s.build();
      const DesignResult d = dispatch(isac, s, job.method, s.opts);
      row.status = d.status;
      row.trace_crb = d.crb.trace_crb;
      row.min_sinr_db = min_sinr_db(d, isac);
      row.sum_rate = d.sum_rate;
    } catch (const InfeasibleError&) {
      row.status = "infeasible";
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
    }
  }
  return t;
}

void write_tradeoff_csv(std::ostream& os, const TradeoffTable& t) {
  os << "hash," << sweep_variable_name(t.spec.variable) << ",method,realization,status,trace_crb,min_sinr_db,sum_rate\n";
  for (const auto& r : t.rows) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << t.hash << ',' << num(r.value) << ',' << method_name(r.method) << ',' << r.realization << ',' << status << ','
       << num(r.trace_crb) << ',' << num(r.min_sinr_db) << ',' << num(r.sum_rate) << '\n';
  }
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

ValidationReport run_validate(const Scenario& sc) {
  ValidationReport rep;
  rep.hash = sc.hash();
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      rep.checks.push_back({name, kNaN, 0.0, false, std::string("threw: ") + e.what()});
    }
  };

  const SensingScenario base = sc.sensing();
  const int nt = base.tx.size();
  const CMat r_rand = random_covariance(nt, sc.power_pt, sc.seed);

  guarded("fim_oracle_exact", [&] {
    SensingScenario s = base;
    s.model = JacobianModel::kExact;
    const auto oracle = numeric_fim_oracle(s, r_rand);
    rep.checks.push_back(at_most("fim_oracle_exact", rel_frobenius(fisher_blocks(s, r_rand), oracle.blocks), 1e-3));
  });
  // The far-field derivatives carry an error that decays like 1 / d_o, so
  // they are compared at a kilometer.
  SensingScenario far = base;
  far.kin.d_o = std::max(base.kin.d_o, 1000.0);
  far.set = discretize_visible(sc.shape, far.kin, sc.grid_nu, sc.grid_nv);
  guarded("fim_oracle_far_field", [&] {
    SensingScenario s = far;
    s.model = JacobianModel::kFarField;
    const auto oracle = numeric_fim_oracle(s, r_rand);
    rep.checks.push_back(
        at_most("fim_oracle_far_field", rel_frobenius(fisher_blocks(s, r_rand), oracle.blocks), 1e-2));
  });
  // The printed elevation scaling must be caught by the oracle whenever the
  // target is off the array plane. A centered scatterer isolates the angular
  // terms, which the range lever of an extended body would otherwise dilute.
  guarded("negative_control_printed_mu2", [&] {
    SensingScenario s = far;
    if (std::abs(s.kin.phi_o) < deg2rad(10.0)) s.kin.phi_o = deg2rad(-15.0);
    s.set = point_target_set(s.kin);
    s.model = JacobianModel::kPrinted;
    const auto oracle = numeric_fim_oracle(s, r_rand);
    rep.checks.push_back(at_least("negative_control_printed_mu2", rel_frobenius(fisher_blocks(s, r_rand), oracle.blocks),
                                  1e-2, "must exceed the far-field oracle tolerance"));
  });
  guarded("pt_degeneration", [&] {
    SensingScenario s = base;
    s.kin.phi_o = 0.0;
    s.set = point_target_set(s.kin);
    const Mat4 j = efim(fisher_blocks(s, r_rand));
    const double orient = std::max(j.row(3).norm(), j.col(3).norm());
    rep.checks.push_back(at_most("pt_degeneration_orientation", orient, 1e-12));
    const Mat4 closed = efim_from_terms(s, nu_terms(r_rand, s));
    const double dev = (j.topLeftCorner<3, 3>() - closed.topLeftCorner<3, 3>()).norm() / closed.norm();
    rep.checks.push_back(at_most("pt_degeneration_block", dev, 1e-12));
  });
  guarded("homogeneity", [&] {
    const double c = 3.7;
    const CrbReport a = crb(base, r_rand);
    const CrbReport b = crb(base, c * r_rand);
    rep.checks.push_back(at_most("homogeneity", std::abs(b.trace_crb * c / a.trace_crb - 1.0), 1e-9));
  });
  guarded("rcs_seed_invariance", [&] {
    Scenario other = sc;
    other.seed = sc.seed + 1000;
    other.comm.seed = sc.comm.seed + 1000;
    const double a = crb(sc.sensing(), r_rand).trace_crb;
    const double b = crb(other.sensing(), r_rand).trace_crb;
    rep.checks.push_back(at_most("rcs_seed_invariance", std::abs(a - b), 0.0));
  });
  guarded("closed_form_vs_blocks", [&] {
    const Mat4 a = efim(fisher_blocks(base, r_rand));
    const Mat4 b = efim_from_terms(base, nu_terms(r_rand, base));
    rep.checks.push_back(at_most("closed_form_vs_blocks", (a - b).norm() / b.norm(), 1e-10));
  });

  guarded("solver_crb_min", [&] {
    const IsacScenario isac = sc.build();
    const double gamma = sc.comm.gamma();
    const DesignResult d = solve_crb_min(isac, gamma, sc.opts);
    rep.checks.push_back(at_most("solver_duality_gap", d.gap, sc.opts.gap_tol));
    rep.checks.push_back(at_least("solver_power_residual", d.residuals.power / sc.power_pt, -1e-6));
    double worst = INFINITY;
    for (double r : d.residuals.sinr) worst = std::min(worst, r);
    if (d.residuals.sinr.empty()) worst = 0.0;
    rep.checks.push_back(at_least("solver_sinr_residual", worst, -1e-6));
    rep.checks.push_back(at_least("solver_coverage_residual", d.residuals.coverage, -1e-6));
    rep.checks.push_back(at_least("solver_bound_below_objective", d.objective / d.lower_bound - 1.0, -1e-6));
    const RecoveryResult rec = randomize_rank1(d.cov, isac, gamma, DesignObjective::kCrb, sc.opts, d.lower_bound);
    rep.checks.push_back(at_least("randomization_above_bound", rec.objective / d.lower_bound - 1.0, -1e-6));
  });
  guarded("beampattern_parallel_vs_serial", [&] {
    const PatternGrid a = make_pattern(r_rand, base.tx, -60, 60, -60, 60, 2.0, true);
    const PatternGrid b = make_pattern(r_rand, base.tx, -60, 60, -60, 60, 2.0, false);
    rep.checks.push_back(at_most("beampattern_parallel_vs_serial", (a.energy - b.energy).cwiseAbs().maxCoeff(), 1e-12));
  });
  return rep;
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    nlohmann::json e = {{"name", c.name}, {"tolerance", c.tolerance}, {"passed", c.passed}};
    e["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
    if (!c.detail.empty()) e["detail"] = c.detail;
    checks.push_back(e);
  }
  j = {{"hash", r.hash}, {"passed", r.all_passed()}, {"checks", checks}};
}

FitResult run_fit_shape(const std::string& samples_csv, int q1, int q2) {
  const auto samples = read_samples_csv(samples_csv);
  return fit_tfs(samples, q1, q2);
}

}  // namespace etisac
