#include "etisac/scenario.h"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace etisac {

namespace {

double watt2dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

TfsShape builtin_shape(const std::string& name) {
  if (name == "vehicle") return vehicle_shape();
  if (name == "drone") return drone_shape();
  if (name == "sphere") return sphere_shape(1.0);
  throw DomainError("unknown built-in shape '" + name + "' (expected vehicle, drone or sphere)");
}

std::string jacobian_name(JacobianModel m) {
  switch (m) {
    case JacobianModel::kFarField: return "far_field";
    case JacobianModel::kPrinted: return "printed";
    case JacobianModel::kExact: return "exact";
  }
  return "far_field";
}

JacobianModel parse_jacobian(const std::string& s) {
  if (s == "far_field") return JacobianModel::kFarField;
  if (s == "printed") return JacobianModel::kPrinted;
  if (s == "exact") return JacobianModel::kExact;
  throw DomainError("unknown jacobian model '" + s + "'");
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

nlohmann::json upa_json(const UpaConfig& u) { return {{"n_x", u.n_x}, {"n_z", u.n_z}, {"spacing", u.spacing}}; }

UpaConfig upa_from(const nlohmann::json& j, UpaConfig u) {
  read_opt(j, "n_x", u.n_x);
  read_opt(j, "n_z", u.n_z);
  read_opt(j, "spacing", u.spacing);
  return u;
}

}  // namespace

void Scenario::validate() const {
  tx.validate();
  rx.validate();
  sense.validate();
  comm.validate();
  kin.validate();
  shape.validate();
  opts.validate();
  if (!(power_pt > 0.0)) throw DomainError("transmit power must be positive");
  if (grid_nu < 1 || grid_nv < 1) throw DomainError("scatterer grid must be at least 1 x 1");
}

SensingScenario Scenario::sensing() const {
  SensingScenario s;
  s.kin = kin;
  s.set = discretize_visible(shape, kin, grid_nu, grid_nv);
  s.tx = tx;
  s.rx = rx;
  s.sense = sense;
  s.model = model;
  return s;
}

IsacScenario Scenario::build() const {
  validate();
  IsacScenario sc;
  sc.sensing = sensing();
  sc.channels = gen_channels(comm, cu_directions, tx);
  sc.power_pt = power_pt;
  sc.sigma_n2 = comm.sigma_n2;
  return sc;
}

std::string Scenario::hash() const {
  nlohmann::json j = *this;
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario default_scenario() {
  Scenario s;
  s.tx = s.rx = UpaConfig{8, 8, 0.5};
  s.sense.sigma_s2 = dbm2watt(-80.0);
  s.sense.bandwidth_b = 1e9;
  s.sense.carrier_hz = 30e9;
  s.sense.t_s = 1.0;
  s.comm.sigma_n2 = dbm2watt(-80.0);
  s.comm.gamma_db = 0.0;
  s.comm.path_loss_db = 100.0;
  s.kin = {8.7, 0.0, deg2rad(-23.0), 0.0};
  s.shape_name = "vehicle";
  s.shape = vehicle_shape();
  s.cu_directions = {{0.0, deg2rad(30.0), 0.0},
                     {0.0, deg2rad(-30.0), 0.0},
                     {deg2rad(-40.0), deg2rad(30.0), 0.0},
                     {deg2rad(-40.0), deg2rad(-30.0), 0.0}};
  s.power_pt = dbm2watt(30.0);
  s.opts.eta = 5.0;
  s.opts.alpha = 0.5;
  s.opts.beta = 1e4;
  s.grid_nu = 13;
  s.grid_nv = 6;
  return s;
}

Scenario reduced_scenario() {
  Scenario s = default_scenario();
  s.tx = s.rx = UpaConfig{4, 4, 0.5};
  s.cu_directions = {{0.0, deg2rad(30.0), 0.0}, {0.0, deg2rad(-30.0), 0.0}};
  s.kin = {20.0, deg2rad(10.0), deg2rad(-15.0), deg2rad(30.0)};
  s.shape_name = "sphere";
  s.shape = sphere_shape(1.0);
  s.grid_nu = 2;
  s.grid_nv = 3;
  s.opts.randomization_trials = 50;
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("scenario file " + path + " is not valid JSON: " + e.what());
  }
  Scenario s = j.get<Scenario>();
  if (j.contains("shape") && j["shape"].is_object() && j["shape"].contains("path")) {
    // Relative shape paths resolve against the config file's directory.
    std::string p = j["shape"]["path"].get<std::string>();
    if (!p.empty() && p.front() != '/') {
      const auto slash = path.find_last_of('/');
      if (slash != std::string::npos) p = path.substr(0, slash + 1) + p;
    }
    std::ifstream sf(p);
    if (!sf) throw DomainError("cannot open shape file " + p);
    nlohmann::json sj;
    sf >> sj;
    s.shape = sj.contains("shape") ? sj["shape"].get<TfsShape>() : sj.get<TfsShape>();
    s.shape_name = "inline";
  }
  s.validate();
  return s;
}

void to_json(nlohmann::json& j, const Scenario& s) {
  nlohmann::json cus = nlohmann::json::array();
  for (const auto& c : s.cu_directions)
    cus.push_back({{"theta_deg", rad2deg(c.theta)}, {"phi_deg", rad2deg(c.phi)}, {"extra_loss_db", c.extra_loss_db}});
  const auto& o = s.opts;
  j = {{"tx", upa_json(s.tx)},
       {"rx", upa_json(s.rx)},
       {"sense",
        {{"sigma_s2_dbm", watt2dbm(s.sense.sigma_s2)},
         {"bandwidth_hz", s.sense.bandwidth_b},
         {"t_s", s.sense.t_s},
         {"p0", s.sense.p0},
         {"carrier_hz", s.sense.carrier_hz}}},
       {"comm",
        {{"sigma_n2_dbm", watt2dbm(s.comm.sigma_n2)},
         {"gamma_db", s.comm.gamma_db},
         {"path_loss_db", s.comm.path_loss_db},
         {"n_clusters", s.comm.n_clusters},
         {"cluster_spread_deg", s.comm.cluster_spread_deg},
         {"cluster_power_db", s.comm.cluster_power_db},
         {"seed", s.comm.seed}}},
       {"kinematics",
        {{"d_o", s.kin.d_o},
         {"theta_deg", rad2deg(s.kin.theta_o)},
         {"phi_deg", rad2deg(s.kin.phi_o)},
         {"orient_deg", rad2deg(s.kin.orient)}}},
       {"cu_directions", cus},
       {"power_dbm", watt2dbm(s.power_pt)},
       {"solver",
        {{"max_iters", o.max_iters},
         {"primal_tol", o.primal_tol},
         {"dual_tol", o.dual_tol},
         {"gap_tol", o.gap_tol},
         {"sca_iters", o.sca_iters},
         {"sca_tol", o.sca_tol},
         {"randomization_trials", o.randomization_trials},
         {"eta", o.eta},
         {"enforce_coverage", o.enforce_coverage},
         {"alpha", o.alpha},
         {"beta", o.beta},
         {"seed", o.seed}}},
       {"grid", {{"n_u", s.grid_nu}, {"n_v", s.grid_nv}}},
       {"seed", s.seed},
       {"jacobian", jacobian_name(s.model)}};
  // A built-in name only stands for the shape while the coefficients are
  // untouched; otherwise the coefficients go out verbatim.
  bool named = s.shape_name != "inline";
  if (named) {
    const TfsShape b = builtin_shape(s.shape_name);
    named = b.q1 == s.shape.q1 && b.q2 == s.shape.q2 && b.coeff_x == s.shape.coeff_x && b.coeff_y == s.shape.coeff_y &&
            b.coeff_z == s.shape.coeff_z;
  }
  if (named) j["shape"] = s.shape_name;
  else j["shape"] = {{"coefficients", s.shape}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  s = default_scenario();
  if (j.contains("tx")) s.tx = upa_from(j["tx"], s.tx);
  if (j.contains("rx")) s.rx = upa_from(j["rx"], s.rx);
  if (j.contains("upa")) s.tx = s.rx = upa_from(j["upa"], s.tx);
  if (j.contains("sense")) {
    const auto& v = j["sense"];
    if (v.contains("sigma_s2_dbm")) s.sense.sigma_s2 = dbm2watt(v["sigma_s2_dbm"].get<double>());
    read_opt(v, "bandwidth_hz", s.sense.bandwidth_b);
    read_opt(v, "t_s", s.sense.t_s);
    read_opt(v, "p0", s.sense.p0);
    read_opt(v, "carrier_hz", s.sense.carrier_hz);
  }
  if (j.contains("comm")) {
    const auto& v = j["comm"];
    if (v.contains("sigma_n2_dbm")) s.comm.sigma_n2 = dbm2watt(v["sigma_n2_dbm"].get<double>());
    read_opt(v, "gamma_db", s.comm.gamma_db);
    read_opt(v, "path_loss_db", s.comm.path_loss_db);
    read_opt(v, "n_clusters", s.comm.n_clusters);
    read_opt(v, "cluster_spread_deg", s.comm.cluster_spread_deg);
    read_opt(v, "cluster_power_db", s.comm.cluster_power_db);
    read_opt(v, "seed", s.comm.seed);
  }
  if (j.contains("kinematics")) {
    const auto& v = j["kinematics"];
    read_opt(v, "d_o", s.kin.d_o);
    if (v.contains("theta_deg")) s.kin.theta_o = deg2rad(v["theta_deg"].get<double>());
    if (v.contains("phi_deg")) s.kin.phi_o = deg2rad(v["phi_deg"].get<double>());
    if (v.contains("orient_deg")) s.kin.orient = deg2rad(v["orient_deg"].get<double>());
  }
  if (j.contains("shape")) {
    const auto& v = j["shape"];
    if (v.is_string()) {
      s.shape_name = v.get<std::string>();
      s.shape = builtin_shape(s.shape_name);
    } else if (v.is_object() && v.contains("coefficients")) {
      s.shape = v["coefficients"].get<TfsShape>();
      s.shape_name = "inline";
    } else if (!(v.is_object() && v.contains("path"))) {
      throw DomainError("shape must be a built-in name, {\"path\": ...} or {\"coefficients\": ...}");
    }
  }
  if (j.contains("cu_directions")) {
    s.cu_directions.clear();
    for (const auto& c : j["cu_directions"]) {
      CuDirection d;
      d.theta = deg2rad(c.value("theta_deg", 0.0));
      d.phi = deg2rad(c.value("phi_deg", 0.0));
      d.extra_loss_db = c.value("extra_loss_db", 0.0);
      s.cu_directions.push_back(d);
    }
  }
  if (j.contains("power_dbm")) s.power_pt = dbm2watt(j["power_dbm"].get<double>());
  if (j.contains("solver")) {
    const auto& v = j["solver"];
    auto& o = s.opts;
    read_opt(v, "max_iters", o.max_iters);
    read_opt(v, "primal_tol", o.primal_tol);
    read_opt(v, "dual_tol", o.dual_tol);
    read_opt(v, "gap_tol", o.gap_tol);
    read_opt(v, "sca_iters", o.sca_iters);
    read_opt(v, "sca_tol", o.sca_tol);
    read_opt(v, "randomization_trials", o.randomization_trials);
    read_opt(v, "eta", o.eta);
    read_opt(v, "enforce_coverage", o.enforce_coverage);
    read_opt(v, "alpha", o.alpha);
    read_opt(v, "beta", o.beta);
    read_opt(v, "seed", o.seed);
  }
  if (j.contains("grid")) {
    read_opt(j["grid"], "n_u", s.grid_nu);
    read_opt(j["grid"], "n_v", s.grid_nv);
  }
  read_opt(j, "seed", s.seed);
  if (j.contains("jacobian")) s.model = parse_jacobian(j["jacobian"].get<std::string>());
}

void SweepSpec::validate() const {
  if (values.empty()) throw DomainError("sweep needs at least one value");
  if (realizations < 1) throw DomainError("sweep needs at least one realization");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError("sweep values must be finite");
    if (variable == Variable::kDistance && !(v > 0.0)) throw DomainError("distance sweep values must be positive");
    if (variable == Variable::kAlpha && !(v >= 0.0 && v <= 1.0)) throw DomainError("alpha sweep values must lie in [0, 1]");
  }
}

SweepSpec::Variable parse_sweep_variable(const std::string& name) {
  if (name == "d_o") return SweepSpec::Variable::kDistance;
  if (name == "gamma_db") return SweepSpec::Variable::kGammaDb;
  if (name == "alpha") return SweepSpec::Variable::kAlpha;
  if (name == "power_pt" || name == "power_dbm") return SweepSpec::Variable::kPower;
  throw DomainError("unknown sweep variable '" + name + "' (expected d_o, gamma_db, alpha or power_dbm)");
}

std::string sweep_variable_name(SweepSpec::Variable v) {
  switch (v) {
    case SweepSpec::Variable::kDistance: return "d_o";
    case SweepSpec::Variable::kGammaDb: return "gamma_db";
    case SweepSpec::Variable::kAlpha: return "alpha";
    case SweepSpec::Variable::kPower: return "power_dbm";
  }
  return "d_o";
}

// Power sweeps are written in dBm and held in dBm: the value is converted
// where the scenario is modified.
void from_json(const nlohmann::json& j, SweepSpec& s) {
  s = SweepSpec{};
  if (j.contains("variable")) s.variable = parse_sweep_variable(j["variable"].get<std::string>());
  if (j.contains("values")) s.values = j["values"].get<std::vector<double>>();
  if (j.contains("range")) {
    const auto& r = j["range"];
    const double lo = r.at("start").get<double>(), hi = r.at("stop").get<double>();
    const int n = r.at("count").get<int>();
    if (n < 1) throw DomainError("sweep range count must be positive");
    s.values.clear();
    for (int i = 0; i < n; ++i) s.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  }
  read_opt(j, "realizations", s.realizations);
  read_opt(j, "fixed_snr", s.fixed_snr);
}

void to_json(nlohmann::json& j, const SweepSpec& s) {
  j = {{"variable", sweep_variable_name(s.variable)},
       {"values", s.values},
       {"realizations", s.realizations},
       {"fixed_snr", s.fixed_snr}};
}

}  // namespace etisac
