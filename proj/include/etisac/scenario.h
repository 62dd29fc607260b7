#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "etisac/beamform_opt.h"

namespace etisac {

/// Complete experiment description. Configuration files use dBm / dB /
/// degrees; everything here is linear watts, ratios and radians.
struct Scenario {
  UpaConfig tx;
  UpaConfig rx;
  SensingConfig sense;
  CommConfig comm;
  Kinematics kin;
  std::string shape_name = "vehicle";  // vehicle, drone, sphere, or "inline" when loaded from coefficients
  TfsShape shape;
  std::vector<CuDirection> cu_directions;
  double power_pt = 1.0;
  SolverOptions opts;
  int grid_nu = 13;
  int grid_nv = 6;
  std::uint64_t seed = 1;
  JacobianModel model = JacobianModel::kFarField;

  void validate() const;
  /// Visible scatterers and user channels for the current settings.
  IsacScenario build() const;
  SensingScenario sensing() const;
  /// Short stable fingerprint of the canonical configuration.
  std::string hash() const;
};

/// 8x8 arrays, four users, vehicle target at 8.7 m, P_t = 30 dBm.
Scenario default_scenario();
/// 4x4 arrays, two users, three scatterers: fast enough for self-checks.
Scenario reduced_scenario();

Scenario load_scenario(const std::string& path);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

struct SweepSpec {
  enum class Variable { kDistance, kGammaDb, kAlpha, kPower };
  Variable variable = Variable::kDistance;
  std::vector<double> values;
  int realizations = 200;
  bool fixed_snr = true;  // hold P_t g^2 / sigma_s^2 at its value for the configured distance

  void validate() const;
};

SweepSpec::Variable parse_sweep_variable(const std::string& name);
std::string sweep_variable_name(SweepSpec::Variable v);
void from_json(const nlohmann::json& j, SweepSpec& s);
void to_json(nlohmann::json& j, const SweepSpec& s);

}  // namespace etisac
