#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "etisac/conic_solver.h"
#include "etisac/comm_model.h"
#include "etisac/crb_engine.h"

namespace etisac {

struct SolverOptions {
  int max_iters = 200;  // interior-point iterations per conic solve
  double primal_tol = 1e-6;
  double dual_tol = 1e-6;
  double gap_tol = 1e-7;
  int sca_iters = 20;
  double sca_tol = 1e-6;
  int randomization_trials = 100;
  double eta = 5.0;
  bool enforce_coverage = true;
  double alpha = 0.5;
  double beta = 1e4;
  std::uint64_t seed = 7;
  bool parallel = true;

  void validate() const;
};

/// Everything a transmit design needs: the sensing geometry, the user
/// channels, the power budget and the user noise level.
struct IsacScenario {
  SensingScenario sensing;
  std::vector<Channel> channels;
  double power_pt = 1.0;
  double sigma_n2 = 1e-11;

  int n_users() const { return static_cast<int>(channels.size()); }
  int n_tx() const { return sensing.tx.size(); }
};

struct Residuals {
  double power = 0.0;             // P_t - tr(R), watts
  std::vector<double> sinr;       // SINR-constraint residuals divided by sigma_n^2
  double coverage = 0.0;          // eta min - max beam energy, divided by P_t
};

struct DesignResult {
  std::string status = "optimal";
  CovarianceSet cov;
  double objective = 0.0;     // design objective evaluated at cov
  double lower_bound = 0.0;   // certified bound on the relaxed optimum (CRB designs)
  double gap = 0.0;           // relative duality-gap bound of the final conic solve
  int iterations = 0;         // interior-point iterations (summed over SCA rounds)
  std::vector<double> objective_trace;
  Residuals residuals;
  CrbReport crb;
  double sum_rate = 0.0;
};

/// gamma is the linear SINR target; gamma <= 0 removes the SINR constraints.
DesignResult solve_crb_min(const IsacScenario& sc, double gamma, const SolverOptions& opts);
DesignResult solve_wim_sca(const IsacScenario& sc, const SolverOptions& opts);
DesignResult center_design(const IsacScenario& sc, double gamma, const SolverOptions& opts);
using AngleGrid = std::vector<std::pair<double, double>>;  // (theta, phi) radians
DesignResult average_design(const IsacScenario& sc, double gamma, const AngleGrid& grid, const SolverOptions& opts);

/// Bounding box of the scatterer directions sampled on a regular grid.
AngleGrid visible_angle_grid(const ScattererSet& set, double step_deg = 1.0);

enum class DesignObjective { kCrb, kCenter, kAverage, kWim };

struct RecoveryResult {
  BeamformerSet beams;
  double objective = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;  // objective / lower_bound - 1 (CRB designs)
  int feasible_trials = 0;
  int best_trial = -1;  // -1 marks the principal-eigenvector candidate
};

/// Gaussian randomization with per-trial power reallocation. The principal
/// eigenvectors form an extra deterministic candidate.
RecoveryResult randomize_rank1(const CovarianceSet& cov, const IsacScenario& sc, double gamma, DesignObjective kind,
                               const SolverOptions& opts, double lower_bound = 0.0, const AngleGrid& grid = {});

/// True objective of a design: tr(CRB), -center energy, -min grid energy,
/// or the weighted ISAC metric.
double design_objective(const CovarianceSet& cov, const IsacScenario& sc, DesignObjective kind,
                        const SolverOptions& opts, const AngleGrid& grid = {});

Residuals residuals(const CovarianceSet& cov, const IsacScenario& sc, double gamma, double eta);

/// Energy a(theta, phi)^H R a(theta, phi) over a theta x phi grid (rows theta).
MatX beampattern(const CMat& r_x, const UpaConfig& upa, std::span<const double> theta_grid,
                 std::span<const double> phi_grid, bool normalize = false);
MatX beampattern_serial(const CMat& r_x, const UpaConfig& upa, std::span<const double> theta_grid,
                        std::span<const double> phi_grid, bool normalize = false);

/// eta * min_k a_k^H R a_k - max_k a_k^H R a_k.
double coverage_residual(const CMat& r_x, const ScattererSet& set, const UpaConfig& upa, double eta);

void to_json(nlohmann::json& j, const DesignResult& r);
void to_json(nlohmann::json& j, const RecoveryResult& r);

}  // namespace etisac
