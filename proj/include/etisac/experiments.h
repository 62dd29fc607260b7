#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "etisac/scenario.h"

namespace etisac {

// ---- CRB versus distance -------------------------------------------------

struct CrbSweepRow {
  double value = 0.0;  // swept quantity (meters, or dBm for power)
  int n_scatterers = 0;
  double snr = 0.0;    // P_t g^2 / sigma_s^2 used for this row
  CrbReport et;
  CrbReport pt;        // single centered scatterer, same kinematics and SNR
};

struct CrbSweepTable {
  std::string hash;
  SweepSpec spec;
  std::vector<CrbSweepRow> rows;
};

/// Analytic CRBs of the target and of a point target under the isotropic
/// covariance P_t / N_t I. Scatterer areas are normalized to sum to one. The
/// random cross sections do not enter the analytic bound, so one evaluation
/// per point is exact and the realization count is not used.
CrbSweepTable run_crb_sweep(const Scenario& sc, const SweepSpec& sweep);
CrbSweepTable run_crb_sweep_serial(const Scenario& sc, const SweepSpec& sweep);

/// Columns: raw bounds, bounds divided by the per-column maximum over the
/// sweep, and bounds multiplied by the radar SNR.
void write_crb_sweep_csv(std::ostream& os, const CrbSweepTable& t);

// ---- single designs ------------------------------------------------------

enum class Method { kCrbMin, kCenter, kAverage, kWim };
Method parse_method(const std::string& name);
std::string method_name(Method m);

struct SolveOutput {
  std::string hash;
  Method method = Method::kCrbMin;
  double gamma = 0.0;  // linear SINR target
  DesignResult design;
  std::optional<RecoveryResult> recovery;
};

/// Runs one design at the scenario's SINR target; rank-one recovery on
/// request. Infeasibility propagates as InfeasibleError.
SolveOutput run_solve(const Scenario& sc, Method method, bool randomize = false);
nlohmann::json to_json_output(const SolveOutput& out);

struct PatternGrid {
  std::vector<double> theta_deg;
  std::vector<double> phi_deg;
  MatX energy;  // rows theta, normalized to a unit maximum
};

PatternGrid make_pattern(const CMat& r_x, const UpaConfig& upa, double theta_lo = -60, double theta_hi = 60,
                         double phi_lo = -60, double phi_hi = 60, double step = 0.5, bool parallel = true);
void write_pattern_csv(std::ostream& os, const PatternGrid& p, const std::string& hash);

struct PatternStats {
  int n_peaks = 0;                    // local maxima within 3 dB of the global maximum
  std::vector<std::array<double, 2>> peaks;  // (theta, phi) in degrees, strongest first
  double area_3db = 0.0;              // square degrees at or above half power
};

/// Peak and -3 dB contour extraction on a normalized grid. Maxima closer
/// than min_sep degrees to a stronger one are merged.
PatternStats analyze_pattern(const PatternGrid& p, double min_sep_deg = 3.0);

/// Square degrees of the bounding box of the visible scatterer directions.
double scatterer_footprint_deg2(const ScattererSet& set);

// ---- trade-off sweeps ----------------------------------------------------

struct TradeoffRow {
  double value = 0.0;  // Gamma in dB or alpha
  Method method = Method::kCrbMin;
  int realization = 0;
  std::string status;
  double trace_crb = 0.0;
  double min_sinr_db = 0.0;
  double sum_rate = 0.0;
};

struct TradeoffTable {
  std::string hash;
  SweepSpec spec;
  std::vector<TradeoffRow> rows;  // ordered by value, realization, method
};

/// Gamma sweeps run the CRB design and both baselines; alpha sweeps run the
/// weighted design. Realizations redraw the user channels (seed + r).
/// Points run as independent jobs; infeasible points keep their row with
/// status "infeasible".
TradeoffTable run_tradeoff(const Scenario& sc, const SweepSpec& sweep, std::vector<Method> methods = {});
void write_tradeoff_csv(std::ostream& os, const TradeoffTable& t);

// ---- self-checks ---------------------------------------------------------

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::string hash;
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

/// Oracle agreement, point-target degeneration, homogeneity, cross-section
/// invariance, solver certificates and kernel agreement on the given
/// (ideally reduced) scenario.
ValidationReport run_validate(const Scenario& sc);
void to_json(nlohmann::json& j, const ValidationReport& r);

// ---- shape fitting -------------------------------------------------------

/// Least-squares Fourier fit of a CSV point cloud (columns u, v, x, y, z).
FitResult run_fit_shape(const std::string& samples_csv, int q1, int q2);

}  // namespace etisac
