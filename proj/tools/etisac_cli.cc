#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "etisac/experiments.h"

namespace fs = std::filesystem;
using namespace etisac;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  std::string method = "crb_min";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario JSON, or 'default' / 'reduced'")->envname("ETISAC_CONFIG");
  cmd->add_option("--out", c.out, "output directory")->envname("ETISAC_OUT");
  cmd->add_option("--seed", c.seed, "seed for channels, randomization and random covariances")->envname("ETISAC_SEED");
  cmd->add_option("--realizations", c.realizations, "Monte Carlo realizations per sweep point")
      ->envname("ETISAC_REALIZATIONS");
}

// Returns the scenario plus the raw JSON (for an embedded sweep section).
std::pair<Scenario, nlohmann::json> load(const Common& c) {
  Scenario s;
  nlohmann::json raw;
  if (c.config.empty() || c.config == "default") {
    s = default_scenario();
  } else if (c.config == "reduced") {
    s = reduced_scenario();
  } else {
    s = load_scenario(c.config);
    std::ifstream in(c.config);
    in >> raw;
  }
  if (c.seed) {
    s.seed = *c.seed;
    s.comm.seed = *c.seed;
    s.opts.seed = *c.seed;
  }
  return {s, raw};
}

SweepSpec sweep_from(const nlohmann::json& raw, const Common& c, const std::string& variable,
                     const std::vector<double>& values, SweepSpec fallback) {
  SweepSpec sw = raw.contains("sweep") ? raw["sweep"].get<SweepSpec>() : fallback;
  if (!variable.empty()) sw.variable = parse_sweep_variable(variable);
  if (!values.empty()) sw.values = values;
  if (c.realizations) sw.realizations = *c.realizations;
  sw.validate();
  return sw;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const fs::path p = fs::path(dir) / name;
  std::ofstream os(p);
  if (!os) throw DomainError("cannot write " + p.string());
  std::cerr << "wrote " << p.string() << '\n';
  return os;
}

void write_infeasible(const std::string& dir, const std::string& name, const std::string& hash, Method m,
                      const InfeasibleError& e) {
  auto os = open_out(dir, name);
  os << nlohmann::json{{"hash", hash}, {"method", method_name(m)}, {"status", "infeasible"},
                       {"certificate", e.certificate}, {"message", e.what()}}
            .dump(2)
     << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended-target ISAC beamforming: CRB analysis, transmit design and trade-off sweeps"};
  app.require_subcommand(1);

  Common c;
  std::string variable;
  std::vector<double> values;
  bool randomize = false, pattern = false;
  double step = 0.5;
  std::string samples;
  int q1 = 8, q2 = 8;

  auto* sweep_cmd = app.add_subcommand("crb-sweep", "CRB of the target and of a point target versus distance");
  add_common(sweep_cmd, c);
  sweep_cmd->add_option("--variable", variable, "d_o or power_dbm");
  sweep_cmd->add_option("--values", values, "sweep values")->delimiter(',');

  auto* solve_cmd = app.add_subcommand("solve", "one transmit design");
  add_common(solve_cmd, c);
  solve_cmd->add_option("--method", c.method, "crb_min, center, average or wim")->envname("ETISAC_METHOD");
  solve_cmd->add_flag("--randomize", randomize, "recover rank-one beamformers by Gaussian randomization");
  solve_cmd->add_flag("--beampattern", pattern, "also write the beampattern grid");

  auto* bp_cmd = app.add_subcommand("beampattern", "design and write its beampattern grid with peak statistics");
  add_common(bp_cmd, c);
  bp_cmd->add_option("--method", c.method, "crb_min, center, average or wim")->envname("ETISAC_METHOD");
  bp_cmd->add_option("--step", step, "grid step in degrees");

  auto* trade_cmd = app.add_subcommand("tradeoff", "sensing/communication trade-off over Gamma or alpha");
  add_common(trade_cmd, c);
  std::string methods_arg;
  trade_cmd->add_option("--method", methods_arg, "comma-separated methods (default by sweep variable)")
      ->envname("ETISAC_METHOD");
  trade_cmd->add_option("--variable", variable, "gamma_db or alpha");
  trade_cmd->add_option("--values", values, "sweep values")->delimiter(',');

  auto* val_cmd = app.add_subcommand("validate", "self-checks; nonzero exit on any failure");
  add_common(val_cmd, c);

  auto* fit_cmd = app.add_subcommand("fit-shape", "fit Fourier surface coefficients to a point cloud");
  fit_cmd->add_option("--samples", samples, "CSV with columns u, v, x, y, z")->required();
  fit_cmd->add_option("--q1", q1, "harmonics in u");
  fit_cmd->add_option("--q2", q2, "harmonics in v");
  fit_cmd->add_option("--out", c.out, "output directory")->envname("ETISAC_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep_cmd) {
      auto [s, raw] = load(c);
      SweepSpec fallback;
      fallback.values = {2, 4, 6, 8.7, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256};
      const SweepSpec sw = sweep_from(raw, c, variable, values, fallback);
      const CrbSweepTable t = run_crb_sweep(s, sw);
      auto os = open_out(c.out, "crb_sweep.csv");
      write_crb_sweep_csv(os, t);
      return 0;
    }
    if (*solve_cmd || *bp_cmd) {
      auto [s, raw] = load(c);
      const Method m = parse_method(c.method);
      try {
        const SolveOutput out = run_solve(s, m, randomize);
        if (*solve_cmd) {
          auto os = open_out(c.out, "solve_" + method_name(m) + ".json");
          os << to_json_output(out).dump(2) << '\n';
        }
        if (pattern || *bp_cmd) {
          const PatternGrid p = make_pattern(out.design.cov.r_x, s.tx, -60, 60, -60, 60, step);
          auto os = open_out(c.out, "beampattern_" + method_name(m) + ".csv");
          write_pattern_csv(os, p, out.hash);
          const PatternStats st = analyze_pattern(p);
          const SensingScenario sens = s.sensing();
          auto js = open_out(c.out, "beampattern_" + method_name(m) + "_stats.json");
          js << nlohmann::json{{"hash", out.hash},
                               {"method", method_name(m)},
                               {"peaks_within_3db", st.peaks},
                               {"area_3db_deg2", st.area_3db},
                               {"scatterer_footprint_deg2", scatterer_footprint_deg2(sens.set)}}
                    .dump(2)
             << '\n';
        }
        std::cout << method_name(m) << ": status " << out.design.status << ", tr(CRB) " << out.design.crb.trace_crb
                  << ", gap " << out.design.gap << '\n';
      } catch (const InfeasibleError& e) {
        write_infeasible(c.out, "solve_" + method_name(m) + ".json", s.hash(), m, e);
        std::cerr << "infeasible: " << e.what() << " (certificate " << e.certificate << ")\n";
        return 3;
      }
      return 0;
    }
    if (*trade_cmd) {
      auto [s, raw] = load(c);
      SweepSpec fallback;
      fallback.variable = SweepSpec::Variable::kGammaDb;
      fallback.values = {-4, -2, 0, 2, 4, 6, 8};
      fallback.realizations = 1;
      const SweepSpec sw = sweep_from(raw, c, variable, values, fallback);
      std::vector<Method> methods;
      std::stringstream ss(methods_arg);
      for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) methods.push_back(parse_method(tok));
      const TradeoffTable t = run_tradeoff(s, sw, methods);
      auto os = open_out(c.out, "tradeoff.csv");
      write_tradeoff_csv(os, t);
      return 0;
    }
    if (*val_cmd) {
      Common vc = c;
      if (vc.config.empty()) vc.config = "reduced";
      auto [s, raw] = load(vc);
      const ValidationReport rep = run_validate(s);
      for (const auto& ch : rep.checks)
        std::cout << (ch.passed ? "PASS " : "FAIL ") << std::left << std::setw(34) << ch.name << " value "
                  << ch.value << "  tol " << ch.tolerance << (ch.detail.empty() ? "" : "  " + ch.detail) << '\n';
      auto os = open_out(c.out, "validate.json");
      os << nlohmann::json(rep).dump(2) << '\n';
      return rep.all_passed() ? 0 : 1;
    }
    if (*fit_cmd) {
      const FitResult f = run_fit_shape(samples, q1, q2);
      auto os = open_out(c.out, "shape.json");
      os << nlohmann::json{{"shape", f.shape}, {"rms_residual", f.rms_residual}}.dump(2) << '\n';
      std::cout << "rms residual " << f.rms_residual << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
