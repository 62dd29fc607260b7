#include <doctest.h>

#include "etisac/scenario.h"

using namespace etisac;

namespace {

IsacScenario reduced() { return reduced_scenario().build(); }

SolverOptions quiet() {
  SolverOptions o = reduced_scenario().opts;
  o.parallel = false;
  return o;
}

}  // namespace

TEST_SUITE("beamform") {

TEST_CASE("CRB design is certified on the reduced scenario") {
  const IsacScenario sc = reduced();
  const DesignResult d = solve_crb_min(sc, 1.0, quiet());
  CHECK(d.status == "optimal");
  CHECK(d.gap <= 1e-7);
  CHECK(d.residuals.power >= -1e-6 * sc.power_pt);
  for (double r : d.residuals.sinr) CHECK(r >= -1e-6);
  CHECK(d.residuals.coverage >= -1e-6);
  CHECK(d.lower_bound <= d.crb.trace_crb * (1 + 1e-6));
  const CMat iso = CMat::Identity(sc.n_tx(), sc.n_tx()) * (sc.power_pt / sc.n_tx());
  CHECK(d.crb.trace_crb < crb(sc.sensing, iso).trace_crb);
}

TEST_CASE("center design without users puts the full array gain on the center") {
  IsacScenario sc = reduced();
  sc.channels.clear();
  const DesignResult d = center_design(sc, 0.0, quiet());
  CHECK(-d.objective == doctest::Approx(sc.power_pt * sc.n_tx()).epsilon(1e-6));
}

TEST_CASE("unreachable SINR targets raise a positive certificate") {
  const IsacScenario sc = reduced();
  try {
    solve_crb_min(sc, 1e9, quiet());
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(e.certificate > 0.0);
  }
}

TEST_CASE("CRB grows with the SINR target") {
  const IsacScenario sc = reduced();
  double prev = 0.0;
  for (double g : {0.25, 0.5, 1.0, 2.0}) {
    const DesignResult d = solve_crb_min(sc, g, quiet());
    CHECK(d.crb.trace_crb >= prev * (1 - 1e-6));
    prev = d.crb.trace_crb;
  }
}

TEST_CASE("weighted design never increases its objective") {
  const IsacScenario sc = reduced();
  const DesignResult d = solve_wim_sca(sc, quiet());
  REQUIRE(d.objective_trace.size() >= 1);
  for (std::size_t i = 1; i < d.objective_trace.size(); ++i)
    CHECK(d.objective_trace[i] <= d.objective_trace[i - 1] + 1e-9 * std::abs(d.objective_trace[i - 1]));
  CHECK(d.objective == doctest::Approx(design_objective(d.cov, sc, DesignObjective::kWim, quiet())));
}

TEST_CASE("the weaker user receives more power") {
  Scenario s = reduced_scenario();
  s.cu_directions[1].extra_loss_db = 6.0;
  const IsacScenario sc = s.build();
  const SolverOptions o = quiet();
  const DesignResult d = solve_crb_min(sc, db2lin(3.0), o);
  const double p0 = d.cov.w[0].trace().real(), p1 = d.cov.w[1].trace().real();
  CHECK(p1 > p0);
}

TEST_CASE("rank-one recovery stays close to the relaxation") {
  const IsacScenario sc = reduced();
  const SolverOptions o = quiet();
  const DesignResult d = solve_crb_min(sc, 1.0, o);
  const RecoveryResult r = randomize_rank1(d.cov, sc, 1.0, DesignObjective::kCrb, o, d.lower_bound);
  CHECK(r.feasible_trials > 0);
  CHECK(r.gap <= 0.1);
  CHECK(r.beams.total_power() <= sc.power_pt * (1 + 1e-9));
}

TEST_CASE("beampattern kernels agree and peak at the steered direction") {
  const UpaConfig upa{4, 4, 0.5};
  const CVec a = steering(upa, 0.2, -0.1);
  const CMat r = a * a.adjoint();
  const std::vector<double> th{-0.4, 0.0, 0.2, 0.5}, ph{-0.3, -0.1, 0.2};
  const MatX p = beampattern(r, upa, th, ph);
  const MatX q = beampattern_serial(r, upa, th, ph);
  CHECK((p - q).norm() == 0.0);
  CHECK(p(2, 1) == doctest::Approx(256.0));
  CHECK(p.maxCoeff() == p(2, 1));
  CHECK(beampattern(r, upa, th, ph, true).maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("coverage residual of a flat illumination") {
  const Scenario s = reduced_scenario();
  const SensingScenario sens = s.sensing();
  const CMat iso = CMat::Identity(16, 16) / 16.0;
  CHECK(coverage_residual(iso, sens.set, sens.tx, 5.0) == doctest::Approx(4.0));
}

TEST_CASE("option validation") {
  SolverOptions o;
  o.eta = 0.5;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = SolverOptions{};
  o.alpha = 1.5;
  CHECK_THROWS_AS(o.validate(), DomainError);
}

}
