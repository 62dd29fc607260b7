#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "etisac/scenario.h"

using namespace etisac;
namespace fs = std::filesystem;

TEST_SUITE("scenario") {

TEST_CASE("default scenario matches its description") {
  const Scenario s = default_scenario();
  CHECK(s.tx.size() == 64);
  CHECK(s.power_pt == doctest::Approx(1.0));
  CHECK(s.cu_directions.size() == 4);
  CHECK(s.sense.sigma_s2 == doctest::Approx(dbm2watt(-80)));
  const IsacScenario sc = s.build();
  CHECK(sc.sensing.set.size() == 38);
  CHECK(sc.n_users() == 4);
}

TEST_CASE("dBm conversion") {
  CHECK(dbm2watt(30.0) == doctest::Approx(1.0));
  CHECK(dbm2watt(-80.0) == doctest::Approx(1e-11));
  CHECK(db2lin(3.0) == doctest::Approx(1.9952623).epsilon(1e-6));
}

TEST_CASE("JSON round trip preserves the configuration and its hash") {
  Scenario s = reduced_scenario();
  s.kin.d_o = 17.25;
  s.comm.gamma_db = 3.0;
  const nlohmann::json j = s;
  const Scenario back = j.get<Scenario>();
  CHECK(back.hash() == s.hash());
  CHECK(nlohmann::json(back) == j);
  CHECK(s.hash().size() == 16);
}

TEST_CASE("hash reacts to every setting") {
  const Scenario s = reduced_scenario();
  Scenario t = s;
  t.comm.seed += 1;
  CHECK(t.hash() != s.hash());
  t = s;
  t.opts.eta = 4.0;
  CHECK(t.hash() != s.hash());
  t = s;
  t.shape = sphere_shape(1.5);
  CHECK(t.hash() != s.hash());
}

TEST_CASE("configuration files resolve shape paths relative to themselves") {
  const fs::path dir = fs::temp_directory_path() / "etisac_cfg_test";
  fs::create_directories(dir / "shapes");
  {
    std::ofstream(dir / "shapes" / "ball.json") << nlohmann::json{{"shape", sphere_shape(0.8)}}.dump();
    std::ofstream(dir / "cfg.json") << R"({"upa": {"n_x": 4, "n_z": 4}, "power_dbm": 20,
      "kinematics": {"d_o": 12, "theta_deg": 5, "phi_deg": -10, "orient_deg": 0},
      "shape": {"path": "shapes/ball.json"}, "grid": {"n_u": 3, "n_v": 3}})";
  }
  const Scenario s = load_scenario((dir / "cfg.json").string());
  CHECK(s.tx.size() == 16);
  CHECK(s.rx.size() == 16);
  CHECK(s.power_pt == doctest::Approx(0.1));
  CHECK(s.kin.d_o == doctest::Approx(12.0));
  CHECK(s.shape_name == "inline");
  CHECK((s.shape.coeff_x - sphere_shape(0.8).coeff_x).norm() < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("bad configurations fail with a message") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/cfg.json"), DomainError);
  nlohmann::json j = {{"shape", "teapot"}};
  CHECK_THROWS_AS(j.get<Scenario>(), DomainError);
  j = {{"jacobian", "approximate"}};
  CHECK_THROWS_AS(j.get<Scenario>(), DomainError);
  Scenario s = reduced_scenario();
  s.power_pt = 0.0;
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("sweep specifications") {
  SweepSpec sw = nlohmann::json{{"variable", "gamma_db"}, {"range", {{"start", -4}, {"stop", 8}, {"count", 7}}}}
                     .get<SweepSpec>();
  CHECK(sw.variable == SweepSpec::Variable::kGammaDb);
  REQUIRE(sw.values.size() == 7);
  CHECK(sw.values.front() == doctest::Approx(-4.0));
  CHECK(sw.values.back() == doctest::Approx(8.0));
  CHECK_NOTHROW(sw.validate());
  CHECK(sweep_variable_name(parse_sweep_variable("power_dbm")) == "power_dbm");
  CHECK_THROWS_AS(parse_sweep_variable("bandwidth"), DomainError);
  sw.values.clear();
  CHECK_THROWS_AS(sw.validate(), DomainError);
  sw = SweepSpec{};
  sw.variable = SweepSpec::Variable::kAlpha;
  sw.values = {0.5, 1.2};
  CHECK_THROWS_AS(sw.validate(), DomainError);
  sw.variable = SweepSpec::Variable::kPower;
  sw.values = {-10.0, 20.0};
  CHECK_NOTHROW(sw.validate());
  const nlohmann::json j = sw;
  CHECK(j.get<SweepSpec>().values == sw.values);
}

}
