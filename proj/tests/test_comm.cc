#include <doctest.h>

#include <random>

#include "etisac/comm_model.h"

using namespace etisac;

namespace {

std::vector<CuDirection> users() { return {{0.0, 0.2, 0.0}, {0.5, 0.3, 3.0}, {-0.6, 0.1, 0.0}}; }

BeamformerSet random_beams(int n_users, int n_tx, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g;
  BeamformerSet b;
  for (int i = 0; i < n_users; ++i) {
    CVec w(n_tx);
    for (auto& x : w) x = {g(rng), g(rng)};
    b.w.push_back(scale * w);
  }
  return b;
}

}  // namespace

TEST_SUITE("comm") {

TEST_CASE("channels are deterministic in the seed") {
  CommConfig cfg;
  const UpaConfig upa{4, 4, 0.5};
  const auto a = gen_channels(cfg, users(), upa);
  const auto b = gen_channels(cfg, users(), upa);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].h - b[i].h).norm() == 0.0);
  cfg.seed = 2;
  const auto c = gen_channels(cfg, users(), upa);
  CHECK((a[0].h - c[0].h).norm() > 0.0);
}

TEST_CASE("extra loss attenuates the user channel") {
  CommConfig cfg;
  cfg.n_clusters = 0;
  const auto ch = gen_channels(cfg, users(), UpaConfig{4, 4, 0.5});
  CHECK(ch[1].path_loss_db == doctest::Approx(103.0));
  CHECK(ch[1].h.squaredNorm() == doctest::Approx(ch[0].h.squaredNorm() * db2lin(-3.0)).epsilon(1e-9));
}

TEST_CASE("SINR matches a direct evaluation") {
  std::mt19937_64 rng(5);
  const auto ch = gen_channels(CommConfig{}, users(), UpaConfig{4, 4, 0.5});
  const BeamformerSet b = random_beams(3, 16, rng, 0.1);
  const double s2 = 1e-11;
  for (int n = 0; n < 3; ++n) {
    double sig = 0, intf = 0;
    for (int i = 0; i < 3; ++i) {
      const double p = std::norm(ch[n].h.dot(b.w[i]));
      (i == n ? sig : intf) += p;
    }
    CHECK(sinr(b, ch[n], n, s2) == doctest::Approx(sig / (intf + s2)));
    CHECK(sinr(CovarianceSet::from_beamformers(b), ch[n], n, s2) == doctest::Approx(sig / (intf + s2)));
  }
  double rate = 0;
  for (int n = 0; n < 3; ++n) rate += std::log2(1 + sinr(b, ch[n], n, s2));
  CHECK(sum_rate(b, ch, s2) == doctest::Approx(rate));
}

TEST_CASE("feasibility margin agrees in sign with the SINR test") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> gam(0.1, 10.0), sc(-6, -3);
  CommConfig cfg;
  int agree = 0;
  for (int t = 0; t < 1000; ++t) {
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto ch = gen_channels(cfg, users(), UpaConfig{4, 4, 0.5});
    const BeamformerSet b = random_beams(3, 16, rng, std::pow(10.0, sc(rng)));
    const double g = gam(rng);
    const auto f = sinr_feasible(b, ch, g, cfg.sigma_n2);
    for (int n = 0; n < 3; ++n) agree += (f[n] >= 0) == (sinr(b, ch[n], n, cfg.sigma_n2) >= g);
  }
  CHECK(agree == 3000);
}

TEST_CASE("orthogonal users see no interference") {
  const UpaConfig upa{4, 1, 0.5};
  // Directions on the DFT grid of a four-element line.
  std::vector<Channel> ch;
  for (double s : {0.0, 0.5}) {
    Channel c;
    c.h = steering(upa, std::asin(s), 0.0);
    ch.push_back(c);
  }
  REQUIRE(std::abs(ch[0].h.dot(ch[1].h)) < 1e-12);
  BeamformerSet b;
  b.w = {ch[0].h, ch[1].h};
  CHECK(sinr(b, ch[0], 0, 1.0) == doctest::Approx(16.0));
  CHECK(sinr(b, ch[1], 1, 1.0) == doctest::Approx(16.0));
}

TEST_CASE("covariance sets sum their blocks") {
  std::mt19937_64 rng(8);
  const BeamformerSet b = random_beams(2, 4, rng, 1.0);
  const CovarianceSet c = CovarianceSet::from_beamformers(b);
  CHECK((c.r_x - b.covariance()).norm() < 1e-12);
  CHECK(c.total_power() == doctest::Approx(b.total_power()));
}

TEST_CASE("channel JSON round trip") {
  const auto ch = gen_channels(CommConfig{}, users(), UpaConfig{2, 2, 0.5});
  const nlohmann::json j = ch[1];
  const Channel back = j.get<Channel>();
  CHECK((back.h - ch[1].h).norm() == 0.0);
  CHECK(back.theta == ch[1].theta);
}

TEST_CASE("invalid inputs are rejected") {
  CommConfig cfg;
  cfg.sigma_n2 = -1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  BeamformerSet b;
  b.w = {CVec::Ones(4)};
  Channel c;
  c.h = CVec::Ones(4);
  CHECK_THROWS_AS(sinr(b, c, 3, 1.0), DomainError);
}

}
