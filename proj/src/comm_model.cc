#include "etisac/comm_model.h"

#include <cmath>
#include <random>

namespace etisac {

void CommConfig::validate() const {
  if (!(sigma_n2 > 0)) throw DomainError("communication noise power must be positive");
  if (n_clusters < 0) throw DomainError("cluster count must be >= 0");
  if (cluster_spread_deg < 0) throw DomainError("cluster spread must be >= 0");
}

std::vector<Channel> gen_channels(const CommConfig& cfg, std::span<const CuDirection> cus, const UpaConfig& upa) {
  cfg.validate();
  if (cus.empty()) throw DomainError("at least one user direction is required");
  std::mt19937_64 rng(cfg.seed);
  const double spread = deg2rad(cfg.cluster_spread_deg);
  std::uniform_real_distribution<double> offset(-spread, spread);
  std::normal_distribution<double> gauss(0.0, std::sqrt(db2lin(cfg.cluster_power_db) / 2.0));

  std::vector<Channel> out;
  out.reserve(cus.size());
  for (const auto& cu : cus) {
    Channel c;
    c.theta = cu.theta;
    c.phi = cu.phi;
    c.path_loss_db = cfg.path_loss_db + cu.extra_loss_db;
    c.h = steering(upa, cu.theta, cu.phi);
    for (int l = 0; l < cfg.n_clusters; ++l) {
      const double th = cu.theta + offset(rng);
      const double ph = std::clamp(cu.phi + offset(rng), -kPi / 2, kPi / 2);
      const double re = gauss(rng);
      const double im = gauss(rng);
      c.h += cplx(re, im) * steering(upa, th, ph);
    }
    c.h *= std::sqrt(db2lin(-c.path_loss_db));
    out.push_back(std::move(c));
  }
  return out;
}

double BeamformerSet::total_power() const {
  double p = 0.0;
  for (const auto& v : w) p += v.squaredNorm();
  return p;
}

CMat BeamformerSet::covariance() const {
  if (w.empty()) return CMat();
  CMat r = CMat::Zero(w.front().size(), w.front().size());
  for (const auto& v : w) r += v * v.adjoint();
  return r;
}

CovarianceSet CovarianceSet::from_blocks(std::vector<CMat> blocks) {
  if (blocks.empty()) throw DomainError("covariance set needs at least one block");
  CovarianceSet c;
  c.r_x = CMat::Zero(blocks.front().rows(), blocks.front().cols());
  for (const auto& b : blocks) c.r_x += b;
  c.w = std::move(blocks);
  return c;
}

CovarianceSet CovarianceSet::from_beamformers(const BeamformerSet& b) {
  std::vector<CMat> blocks;
  for (const auto& v : b.w) blocks.push_back(v * v.adjoint());
  return from_blocks(std::move(blocks));
}

namespace {

double received(const CMat& w, const CVec& h) { return h.dot(w * h).real(); }
double received(const CVec& w, const CVec& h) { return std::norm(h.dot(w)); }

template <typename Set>
double sinr_impl(const Set& items, const Channel& h, int n, double sigma_n2) {
  if (n < 0 || n >= static_cast<int>(items.size())) throw DomainError("user index out of range");
  double interference = 0.0;
  for (int i = 0; i < static_cast<int>(items.size()); ++i)
    if (i != n) interference += received(items[i], h.h);
  return received(items[n], h.h) / (interference + sigma_n2);
}

template <typename Set>
double rate_impl(const Set& items, std::span<const Channel> channels, double sigma_n2) {
  if (items.size() != channels.size()) throw DomainError("one channel per user required");
  double r = 0.0;
  for (std::size_t n = 0; n < channels.size(); ++n)
    r += std::log2(1.0 + sinr_impl(items, channels[n], static_cast<int>(n), sigma_n2));
  return r;
}

template <typename Set>
std::vector<double> feasible_impl(const Set& items, std::span<const Channel> channels, double gamma,
                                  double sigma_n2) {
  if (items.size() != channels.size()) throw DomainError("one channel per user required");
  if (!(gamma > 0)) throw DomainError("SINR target must be positive");
  std::vector<double> out;
  for (std::size_t n = 0; n < channels.size(); ++n) {
    double total = 0.0;
    for (const auto& it : items) total += received(it, channels[n].h);
    out.push_back((1.0 + 1.0 / gamma) * received(items[n], channels[n].h) - total - sigma_n2);
  }
  return out;
}

}  // namespace

double sinr(const BeamformerSet& w_set, const Channel& h, int n, double sigma_n2) {
  return sinr_impl(w_set.w, h, n, sigma_n2);
}
double sinr(const CovarianceSet& cov, const Channel& h, int n, double sigma_n2) {
  return sinr_impl(cov.w, h, n, sigma_n2);
}
double sum_rate(const BeamformerSet& w_set, std::span<const Channel> channels, double sigma_n2) {
  return rate_impl(w_set.w, channels, sigma_n2);
}
double sum_rate(const CovarianceSet& cov, std::span<const Channel> channels, double sigma_n2) {
  return rate_impl(cov.w, channels, sigma_n2);
}
std::vector<double> sinr_feasible(const BeamformerSet& w_set, std::span<const Channel> channels, double gamma,
                                  double sigma_n2) {
  return feasible_impl(w_set.w, channels, gamma, sigma_n2);
}
std::vector<double> sinr_feasible(const CovarianceSet& cov, std::span<const Channel> channels, double gamma,
                                  double sigma_n2) {
  return feasible_impl(cov.w, channels, gamma, sigma_n2);
}

nlohmann::json complex_to_json(const CVec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& z : v) out.push_back({z.real(), z.imag()});
  return out;
}

nlohmann::json complex_to_json(const CMat& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(complex_to_json(CVec(m.row(r).transpose())));
  return out;
}

CVec complex_vector_from_json(const nlohmann::json& j) {
  CVec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = {j[i].at(0).get<double>(), j[i].at(1).get<double>()};
  return v;
}

void to_json(nlohmann::json& j, const Channel& c) {
  j = {{"theta_deg", rad2deg(c.theta)}, {"phi_deg", rad2deg(c.phi)}, {"path_loss_db", c.path_loss_db},
       {"h", complex_to_json(c.h)}};
}

void from_json(const nlohmann::json& j, Channel& c) {
  c.theta = deg2rad(j.at("theta_deg").get<double>());
  c.phi = deg2rad(j.at("phi_deg").get<double>());
  c.path_loss_db = j.at("path_loss_db").get<double>();
  c.h = complex_vector_from_json(j.at("h"));
}

}  // namespace etisac
