#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "etisac/upa_array.h"

namespace etisac {

struct CuDirection {
  double theta = 0.0;
  double phi = 0.0;
  double extra_loss_db = 0.0;  // added on top of the common path loss
};

struct Channel {
  CVec h;
  double theta = 0.0;
  double phi = 0.0;
  double path_loss_db = 0.0;
};

struct CommConfig {
  double sigma_n2 = 1e-11;  // W
  double gamma_db = 0.0;
  double path_loss_db = 100.0;
  int n_clusters = 4;
  double cluster_spread_deg = 10.0;
  double cluster_power_db = -10.0;  // relative to the line-of-sight term
  std::uint64_t seed = 1;

  void validate() const;
  double gamma() const { return db2lin(gamma_db); }
};

/// Line of sight plus scattered clusters around each user direction;
/// deterministic for a given seed.
std::vector<Channel> gen_channels(const CommConfig& cfg, std::span<const CuDirection> cus, const UpaConfig& upa);

struct BeamformerSet {
  std::vector<CVec> w;

  double total_power() const;
  CMat covariance() const;
};

/// Per-user transmit covariances W_n and their sum.
struct CovarianceSet {
  std::vector<CMat> w;
  CMat r_x;

  static CovarianceSet from_blocks(std::vector<CMat> blocks);
  static CovarianceSet from_beamformers(const BeamformerSet& b);
  double total_power() const { return r_x.trace().real(); }
};

double sinr(const BeamformerSet& w_set, const Channel& h, int n, double sigma_n2);
double sinr(const CovarianceSet& cov, const Channel& h, int n, double sigma_n2);
double sum_rate(const BeamformerSet& w_set, std::span<const Channel> channels, double sigma_n2);
double sum_rate(const CovarianceSet& cov, std::span<const Channel> channels, double sigma_n2);

/// (1 + 1/gamma) h^H W_n h - h^H R h - sigma^2 per user; nonnegative iff the
/// user meets the SINR target.
std::vector<double> sinr_feasible(const BeamformerSet& w_set, std::span<const Channel> channels, double gamma,
                                  double sigma_n2);
std::vector<double> sinr_feasible(const CovarianceSet& cov, std::span<const Channel> channels, double gamma,
                                  double sigma_n2);

nlohmann::json complex_to_json(const CVec& v);
nlohmann::json complex_to_json(const CMat& m);
CVec complex_vector_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const Channel& c);
void from_json(const nlohmann::json& j, Channel& c);

}  // namespace etisac
