#pragma once

#include "etisac/crb_engine.h"

namespace etisac {

struct OracleOptions {
  int n_time_samples = 256;  // lower bound; raised until the tone grid is alias free
  double fd_step = 1e-6;     // central-difference step, meters or radians
};

struct OracleResult {
  FisherBlocks blocks;
  double covariance_deviation = 0.0;  // max |sample cov(s) - I|
  double richardson_gap = 0.0;        // relative change between step h and h/2
  bool precision_warning = false;
  int n_time_samples = 0;
};

/// Fisher information of (kinematics, path gain) computed by differencing a
/// simulated echo. Each transmit stream is a sum of two symmetric tone pairs
/// on the harmonic grid of the observation window with RMS bandwidth equal to
/// the configured bandwidth; the sample grid is chosen so that every tone
/// lands in a distinct DFT bin, which makes the time average exact. Scatterer
/// geometry is recomputed exactly for every perturbed parameter vector.
OracleResult numeric_fim_oracle(const SensingScenario& sc, const CMat& r_x, const OracleOptions& opts = {});

}  // namespace etisac
