#pragma once

#include <Eigen/Dense>
#include <utility>

#include "ppdesign/rng.hpp"
#include "ppdesign/schedules.hpp"

namespace ppdesign {

/// Coordinate state for one chain, in normalized units during diffusion
/// (raw data is in angstroms; see the s_norm convention in training).
struct CoordState {
    Eigen::MatrixXd coords;  // n x 3

    int length() const { return static_cast<int>(coords.rows()); }
};

/// One forward step: x_t = sqrt(1 - beta_t) x_prev + sqrt(beta_t) eps.
/// Noise is drawn row-major (residue by residue, x then y then z).
CoordState forward_step_sample(const CoordState& x_prev, double beta_t, Rng& rng);

/// Closed-form marginal draw at step t; returns (x_t, eps) with
/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
std::pair<CoordState, Eigen::MatrixXd> forward_marginal_sample(const CoordState& x0,
                                                               double alpha_bar_t, Rng& rng);

/// Closed-form Gaussian posterior of x_{t-1} given (x_t, x0):
///   mu  = sqrt(alpha_bar_{t-1}) beta_t / (1 - alpha_bar_t) * x0
///       + sqrt(alpha_t) (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * x_t
///   var = beta_tilde_t
std::pair<Eigen::MatrixXd, double> posterior_mean_variance(const CoordState& x_t,
                                                           const CoordState& x0, int t,
                                                           const NoiseSchedule& sched);

/// Squared Frobenius norm ||x0 - x0_hat||^2, summed over residues and axes.
double coordinate_loss(const CoordState& x0, const CoordState& x0_hat);

}  // namespace ppdesign
