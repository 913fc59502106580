#pragma once

#include <Eigen/Dense>

#include "ppdesign/rng.hpp"
#include "ppdesign/schedules.hpp"

namespace ppdesign {

/// Residue-type state for one chain: an n x K matrix whose rows are either
/// one-hot indicators (realized latents) or simplex points (distributions).
struct SequenceState {
    Eigen::MatrixXd rows;  // n x K

    int length() const { return static_cast<int>(rows.rows()); }
    int alphabet_size() const { return static_cast<int>(rows.cols()); }
};

/// True when `row` is a valid one-hot indicator.
bool is_one_hot(const Eigen::VectorXd& row);

/// Throws ContractError unless every row is nonnegative and sums to 1 +- tol.
void validate_simplex_rows(const Eigen::MatrixXd& rows, double tol = 1e-9);

/// One forward step: (1 - beta_t) * prev + beta_t / K, the uniform mixing kernel.
Eigen::VectorXd forward_step_distribution(const Eigen::VectorXd& prev_one_hot, double beta_t);

/// Closed-form marginal at step t: alpha_bar_t * s0 + (1 - alpha_bar_t) / K.
Eigen::VectorXd forward_marginal_distribution(const Eigen::VectorXd& s0_one_hot, double alpha_bar_t);

/// Draw a one-hot sample from a categorical distribution.
Eigen::VectorXd sample_one_hot(const Eigen::VectorXd& dist, Rng& rng);

/// Row-wise marginal sampling of a whole chain at step t.
SequenceState sample_sequence_marginal(const SequenceState& s0_one_hot, double alpha_bar_t, Rng& rng);

/// Closed-form Bayes posterior over s_{t-1} given a realized s_t row and a
/// (possibly soft) s0 row:
///   theta ~ [alpha_t s_t + (1-alpha_t)/K] .* [alpha_bar_{t-1} s0 + (1-alpha_bar_{t-1})/K]
/// normalized by its sum.
Eigen::VectorXd posterior_distribution(const Eigen::VectorXd& s_t_one_hot,
                                       const Eigen::VectorXd& s0_simplex, int t,
                                       const NoiseSchedule& sched);

/// KL(q || p) with p floored at 1e-12 inside the log and 0*log(0) = 0.
double categorical_kl(const Eigen::VectorXd& q, const Eigen::VectorXd& p);

/// Gradient of categorical_kl(q, posterior(s_t, s0_hat)) with respect to the
/// s0_hat row, where q is held fixed. Used to seed the denoiser backward pass.
Eigen::VectorXd posterior_kl_grad_s0hat(const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& s_t_one_hot,
                                        const Eigen::VectorXd& s0_hat, int t,
                                        const NoiseSchedule& sched);

}  // namespace ppdesign
