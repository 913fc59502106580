#include "ppdesign/continuous.hpp"

#include <cmath>
#include <string>

namespace ppdesign {

namespace {

Eigen::MatrixXd draw_noise(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd eps(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            eps(i, j) = rng.normal();
        }
    }
    return eps;
}

}  // namespace

CoordState forward_step_sample(const CoordState& x_prev, double beta_t, Rng& rng) {
    if (!(beta_t >= 0.0 && beta_t < 1.0)) {
        throw ContractError("forward_step_sample: beta_t out of [0,1)");
    }
    Eigen::MatrixXd eps = draw_noise(x_prev.coords.rows(), x_prev.coords.cols(), rng);
    CoordState out;
    out.coords = std::sqrt(1.0 - beta_t) * x_prev.coords + std::sqrt(beta_t) * eps;
    return out;
}

std::pair<CoordState, Eigen::MatrixXd> forward_marginal_sample(const CoordState& x0,
                                                               double alpha_bar_t, Rng& rng) {
    if (!(alpha_bar_t > 0.0 && alpha_bar_t <= 1.0)) {
        throw ContractError("forward_marginal_sample: alpha_bar_t out of (0,1]");
    }
    Eigen::MatrixXd eps = draw_noise(x0.coords.rows(), x0.coords.cols(), rng);
    CoordState out;
    out.coords = std::sqrt(alpha_bar_t) * x0.coords + std::sqrt(1.0 - alpha_bar_t) * eps;
    return {std::move(out), std::move(eps)};
}

std::pair<Eigen::MatrixXd, double> posterior_mean_variance(const CoordState& x_t,
                                                           const CoordState& x0, int t,
                                                           const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) {
        throw ContractError("posterior_mean_variance: t out of [1,T]: " + std::to_string(t));
    }
    if (x_t.coords.rows() != x0.coords.rows()) {
        throw ContractError("posterior_mean_variance: shape mismatch");
    }
    const double beta_t = sched.beta_at(t);
    const double alpha_t = sched.alpha_at(t);
    const double bar_t = sched.alpha_bar_at(t);
    const double bar_prev = sched.alpha_bar_at(t - 1);
    const double c0 = std::sqrt(bar_prev) * beta_t / (1.0 - bar_t);
    const double ct = std::sqrt(alpha_t) * (1.0 - bar_prev) / (1.0 - bar_t);
    Eigen::MatrixXd mu = c0 * x0.coords + ct * x_t.coords;
    return {std::move(mu), sched.beta_tilde_at(t)};
}

double coordinate_loss(const CoordState& x0, const CoordState& x0_hat) {
    if (x0.coords.rows() != x0_hat.coords.rows() || x0.coords.cols() != x0_hat.coords.cols()) {
        throw ContractError("coordinate_loss: shape mismatch");
    }
    return (x0.coords - x0_hat.coords).squaredNorm();
}

}  // namespace ppdesign
