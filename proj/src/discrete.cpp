#include "ppdesign/discrete.hpp"

#include <cmath>
#include <string>

namespace ppdesign {

namespace {
constexpr double kLogFloor = 1e-12;
}

bool is_one_hot(const Eigen::VectorXd& row) {
    int ones = 0;
    for (int i = 0; i < row.size(); ++i) {
        if (row[i] == 1.0) {
            ++ones;
        } else if (row[i] != 0.0) {
            return false;
        }
    }
    return ones == 1;
}

void validate_simplex_rows(const Eigen::MatrixXd& rows, double tol) {
    for (int i = 0; i < rows.rows(); ++i) {
        double sum = 0.0;
        for (int k = 0; k < rows.cols(); ++k) {
            double v = rows(i, k);
            if (!(v >= 0.0)) {
                throw ContractError("simplex row " + std::to_string(i) + " has negative entry " +
                                    std::to_string(v));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw ContractError("simplex row " + std::to_string(i) + " sums to " +
                                std::to_string(sum));
        }
    }
}

Eigen::VectorXd forward_step_distribution(const Eigen::VectorXd& prev_one_hot, double beta_t) {
    if (!is_one_hot(prev_one_hot)) {
        throw ContractError("forward_step_distribution: input row is not one-hot");
    }
    if (!(beta_t >= 0.0 && beta_t < 1.0)) {
        throw ContractError("forward_step_distribution: beta_t out of [0,1): " +
                            std::to_string(beta_t));
    }
    const double k = static_cast<double>(prev_one_hot.size());
    return (1.0 - beta_t) * prev_one_hot + Eigen::VectorXd::Constant(prev_one_hot.size(), beta_t / k);
}

Eigen::VectorXd forward_marginal_distribution(const Eigen::VectorXd& s0_one_hot, double alpha_bar_t) {
    if (!is_one_hot(s0_one_hot)) {
        throw ContractError("forward_marginal_distribution: input row is not one-hot");
    }
    if (!(alpha_bar_t > 0.0 && alpha_bar_t <= 1.0)) {
        throw ContractError("forward_marginal_distribution: alpha_bar_t out of (0,1]");
    }
    const double k = static_cast<double>(s0_one_hot.size());
    return alpha_bar_t * s0_one_hot +
           Eigen::VectorXd::Constant(s0_one_hot.size(), (1.0 - alpha_bar_t) / k);
}

Eigen::VectorXd sample_one_hot(const Eigen::VectorXd& dist, Rng& rng) {
    int idx = rng.categorical(dist.data(), static_cast<int>(dist.size()));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dist.size());
    out[idx] = 1.0;
    return out;
}

SequenceState sample_sequence_marginal(const SequenceState& s0_one_hot, double alpha_bar_t,
                                       Rng& rng) {
    SequenceState out;
    out.rows.resize(s0_one_hot.rows.rows(), s0_one_hot.rows.cols());
    for (int i = 0; i < s0_one_hot.rows.rows(); ++i) {
        Eigen::VectorXd dist =
            forward_marginal_distribution(s0_one_hot.rows.row(i).transpose(), alpha_bar_t);
        out.rows.row(i) = sample_one_hot(dist, rng).transpose();
    }
    return out;
}

Eigen::VectorXd posterior_distribution(const Eigen::VectorXd& s_t_one_hot,
                                       const Eigen::VectorXd& s0_simplex, int t,
                                       const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) {
        throw ContractError("posterior_distribution: t out of [1,T]: " + std::to_string(t));
    }
    const double k = static_cast<double>(s_t_one_hot.size());
    const double alpha_t = sched.alpha_at(t);
    const double alpha_bar_prev = sched.alpha_bar_at(t - 1);
    Eigen::VectorXd u =
        alpha_t * s_t_one_hot + Eigen::VectorXd::Constant(s_t_one_hot.size(), (1.0 - alpha_t) / k);
    Eigen::VectorXd v = alpha_bar_prev * s0_simplex +
                        Eigen::VectorXd::Constant(s0_simplex.size(), (1.0 - alpha_bar_prev) / k);
    Eigen::VectorXd theta = u.cwiseProduct(v);
    double norm = theta.sum();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericError("posterior_distribution: zero or non-finite normalizer at t=" +
                           std::to_string(t) + " (sum=" + std::to_string(norm) + ")");
    }
    return theta / norm;
}

double categorical_kl(const Eigen::VectorXd& q, const Eigen::VectorXd& p) {
    double kl = 0.0;
    for (int i = 0; i < q.size(); ++i) {
        if (q[i] > 0.0) {
            kl += q[i] * (std::log(q[i]) - std::log(std::max(p[i], kLogFloor)));
        }
    }
    return kl;
}

Eigen::VectorXd posterior_kl_grad_s0hat(const Eigen::VectorXd& q,
                                        const Eigen::VectorXd& s_t_one_hot,
                                        const Eigen::VectorXd& s0_hat, int t,
                                        const NoiseSchedule& sched) {
    const double k = static_cast<double>(s_t_one_hot.size());
    const double alpha_t = sched.alpha_at(t);
    const double alpha_bar_prev = sched.alpha_bar_at(t - 1);
    Eigen::VectorXd u =
        alpha_t * s_t_one_hot + Eigen::VectorXd::Constant(s_t_one_hot.size(), (1.0 - alpha_t) / k);
    Eigen::VectorXd v = alpha_bar_prev * s0_hat +
                        Eigen::VectorXd::Constant(s0_hat.size(), (1.0 - alpha_bar_prev) / k);
    double s = u.dot(v);
    // d/dv_m KL(q || normalize(u.*v)) = u_m / s - q_m / v_m, then dv/ds0_hat
    // contributes the alpha_bar_{t-1} factor.
    Eigen::VectorXd g(q.size());
    for (int m = 0; m < q.size(); ++m) {
        g[m] = alpha_bar_prev * (u[m] / s - q[m] / std::max(v[m], kLogFloor));
    }
    return g;
}

}  // namespace ppdesign
