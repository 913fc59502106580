#include "ppdesign/schedules.hpp"

#include <algorithm>
#include <cmath>

namespace ppdesign {

namespace {

constexpr double kBetaFloor = 1e-9;
constexpr double kBetaCeil = 0.999;

/// Derive alpha, alpha_bar, beta_tilde from a finished beta vector.
/// alpha := 1 - beta keeps alpha + beta == 1 exact in doubles, and alpha_bar
/// is stored as the literal running product so recomputation matches bit for bit.
NoiseSchedule finish(ScheduleKind kind, int T, std::vector<double> beta) {
    NoiseSchedule s;
    s.kind = kind;
    s.T = T;
    s.beta = std::move(beta);
    s.alpha.resize(static_cast<size_t>(T));
    s.alpha_bar.resize(static_cast<size_t>(T));
    s.beta_tilde.resize(static_cast<size_t>(T));
    double running = 1.0;
    for (int t = 1; t <= T; ++t) {
        size_t i = static_cast<size_t>(t - 1);
        double b = s.beta[i];
        if (!(b > 0.0 && b < 1.0)) {
            throw NumericError("schedule produced beta outside (0,1) at t=" + std::to_string(t) +
                               ": " + std::to_string(b));
        }
        s.alpha[i] = 1.0 - b;
        double prev_bar = running;
        running *= s.alpha[i];
        s.alpha_bar[i] = running;
        // beta_tilde(1) = 0 via alpha_bar(0) = 1.
        s.beta_tilde[i] = (1.0 - prev_bar) / (1.0 - running) * b;
    }
    return s;
}

}  // namespace

std::string schedule_kind_name(ScheduleKind kind) {
    return kind == ScheduleKind::Cosine ? "cosine" : "sigmoid";
}

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "cosine") return ScheduleKind::Cosine;
    if (name == "sigmoid") return ScheduleKind::Sigmoid;
    throw ConfigError("unknown schedule kind: " + name);
}

NoiseSchedule build_cosine_schedule(int T, double offset) {
    if (T < 1) throw ConfigError("cosine schedule: T must be >= 1, got " + std::to_string(T));
    if (!(offset > 0.0)) throw ConfigError("cosine schedule: offset must be > 0");

    auto g = [&](double t) {
        double u = (t / T + offset) / (1.0 + offset) * M_PI / 2.0;
        double c = std::cos(u);
        return c * c;
    };
    const double g0 = g(0.0);
    std::vector<double> beta(static_cast<size_t>(T));
    double prev_bar = 1.0;
    for (int t = 1; t <= T; ++t) {
        double bar = g(static_cast<double>(t)) / g0;
        double b = 1.0 - bar / prev_bar;
        beta[static_cast<size_t>(t - 1)] = std::clamp(b, kBetaFloor, kBetaCeil);
        prev_bar = bar;
    }
    return finish(ScheduleKind::Cosine, T, std::move(beta));
}

NoiseSchedule build_sigmoid_schedule(int T, double beta_start, double beta_end, double steepness) {
    if (T < 1) throw ConfigError("sigmoid schedule: T must be >= 1, got " + std::to_string(T));
    if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0)) {
        throw ConfigError("sigmoid schedule: need 0 < beta_start < beta_end < 1");
    }
    if (!(steepness > 0.0)) throw ConfigError("sigmoid schedule: steepness must be > 0");

    auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    auto raw = [&](int t) { return logistic(steepness * (2.0 * t / T - 1.0)); };

    std::vector<double> beta(static_cast<size_t>(T));
    if (T == 1) {
        beta[0] = beta_start;
        return finish(ScheduleKind::Sigmoid, T, std::move(beta));
    }
    const double lo = raw(1);
    const double hi = raw(T);
    for (int t = 1; t <= T; ++t) {
        double frac = (raw(t) - lo) / (hi - lo);
        beta[static_cast<size_t>(t - 1)] = beta_start + (beta_end - beta_start) * frac;
    }
    // Endpoints exact by assignment, not by arithmetic.
    beta[0] = beta_start;
    beta[static_cast<size_t>(T - 1)] = beta_end;
    return finish(ScheduleKind::Sigmoid, T, std::move(beta));
}

NoiseSchedule ScheduleSpec::build() const {
    if (kind == ScheduleKind::Cosine) return build_cosine_schedule(T, offset);
    return build_sigmoid_schedule(T, beta_start, beta_end, steepness);
}

}  // namespace ppdesign
