#pragma once

#include <string>
#include <vector>

#include "ppdesign/errors.hpp"

namespace ppdesign {

enum class ScheduleKind { Cosine, Sigmoid };

std::string schedule_kind_name(ScheduleKind kind);
ScheduleKind schedule_kind_from_name(const std::string& name);

/// Per-step diffusion coefficient tables for one modality. Steps are 1..T with
/// the alpha_bar(0) = 1 convention, so every t = 1 formula is an exact limit.
/// Immutable after construction; safe to share read-only across threads.
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::Cosine;
    int T = 0;
    std::vector<double> beta;        // beta[t-1] = beta_t in (0, 1)
    std::vector<double> alpha;       // alpha_t = 1 - beta_t (exact)
    std::vector<double> alpha_bar;   // running product of alpha, strictly decreasing
    std::vector<double> beta_tilde;  // posterior variance; beta_tilde(1) = 0

    double beta_at(int t) const { return at(beta, t); }
    double alpha_at(int t) const { return at(alpha, t); }
    double beta_tilde_at(int t) const { return at(beta_tilde, t); }
    /// Valid for t in [0, T]; alpha_bar_at(0) == 1.
    double alpha_bar_at(int t) const {
        if (t == 0) return 1.0;
        return at(alpha_bar, t);
    }

private:
    double at(const std::vector<double>& v, int t) const {
        if (t < 1 || t > T) throw ContractError("schedule step out of range: t=" + std::to_string(t));
        return v[static_cast<size_t>(t - 1)];
    }
};

/// alpha_bar(t) = g(t)/g(0), g(t) = cos^2(((t/T + offset)/(1 + offset)) * pi/2),
/// with beta derived from consecutive ratios and clipped to [1e-9, 0.999].
NoiseSchedule build_cosine_schedule(int T, double offset);

/// beta ramps from beta_start to beta_end along a rescaled logistic in t;
/// endpoints are exact by construction.
NoiseSchedule build_sigmoid_schedule(int T, double beta_start, double beta_end, double steepness);

/// Declarative schedule description, as stored in run configs and checkpoint
/// manifests. Rebuilding from the same spec reproduces identical tables.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Cosine;
    int T = 100;
    double offset = 0.01;        // cosine
    double beta_start = 1e-4;    // sigmoid
    double beta_end = 0.1;       // sigmoid
    double steepness = 2.0;      // sigmoid

    NoiseSchedule build() const;
};

}  // namespace ppdesign
