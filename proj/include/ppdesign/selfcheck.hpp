#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppdesign/denoiser.hpp"

namespace ppdesign {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst observed error
    double tolerance = 0.0;  // pinned bound the check enforces
    std::string note;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_tensor;
};

/// Central finite differences (step h) against the analytic backward pass
/// over every parameter entry, using a fixed linear probe of (s0_hat, x0_hat).
/// Relative error uses max(1, |analytic|, |numeric|) in the denominator.
/// `inject_fx_sign_error` flips the analytic gradient sign on f_x tensors so
/// harness tests can confirm the check actually bites.
GradCheckResult gradient_check(const DenoiserConfig& config, std::uint64_t seed, double h,
                               int target_len, int binder_len, bool inject_fx_sign_error = false);

/// Worst relative deviation from covariance/invariance over `n_motions`
/// random rigid motions of all input coordinates.
double equivariance_check(const DenoiserConfig& config, std::uint64_t seed, int n_motions);

/// True when causal-stack outputs at position i are bit-identical under
/// arbitrary perturbations of stack inputs at positions > i.
bool causality_check(const DenoiserConfig& config, std::uint64_t seed);

/// The full release-gate suite (schedules, closed forms, posteriors,
/// gradients, equivariance, causality, guidance). `quick` trims runtimes to
/// fit well under a minute.
std::vector<CheckResult> run_selfchecks(bool quick, std::uint64_t seed,
                                        bool inject_fx_sign_error = false);

}  // namespace ppdesign
