#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ppdesign/complex_record.hpp"
#include "ppdesign/denoiser.hpp"
#include "ppdesign/rng.hpp"
#include "ppdesign/schedules.hpp"

namespace ppdesign {

struct FragmentEntry {
    std::string seq;       // one-letter residues
    std::string ss_label;  // secondary structure tag, informational
};

/// Informative-initialization settings for generation.
struct GuidanceConfig {
    int k_guid = 4;       // neighbors in the energy term
    double mu_knn = 0.0;  // corpus statistic, normalized units
    int n_init = 10;      // noisy-structure draws to pick from
    std::vector<FragmentEntry> fragments;
    bool seq_enabled = false;
    bool struct_enabled = false;

    void validate() const;
};

/// Mean squared distance from residue i to its k nearest neighbors within
/// `coords`. Translation and rotation invariant.
double knn_dist(const Eigen::MatrixXd& coords, int i, int k_guid);

/// Sum over residues of squared deviation of knn_dist from mu_knn.
double knn_energy(const Eigen::MatrixXd& coords, const GuidanceConfig& guid);

/// Residue-weighted mean of knn_dist over a set of coordinate clouds.
/// Clouds with too few points for k neighbors are skipped.
double estimate_mu_knn_coords(const std::vector<const Eigen::MatrixXd*>& clouds, int k_guid);

/// Convenience over raw records: binder chains, scaled by 1/s_norm.
double estimate_mu_knn(const std::vector<ComplexRecord>& dataset, int k_guid, double s_norm);

/// Draws `n_init` standard-normal coordinate sets and keeps the lowest-energy
/// one. All draws are consumed in order, so n_init = 1 matches a plain draw
/// bit for bit under the same seed.
Eigen::MatrixXd init_structure_guided(int n, const GuidanceConfig& guid, Rng& rng,
                                      double* chosen_energy = nullptr,
                                      std::vector<double>* all_energies = nullptr);

/// Fragment-tiled one-hot rows when sequence guidance is on, uniform
/// categorical draws otherwise.
Eigen::MatrixXd init_sequence_guided(int n, int K, const GuidanceConfig& guid, Rng& rng);

std::vector<FragmentEntry> load_fragment_library(const std::string& path);

/// One reverse transition: predicts (s0_hat, x0_hat), then samples
/// s_{t-1} ~ Cat(theta_post(s_t, s0_hat)) and x_{t-1} ~ N(mu_tilde, beta_tilde).
/// At t = 1 the output is deterministic: posterior argmax and x0_hat exactly.
ComplexState reverse_step(const ComplexState& state, const DenoiserParams& params,
                          const NoiseSchedule& seq_sched, const NoiseSchedule& struct_sched, int t,
                          Rng& rng);

/// Full generation for one candidate: guided or plain initialization at t = T,
/// reverse steps down to t = 1, then coordinate denormalization (invert s_norm
/// and the target-centroid shift).
ComplexRecord generate(const Chain& target, int binder_len, const DenoiserParams& params,
                       const NoiseSchedule& seq_sched, const NoiseSchedule& struct_sched,
                       const GuidanceConfig& guid, double s_norm, Rng& rng,
                       const std::string& candidate_id, CandidateMeta* meta_out = nullptr);

}  // namespace ppdesign
