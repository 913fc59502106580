#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppdesign/checkpoint.hpp"
#include "ppdesign/complex_record.hpp"
#include "ppdesign/denoiser.hpp"
#include "ppdesign/discrete.hpp"
#include "ppdesign/schedules.hpp"

namespace ppdesign {

struct TrainConfig {
    double lr = 1e-3;
    int warmup_steps = 200;
    int total_steps = 2000;
    int batch_tokens = 1024;  // summed residue count per batch across complexes
    double w_seq = 1.0;
    double w_coord = 1.0;
    double clip_norm = 1.0;  // global gradient norm cap; <= 0 disables
    int checkpoint_interval = 1000;
    double s_norm = 10.0;  // coordinate normalization scale in angstroms
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int mu_knn_k = 4;  // neighbor count for the stored guidance statistic

    void validate() const;
};

/// One training item with one-hot sequences and normalized coordinates.
struct NormalizedRecord {
    std::string id;
    Eigen::MatrixXd target_onehot;
    Eigen::MatrixXd target_coords;
    Eigen::MatrixXd binder_onehot;
    Eigen::MatrixXd binder_coords;

    int tokens() const {
        return static_cast<int>(target_onehot.rows() + binder_onehot.rows());
    }
};

/// One-hot encoding of a canonical sequence (rows in sequence order).
Eigen::MatrixXd sequence_one_hot(const std::string& seq, int K);

/// Centers on the target chain's C-alpha centroid and divides by s_norm.
NormalizedRecord normalize_record(const ComplexRecord& rec, double s_norm);

struct LossBreakdown {
    double l_seq = 0.0;
    double l_coord = 0.0;
    double l_recon = 0.0;  // nonzero only at t = 1
    double total = 0.0;
};

/// Draws (s_t, x_t) from the forward marginals, runs the denoiser, and
/// evaluates the step-t objective. When `grads` is non-null the exact
/// parameter gradients of `total` are accumulated there.
LossBreakdown elbo_terms(const NormalizedRecord& rec, const DenoiserParams& params,
                         const NoiseSchedule& seq_sched, const NoiseSchedule& struct_sched, int t,
                         Rng& rng, double w_seq, double w_coord,
                         DenoiserGrads* grads = nullptr);

/// Linear warm-up to `lr` over warmup_steps, constant afterwards.
double lr_at(int step, const TrainConfig& config);

struct AdamState {
    std::vector<Eigen::MatrixXd> m;
    std::vector<Eigen::MatrixXd> v;
    long step = 0;

    static AdamState zeros_like(const DenoiserParams& params);
};

/// Standard bias-corrected Adam update, in place.
void adam_step(DenoiserParams& params, const std::vector<Eigen::MatrixXd>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps);

struct TrainResult {
    std::string checkpoint_stem;  // final checkpoint, <stem>.manifest/.bin
    std::string metrics_path;
    long steps_run = 0;
    double initial_window_loss = 0.0;  // mean total over the first 50 steps
    double final_window_loss = 0.0;    // mean total over the last 50 steps
};

/// Full optimization driver: shuffled token-budget batches, uniform t per
/// item, global-norm clipping, Adam with warm-up, periodic checkpoints, and a
/// tab-separated metrics log (step, t_mean, l_seq, l_coord, l_recon, total, lr).
TrainResult train_loop(const std::vector<ComplexRecord>& dataset, const TrainConfig& config,
                       const DenoiserConfig& model_config, const ScheduleSpec& seq_spec,
                       const ScheduleSpec& struct_spec, const std::string& out_dir,
                       const std::optional<std::string>& resume_stem = std::nullopt);

}  // namespace ppdesign
