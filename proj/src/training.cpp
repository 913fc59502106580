#include "ppdesign/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/continuous.hpp"
#include "ppdesign/sampling.hpp"

namespace ppdesign {

namespace {

constexpr double kLogFloor = 1e-12;
constexpr int kLossWindow = 50;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (warmup_steps < 0 || warmup_steps > total_steps) {
        throw ConfigError("train: need 0 <= warmup_steps <= total_steps");
    }
    if (total_steps < 1) throw ConfigError("train: total_steps must be >= 1");
    if (batch_tokens < 1) throw ConfigError("train: batch_tokens must be >= 1");
    if (!(w_seq > 0.0 && w_coord > 0.0)) throw ConfigError("train: loss weights must be > 0");
    if (!(s_norm > 0.0)) throw ConfigError("train: s_norm must be > 0");
    if (checkpoint_interval < 1) throw ConfigError("train: checkpoint_interval must be >= 1");
}

Eigen::MatrixXd sequence_one_hot(const std::string& seq, int K) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(seq.size()), K);
    for (size_t i = 0; i < seq.size(); ++i) {
        int idx = aa_index(seq[i]);
        if (idx < 0 || idx >= K) {
            throw ContractError("sequence_one_hot: non-canonical letter '" +
                                std::string(1, seq[i]) + "'");
        }
        rows(static_cast<Eigen::Index>(i), idx) = 1.0;
    }
    return rows;
}

NormalizedRecord normalize_record(const ComplexRecord& rec, double s_norm) {
    rec.validate();
    NormalizedRecord out;
    out.id = rec.id;
    out.target_onehot = sequence_one_hot(rec.target.seq, kAlphabetSize);
    out.binder_onehot = sequence_one_hot(rec.binder.seq, kAlphabetSize);
    Eigen::RowVector3d centroid = rec.target.coords.colwise().mean();
    out.target_coords = (rec.target.coords.rowwise() - centroid) / s_norm;
    out.binder_coords = (rec.binder.coords.rowwise() - centroid) / s_norm;
    return out;
}

LossBreakdown elbo_terms(const NormalizedRecord& rec, const DenoiserParams& params,
                         const NoiseSchedule& seq_sched, const NoiseSchedule& struct_sched, int t,
                         Rng& rng, double w_seq, double w_coord, DenoiserGrads* grads) {
    if (t < 1 || t > seq_sched.T || t > struct_sched.T) {
        throw ContractError("elbo_terms: t out of range");
    }
    const int n = static_cast<int>(rec.binder_onehot.rows());
    const int K = static_cast<int>(rec.binder_onehot.cols());

    // Forward draws for both modalities at step t. Sequence rows first, then
    // coordinates, so the draw order is part of the determinism contract.
    SequenceState s0{rec.binder_onehot};
    SequenceState s_t = sample_sequence_marginal(s0, seq_sched.alpha_bar_at(t), rng);
    CoordState x0{rec.binder_coords};
    auto [x_t, eps] = forward_marginal_sample(x0, struct_sched.alpha_bar_at(t), rng);

    ComplexState state;
    state.target_onehot = rec.target_onehot;
    state.target_coords = rec.target_coords;
    state.binder_onehot = s_t.rows;
    state.binder_coords = x_t.coords;
    state.t = t;

    DenoiserOutput out = predict_clean(state, params, /*build_tape=*/grads != nullptr);

    LossBreakdown loss;
    Eigen::MatrixXd d_s0 = Eigen::MatrixXd::Zero(n, K);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd st_row = s_t.rows.row(i).transpose();
        Eigen::VectorXd s0_row = rec.binder_onehot.row(i).transpose();
        Eigen::VectorXd s0_hat_row = out.s0_hat.row(i).transpose();
        Eigen::VectorXd q = posterior_distribution(st_row, s0_row, t, seq_sched);
        Eigen::VectorXd p = posterior_distribution(st_row, s0_hat_row, t, seq_sched);
        loss.l_seq += categorical_kl(q, p);
        if (grads != nullptr) {
            d_s0.row(i) +=
                w_seq * posterior_kl_grad_s0hat(q, st_row, s0_hat_row, t, seq_sched).transpose();
        }
    }

    CoordState x0_hat{out.x0_hat};
    loss.l_coord = coordinate_loss(x0, x0_hat);
    Eigen::MatrixXd d_x0 = 2.0 * w_coord * (out.x0_hat - rec.binder_coords);

    if (t == 1) {
        double ce = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < K; ++k) {
                if (rec.binder_onehot(i, k) > 0.0) {
                    double p = std::max(out.s0_hat(i, k), kLogFloor);
                    ce -= rec.binder_onehot(i, k) * std::log(p);
                    if (grads != nullptr) d_s0(i, k) -= rec.binder_onehot(i, k) / p;
                }
            }
        }
        loss.l_recon = ce + loss.l_coord;
        d_x0 += 2.0 * (out.x0_hat - rec.binder_coords);
    }

    loss.total = w_seq * loss.l_seq + w_coord * loss.l_coord + loss.l_recon;
    if (!std::isfinite(loss.total)) {
        throw NumericError("elbo_terms: non-finite loss at t=" + std::to_string(t) +
                           " for record " + rec.id);
    }

    if (grads != nullptr) {
        DenoiserGrads g = denoiser_backward(out, params, d_s0, d_x0);
        if (grads->param_grads.empty()) {
            *grads = std::move(g);
        } else {
            for (size_t i = 0; i < g.param_grads.size(); ++i) {
                grads->param_grads[i] += g.param_grads[i];
            }
            grads->d_target_coords += g.d_target_coords;
            grads->d_binder_coords += g.d_binder_coords;
        }
    }
    return loss;
}

double lr_at(int step, const TrainConfig& config) {
    if (step < 1) throw ContractError("lr_at: step must be >= 1");
    if (config.warmup_steps > 0 && step <= config.warmup_steps) {
        return config.lr * static_cast<double>(step) / config.warmup_steps;
    }
    return config.lr;
}

AdamState AdamState::zeros_like(const DenoiserParams& params) {
    AdamState s;
    s.m.reserve(params.tensors().size());
    s.v.reserve(params.tensors().size());
    for (const auto& t : params.tensors()) {
        s.m.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
        s.v.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
    }
    return s;
}

void adam_step(DenoiserParams& params, const std::vector<Eigen::MatrixXd>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (grads.size() != params.tensors().size() || state.m.size() != grads.size()) {
        throw ContractError("adam_step: shape mismatch");
    }
    state.step += 1;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < grads.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i].cwiseProduct(grads[i]);
        Eigen::MatrixXd mhat = state.m[i] / c1;
        Eigen::MatrixXd vhat = state.v[i] / c2;
        params.tensors()[i].value.array() -=
            lr * mhat.array() / (vhat.array().sqrt() + eps);
    }
}

TrainResult train_loop(const std::vector<ComplexRecord>& dataset, const TrainConfig& config,
                       const DenoiserConfig& model_config, const ScheduleSpec& seq_spec,
                       const ScheduleSpec& struct_spec, const std::string& out_dir,
                       const std::optional<std::string>& resume_stem) {
    config.validate();
    model_config.validate();
    if (dataset.empty()) throw ConfigError("train: dataset is empty, nothing to optimize");
    if (seq_spec.T != struct_spec.T || seq_spec.T != model_config.T) {
        throw ConfigError("train: schedule T and model T must agree");
    }

    std::filesystem::create_directories(out_dir);

    std::vector<NormalizedRecord> records;
    records.reserve(dataset.size());
    for (const auto& rec : dataset) records.push_back(normalize_record(rec, config.s_norm));

    NoiseSchedule seq_sched = seq_spec.build();
    NoiseSchedule struct_sched = struct_spec.build();

    Rng base(config.seed);
    CheckpointMeta meta;
    DenoiserParams params;
    if (resume_stem.has_value()) {
        auto loaded = load_checkpoint(*resume_stem);
        meta = loaded.first;
        params = std::move(loaded.second);
        // The model shape is pinned by the checkpoint, not the flags.
    } else {
        params = DenoiserParams::init(model_config, base.substream(rng_tag::kInit));
        meta.alphabet_hash = alphabet_hash();
        meta.s_norm = config.s_norm;
        meta.config = model_config;
        meta.seq_schedule = seq_spec;
        meta.struct_schedule = struct_spec;
        meta.step = 0;
        std::vector<const Eigen::MatrixXd*> binder_coords;
        binder_coords.reserve(records.size());
        for (const auto& r : records) binder_coords.push_back(&r.binder_coords);
        meta.mu_knn = estimate_mu_knn_coords(binder_coords, config.mu_knn_k);
    }

    const long start_step = meta.step;
    const std::string metrics_path = out_dir + "/metrics.tsv";
    std::ofstream metrics(metrics_path, start_step > 0 ? std::ios::app : std::ios::out);
    if (!metrics) throw IoError("cannot open metrics log: " + metrics_path);
    if (start_step == 0) {
        metrics << "step\tt_mean\tl_seq\tl_coord\tl_recon\ttotal\tlr\n";
    }

    AdamState adam = AdamState::zeros_like(params);
    std::vector<size_t> order(records.size());
    std::iota(order.begin(), order.end(), size_t{0});
    size_t cursor = order.size();  // forces a shuffle on first use
    long epoch = -1;

    std::vector<double> window_first;
    std::vector<double> window_last;

    auto save = [&](long step, const std::string& name) {
        meta.step = step;
        const std::string stem = out_dir + "/" + name;
        save_checkpoint(stem, meta, params);
        return stem;
    };

    std::string final_stem;
    for (long local = 1; local <= config.total_steps; ++local) {
        const long step = start_step + local;

        // Assemble a token-budget batch from the shuffled order.
        std::vector<const NormalizedRecord*> batch;
        int tokens = 0;
        while (true) {
            if (cursor >= order.size()) {
                ++epoch;
                Rng shuffle_rng = base.substream(rng_tag::kTrainShuffle,
                                                 static_cast<std::uint64_t>(epoch));
                for (size_t i = order.size(); i > 1; --i) {
                    size_t j = static_cast<size_t>(shuffle_rng.next_u64() % i);
                    std::swap(order[i - 1], order[j]);
                }
                cursor = 0;
            }
            const NormalizedRecord* rec = &records[order[cursor]];
            if (!batch.empty() && tokens + rec->tokens() > config.batch_tokens) break;
            batch.push_back(rec);
            tokens += rec->tokens();
            ++cursor;
            if (tokens >= config.batch_tokens) break;
        }

        Rng step_rng = base.substream(rng_tag::kTrainStep, static_cast<std::uint64_t>(step));
        DenoiserGrads grads;
        LossBreakdown mean_loss;
        double t_sum = 0.0;
        for (const NormalizedRecord* rec : batch) {
            int t = 1 + static_cast<int>(step_rng.uniform() * seq_sched.T);
            t = std::min(t, seq_sched.T);
            Rng item_rng(step_rng.next_u64());
            LossBreakdown l = elbo_terms(*rec, params, seq_sched, struct_sched, t, item_rng,
                                         config.w_seq, config.w_coord, &grads);
            mean_loss.l_seq += l.l_seq;
            mean_loss.l_coord += l.l_coord;
            mean_loss.l_recon += l.l_recon;
            mean_loss.total += l.total;
            t_sum += t;
        }
        const double inv = 1.0 / static_cast<double>(batch.size());
        mean_loss.l_seq *= inv;
        mean_loss.l_coord *= inv;
        mean_loss.l_recon *= inv;
        mean_loss.total *= inv;
        for (auto& g : grads.param_grads) g *= inv;

        if (config.clip_norm > 0.0) {
            double sq = 0.0;
            for (const auto& g : grads.param_grads) sq += g.squaredNorm();
            double norm = std::sqrt(sq);
            if (norm > config.clip_norm) {
                double s = config.clip_norm / norm;
                for (auto& g : grads.param_grads) g *= s;
            }
        }

        const double lr = lr_at(static_cast<int>(step), config);
        adam_step(params, grads.param_grads, adam, lr, config.adam_beta1, config.adam_beta2,
                  config.adam_eps);

        metrics << step << "\t" << fmt(t_sum * inv) << "\t" << fmt(mean_loss.l_seq) << "\t"
                << fmt(mean_loss.l_coord) << "\t" << fmt(mean_loss.l_recon) << "\t"
                << fmt(mean_loss.total) << "\t" << fmt(lr) << "\n";

        if (local <= kLossWindow) window_first.push_back(mean_loss.total);
        window_last.push_back(mean_loss.total);
        if (window_last.size() > static_cast<size_t>(kLossWindow)) {
            window_last.erase(window_last.begin());
        }

        if (local % config.checkpoint_interval == 0 && local != config.total_steps) {
            save(step, "ckpt_step" + std::to_string(step));
        }
    }

    final_stem = save(start_step + config.total_steps, "ckpt_final");
    metrics.flush();
    if (!metrics.good()) throw IoError("metrics log write failed: " + metrics_path);

    auto mean_of = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };

    TrainResult res;
    res.checkpoint_stem = final_stem;
    res.metrics_path = metrics_path;
    res.steps_run = config.total_steps;
    res.initial_window_loss = mean_of(window_first);
    res.final_window_loss = mean_of(window_last);
    return res;
}

}  // namespace ppdesign
