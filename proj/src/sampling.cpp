#include "ppdesign/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/continuous.hpp"
#include "ppdesign/discrete.hpp"
#include "ppdesign/errors.hpp"

namespace ppdesign {

void GuidanceConfig::validate() const {
    if (k_guid < 1) throw ConfigError("guidance: k_guid must be >= 1");
    if (n_init < 1) throw ConfigError("guidance: n_init must be >= 1");
    if (struct_enabled && n_init > 1 && !(mu_knn > 0.0)) {
        throw ConfigError("guidance: mu_knn must be > 0 when structure guidance is enabled");
    }
    if (seq_enabled && fragments.empty()) {
        throw ConfigError("guidance: sequence guidance enabled with an empty fragment library");
    }
}

double knn_dist(const Eigen::MatrixXd& coords, int i, int k_guid) {
    const int n = static_cast<int>(coords.rows());
    if (k_guid >= n) {
        throw ContractError("knn_dist: need k < residue count (k=" + std::to_string(k_guid) +
                            ", n=" + std::to_string(n) + ")");
    }
    if (i < 0 || i >= n) throw ContractError("knn_dist: residue index out of range");
    std::vector<double> d2;
    d2.reserve(static_cast<size_t>(n - 1));
    for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        d2.push_back((coords.row(i) - coords.row(j)).squaredNorm());
    }
    std::partial_sort(d2.begin(), d2.begin() + k_guid, d2.end());
    double sum = 0.0;
    for (int j = 0; j < k_guid; ++j) sum += d2[static_cast<size_t>(j)];
    return sum / k_guid;
}

double knn_energy(const Eigen::MatrixXd& coords, const GuidanceConfig& guid) {
    double e = 0.0;
    for (int i = 0; i < coords.rows(); ++i) {
        double d = knn_dist(coords, i, guid.k_guid) - guid.mu_knn;
        e += d * d;
    }
    return e;
}

double estimate_mu_knn_coords(const std::vector<const Eigen::MatrixXd*>& clouds, int k_guid) {
    if (clouds.empty()) throw ConfigError("estimate_mu_knn: empty dataset");
    double sum = 0.0;
    long count = 0;
    for (const Eigen::MatrixXd* c : clouds) {
        if (c->rows() <= k_guid) continue;  // too short for k neighbors
        for (int i = 0; i < c->rows(); ++i) {
            sum += knn_dist(*c, i, k_guid);
            ++count;
        }
    }
    if (count == 0) {
        throw ConfigError("estimate_mu_knn: no chain has more than k residues");
    }
    return sum / static_cast<double>(count);
}

double estimate_mu_knn(const std::vector<ComplexRecord>& dataset, int k_guid, double s_norm) {
    if (dataset.empty()) throw ConfigError("estimate_mu_knn: empty dataset");
    std::vector<Eigen::MatrixXd> scaled;
    scaled.reserve(dataset.size());
    for (const auto& rec : dataset) scaled.push_back(rec.binder.coords / s_norm);
    std::vector<const Eigen::MatrixXd*> ptrs;
    ptrs.reserve(scaled.size());
    for (const auto& m : scaled) ptrs.push_back(&m);
    return estimate_mu_knn_coords(ptrs, k_guid);
}

Eigen::MatrixXd init_structure_guided(int n, const GuidanceConfig& guid, Rng& rng,
                                      double* chosen_energy, std::vector<double>* all_energies) {
    if (n < 1) throw ContractError("init_structure_guided: binder length must be >= 1");
    Eigen::MatrixXd best;
    double best_e = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < guid.n_init; ++trial) {
        Eigen::MatrixXd draw(n, 3);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) draw(i, j) = rng.normal();
        }
        double e = 0.0;
        if (guid.n_init > 1 || chosen_energy != nullptr || all_energies != nullptr) {
            e = knn_energy(draw, guid);
        }
        if (all_energies != nullptr) all_energies->push_back(e);
        if (trial == 0 || e < best_e) {
            best_e = e;
            best = std::move(draw);
        }
    }
    if (chosen_energy != nullptr) *chosen_energy = best_e;
    return best;
}

Eigen::MatrixXd init_sequence_guided(int n, int K, const GuidanceConfig& guid, Rng& rng) {
    if (n < 1) throw ContractError("init_sequence_guided: binder length must be >= 1");
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(n, K);
    if (!guid.seq_enabled) {
        for (int i = 0; i < n; ++i) {
            int k = std::min(K - 1, static_cast<int>(rng.uniform() * K));
            rows(i, k) = 1.0;
        }
        return rows;
    }
    if (guid.fragments.empty()) {
        throw ConfigError("init_sequence_guided: fragment library is empty");
    }
    int pos = 0;
    while (pos < n) {
        const FragmentEntry& frag =
            guid.fragments[static_cast<size_t>(rng.next_u64() % guid.fragments.size())];
        for (char c : frag.seq) {
            if (pos >= n) break;  // clip at the boundary
            int k = aa_index(c);
            if (k < 0 || k >= K) k = std::min(K - 1, static_cast<int>(rng.uniform() * K));
            rows(pos, k) = 1.0;
            ++pos;
        }
        if (frag.seq.empty()) {  // avoid spinning on degenerate entries
            int k = std::min(K - 1, static_cast<int>(rng.uniform() * K));
            rows(pos, k) = 1.0;
            ++pos;
        }
    }
    return rows;
}

std::vector<FragmentEntry> load_fragment_library(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open fragment library: " + path);
    std::vector<FragmentEntry> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw ParseError("fragment line needs '<sequence>\\t<label>'", line_no);
        }
        out.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return out;
}

ComplexState reverse_step(const ComplexState& state, const DenoiserParams& params,
                          const NoiseSchedule& seq_sched, const NoiseSchedule& struct_sched, int t,
                          Rng& rng) {
    if (t != state.t) throw ContractError("reverse_step: t does not match state.t");
    if (t < 1 || t > seq_sched.T) throw ContractError("reverse_step: t out of [1,T]");

    DenoiserOutput out = predict_clean(state, params, /*build_tape=*/false);

    ComplexState next = state;
    next.t = t - 1;

    // Sequence rows first, then coordinate noise; the order is part of the
    // determinism contract.
    const int n = state.binder_len();
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd post = posterior_distribution(state.binder_onehot.row(i).transpose(),
                                                      out.s0_hat.row(i).transpose(), t, seq_sched);
        if (t == 1) {
            Eigen::Index arg;
            post.maxCoeff(&arg);
            next.binder_onehot.row(i).setZero();
            next.binder_onehot(i, arg) = 1.0;
        } else {
            next.binder_onehot.row(i) = sample_one_hot(post, rng).transpose();
        }
    }

    if (t == 1) {
        next.binder_coords = out.x0_hat;  // beta_tilde(1) = 0, mean reduces to x0_hat
    } else {
        CoordState x_t{state.binder_coords};
        CoordState x0_hat{out.x0_hat};
        auto [mu, var] = posterior_mean_variance(x_t, x0_hat, t, struct_sched);
        double sd = std::sqrt(var);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 3; ++j) next.binder_coords(i, j) = mu(i, j) + sd * rng.normal();
        }
    }
    if (!next.binder_coords.allFinite()) {
        throw NumericError("reverse_step: non-finite coordinates at t=" + std::to_string(t));
    }
    return next;
}

ComplexRecord generate(const Chain& target, int binder_len, const DenoiserParams& params,
                       const NoiseSchedule& seq_sched, const NoiseSchedule& struct_sched,
                       const GuidanceConfig& guid, double s_norm, Rng& rng,
                       const std::string& candidate_id, CandidateMeta* meta_out) {
    if (binder_len < 1) throw ContractError("generate: binder length must be >= 1");
    if (!is_canonical_sequence(target.seq)) {
        throw ContractError("generate: target sequence has non-canonical letters");
    }
    if (seq_sched.T != struct_sched.T) throw ContractError("generate: schedule T mismatch");
    guid.validate();

    const int T = seq_sched.T;
    const int K = params.config().K;
    Eigen::RowVector3d centroid = target.coords.colwise().mean();

    ComplexState state;
    state.target_onehot = Eigen::MatrixXd::Zero(target.length(), K);
    for (int i = 0; i < target.length(); ++i) {
        state.target_onehot(i, aa_index(target.seq[static_cast<size_t>(i)])) = 1.0;
    }
    state.target_coords = (target.coords.rowwise() - centroid) / s_norm;
    state.t = T;

    GuidanceConfig struct_guid = guid;
    if (!guid.struct_enabled) struct_guid.n_init = 1;
    double init_energy = 0.0;
    state.binder_coords = init_structure_guided(
        binder_len, struct_guid, rng, guid.struct_enabled ? &init_energy : nullptr);
    state.binder_onehot = init_sequence_guided(binder_len, K, guid, rng);

    for (int t = T; t >= 1; --t) {
        state = reverse_step(state, params, seq_sched, struct_sched, t, rng);
    }

    ComplexRecord rec;
    rec.id = candidate_id;
    rec.target = target;
    rec.binder.seq.resize(static_cast<size_t>(binder_len));
    for (int i = 0; i < binder_len; ++i) {
        Eigen::Index arg;
        state.binder_onehot.row(i).maxCoeff(&arg);
        rec.binder.seq[static_cast<size_t>(i)] = aa_letter(static_cast<int>(arg));
    }
    rec.binder.coords = (state.binder_coords * s_norm).rowwise() + centroid;
    rec.validate();

    if (meta_out != nullptr) {
        meta_out->seed = rng.base_seed();
        meta_out->guidance_seq = guid.seq_enabled;
        meta_out->guidance_struct = guid.struct_enabled;
        meta_out->init_energy = init_energy;
    }
    return rec;
}

}  // namespace ppdesign
