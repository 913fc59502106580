/**
 * Python bindings: schedules, diffusion kernels, the denoiser, training,
 * sampling, metrics, and the curation pipeline.
 */

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/checkpoint.hpp"
#include "ppdesign/continuous.hpp"
#include "ppdesign/config.hpp"
#include "ppdesign/curation.hpp"
#include "ppdesign/metrics.hpp"
#include "ppdesign/sampling.hpp"
#include "ppdesign/selfcheck.hpp"
#include "ppdesign/training.hpp"

namespace py = pybind11;
using namespace ppdesign;

namespace {

Eigen::MatrixXd as_coords(const Eigen::MatrixXd& m, const char* what) {
    if (m.cols() != 3) throw ContractError(std::string(what) + " must be an (n, 3) array");
    return m;
}

/// Denoiser with owned parameters, constructible fresh or from a checkpoint.
class Model {
public:
    Model(const DenoiserConfig& config, std::uint64_t seed)
        : meta_(), params_(DenoiserParams::init(config, Rng(seed).substream(rng_tag::kInit))) {
        meta_.alphabet_hash = alphabet_hash();
        meta_.config = config;
        meta_.seq_schedule = ScheduleSpec{ScheduleKind::Cosine, config.T, 0.01, 1e-4, 0.1, 2.0};
        meta_.struct_schedule = ScheduleSpec{ScheduleKind::Sigmoid, config.T, 0.01, 1e-4, 0.1, 2.0};
    }
    explicit Model(const std::string& checkpoint_stem) {
        auto [meta, params] = load_checkpoint(checkpoint_stem);
        meta_ = meta;
        params_ = std::move(params);
    }

    py::tuple predict(const std::string& target_seq, const Eigen::MatrixXd& target_coords,
                      const Eigen::MatrixXd& binder_onehot, const Eigen::MatrixXd& binder_coords,
                      int t) const {
        ComplexState state;
        state.target_onehot = sequence_one_hot(target_seq, params_.config().K);
        state.target_coords = as_coords(target_coords, "target_coords");
        state.binder_onehot = binder_onehot;
        state.binder_coords = as_coords(binder_coords, "binder_coords");
        state.t = t;
        DenoiserOutput out = predict_clean(state, params_, /*build_tape=*/false);
        return py::make_tuple(out.s0_hat, out.x0_hat);
    }

    ComplexRecord generate_candidate(const std::string& target_seq,
                                     const Eigen::MatrixXd& target_coords, int binder_len,
                                     std::uint64_t seed, const std::string& candidate_id) const {
        Chain target{target_seq, as_coords(target_coords, "target_coords")};
        NoiseSchedule seq_sched = meta_.seq_schedule.build();
        NoiseSchedule struct_sched = meta_.struct_schedule.build();
        GuidanceConfig off;
        Rng rng(seed);
        return generate(target, binder_len, params_, seq_sched, struct_sched, off, meta_.s_norm,
                        rng, candidate_id);
    }

    void save(const std::string& stem) const { save_checkpoint(stem, meta_, params_); }

    const CheckpointMeta& meta() const { return meta_; }
    long step() const { return meta_.step; }
    double s_norm() const { return meta_.s_norm; }

private:
    CheckpointMeta meta_;
    DenoiserParams params_;
};

py::dict train_py(const std::vector<ComplexRecord>& dataset, const std::string& out_dir,
                  std::uint64_t seed, int steps, double lr, int batch_tokens, int T,
                  const DenoiserConfig& model_config) {
    TrainConfig tc;
    tc.seed = seed;
    tc.total_steps = steps;
    tc.lr = lr;
    tc.batch_tokens = batch_tokens;
    tc.warmup_steps = std::min(tc.warmup_steps, steps);
    DenoiserConfig mc = model_config;
    mc.T = T;
    ScheduleSpec seq_spec{ScheduleKind::Cosine, T, 0.01, 1e-4, 0.1, 2.0};
    ScheduleSpec struct_spec{ScheduleKind::Sigmoid, T, 0.01, 1e-4, 0.1, 2.0};
    TrainResult res = train_loop(dataset, tc, mc, seq_spec, struct_spec, out_dir);
    py::dict out;
    out["checkpoint"] = res.checkpoint_stem;
    out["metrics"] = res.metrics_path;
    out["steps"] = res.steps_run;
    out["initial_window_loss"] = res.initial_window_loss;
    out["final_window_loss"] = res.final_window_loss;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Joint sequence-structure diffusion for protein binder design";
    m.attr("__version__") = "0.1.0";
    m.attr("ALPHABET") = std::string(kAlphabet);

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "RecordParseError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    // ---- schedules ----
    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("T", &NoiseSchedule::T)
        .def_readonly("beta", &NoiseSchedule::beta)
        .def_readonly("alpha", &NoiseSchedule::alpha)
        .def_readonly("alpha_bar", &NoiseSchedule::alpha_bar)
        .def_readonly("beta_tilde", &NoiseSchedule::beta_tilde)
        .def("alpha_bar_at", &NoiseSchedule::alpha_bar_at);
    m.def("build_cosine_schedule", &build_cosine_schedule, py::arg("T"), py::arg("offset") = 0.01);
    m.def("build_sigmoid_schedule", &build_sigmoid_schedule, py::arg("T"), py::arg("beta_start"),
          py::arg("beta_end"), py::arg("steepness"));

    // ---- categorical diffusion ----
    m.def("forward_step_distribution", &forward_step_distribution, py::arg("prev_one_hot"),
          py::arg("beta_t"));
    m.def("forward_marginal_distribution", &forward_marginal_distribution, py::arg("s0_one_hot"),
          py::arg("alpha_bar_t"));
    m.def("posterior_distribution", &posterior_distribution, py::arg("s_t_one_hot"),
          py::arg("s0_simplex"), py::arg("t"), py::arg("schedule"));
    m.def("categorical_kl", &categorical_kl, py::arg("q"), py::arg("p"));

    // ---- coordinate diffusion ----
    m.def(
        "coordinate_posterior",
        [](const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& x0, int t,
           const NoiseSchedule& sched) {
            auto [mu, var] = posterior_mean_variance(CoordState{x_t}, CoordState{x0}, t, sched);
            return py::make_tuple(mu, var);
        },
        py::arg("x_t"), py::arg("x0"), py::arg("t"), py::arg("schedule"));
    m.def(
        "coordinate_loss",
        [](const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x0_hat) {
            return coordinate_loss(CoordState{x0}, CoordState{x0_hat});
        },
        py::arg("x0"), py::arg("x0_hat"));

    // ---- records ----
    py::class_<Chain>(m, "Chain")
        .def(py::init([](const std::string& seq, const Eigen::MatrixXd& coords) {
                 return Chain{seq, as_coords(coords, "coords")};
             }),
             py::arg("seq"), py::arg("coords"))
        .def_readwrite("seq", &Chain::seq)
        .def_readwrite("coords", &Chain::coords)
        .def("__len__", &Chain::length);
    py::class_<ComplexRecord>(m, "ComplexRecord")
        .def(py::init([](const std::string& id, const Chain& target, const Chain& binder) {
                 ComplexRecord r;
                 r.id = id;
                 r.target = target;
                 r.binder = binder;
                 r.validate();
                 return r;
             }),
             py::arg("id"), py::arg("target"), py::arg("binder"))
        .def_readwrite("id", &ComplexRecord::id)
        .def_readwrite("target", &ComplexRecord::target)
        .def_readwrite("binder", &ComplexRecord::binder)
        .def("validate", &ComplexRecord::validate);
    m.def("load_records", &load_records, py::arg("path"));
    m.def("save_records", &save_records, py::arg("path"), py::arg("records"));

    // ---- curation ----
    m.def("synth_toy_dataset", &synth_toy_dataset, py::arg("count"), py::arg("len_min"),
          py::arg("len_max"), py::arg("seed"));
    m.def("toy_cipher_sequence", &toy_cipher_sequence, py::arg("seq"));
    m.def(
        "curate_text",
        [](const std::string& text, const std::string& entry_id, bool pseudo) {
            StructureEntry entry = parse_structure(text, entry_id);
            auto [kept, log] = apply_quality_filters(entry);
            for (const auto& id : detect_clashes(kept)) {
                log.push_back({entry_id, id, "clash"});
                kept.erase(std::remove_if(kept.begin(), kept.end(),
                                          [&](const CurChain& c) { return c.id == id; }),
                           kept.end());
            }
            std::vector<ComplexRecord> records;
            if (pseudo) {
                for (const auto& chain : kept) {
                    if (auto rec = make_pseudo_complex(entry_id, chain)) records.push_back(*rec);
                }
            } else {
                records = extract_interface_pairs(entry_id, kept);
            }
            py::list rejections;
            for (const auto& r : log) {
                rejections.append(py::make_tuple(r.entry, r.chain, r.reason));
            }
            return py::make_tuple(records, rejections);
        },
        py::arg("text"), py::arg("entry_id"), py::arg("pseudo") = false,
        "Parse one structure file, apply the quality filters and clash cascade, and extract "
        "interface-pair (or pseudo-complex) records");

    // ---- model ----
    py::class_<DenoiserConfig>(m, "DenoiserConfig")
        .def(py::init<>())
        .def_readwrite("d_model", &DenoiserConfig::d_model)
        .def_readwrite("n_blocks", &DenoiserConfig::n_blocks)
        .def_readwrite("n_attn_per_block", &DenoiserConfig::n_attn_per_block)
        .def_readwrite("n_causal", &DenoiserConfig::n_causal)
        .def_readwrite("n_heads", &DenoiserConfig::n_heads)
        .def_readwrite("k_nn", &DenoiserConfig::k_nn)
        .def_readwrite("T", &DenoiserConfig::T)
        .def_readwrite("K", &DenoiserConfig::K)
        .def_readwrite("max_len", &DenoiserConfig::max_len)
        .def_readwrite("ff_mult", &DenoiserConfig::ff_mult)
        .def("validate", &DenoiserConfig::validate);
    py::class_<Model>(m, "Model")
        .def(py::init<const DenoiserConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed"))
        .def_static("load", [](const std::string& stem) { return Model(stem); }, py::arg("stem"))
        .def("predict", &Model::predict, py::arg("target_seq"), py::arg("target_coords"),
             py::arg("binder_onehot"), py::arg("binder_coords"), py::arg("t"),
             "Run the denoiser; returns (s0_hat, x0_hat)")
        .def("generate", &Model::generate_candidate, py::arg("target_seq"),
             py::arg("target_coords"), py::arg("binder_len"), py::arg("seed"),
             py::arg("candidate_id") = "cand0")
        .def("save", &Model::save, py::arg("stem"))
        .def_property_readonly("step", &Model::step)
        .def_property_readonly("s_norm", &Model::s_norm);
    m.def("sequence_one_hot", &sequence_one_hot, py::arg("seq"), py::arg("K") = kAlphabetSize);
    m.def("train", &train_py, py::arg("dataset"), py::arg("out_dir"), py::arg("seed"),
          py::arg("steps"), py::arg("lr") = 1e-3, py::arg("batch_tokens") = 1024,
          py::arg("T") = 100, py::arg("model_config") = DenoiserConfig{});

    // ---- guidance ----
    m.def(
        "knn_energy",
        [](const Eigen::MatrixXd& coords, int k, double mu_knn) {
            GuidanceConfig g;
            g.k_guid = k;
            g.mu_knn = mu_knn;
            return knn_energy(as_coords(coords, "coords"), g);
        },
        py::arg("coords"), py::arg("k"), py::arg("mu_knn"));
    m.def("knn_dist", &knn_dist, py::arg("coords"), py::arg("i"), py::arg("k"));
    m.def("estimate_mu_knn", &estimate_mu_knn, py::arg("dataset"), py::arg("k"),
          py::arg("s_norm") = 10.0);

    // ---- metrics ----
    m.def("amino_acid_recovery", &amino_acid_recovery, py::arg("a"), py::arg("b"));
    m.def("diversity", &diversity, py::arg("candidates"), py::arg("k"));
    m.def("novelty", &novelty, py::arg("candidates"), py::arg("reference"), py::arg("k"));
    m.def(
        "synthetic_score",
        [](const ComplexRecord& rec) {
            ScoreRecord s = synthetic_score(rec);
            return py::make_tuple(s.iptm, s.ptm, s.pae, s.plddt);
        },
        py::arg("record"), "Deterministic geometric pseudo-scores (ipTM, pTM, PAE, pLDDT)");

    // ---- selfcheck ----
    m.def(
        "run_selfchecks",
        [](bool quick, std::uint64_t seed) {
            py::list out;
            for (const auto& r : run_selfchecks(quick, seed)) {
                py::dict d;
                d["name"] = r.name;
                d["passed"] = r.passed;
                d["measured"] = r.measured;
                d["tolerance"] = r.tolerance;
                d["note"] = r.note;
                out.append(d);
            }
            return out;
        },
        py::arg("quick") = true, py::arg("seed") = 1);
}
