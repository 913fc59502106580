/**
 * ppdesign command line tool.
 *
 * Subcommands:
 *   curate     structure files -> filtered complex records + rejection log
 *   train      optimize the denoiser on complex records (or the toy corpus)
 *   sample     generate binder candidates for a target from a checkpoint
 *   eval       score candidates and print the metric table
 *   inspect    print checkpoints, record stats, configs, schedule tables
 *   selfcheck  run the numerical release gates
 */

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "ppdesign/checkpoint.hpp"
#include "ppdesign/config.hpp"
#include "ppdesign/curation.hpp"
#include "ppdesign/metrics.hpp"
#include "ppdesign/sampling.hpp"
#include "ppdesign/selfcheck.hpp"
#include "ppdesign/training.hpp"

namespace fs = std::filesystem;
using namespace ppdesign;

namespace {

constexpr const char* kVersion = "0.1.0";

int run_curate(const std::string& in_dir, const std::string& out_path,
               const std::string& log_path, bool pseudo, std::uint64_t seed) {
    if (!fs::is_directory(in_dir)) {
        throw IoError("input is not a readable directory: " + in_dir);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in_dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "ppdesign: warning: no structure files in " << in_dir << "\n";
    }

    std::vector<ComplexRecord> records;
    std::vector<Rejection> rejections;
    int entries = 0;
    for (const auto& path : files) {
        const std::string entry_id = path.stem().string();
        ++entries;
        std::ifstream in(path);
        std::ostringstream buf;
        buf << in.rdbuf();
        StructureEntry entry;
        try {
            entry = parse_structure(buf.str(), entry_id);
        } catch (const Error& e) {
            std::cerr << "ppdesign: warning: skipping " << path.string() << ": " << e.what()
                      << "\n";
            rejections.push_back({entry_id, "-", "parse-error"});
            continue;
        }
        auto [kept, log] = apply_quality_filters(entry);
        rejections.insert(rejections.end(), log.begin(), log.end());
        for (const auto& id : detect_clashes(kept)) {
            rejections.push_back({entry_id, id, "clash"});
            kept.erase(std::remove_if(kept.begin(), kept.end(),
                                      [&](const CurChain& c) { return c.id == id; }),
                       kept.end());
        }
        if (pseudo) {
            for (const auto& chain : kept) {
                if (auto rec = make_pseudo_complex(entry_id, chain); rec.has_value()) {
                    records.push_back(std::move(*rec));
                }
            }
        } else {
            auto pairs = extract_interface_pairs(entry_id, kept);
            records.insert(records.end(), pairs.begin(), pairs.end());
        }
    }

    save_records(out_path, records);
    write_rejections(log_path, rejections);
    std::cout << "curate: entries=" << entries << " complexes=" << records.size()
              << " rejections=" << rejections.size() << " seed=" << seed << "\n";
    return 0;
}

GuidanceConfig make_guidance(const RunConfig& cfg, double mu_knn, const std::string& mode,
                             const std::string& fragments_path) {
    GuidanceConfig guid;
    guid.k_guid = cfg.guid_k;
    guid.n_init = cfg.guid_n_init;
    guid.mu_knn = mu_knn;
    if (mode == "off") {
        guid.seq_enabled = false;
        guid.struct_enabled = false;
    } else if (mode == "structure") {
        guid.struct_enabled = true;
    } else if (mode == "sequence") {
        guid.seq_enabled = true;
    } else if (mode == "both") {
        guid.seq_enabled = true;
        guid.struct_enabled = true;
    } else {
        throw ConfigError("unknown guidance mode '" + mode + "' (off|structure|sequence|both)");
    }
    if (guid.seq_enabled) {
        std::string path = fragments_path.empty() ? cfg.fragments_path : fragments_path;
        if (path.empty()) {
            throw ConfigError("sequence guidance needs --fragments <library>");
        }
        guid.fragments = load_fragment_library(path);
    }
    return guid;
}

ScoreRecord score_via_command(const std::string& command, const ComplexRecord& rec,
                              const std::string& tmp_dir) {
    const std::string tmp = tmp_dir + "/scorer_input.rec";
    {
        std::ofstream out(tmp);
        write_record(out, rec);
    }
    const std::string full = command + " " + tmp;
    FILE* pipe = popen(full.c_str(), "r");
    if (pipe == nullptr) throw IoError("cannot run scorer command: " + full);
    char buf[512];
    std::string line;
    if (fgets(buf, sizeof(buf), pipe) != nullptr) line = buf;
    int status = pclose(pipe);
    if (status != 0) throw IoError("scorer command failed (exit " + std::to_string(status) +
                                   "): " + full);
    std::istringstream ls(line);
    ScoreRecord s;
    s.id = rec.id;
    if (!(ls >> s.iptm >> s.ptm >> s.pae >> s.plddt)) {
        throw ParseError("scorer output must be one line: 'iptm ptm pae plddt', got: " + line);
    }
    s.validate();
    return s;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

int run_eval(const std::string& candidates_path, const std::string& reference_path,
             const std::string& scores_path, bool synthetic, const std::string& scorer_cmd,
             std::vector<int> ks, const std::string& comparative_path, std::uint64_t seed) {
    std::vector<ComplexRecord> candidates = load_records(candidates_path);
    if (candidates.empty()) throw ConfigError("no candidates in " + candidates_path);
    std::vector<ComplexRecord> refs = load_records(reference_path);
    if (refs.empty()) throw ConfigError("no reference record in " + reference_path);
    const ComplexRecord& reference = refs.front();

    std::vector<ScoreRecord> scores;
    if (synthetic) {
        for (const auto& c : candidates) scores.push_back(synthetic_score(c));
    } else if (!scorer_cmd.empty()) {
        const std::string tmp_dir = fs::temp_directory_path().string();
        for (const auto& c : candidates) scores.push_back(score_via_command(scorer_cmd, c, tmp_dir));
    } else if (!scores_path.empty()) {
        scores = load_scores(scores_path);
    } else {
        throw ConfigError("eval needs one of --scores, --scorer-cmd, --synthetic");
    }

    // Candidate ids and score ids must pair up exactly.
    std::map<std::string, const ScoreRecord*> by_id;
    for (const auto& s : scores) by_id[s.id] = &s;
    for (const auto& c : candidates) {
        if (by_id.find(c.id) == by_id.end()) {
            throw ConfigError("no score for candidate '" + c.id + "'");
        }
    }
    std::map<std::string, const ComplexRecord*> cand_by_id;
    for (const auto& c : candidates) cand_by_id[c.id] = &c;
    for (const auto& s : scores) {
        if (cand_by_id.find(s.id) == cand_by_id.end()) {
            throw ConfigError("score for unknown candidate '" + s.id + "'");
        }
    }

    std::vector<ScoreRecord> ranked = rank_by_plddt(scores);
    SuccessThresholds thresholds;

    std::sort(ks.begin(), ks.end());
    std::cout << "k\tipTM\tpTM\tPAE\tpLDDT\tsuccess\tdiversity\tnovelty\n";
    for (int k : ks) {
        if (k < 1 || k > static_cast<int>(ranked.size())) continue;
        double iptm = 0.0, ptm = 0.0, pae = 0.0, plddt = 0.0;
        std::vector<std::string> seqs;
        for (int i = 0; i < k; ++i) {
            const ScoreRecord& s = ranked[static_cast<size_t>(i)];
            iptm += s.iptm;
            ptm += s.ptm;
            pae += s.pae;
            plddt += s.plddt;
            seqs.push_back(cand_by_id.at(s.id)->binder.seq);
        }
        double sr = success_rate({ranked}, k, thresholds);
        std::string div = k >= 2 ? fmt3(diversity(seqs, k)) : "-";
        double nov = novelty(seqs, reference.binder.seq, k);
        std::cout << k << "\t" << fmt3(iptm / k) << "\t" << fmt3(ptm / k) << "\t" << fmt3(pae / k)
                  << "\t" << fmt3(plddt / k) << "\t" << fmt3(sr) << "\t" << div << "\t"
                  << fmt3(nov) << "\n";
    }

    if (!comparative_path.empty()) {
        auto comparative = load_comparative_scores(comparative_path);
        double ref_score = 0.0;
        bool have_ref = false;
        std::vector<double> cand_scores;
        for (const auto& [id, value] : comparative) {
            if (id == "reference" || id == reference.id) {
                ref_score = value;
                have_ref = true;
            } else {
                if (cand_by_id.find(id) == cand_by_id.end()) {
                    throw ConfigError("comparative score for unknown candidate '" + id + "'");
                }
                cand_scores.push_back(value);
            }
        }
        if (!have_ref) {
            throw ConfigError("comparative file needs a 'reference' line with the positive "
                              "binder's score");
        }
        int k = static_cast<int>(cand_scores.size());
        double csr = comparative_success_rate({cand_scores}, {ref_score}, k);
        std::cout << "comparative_success_rate\t" << fmt3(csr) << "\t(k=" << k
                  << ", reference=" << fmt3(ref_score) << ")\n";
    }
    std::cout << "# seed=" << seed << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint sequence-structure diffusion toolkit for protein binder design"};
    app.set_version_flag("--version", kVersion);
    bool dump_defaults = false;
    app.add_flag("--dump-defaults", dump_defaults, "Print the default run config and exit");

    // ---- curate ----
    auto* curate = app.add_subcommand("curate", "Filter structure files into complex records");
    std::string cur_in, cur_out = "complexes.rec", cur_log = "rejections.tsv";
    bool cur_pseudo = false;
    std::uint64_t cur_seed = 0;
    curate->add_option("--in", cur_in, "Directory of structure files")->required();
    curate->add_option("--out", cur_out, "Output complex record file");
    curate->add_option("--log", cur_log, "Rejection log path");
    curate->add_flag("--pseudo", cur_pseudo, "Split monomers into pseudo-complexes");
    curate->add_option("--seed", cur_seed, "Echoed in the summary line");

    // ---- train ----
    auto* train = app.add_subcommand("train", "Optimize the denoiser");
    std::string tr_config, tr_data, tr_out = "out", tr_resume;
    bool tr_toy = false;
    int tr_toy_count = 500, tr_toy_len_min = 12, tr_toy_len_max = 24;
    int tr_steps = -1;
    double tr_lr = -1.0;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    train->add_option("--config", tr_config, "Run config file");
    train->add_option("--data", tr_data, "Complex record file");
    train->add_flag("--toy", tr_toy, "Train on the synthetic mirrored-motif corpus");
    train->add_option("--toy-count", tr_toy_count, "Toy corpus size");
    train->add_option("--toy-len-min", tr_toy_len_min, "Toy minimum chain length");
    train->add_option("--toy-len-max", tr_toy_len_max, "Toy maximum chain length");
    train->add_option("--steps", tr_steps, "Total optimization steps");
    train->add_option("--lr", tr_lr, "Learning rate override");
    train->add_option("--out", tr_out, "Output directory");
    train->add_option("--resume", tr_resume, "Checkpoint stem to resume from");
    train->add_option("--seed", tr_seed, "Run seed (required)")
        ->each([&](const std::string&) { tr_seed_set = true; });

    // ---- sample ----
    auto* sample = app.add_subcommand("sample", "Generate binder candidates");
    std::string sm_ckpt, sm_target, sm_out = "candidates.rec", sm_guidance = "off", sm_fragments;
    int sm_num = 1, sm_index = 0, sm_length = -1, sm_threads = 1;
    std::uint64_t sm_seed = 0;
    bool sm_seed_set = false;
    double sm_mu_knn = -1.0;
    sample->add_option("--checkpoint", sm_ckpt, "Checkpoint stem")->required();
    sample->add_option("--target", sm_target, "Record file holding the target complex")->required();
    sample->add_option("--target-index", sm_index, "Record index within the file");
    sample->add_option("--num", sm_num, "Number of candidates");
    sample->add_option("--length", sm_length, "Binder length (default: reference binder)");
    sample->add_option("--out", sm_out, "Candidate output file");
    sample->add_option("--guidance", sm_guidance, "off|structure|sequence|both");
    sample->add_option("--fragments", sm_fragments, "Fragment library for sequence guidance");
    sample->add_option("--mu-knn", sm_mu_knn, "Override the checkpoint's mu_knn");
    sample->add_option("--threads", sm_threads, "Worker cap for candidate generation");
    sample->add_option("--seed", sm_seed, "Run seed (required)")
        ->each([&](const std::string&) { sm_seed_set = true; });

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "Score candidates and print metrics");
    std::string ev_candidates, ev_reference, ev_scores, ev_scorer_cmd, ev_comparative;
    bool ev_synthetic = false;
    std::vector<int> ev_ks = {1, 5, 10};
    std::uint64_t ev_seed = 0;
    eval->add_option("--candidates", ev_candidates, "Candidate record file")->required();
    eval->add_option("--reference", ev_reference, "Reference complex record file")->required();
    eval->add_option("--scores", ev_scores, "Score file (id iptm ptm pae plddt)");
    eval->add_flag("--synthetic", ev_synthetic, "Use the built-in synthetic scorer");
    eval->add_option("--scorer-cmd", ev_scorer_cmd,
                     "External scorer: invoked per candidate record file, prints one score line");
    eval->add_option("--k", ev_ks, "Top-k cutoffs");
    eval->add_option("--comparative", ev_comparative, "Comparative score file (id score)");
    eval->add_option("--seed", ev_seed, "Echoed in the output");

    // ---- inspect ----
    auto* inspect = app.add_subcommand("inspect", "Print checkpoints, records, configs");
    std::string in_ckpt, in_records, in_config;
    bool in_schedule = false;
    inspect->add_option("--checkpoint", in_ckpt, "Checkpoint stem");
    inspect->add_option("--records", in_records, "Complex record file");
    inspect->add_option("--config", in_config, "Run config file");
    inspect->add_flag("--schedule", in_schedule, "Print schedule tables for --config");

    // ---- selfcheck ----
    auto* selfcheck = app.add_subcommand("selfcheck", "Run the numerical release gates");
    bool sc_quick = false, sc_inject = false;
    std::uint64_t sc_seed = 1;
    selfcheck->add_flag("--quick", sc_quick, "Subset completing under a minute");
    selfcheck->add_option("--seed", sc_seed, "Run seed");
    selfcheck
        ->add_flag("--inject-fx-sign-error", sc_inject,
                   "Test hook: flip the analytic f_x gradients so the check must fail")
        ->group("");  // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (dump_defaults) {
            std::cout << dump_run_config(RunConfig{});
            return 0;
        }
        if (*curate) {
            return run_curate(cur_in, cur_out, cur_log, cur_pseudo, cur_seed);
        }
        if (*train) {
            if (!tr_seed_set) throw ConfigError("train: --seed is required");
            RunConfig cfg = tr_config.empty() ? RunConfig{} : load_run_config(tr_config);
            cfg.seed = tr_seed;
            if (tr_steps > 0) {
                cfg.train.total_steps = tr_steps;
                cfg.train.warmup_steps = std::min(cfg.train.warmup_steps, tr_steps);
            }
            if (tr_lr > 0.0) cfg.train.lr = tr_lr;
            cfg.train.seed = cfg.seed;
            cfg.validate();

            std::vector<ComplexRecord> data;
            if (tr_toy) {
                data = synth_toy_dataset(tr_toy_count, tr_toy_len_min, tr_toy_len_max, cfg.seed);
            } else {
                std::string path = !tr_data.empty() ? tr_data : cfg.data_path;
                if (path.empty()) {
                    throw ConfigError("train: need --toy, --data, or a [paths] data entry");
                }
                data = load_records(path);
            }
            std::optional<std::string> resume;
            if (!tr_resume.empty()) resume = tr_resume;
            TrainResult res = train_loop(data, cfg.train, cfg.model, cfg.seq_schedule,
                                         cfg.struct_schedule, tr_out, resume);
            std::cout << "train: steps=" << res.steps_run << " checkpoint=" << res.checkpoint_stem
                      << " metrics=" << res.metrics_path
                      << " loss_first50=" << res.initial_window_loss
                      << " loss_last50=" << res.final_window_loss << " seed=" << cfg.seed << "\n";
            return 0;
        }
        if (*sample) {
            if (!sm_seed_set) throw ConfigError("sample: --seed is required");
            auto [meta, params] = load_checkpoint(sm_ckpt);
            std::vector<ComplexRecord> recs = load_records(sm_target);
            if (sm_index < 0 || sm_index >= static_cast<int>(recs.size())) {
                throw ConfigError("sample: --target-index out of range");
            }
            const ComplexRecord& ref = recs[static_cast<size_t>(sm_index)];
            const int binder_len = sm_length > 0 ? sm_length : ref.binder.length();

            RunConfig defaults;
            defaults.guid_k = 4;
            GuidanceConfig guid = make_guidance(defaults, sm_mu_knn > 0.0 ? sm_mu_knn : meta.mu_knn,
                                                sm_guidance, sm_fragments);
            NoiseSchedule seq_sched = meta.seq_schedule.build();
            NoiseSchedule struct_sched = meta.struct_schedule.build();

            std::vector<ComplexRecord> out(static_cast<size_t>(sm_num));
            std::vector<CandidateMeta> cand_meta(static_cast<size_t>(sm_num));
            const int workers = std::max(1, std::min(sm_threads, sm_num));
            auto work = [&](int begin, int end) {
                for (int i = begin; i < end; ++i) {
                    // Per-candidate seed = base seed + candidate index.
                    Rng rng(sm_seed + static_cast<std::uint64_t>(i));
                    char id[32];
                    std::snprintf(id, sizeof(id), "cand%04d", i);
                    out[static_cast<size_t>(i)] =
                        generate(ref.target, binder_len, params, seq_sched, struct_sched, guid,
                                 meta.s_norm, rng, id, &cand_meta[static_cast<size_t>(i)]);
                }
            };
            if (workers == 1) {
                work(0, sm_num);
            } else {
                std::vector<std::thread> pool;
                int chunk = (sm_num + workers - 1) / workers;
                for (int w = 0; w < workers; ++w) {
                    int begin = w * chunk;
                    int end = std::min(sm_num, begin + chunk);
                    if (begin < end) pool.emplace_back(work, begin, end);
                }
                for (auto& t : pool) t.join();
            }

            std::ofstream of(sm_out);
            if (!of) throw IoError("cannot open output: " + sm_out);
            for (size_t i = 0; i < out.size(); ++i) {
                write_record(of, out[i], &cand_meta[i]);
            }
            std::cout << "sample: candidates=" << sm_num << " out=" << sm_out
                      << " target=" << ref.id << " seed=" << sm_seed << "\n";
            return 0;
        }
        if (*eval) {
            return run_eval(ev_candidates, ev_reference, ev_scores, ev_synthetic, ev_scorer_cmd,
                            ev_ks, ev_comparative, ev_seed);
        }
        if (*inspect) {
            if (!in_ckpt.empty()) {
                auto [meta, params] = load_checkpoint(in_ckpt);
                std::cout << manifest_text(meta, params);
                long total = 0;
                for (const auto& t : params.tensors()) total += t.value.size();
                std::cout << "# tensors=" << params.tensors().size() << " parameters=" << total
                          << "\n";
            }
            if (!in_records.empty()) {
                auto recs = load_records(in_records);
                int tmin = 1 << 30, tmax = 0, bmin = 1 << 30, bmax = 0;
                long ttot = 0, btot = 0;
                for (const auto& r : recs) {
                    tmin = std::min(tmin, r.target.length());
                    tmax = std::max(tmax, r.target.length());
                    bmin = std::min(bmin, r.binder.length());
                    bmax = std::max(bmax, r.binder.length());
                    ttot += r.target.length();
                    btot += r.binder.length();
                }
                std::cout << "records=" << recs.size();
                if (!recs.empty()) {
                    std::cout << " target_len=[" << tmin << "," << tmax << "] mean="
                              << (static_cast<double>(ttot) / recs.size()) << " binder_len=["
                              << bmin << "," << bmax << "] mean="
                              << (static_cast<double>(btot) / recs.size());
                }
                std::cout << "\n";
            }
            if (!in_config.empty()) {
                RunConfig cfg = load_run_config(in_config);
                std::cout << dump_run_config(cfg);
                if (in_schedule) {
                    for (const auto& [name, spec] :
                         {std::pair{"sequence", cfg.seq_schedule},
                          std::pair{"structure", cfg.struct_schedule}}) {
                        NoiseSchedule s = spec.build();
                        std::cout << "# schedule." << name << ": t beta alpha_bar beta_tilde\n";
                        int stride = std::max(1, s.T / 10);
                        for (int t = 1; t <= s.T; t += stride) {
                            std::cout << t << "\t" << s.beta_at(t) << "\t" << s.alpha_bar_at(t)
                                      << "\t" << s.beta_tilde_at(t) << "\n";
                        }
                    }
                }
            }
            if (in_ckpt.empty() && in_records.empty() && in_config.empty()) {
                throw ConfigError("inspect: pass --checkpoint, --records, or --config");
            }
            return 0;
        }
        if (*selfcheck) {
            auto results = run_selfchecks(sc_quick, sc_seed, sc_inject);
            bool all = true;
            for (const auto& r : results) {
                std::printf("%-22s %s  measured=%.3e tolerance=%.3e  %s\n", r.name.c_str(),
                            r.passed ? "PASS" : "FAIL", r.measured, r.tolerance, r.note.c_str());
                all = all && r.passed;
            }
            std::cout << (all ? "selfcheck: all checks passed" : "selfcheck: FAILURES above")
                      << " (seed=" << sc_seed << ")\n";
            return all ? 0 : 1;
        }
        std::cerr << app.help();
        return 1;
    } catch (const Error& e) {
        std::cerr << "ppdesign: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ppdesign: error: " << e.what() << "\n";
        return 1;
    }
}
