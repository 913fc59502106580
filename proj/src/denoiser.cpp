#include "ppdesign/denoiser.hpp"

#include <algorithm>
#include <cmath>

#include "ppdesign/discrete.hpp"

namespace ppdesign {

namespace {

constexpr double kDistEps = 1e-8;       // added to edge lengths before use
constexpr double kCoordClip = 10.0;     // per-layer displacement cap, normalized units

std::string block_prefix(int b, int a) {
    return "block" + std::to_string(b) + ".attn" + std::to_string(a) + ".";
}

void push_attn_tensors(std::vector<NamedTensor>& out, AttnLayerIdx& idx, const std::string& prefix,
                       const DenoiserConfig& c) {
    auto add = [&](int& slot, const std::string& name, int rows, int cols) {
        slot = static_cast<int>(out.size());
        out.push_back({prefix + name, Eigen::MatrixXd::Zero(rows, cols)});
    };
    add(idx.ln1_g, "ln1.g", 1, c.d_model);
    add(idx.ln1_b, "ln1.b", 1, c.d_model);
    add(idx.wq, "wq", c.d_model, c.d_model);
    add(idx.wk, "wk", c.d_model, c.d_model);
    add(idx.wv, "wv", c.d_model, c.d_model);
    add(idx.wo, "wo", c.d_model, c.d_model);
    add(idx.ln2_g, "ln2.g", 1, c.d_model);
    add(idx.ln2_b, "ln2.b", 1, c.d_model);
    add(idx.ff_w1, "ff.w1", c.d_model, c.ff_dim());
    add(idx.ff_b1, "ff.b1", 1, c.ff_dim());
    add(idx.ff_w2, "ff.w2", c.ff_dim(), c.d_model);
    add(idx.ff_b2, "ff.b2", 1, c.d_model);
}

void push_graph_tensors(std::vector<NamedTensor>& out, GraphLayerIdx& idx,
                        const std::string& prefix, const DenoiserConfig& c) {
    auto add = [&](int& slot, const std::string& name, int rows, int cols) {
        slot = static_cast<int>(out.size());
        out.push_back({prefix + name, Eigen::MatrixXd::Zero(rows, cols)});
    };
    add(idx.fm_w1, "fm.w1", 2 * c.d_model + 1, c.d_model);
    add(idx.fm_b1, "fm.b1", 1, c.d_model);
    add(idx.fm_w2, "fm.w2", c.d_model, c.d_model + 1);  // d message dims + 1 edge logit
    add(idx.fm_b2, "fm.b2", 1, c.d_model + 1);
    add(idx.fw_w, "fw.w", c.d_model, c.d_model);
    add(idx.fw_b, "fw.b", 1, c.d_model);
    add(idx.fx_w1, "fx.w1", c.d_model, c.d_model);
    add(idx.fx_b1, "fx.b1", 1, c.d_model);
    add(idx.fx_w2, "fx.w2", c.d_model, 1);
    add(idx.fx_b2, "fx.b2", 1, 1);
}

ParamLayout build_layout(const DenoiserConfig& c, std::vector<NamedTensor>& out) {
    ParamLayout l;
    auto add = [&](int& slot, const std::string& name, int rows, int cols) {
        slot = static_cast<int>(out.size());
        out.push_back({name, Eigen::MatrixXd::Zero(rows, cols)});
    };
    add(l.residue_table, "embed.residue_table", c.K + 1, c.d_model);
    add(l.pos_table, "embed.pos_table", c.max_len, c.d_model);
    add(l.time_w1, "embed.time.w1", c.d_model, c.d_model);
    add(l.time_b1, "embed.time.b1", 1, c.d_model);
    add(l.time_w2, "embed.time.w2", c.d_model, c.d_model);
    add(l.time_b2, "embed.time.b2", 1, c.d_model);
    l.block_attn.resize(static_cast<size_t>(c.n_blocks));
    l.block_graph.resize(static_cast<size_t>(c.n_blocks));
    for (int b = 0; b < c.n_blocks; ++b) {
        auto& attns = l.block_attn[static_cast<size_t>(b)];
        attns.resize(static_cast<size_t>(c.n_attn_per_block));
        for (int a = 0; a < c.n_attn_per_block; ++a) {
            push_attn_tensors(out, attns[static_cast<size_t>(a)], block_prefix(b, a), c);
        }
        push_graph_tensors(out, l.block_graph[static_cast<size_t>(b)],
                           "block" + std::to_string(b) + ".graph.", c);
    }
    l.causal.resize(static_cast<size_t>(c.n_causal));
    for (int cl = 0; cl < c.n_causal; ++cl) {
        push_attn_tensors(out, l.causal[static_cast<size_t>(cl)],
                          "causal" + std::to_string(cl) + ".", c);
    }
    add(l.out_w, "head.w_out", c.d_model, c.K);
    return l;
}

/// Lazily created parameter leaf.
ad::Var pnode(ad::Tape& tape, const DenoiserParams& params, std::vector<ad::Var>& nodes, int idx) {
    auto& slot = nodes[static_cast<size_t>(idx)];
    if (!slot.valid()) slot = tape.leaf(params.value(idx));
    return slot;
}

void validate_state(const ComplexState& state, const DenoiserConfig& c) {
    if (state.target_onehot.cols() != c.K || state.binder_onehot.cols() != c.K) {
        throw ContractError("denoiser: state alphabet width does not match config K");
    }
    if (state.target_coords.rows() != state.target_onehot.rows() ||
        state.binder_coords.rows() != state.binder_onehot.rows() ||
        state.target_coords.cols() != 3 || state.binder_coords.cols() != 3) {
        throw ContractError("denoiser: coordinate/sequence shape mismatch");
    }
    if (state.binder_len() < 1) throw ContractError("denoiser: empty binder");
    if (state.target_len() > c.max_len || state.binder_len() > c.max_len) {
        throw ContractError("denoiser: chain longer than config max_len");
    }
    if (c.k_nn >= state.target_len() + state.binder_len()) {
        throw ContractError("denoiser: k_nn must be < number of residues");
    }
    if (state.t < 1 || state.t > c.T) throw ContractError("denoiser: t out of [1,T]");
}

}  // namespace

void DenoiserConfig::validate() const {
    if (d_model < 2 || d_model % 2 != 0) throw ConfigError("d_model must be even and >= 2");
    if (n_heads < 1 || d_model % n_heads != 0) {
        throw ConfigError("d_model must be divisible by n_heads");
    }
    if (n_blocks < 1 || n_attn_per_block < 1) throw ConfigError("need at least one block and one attention layer");
    if (n_causal < 0) throw ConfigError("n_causal must be >= 0");
    if (k_nn < 1) throw ConfigError("k_nn must be >= 1");
    if (T < 1) throw ConfigError("T must be >= 1");
    if (K < 2) throw ConfigError("K must be >= 2");
    if (max_len < 1) throw ConfigError("max_len must be >= 1");
    if (ff_mult < 1) throw ConfigError("ff_mult must be >= 1");
}

std::vector<NamedTensor> DenoiserParams::zero_tensors(const DenoiserConfig& config) {
    std::vector<NamedTensor> out;
    build_layout(config, out);
    return out;
}

DenoiserParams DenoiserParams::init(const DenoiserConfig& config, Rng rng) {
    config.validate();
    DenoiserParams p;
    p.config_ = config;
    p.layout_ = build_layout(config, p.tensors_);
    for (auto& t : p.tensors_) {
        const bool is_gain = t.name.ends_with("ln1.g") || t.name.ends_with("ln2.g");
        const bool is_bias = t.name.ends_with(".b") || t.name.ends_with("b1") ||
                             t.name.ends_with("b2") || t.name.ends_with("ln1.b") ||
                             t.name.ends_with("ln2.b");
        if (is_gain) {
            t.value.setOnes();
            continue;
        }
        if (is_bias) continue;  // stays zero
        const bool is_table = t.name == "embed.residue_table" || t.name == "embed.pos_table";
        const double fan_in = is_table ? 4.0 : static_cast<double>(t.value.rows());
        const double std = 1.0 / std::sqrt(fan_in);
        for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
            for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
                t.value(i, j) = rng.normal() * std;
            }
        }
    }
    return p;
}

DenoiserParams DenoiserParams::from_tensors(const DenoiserConfig& config,
                                            std::vector<NamedTensor> tensors) {
    config.validate();
    DenoiserParams p;
    p.config_ = config;
    std::vector<NamedTensor> expected;
    p.layout_ = build_layout(config, expected);
    if (tensors.size() != expected.size()) {
        throw ConfigError("parameter count mismatch: got " + std::to_string(tensors.size()) +
                          ", config expects " + std::to_string(expected.size()));
    }
    for (size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].name != expected[i].name ||
            tensors[i].value.rows() != expected[i].value.rows() ||
            tensors[i].value.cols() != expected[i].value.cols()) {
            throw ConfigError("parameter tensor mismatch at '" + tensors[i].name + "'");
        }
    }
    p.tensors_ = std::move(tensors);
    return p;
}

namespace detail {

Eigen::RowVectorXd timestep_features(int t, int d) {
    Eigen::RowVectorXd v(d);
    const int half = d / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * (2.0 * i / d));
        v(2 * i) = std::sin(t * freq);
        v(2 * i + 1) = std::cos(t * freq);
    }
    return v;
}

std::vector<int> knn_indices(const Eigen::MatrixXd& coords, int k) {
    const int n = static_cast<int>(coords.rows());
    if (k >= n) throw ContractError("knn_indices: k must be < point count");
    std::vector<int> flat;
    flat.reserve(static_cast<size_t>(n) * static_cast<size_t>(k));
    std::vector<std::pair<double, int>> cand(static_cast<size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        size_t w = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand[w++] = {(coords.row(i) - coords.row(j)).squaredNorm(), j};
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int j = 0; j < k; ++j) flat.push_back(cand[static_cast<size_t>(j)].second);
    }
    return flat;
}

ad::Var run_attention_layer(ad::Tape& tape, ad::Var hidden, const DenoiserParams& params,
                            const AttnLayerIdx& idx, std::vector<ad::Var>& param_nodes,
                            bool causal, AttentionDebug* debug) {
    const DenoiserConfig& c = params.config();
    const int n = static_cast<int>(tape.value(hidden).rows());
    const int hd = c.head_dim();
    auto P = [&](int i) { return pnode(tape, params, param_nodes, i); };

    ad::Var ln1 = tape.layer_norm_rows(hidden, P(idx.ln1_g), P(idx.ln1_b));
    ad::Var q = tape.matmul(ln1, P(idx.wq));
    ad::Var k = tape.matmul(ln1, P(idx.wk));
    ad::Var v = tape.matmul(ln1, P(idx.wv));

    Eigen::MatrixXd keep;
    if (causal) {
        keep = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j <= i; ++j) keep(i, j) = 1.0;
        }
    }

    std::vector<ad::Var> heads;
    heads.reserve(static_cast<size_t>(c.n_heads));
    for (int h = 0; h < c.n_heads; ++h) {
        ad::Var qh = tape.slice_cols(q, h * hd, hd);
        ad::Var kh = tape.slice_cols(k, h * hd, hd);
        ad::Var vh = tape.slice_cols(v, h * hd, hd);
        ad::Var scores = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(hd)));
        ad::Var att = causal ? tape.masked_softmax_rows(scores, keep) : tape.softmax_rows(scores);
        if (debug != nullptr) debug->head_attn.push_back(tape.value(att));
        heads.push_back(tape.matmul(att, vh));
    }
    ad::Var o = tape.matmul(tape.concat_cols(heads), P(idx.wo));
    ad::Var x = tape.add(hidden, o);

    ad::Var ln2 = tape.layer_norm_rows(x, P(idx.ln2_g), P(idx.ln2_b));
    ad::Var f1 = tape.silu(tape.add_row_broadcast(tape.matmul(ln2, P(idx.ff_w1)), P(idx.ff_b1)));
    ad::Var f2 = tape.add_row_broadcast(tape.matmul(f1, P(idx.ff_w2)), P(idx.ff_b2));
    return tape.add(x, f2);
}

std::pair<ad::Var, ad::Var> run_graph_layer(ad::Tape& tape, ad::Var hidden, ad::Var coords,
                                            const DenoiserParams& params, const GraphLayerIdx& idx,
                                            std::vector<ad::Var>& param_nodes, int binder_start,
                                            int k_nn) {
    const DenoiserConfig& c = params.config();
    const int n = static_cast<int>(tape.value(hidden).rows());
    auto P = [&](int i) { return pnode(tape, params, param_nodes, i); };

    // Neighbor sets come from the current coordinate values; the selection is
    // a discrete choice and is not differentiated through.
    std::vector<int> nbr = knn_indices(tape.value(coords), k_nn);
    std::vector<int> self(nbr.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k_nn; ++j) self[static_cast<size_t>(i * k_nn + j)] = i;
    }

    ad::Var hi = tape.gather_rows(hidden, self);
    ad::Var hk = tape.gather_rows(hidden, nbr);
    ad::Var xi = tape.gather_rows(coords, self);
    ad::Var xk = tape.gather_rows(coords, nbr);
    ad::Var diff = tape.sub(xi, xk);
    ad::Var dist = tape.row_norm(diff, kDistEps);

    ad::Var edge_in = tape.concat_cols({hi, hk, dist});
    ad::Var m1 = tape.silu(tape.add_row_broadcast(tape.matmul(edge_in, P(idx.fm_w1)), P(idx.fm_b1)));
    ad::Var m2 = tape.add_row_broadcast(tape.matmul(m1, P(idx.fm_w2)), P(idx.fm_b2));
    ad::Var msg = tape.slice_cols(m2, 0, c.d_model);
    ad::Var logit = tape.slice_cols(m2, c.d_model, 1);
    ad::Var w = tape.softmax_col_groups(logit, k_nn);
    ad::Var wmsg = tape.mul_col_broadcast(msg, w);

    ad::Var agg = tape.group_sum_rows(wmsg, k_nn);
    ad::Var gate = tape.sigmoid(tape.add_row_broadcast(tape.matmul(agg, P(idx.fw_w)), P(idx.fw_b)));
    ad::Var h_out = tape.add(hidden, tape.hadamard(gate, agg));

    ad::Var fx1 = tape.silu(tape.add_row_broadcast(tape.matmul(wmsg, P(idx.fx_w1)), P(idx.fx_b1)));
    ad::Var fxs = tape.add_row_broadcast(tape.matmul(fx1, P(idx.fx_w2)), P(idx.fx_b2));
    ad::Var contrib = tape.mul_col_broadcast(diff, fxs);
    ad::Var delta = tape.clip_row_norm(tape.group_sum_rows(contrib, k_nn), kCoordClip);

    // Coordinate updates apply to binder positions only; the target stays frozen.
    const int n_binder = n - binder_start;
    ad::Var delta_binder = tape.slice_rows(delta, binder_start, n_binder);
    ad::Var binder_new = tape.add(tape.slice_rows(coords, binder_start, n_binder), delta_binder);
    ad::Var coords_out = binder_start > 0
                             ? tape.concat_rows({tape.slice_rows(coords, 0, binder_start), binder_new})
                             : binder_new;
    return {h_out, coords_out};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> embed_inputs_values(const ComplexState& state,
                                                                const DenoiserParams& params) {
    const DenoiserConfig& c = params.config();
    const int m = state.target_len();
    const int n = state.binder_len();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(m + n, c.K + 1);
    aug.block(0, 0, m, c.K) = state.target_onehot;
    aug.block(m, 0, n, c.K) = state.binder_onehot;
    aug.block(m, c.K, n, 1).setOnes();
    Eigen::MatrixXd hidden = aug * params.value(params.layout().residue_table);
    for (int i = 0; i < m; ++i) hidden.row(i) += params.value(params.layout().pos_table).row(i);
    for (int i = 0; i < n; ++i) hidden.row(m + i) += params.value(params.layout().pos_table).row(i);
    Eigen::RowVectorXd tf = timestep_features(state.t, c.d_model);
    Eigen::RowVectorXd t1 =
        (tf * params.value(params.layout().time_w1) + params.value(params.layout().time_b1))
            .unaryExpr([](double x) { return x / (1.0 + std::exp(-x)); });
    Eigen::RowVectorXd t2 =
        t1 * params.value(params.layout().time_w2) + params.value(params.layout().time_b2);
    hidden.rowwise() += t2;
    Eigen::MatrixXd coords(m + n, 3);
    coords.topRows(m) = state.target_coords;
    coords.bottomRows(n) = state.binder_coords;
    return {std::move(hidden), std::move(coords)};
}

}  // namespace detail

DenoiserOutput predict_clean(const ComplexState& state, const DenoiserParams& params,
                             bool build_tape) {
    const DenoiserConfig& c = params.config();
    validate_state(state, c);
    validate_simplex_rows(state.target_onehot);
    validate_simplex_rows(state.binder_onehot);

    const int m = state.target_len();
    const int n = state.binder_len();

    DenoiserOutput out;
    out.tape = std::make_shared<ad::Tape>();
    ad::Tape& tape = *out.tape;
    out.param_nodes.assign(params.tensors().size(), ad::Var{});
    auto P = [&](int i) { return pnode(tape, params, out.param_nodes, i); };
    const ParamLayout& L = params.layout();

    // Embedding: residue type + chain-role flag channel, per-chain position
    // row, and a timestep vector broadcast to every position.
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(m + n, c.K + 1);
    aug.block(0, 0, m, c.K) = state.target_onehot;
    aug.block(m, 0, n, c.K) = state.binder_onehot;
    aug.block(m, c.K, n, 1).setOnes();
    ad::Var aug_node = tape.leaf(std::move(aug));
    ad::Var hidden = tape.matmul(aug_node, P(L.residue_table));

    std::vector<int> pos_idx(static_cast<size_t>(m + n));
    for (int i = 0; i < m; ++i) pos_idx[static_cast<size_t>(i)] = i;
    for (int i = 0; i < n; ++i) pos_idx[static_cast<size_t>(m + i)] = i;
    hidden = tape.add(hidden, tape.gather_rows(P(L.pos_table), std::move(pos_idx)));

    ad::Var tf = tape.leaf(detail::timestep_features(state.t, c.d_model));
    ad::Var t1 = tape.silu(tape.add_row_broadcast(tape.matmul(tf, P(L.time_w1)), P(L.time_b1)));
    ad::Var t2 = tape.add_row_broadcast(tape.matmul(t1, P(L.time_w2)), P(L.time_b2));
    hidden = tape.add_row_broadcast(hidden, t2);

    out.target_coords_node = tape.leaf(state.target_coords);
    out.binder_coords_node = tape.leaf(state.binder_coords);
    ad::Var coords = m > 0 ? tape.concat_rows({out.target_coords_node, out.binder_coords_node})
                           : out.binder_coords_node;

    for (int b = 0; b < c.n_blocks; ++b) {
        for (int a = 0; a < c.n_attn_per_block; ++a) {
            hidden = detail::run_attention_layer(tape, hidden, params,
                                                 L.block_attn[static_cast<size_t>(b)][static_cast<size_t>(a)],
                                                 out.param_nodes, /*causal=*/false);
        }
        auto [h2, x2] = detail::run_graph_layer(tape, hidden, coords, params,
                                                L.block_graph[static_cast<size_t>(b)],
                                                out.param_nodes, m, c.k_nn);
        hidden = h2;
        coords = x2;
        if (!tape.value(hidden).allFinite() || !tape.value(coords).allFinite()) {
            throw NumericError("denoiser: non-finite activation after block " + std::to_string(b));
        }
    }

    ad::Var hb = tape.slice_rows(hidden, m, n);
    for (int cl = 0; cl < c.n_causal; ++cl) {
        hb = detail::run_attention_layer(tape, hb, params, L.causal[static_cast<size_t>(cl)],
                                         out.param_nodes, /*causal=*/true);
    }
    ad::Var logits = tape.matmul(hb, P(L.out_w));
    out.s0_node = tape.softmax_rows(logits);
    out.x0_node = tape.slice_rows(coords, m, n);

    out.s0_hat = tape.value(out.s0_node);
    out.x0_hat = tape.value(out.x0_node);
    if (!out.s0_hat.allFinite() || !out.x0_hat.allFinite()) {
        throw NumericError("denoiser: non-finite activation at output head");
    }
    if (!build_tape) {
        out.tape.reset();
        out.param_nodes.clear();
    }
    return out;
}

DenoiserGrads denoiser_backward(const DenoiserOutput& out, const DenoiserParams& params,
                                const Eigen::MatrixXd& d_s0_hat,
                                const Eigen::MatrixXd& d_x0_hat) {
    if (!out.tape) throw ContractError("denoiser_backward: forward cache missing");
    ad::Tape& tape = *out.tape;
    tape.accumulate_grad(out.s0_node, d_s0_hat);
    tape.accumulate_grad(out.x0_node, d_x0_hat);
    tape.backward();

    DenoiserGrads g;
    g.param_grads.resize(params.tensors().size());
    for (size_t i = 0; i < params.tensors().size(); ++i) {
        const ad::Var node = out.param_nodes[i];
        if (node.valid()) {
            g.param_grads[i] = tape.grad(node);
        } else {
            const auto& v = params.tensors()[i].value;
            g.param_grads[i] = Eigen::MatrixXd::Zero(v.rows(), v.cols());
        }
    }
    g.d_target_coords = tape.grad(out.target_coords_node);
    g.d_binder_coords = tape.grad(out.binder_coords_node);
    return g;
}

}  // namespace ppdesign
