#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "ppdesign/autodiff.hpp"
#include "ppdesign/rng.hpp"

namespace ppdesign {

/// Network dimensions. Shapes of every parameter tensor are determined
/// solely by this struct.
struct DenoiserConfig {
    int d_model = 32;
    int n_blocks = 2;          // interleaved blocks, each L_attn attention + 1 graph layer
    int n_attn_per_block = 2;  // self-attention layers per block
    int n_causal = 1;          // causal attention layers on the binder slice
    int n_heads = 4;
    int k_nn = 8;              // graph neighbors
    int T = 100;               // diffusion steps (timestep embedding range)
    int K = 20;                // alphabet size
    int max_len = 256;         // positional table rows (per chain)
    int ff_mult = 4;           // feed-forward width multiplier

    int ff_dim() const { return d_model * ff_mult; }
    int head_dim() const { return d_model / n_heads; }
    void validate() const;
};

struct NamedTensor {
    std::string name;
    Eigen::MatrixXd value;
};

/// Index of one attention layer's tensors inside the flat parameter list.
struct AttnLayerIdx {
    int ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, ff_w1, ff_b1, ff_w2, ff_b2;
};

/// Index of one graph layer's tensors.
struct GraphLayerIdx {
    int fm_w1, fm_b1, fm_w2, fm_b2, fw_w, fw_b, fx_w1, fx_b1, fx_w2, fx_b2;
};

struct ParamLayout {
    int residue_table;  // (K+1) x d: K residue rows + one chain-role flag row
    int pos_table;      // max_len x d, per-chain position
    int time_w1, time_b1, time_w2, time_b2;
    std::vector<std::vector<AttnLayerIdx>> block_attn;  // [n_blocks][n_attn_per_block]
    std::vector<GraphLayerIdx> block_graph;             // [n_blocks]
    std::vector<AttnLayerIdx> causal;                   // [n_causal]
    int out_w;  // d x K softmax head
};

/// All learnable weights, in a fixed, named order (the checkpoint order).
class DenoiserParams {
public:
    DenoiserParams() = default;

    /// Fan-in scaled random initialization, deterministic in the seed.
    static DenoiserParams init(const DenoiserConfig& config, Rng rng);
    /// Builds the layout and takes tensors as-is (checkpoint load path).
    static DenoiserParams from_tensors(const DenoiserConfig& config,
                                       std::vector<NamedTensor> tensors);

    const std::vector<NamedTensor>& tensors() const { return tensors_; }
    std::vector<NamedTensor>& tensors() { return tensors_; }
    const ParamLayout& layout() const { return layout_; }
    const DenoiserConfig& config() const { return config_; }

    const Eigen::MatrixXd& value(int idx) const { return tensors_[static_cast<size_t>(idx)].value; }
    Eigen::MatrixXd& value(int idx) { return tensors_[static_cast<size_t>(idx)].value; }

    /// Expected (name, rows, cols) list for a config, in checkpoint order.
    static std::vector<NamedTensor> zero_tensors(const DenoiserConfig& config);

private:
    DenoiserConfig config_;
    ParamLayout layout_;
    std::vector<NamedTensor> tensors_;
};

/// Joint state fed to the network: a fixed target chain plus a noisy binder
/// chain at diffusion step t. Coordinates are in normalized units.
struct ComplexState {
    Eigen::MatrixXd target_onehot;  // M x K
    Eigen::MatrixXd target_coords;  // M x 3
    Eigen::MatrixXd binder_onehot;  // N x K, realized one-hot rows (s_t)
    Eigen::MatrixXd binder_coords;  // N x 3 (x_t)
    int t = 1;

    int target_len() const { return static_cast<int>(target_onehot.rows()); }
    int binder_len() const { return static_cast<int>(binder_onehot.rows()); }
};

/// Forward outputs plus the cache needed for an exact backward pass.
struct DenoiserOutput {
    Eigen::MatrixXd s0_hat;  // N x K, rows on the simplex
    Eigen::MatrixXd x0_hat;  // N x 3

    std::shared_ptr<ad::Tape> tape;  // null when the cache was not requested
    ad::Var s0_node, x0_node;
    std::vector<ad::Var> param_nodes;  // parallel to params.tensors()
    ad::Var target_coords_node, binder_coords_node;
};

struct DenoiserGrads {
    std::vector<Eigen::MatrixXd> param_grads;  // parallel to params.tensors()
    Eigen::MatrixXd d_target_coords;
    Eigen::MatrixXd d_binder_coords;
};

/// Full forward pass: embed -> interleaved (attention x L_attn + graph) blocks
/// -> causal stack -> softmax head. x0_hat is the binder slice of the last
/// graph layer's coordinates. Set build_tape=false for inference-only calls.
DenoiserOutput predict_clean(const ComplexState& state, const DenoiserParams& params,
                             bool build_tape = true);

/// Exact reverse-mode gradients of the cached forward pass, seeded with
/// upstream gradients for s0_hat and x0_hat.
DenoiserGrads denoiser_backward(const DenoiserOutput& out, const DenoiserParams& params,
                                const Eigen::MatrixXd& d_s0_hat,
                                const Eigen::MatrixXd& d_x0_hat);

namespace detail {

/// Embedding values (no tape): hidden (M+N) x d and coords (M+N) x 3,
/// target rows first.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> embed_inputs_values(const ComplexState& state,
                                                                const DenoiserParams& params);

/// Test hooks driving single layers on a caller-owned tape.
struct AttentionDebug {
    std::vector<Eigen::MatrixXd> head_attn;  // one (rows x rows) matrix per head
};
ad::Var run_attention_layer(ad::Tape& tape, ad::Var hidden, const DenoiserParams& params,
                            const AttnLayerIdx& idx, std::vector<ad::Var>& param_nodes,
                            bool causal, AttentionDebug* debug = nullptr);
std::pair<ad::Var, ad::Var> run_graph_layer(ad::Tape& tape, ad::Var hidden, ad::Var coords,
                                            const DenoiserParams& params, const GraphLayerIdx& idx,
                                            std::vector<ad::Var>& param_nodes, int binder_start,
                                            int k_nn);

/// Brute-force k-nearest-neighbor lists (excluding self), ties broken by index.
std::vector<int> knn_indices(const Eigen::MatrixXd& coords, int k);

/// Sinusoidal timestep feature vector (1 x d) for step t.
Eigen::RowVectorXd timestep_features(int t, int d);

}  // namespace detail

}  // namespace ppdesign
