#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ppdesign/errors.hpp"

namespace ppdesign::ad {

using Mat = Eigen::MatrixXd;

/// Handle to one node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Minimal reverse-mode tape over dense double matrices. Operations record a
/// closure that scatters the output gradient back to the inputs; backward()
/// walks the tape in reverse. Single-threaded; one tape per forward pass.
class Tape {
public:
    Var leaf(Mat value);

    const Mat& value(Var v) const { return node(v).value; }
    const Mat& grad(Var v) const { return node(v).grad; }
    /// Adds into a node's gradient accumulator (used to seed outputs).
    void accumulate_grad(Var v, const Mat& g);

    /// Propagates all seeded gradients back to the leaves.
    void backward();

    // ---- arithmetic ----
    Var matmul(Var a, Var b);            // A B
    Var matmul_nt(Var a, Var b);         // A B^T
    Var add(Var a, Var b);               // same shape
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double c);
    Var add_row_broadcast(Var a, Var row);  // row: 1 x d added to every row of a
    Var mul_row_broadcast(Var a, Var row);  // row: 1 x d multiplied into every row
    Var mul_col_broadcast(Var a, Var col);  // col: n x 1 scales row i of a by col(i)

    // ---- nonlinearities ----
    Var sigmoid(Var a);
    Var silu(Var a);                       // x * sigmoid(x)
    Var softmax_rows(Var a);
    /// Row softmax over entries where keep(i,j) == 1; masked entries are
    /// exactly zero in the output and never touched by the arithmetic, so
    /// outputs at kept positions are bit-independent of masked inputs.
    Var masked_softmax_rows(Var a, const Eigen::MatrixXd& keep);
    /// Softmax within consecutive groups of `group` rows of a column vector.
    Var softmax_col_groups(Var a, int group);
    /// Row-wise layer norm with learnable gain/bias (1 x d each), eps 1e-5.
    Var layer_norm_rows(Var a, Var gain, Var bias);

    // ---- shape ----
    Var concat_cols(const std::vector<Var>& parts);
    Var concat_rows(const std::vector<Var>& parts);
    Var slice_cols(Var a, int c0, int width);
    Var slice_rows(Var a, int r0, int height);
    Var gather_rows(Var a, std::vector<int> index);  // backward scatter-adds
    Var group_sum_rows(Var a, int group);            // (G*group) x d -> G x d

    // ---- geometry ----
    /// Row L2 norms plus eps: (n x d) -> (n x 1).
    Var row_norm(Var a, double eps);
    /// Rescales any row with norm > max_norm down to max_norm.
    Var clip_row_norm(Var a, double max_norm);

    int size() const { return static_cast<int>(nodes_.size()); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    Node& node(Var v) {
        if (!v.valid() || v.id >= size()) throw ContractError("autodiff: invalid Var");
        return nodes_[static_cast<size_t>(v.id)];
    }
    const Node& node(Var v) const {
        if (!v.valid() || v.id >= size()) throw ContractError("autodiff: invalid Var");
        return nodes_[static_cast<size_t>(v.id)];
    }
    Var push(Mat value, std::function<void(Tape&)> back);

    std::vector<Node> nodes_;
};

}  // namespace ppdesign::ad
