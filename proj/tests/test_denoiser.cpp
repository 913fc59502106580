#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ppdesign/denoiser.hpp"
#include "ppdesign/selfcheck.hpp"

using namespace ppdesign;
using test::random_matrix;
using test::random_one_hot;
using test::random_rotation;
using test::random_state;
using test::tiny_config;

TEST_CASE("embed_inputs: timestep channel, zero tables, binder permutation") {
    DenoiserConfig cfg = tiny_config();
    Rng rng(41);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    Rng srng = rng.substream(2);
    ComplexState state = random_state(cfg, 3, 4, srng);
    state.t = 2;

    auto [h_a, x_a] = detail::embed_inputs_values(state, params);
    ComplexState other = state;
    other.t = 7;
    auto [h_b, x_b] = detail::embed_inputs_values(other, params);
    CHECK((h_a - h_b).cwiseAbs().maxCoeff() > 0.0);
    CHECK((x_a - x_b).cwiseAbs().maxCoeff() == 0.0);

    // Zeroed embedding tables: every row is exactly the timestep vector.
    DenoiserParams zeroed = params;
    zeroed.value(zeroed.layout().residue_table).setZero();
    zeroed.value(zeroed.layout().pos_table).setZero();
    auto [h_z, x_z] = detail::embed_inputs_values(state, zeroed);
    for (int i = 1; i < h_z.rows(); ++i) {
        CHECK((h_z.row(i) - h_z.row(0)).cwiseAbs().maxCoeff() == 0.0);
    }

    // Permuting binder residues permutes binder rows of both outputs.
    ComplexState perm = state;
    std::vector<int> p = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i) {
        perm.binder_onehot.row(i) = state.binder_onehot.row(p[static_cast<size_t>(i)]);
        perm.binder_coords.row(i) = state.binder_coords.row(p[static_cast<size_t>(i)]);
    }
    // Positional rows must not move with the residue, so compare against a
    // params copy whose positional table is zero for binder rows.
    DenoiserParams flat = params;
    flat.value(flat.layout().pos_table).setZero();
    auto [h_s, x_s] = detail::embed_inputs_values(state, flat);
    auto [h_p, x_p] = detail::embed_inputs_values(perm, flat);
    for (int i = 0; i < 4; ++i) {
        CHECK((h_p.row(3 + i) - h_s.row(3 + p[static_cast<size_t>(i)])).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((x_p.row(3 + i) - x_s.row(3 + p[static_cast<size_t>(i)])).cwiseAbs().maxCoeff() ==
              0.0);
    }
}

TEST_CASE("self-attention: single position, duplicated rows, row sums") {
    DenoiserConfig cfg = tiny_config();
    Rng rng(43);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    const AttnLayerIdx& idx = params.layout().block_attn[0][0];

    {  // single position: attention is a no-op average over itself
        ad::Tape tape;
        std::vector<ad::Var> nodes(params.tensors().size());
        Eigen::MatrixXd h = random_matrix(1, cfg.d_model, rng);
        detail::AttentionDebug dbg;
        ad::Var out = detail::run_attention_layer(tape, tape.leaf(h), params, idx, nodes, false,
                                                  &dbg);
        CHECK(tape.value(out).rows() == 1);
        for (const auto& att : dbg.head_attn) {
            CHECK(att.rows() == 1);
            CHECK(att(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    {  // duplicated identical rows give identical outputs
        ad::Tape tape;
        std::vector<ad::Var> nodes(params.tensors().size());
        Eigen::MatrixXd row = random_matrix(1, cfg.d_model, rng);
        Eigen::MatrixXd h(3, cfg.d_model);
        h << row, row, row;
        ad::Var out = detail::run_attention_layer(tape, tape.leaf(h), params, idx, nodes, false);
        const Eigen::MatrixXd& o = tape.value(out);
        CHECK((o.row(0) - o.row(1)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((o.row(1) - o.row(2)).cwiseAbs().maxCoeff() < 1e-12);
    }

    {  // attention rows sum to one
        ad::Tape tape;
        std::vector<ad::Var> nodes(params.tensors().size());
        Eigen::MatrixXd h = random_matrix(6, cfg.d_model, rng);
        detail::AttentionDebug dbg;
        detail::run_attention_layer(tape, tape.leaf(h), params, idx, nodes, false, &dbg);
        for (const auto& att : dbg.head_attn) {
            for (int i = 0; i < att.rows(); ++i) {
                CHECK(att.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("graph layer: equivariance, zero f_x freezes coords, two-node symmetry") {
    DenoiserConfig cfg = tiny_config();
    Rng rng(47);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    const GraphLayerIdx& idx = params.layout().block_graph[0];

    auto run = [&](const DenoiserParams& p, const Eigen::MatrixXd& h, const Eigen::MatrixXd& x,
                   int binder_start, int k) {
        ad::Tape tape;
        std::vector<ad::Var> nodes(p.tensors().size());
        auto [ho, xo] =
            detail::run_graph_layer(tape, tape.leaf(h), tape.leaf(x), p, idx, nodes, binder_start, k);
        return std::make_pair(tape.value(ho), tape.value(xo));
    };

    Rng drng = rng.substream(2);
    Eigen::MatrixXd h = random_matrix(7, cfg.d_model, drng);
    Eigen::MatrixXd x = random_matrix(7, 3, drng);

    {  // rigid motion: coords covariant (binder slice), hidden invariant
        Eigen::Matrix3d rot = random_rotation(drng);
        Eigen::RowVector3d shift(1.5, -2.0, 0.75);
        auto [h0, x0] = run(params, h, x, 2, 3);
        auto [h1, x1] = run(params, h, (x * rot.transpose()).rowwise() + shift, 2, 3);
        CHECK((h1 - h0).cwiseAbs().maxCoeff() < 1e-9);
        Eigen::MatrixXd expect = (x0 * rot.transpose()).rowwise() + shift;
        CHECK((x1 - expect).cwiseAbs().maxCoeff() < 1e-9);
    }

    {  // f_x == 0 leaves coordinates untouched
        DenoiserParams frozen = params;
        frozen.value(idx.fx_w1).setZero();
        frozen.value(idx.fx_b1).setZero();
        frozen.value(idx.fx_w2).setZero();
        frozen.value(idx.fx_b2).setZero();
        auto [ho, xo] = run(frozen, h, x, 0, 3);
        CHECK((xo - x).cwiseAbs().maxCoeff() == 0.0);
    }

    {  // two identical nodes: coordinate updates are equal and opposite
        Eigen::MatrixXd h2(2, cfg.d_model);
        Eigen::MatrixXd row = random_matrix(1, cfg.d_model, drng);
        h2 << row, row;
        Eigen::MatrixXd x2(2, 3);
        x2 << 0.0, 0.0, 0.0, 1.0, 0.0, 0.0;
        auto [ho, xo] = run(params, h2, x2, 0, 1);
        Eigen::RowVector3d d0 = xo.row(0) - x2.row(0);
        Eigen::RowVector3d d1 = xo.row(1) - x2.row(1);
        CHECK((d0 + d1).cwiseAbs().maxCoeff() < 1e-12);
        // Updates lie along the connecting axis.
        CHECK(std::abs(d0[1]) < 1e-15);
        CHECK(std::abs(d0[2]) < 1e-15);
    }
}

TEST_CASE("graph layer neighbor sets match a brute-force distance scan") {
    Rng rng(51);
    for (int rep = 0; rep < 10; ++rep) {
        int n = 5 + static_cast<int>(rng.next_u64() % 20);
        int k = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - 1));
        Eigen::MatrixXd coords = random_matrix(n, 3, rng);
        std::vector<int> got = detail::knn_indices(coords, k);
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<double, int>> all;
            for (int j = 0; j < n; ++j) {
                if (j != i) all.push_back({(coords.row(i) - coords.row(j)).squaredNorm(), j});
            }
            std::sort(all.begin(), all.end());
            for (int c = 0; c < k; ++c) {
                CHECK(got[static_cast<size_t>(i * k + c)] == all[static_cast<size_t>(c)].second);
            }
        }
    }
}

TEST_CASE("causal attention: mask contract is bit-exact, single position attends to itself") {
    DenoiserConfig cfg = tiny_config();
    CHECK(causality_check(cfg, 53));

    Rng rng(54);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    ad::Tape tape;
    std::vector<ad::Var> nodes(params.tensors().size());
    Eigen::MatrixXd h = random_matrix(1, cfg.d_model, rng);
    detail::AttentionDebug dbg;
    detail::run_attention_layer(tape, tape.leaf(h), params, params.layout().causal[0], nodes, true,
                                &dbg);
    for (const auto& att : dbg.head_attn) CHECK(att(0, 0) == doctest::Approx(1.0));

    {  // lower-triangular attention mass sums to one per row
        ad::Tape t2;
        std::vector<ad::Var> nodes2(params.tensors().size());
        Eigen::MatrixXd h6 = random_matrix(6, cfg.d_model, rng);
        detail::AttentionDebug dbg2;
        detail::run_attention_layer(t2, t2.leaf(h6), params, params.layout().causal[0], nodes2,
                                    true, &dbg2);
        for (const auto& att : dbg2.head_attn) {
            for (int i = 0; i < 6; ++i) {
                double sum = 0.0;
                for (int j = 0; j <= i; ++j) sum += att(i, j);
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
                for (int j = i + 1; j < 6; ++j) CHECK(att(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("predict_clean: simplex rows, determinism, equivariance, target immutability") {
    DenoiserConfig cfg = tiny_config();
    Rng rng(57);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    Rng srng = rng.substream(2);
    ComplexState state = random_state(cfg, 4, 5, srng);

    Eigen::MatrixXd target_onehot_before = state.target_onehot;
    Eigen::MatrixXd target_coords_before = state.target_coords;

    DenoiserOutput a = predict_clean(state, params, false);
    DenoiserOutput b = predict_clean(state, params, false);
    CHECK((a.s0_hat - b.s0_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.x0_hat - b.x0_hat).cwiseAbs().maxCoeff() == 0.0);

    for (int i = 0; i < a.s0_hat.rows(); ++i) {
        CHECK(a.s0_hat.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(a.s0_hat.row(i).minCoeff() >= 0.0);
    }

    // The input state is untouched.
    CHECK((state.target_onehot - target_onehot_before).cwiseAbs().maxCoeff() == 0.0);
    CHECK((state.target_coords - target_coords_before).cwiseAbs().maxCoeff() == 0.0);

    // Global rotation: x0_hat covariant, s0_hat invariant.
    Eigen::Matrix3d rot = random_rotation(srng);
    ComplexState moved = state;
    moved.target_coords = state.target_coords * rot.transpose();
    moved.binder_coords = state.binder_coords * rot.transpose();
    DenoiserOutput m = predict_clean(moved, params, false);
    CHECK((m.s0_hat - a.s0_hat).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((m.x0_hat - a.x0_hat * rot.transpose()).cwiseAbs().maxCoeff() < 1e-5);

    CHECK_THROWS_AS(
        [&] {
            ComplexState bad = state;
            bad.t = cfg.T + 1;
            predict_clean(bad, params, false);
        }(),
        ContractError);
}

TEST_CASE("backward: zero upstream gives zero gradients; finite differences agree") {
    DenoiserConfig cfg = tiny_config();
    Rng rng(61);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    Rng srng = rng.substream(2);
    ComplexState state = random_state(cfg, 3, 4, srng);

    DenoiserOutput out = predict_clean(state, params, true);
    DenoiserGrads g = denoiser_backward(out, params, Eigen::MatrixXd::Zero(4, cfg.K),
                                        Eigen::MatrixXd::Zero(4, 3));
    for (const auto& gm : g.param_grads) CHECK(gm.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.d_binder_coords.cwiseAbs().maxCoeff() == 0.0);

    DenoiserOutput no_cache = predict_clean(state, params, false);
    CHECK_THROWS_AS(denoiser_backward(no_cache, params, Eigen::MatrixXd::Zero(4, cfg.K),
                                      Eigen::MatrixXd::Zero(4, 3)),
                    ContractError);

    GradCheckResult gc = gradient_check(cfg, 62, 1e-5, 3, 4);
    CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("backward: rotation-invariant losses give rotated input-coordinate gradients") {
    DenoiserConfig cfg = tiny_config();
    Rng rng(67);
    DenoiserParams params = DenoiserParams::init(cfg, rng.substream(1));
    Rng srng = rng.substream(2);
    ComplexState state = random_state(cfg, 3, 4, srng);
    Eigen::MatrixXd probe_s = random_matrix(4, cfg.K, srng);

    // Loss = sum(probe .* s0_hat) is invariant under input rotation, so the
    // gradient w.r.t. rotated inputs must be the rotated gradient.
    DenoiserOutput out = predict_clean(state, params, true);
    DenoiserGrads g = denoiser_backward(out, params, probe_s, Eigen::MatrixXd::Zero(4, 3));

    Eigen::Matrix3d rot = random_rotation(srng);
    ComplexState moved = state;
    moved.target_coords = state.target_coords * rot.transpose();
    moved.binder_coords = state.binder_coords * rot.transpose();
    DenoiserOutput out_r = predict_clean(moved, params, true);
    DenoiserGrads g_r = denoiser_backward(out_r, params, probe_s, Eigen::MatrixXd::Zero(4, 3));

    auto rel = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
    };
    CHECK(rel(g_r.d_binder_coords, g.d_binder_coords * rot.transpose()) < 1e-4);
    CHECK(rel(g_r.d_target_coords, g.d_target_coords * rot.transpose()) < 1e-4);
}

TEST_CASE("config validation and parameter layout") {
    DenoiserConfig bad = tiny_config();
    bad.n_heads = 3;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = tiny_config();
    bad.k_nn = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    DenoiserConfig cfg = tiny_config();
    auto zeros = DenoiserParams::zero_tensors(cfg);
    DenoiserParams params = DenoiserParams::init(cfg, Rng(3));
    REQUIRE(zeros.size() == params.tensors().size());
    for (size_t i = 0; i < zeros.size(); ++i) {
        CHECK(zeros[i].name == params.tensors()[i].name);
        CHECK(zeros[i].value.rows() == params.tensors()[i].value.rows());
        CHECK(zeros[i].value.cols() == params.tensors()[i].value.cols());
    }
    // Shapes are a function of config alone; a mismatched tensor list is refused.
    auto tensors = params.tensors();
    tensors[0].value.resize(2, 2);
    CHECK_THROWS_AS(DenoiserParams::from_tensors(cfg, std::move(tensors)), ConfigError);
}
