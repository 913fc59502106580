#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <string>

#include "ppdesign/denoiser.hpp"
#include "ppdesign/rng.hpp"

namespace ppdesign::test {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                     double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal() * scale;
    }
    return m;
}

inline Eigen::MatrixXd random_one_hot(int n, int K, Rng& rng) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, K);
    for (int i = 0; i < n; ++i) {
        m(i, static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(K))) = 1.0;
    }
    return m;
}

inline Eigen::VectorXd random_simplex(int K, Rng& rng) {
    Eigen::VectorXd v(K);
    for (int i = 0; i < K; ++i) v[i] = rng.uniform() + 1e-6;
    return v / v.sum();
}

inline DenoiserConfig tiny_config() {
    DenoiserConfig c;
    c.d_model = 8;
    c.n_blocks = 1;
    c.n_attn_per_block = 1;
    c.n_causal = 1;
    c.n_heads = 2;
    c.k_nn = 3;
    c.T = 10;
    c.max_len = 16;
    c.ff_mult = 2;
    return c;
}

inline ComplexState random_state(const DenoiserConfig& c, int target_len, int binder_len,
                                 Rng& rng) {
    ComplexState s;
    s.target_onehot = random_one_hot(target_len, c.K, rng);
    s.target_coords = random_matrix(target_len, 3, rng);
    s.binder_onehot = random_one_hot(binder_len, c.K, rng);
    s.binder_coords = random_matrix(binder_len, 3, rng);
    s.t = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(c.T));
    return s;
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
    Eigen::Matrix3d g;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
    Eigen::Matrix3d q = qr.householderQ();
    if (q.determinant() < 0.0) q.col(0) = -q.col(0);
    return q;
}

/// One fixed-column ATOM line for crafted structure fixtures.
inline std::string atom_line(int serial, const std::string& name, char altloc,
                             const std::string& res3, const std::string& chain, int res_seq,
                             double x, double y, double z, double occ = 1.0,
                             const std::string& element = "") {
    char buf[96];
    char name_field[5];
    if (name.size() >= 4) {
        std::snprintf(name_field, sizeof(name_field), "%.4s", name.c_str());
    } else {
        std::snprintf(name_field, sizeof(name_field), " %-3s", name.c_str());
    }
    std::snprintf(buf, sizeof(buf),
                  "ATOM  %5d %s%c%-3s %s%4d    %8.3f%8.3f%8.3f%6.2f%6.2f          %2s", serial,
                  name_field, altloc, res3.c_str(), chain.c_str(), res_seq, x, y, z, occ, 0.0,
                  element.c_str());
    return buf;
}

inline std::string remark2_line(double resolution) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "REMARK   2 RESOLUTION.    %.2f ANGSTROMS.", resolution);
    return buf;
}

}  // namespace ppdesign::test
