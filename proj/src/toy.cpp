#include <cmath>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/curation.hpp"
#include "ppdesign/errors.hpp"

namespace ppdesign {

namespace {

constexpr double kStep = 3.8;        // consecutive CA spacing, angstroms
constexpr double kTurn = 0.35;       // direction jitter per step
constexpr double kMinContact = 6.0;  // closest inter-chain CA distance

Eigen::MatrixXd smooth_curve(int n, Rng& rng) {
    Eigen::Vector3d dir;
    do {
        dir = {rng.normal(), rng.normal(), rng.normal()};
    } while (dir.norm() < 1e-6);
    dir.normalize();
    Eigen::MatrixXd coords(n, 3);
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    coords.row(0) = pos.transpose();
    for (int i = 1; i < n; ++i) {
        Eigen::Vector3d jitter{rng.normal(), rng.normal(), rng.normal()};
        dir = (dir + kTurn * jitter).normalized();
        pos += kStep * dir;
        coords.row(i) = pos.transpose();
    }
    return coords;
}

/// Unit normal of the target's least-variance principal plane, with a fixed
/// sign convention so the construction is deterministic.
Eigen::Vector3d mirror_normal(const Eigen::MatrixXd& coords) {
    Eigen::RowVector3d centroid = coords.colwise().mean();
    Eigen::MatrixXd centered = coords.rowwise() - centroid;
    Eigen::Matrix3d cov = centered.transpose() * centered / static_cast<double>(coords.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d n = es.eigenvectors().col(0);  // smallest eigenvalue
    int arg = 0;
    n.cwiseAbs().maxCoeff(&arg);
    if (n[arg] < 0.0) n = -n;
    return n;
}

}  // namespace

char toy_cipher(char one_letter) {
    int idx = aa_index(one_letter);
    if (idx < 0) throw ContractError("toy_cipher: non-canonical letter");
    return aa_letter((idx + 7) % kAlphabetSize);
}

std::string toy_cipher_sequence(const std::string& seq) {
    std::string out = seq;
    for (char& c : out) c = toy_cipher(c);
    return out;
}

std::vector<ComplexRecord> synth_toy_dataset(int count, int len_min, int len_max,
                                             std::uint64_t seed) {
    if (count < 1) throw ConfigError("synth_toy_dataset: count must be >= 1");
    if (len_min < 4 || len_max < len_min) {
        throw ConfigError("synth_toy_dataset: need 4 <= len_min <= len_max");
    }
    Rng base = Rng(seed).substream(rng_tag::kToyDataset);
    std::vector<ComplexRecord> out;
    out.reserve(static_cast<size_t>(count));
    for (int r = 0; r < count; ++r) {
        Rng rng = base.substream(0, static_cast<std::uint64_t>(r));
        const int n = len_min + static_cast<int>(rng.next_u64() %
                                                 static_cast<std::uint64_t>(len_max - len_min + 1));
        ComplexRecord rec;
        rec.id = "toy" + std::to_string(r);
        rec.target.seq.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            rec.target.seq[static_cast<size_t>(i)] =
                aa_letter(static_cast<int>(rng.next_u64() % kAlphabetSize));
        }
        rec.target.coords = smooth_curve(n, rng);

        // Reflect across the least-variance plane through the centroid, then
        // shift along the normal so the closest corresponding pair is at
        // exactly kMinContact.
        Eigen::Vector3d normal = mirror_normal(rec.target.coords);
        Eigen::RowVector3d centroid = rec.target.coords.colwise().mean();
        Eigen::VectorXd depth = (rec.target.coords.rowwise() - centroid) * normal;
        const double shift = 2.0 * depth.maxCoeff() + kMinContact;
        rec.binder.seq = toy_cipher_sequence(rec.target.seq);
        rec.binder.coords = rec.target.coords;
        for (int i = 0; i < n; ++i) {
            rec.binder.coords.row(i) += (shift - 2.0 * depth(i)) * normal.transpose();
        }
        rec.validate();
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace ppdesign
