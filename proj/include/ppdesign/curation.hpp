#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ppdesign/complex_record.hpp"
#include "ppdesign/rng.hpp"

namespace ppdesign {

/// One heavy atom retained from a coordinate file.
struct CurAtom {
    std::string name;  // e.g. "CA"
    Eigen::Vector3d pos;
    double occupancy = 1.0;
};

/// One residue as parsed: 3-letter code, canonical index (or -1 / unknown),
/// optional C-alpha coordinate, and its heavy atoms.
struct CurResidue {
    int res_seq = 0;
    char icode = ' ';
    std::string code3;
    int aa = -1;  // alphabet index; -1 means unknown residue type
    std::optional<Eigen::Vector3d> ca;
    std::vector<CurAtom> atoms;

    bool resolved() const { return ca.has_value(); }
    bool unknown() const { return aa < 0; }
};

struct CurChain {
    std::string id;
    std::vector<CurResidue> residues;

    int atom_count() const;
    int resolved_count() const;
    /// One-letter sequence over resolved residues.
    std::string resolved_sequence() const;
    /// C-alpha coordinates of resolved residues, in residue order.
    Eigen::MatrixXd resolved_ca() const;
};

struct StructureEntry {
    std::string id;
    std::optional<double> resolution;  // angstroms; absent when not reported
    std::vector<CurChain> chains;
};

/// Parses the ATOM/REMARK subset of the fixed-column coordinate format.
/// Keeps the highest-occupancy altloc per atom, ignores HETATM and waters,
/// reads only the first model, and maps 3-letter codes through the canonical
/// table (unmapped codes are tagged unknown).
StructureEntry parse_structure(const std::string& text, const std::string& entry_id);

struct Rejection {
    std::string entry;
    std::string chain;  // "-" for entry-level drops
    std::string reason;
};

/// Appendix-order quality filters: entry resolution cap (9 A, inclusive),
/// then per chain: unknown residues, consecutive-CA gaps over 10 A, fewer
/// than four resolved residues. Missing resolution keeps the entry and logs
/// "resolution-unknown". Total (never throws); pure.
std::pair<std::vector<CurChain>, std::vector<Rejection>> apply_quality_filters(
    const StructureEntry& entry);

/// Iterative clash removal: a chain clashes when more than 30% of its heavy
/// atoms sit within 1.7 A of the other chain. The victim of a clashing pair
/// is the higher percentage, then the fewer total atoms, then the larger
/// chain id; removals repeat until stable. Returns removed chain ids.
std::vector<std::string> detect_clashes(const std::vector<CurChain>& chains);

/// Chain pairs whose minimum heavy-atom separation is under 5 A, emitted
/// twice each (both chains take a turn as the target).
std::vector<ComplexRecord> extract_interface_pairs(const std::string& entry_id,
                                                   const std::vector<CurChain>& chains);

/// Splits a monomer longer than 60 residues at the first spatially
/// contacting residue pair (CA distance < 5 A, sequence separation >= 4,
/// both fragments at least 4 residues) into a target/binder pseudo-complex.
std::optional<ComplexRecord> make_pseudo_complex(const std::string& entry_id,
                                                 const CurChain& chain);

/// Cluster-granular shuffled split by ratio; keys are FNV-1a64 hex hashes of
/// the binder sequence, as produced by `sequence_cluster_key`.
std::tuple<std::vector<ComplexRecord>, std::vector<ComplexRecord>, std::vector<ComplexRecord>>
split_by_cluster(const std::vector<ComplexRecord>& records,
                 const std::map<std::string, std::string>& cluster_of_hash,
                 const std::array<double, 3>& ratios, std::uint64_t seed);

std::string sequence_cluster_key(const std::string& sequence);

/// `sequence-hash<TAB>cluster-id` lines.
std::map<std::string, std::string> load_cluster_file(const std::string& path);

void write_rejections(const std::string& path, const std::vector<Rejection>& rejections);

/// Fixed residue substitution used by the synthetic corpus: alphabet index
/// shifted by 7 (mod 20).
char toy_cipher(char one_letter);
std::string toy_cipher_sequence(const std::string& seq);

/// Synthetic mirrored-motif corpus: smooth random target curves with random
/// sequences; the binder sequence is the cipher of the target sequence and
/// the binder structure is the target curve reflected across its
/// least-variance plane, offset along the normal so the closest inter-chain
/// CA pair sits at exactly 6 A.
std::vector<ComplexRecord> synth_toy_dataset(int count, int len_min, int len_max,
                                             std::uint64_t seed);

}  // namespace ppdesign
