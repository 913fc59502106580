#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ppdesign {

/// One protein chain: one-letter sequence plus C-alpha coordinates in angstroms.
struct Chain {
    std::string seq;
    Eigen::MatrixXd coords;  // n x 3, row i belongs to seq[i]

    int length() const { return static_cast<int>(seq.size()); }
};

/// One target chain plus one binder chain; the unit of training and generation.
struct ComplexRecord {
    std::string id;  // provenance (entry + chain ids) or candidate id
    Chain target;
    Chain binder;
    std::optional<std::string> cluster_id;

    /// Throws ContractError on alphabet violations, length mismatches, or
    /// non-finite coordinates.
    void validate() const;
};

/// Optional per-candidate sidecar written by the sampler.
struct CandidateMeta {
    std::uint64_t seed = 0;
    bool guidance_seq = false;
    bool guidance_struct = false;
    double init_energy = 0.0;
};

/// Text block format, bit-exact across write/read/write cycles:
///   #complex <id>
///   T <target sequence>
///   TX <x> <y> <z>        (one line per target residue, 3 decimals)
///   B <binder sequence>
///   BX <x> <y> <z>        (one line per binder residue)
/// `#meta` lines written by the sampler are tolerated and skipped on read.
void write_record(std::ostream& out, const ComplexRecord& rec,
                  const CandidateMeta* meta = nullptr);
void write_records(std::ostream& out, const std::vector<ComplexRecord>& recs);
std::vector<ComplexRecord> read_records(std::istream& in);

void save_records(const std::string& path, const std::vector<ComplexRecord>& recs);
std::vector<ComplexRecord> load_records(const std::string& path);

}  // namespace ppdesign
