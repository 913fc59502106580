#include "ppdesign/curation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ppdesign/alphabet.hpp"
#include "ppdesign/errors.hpp"

namespace ppdesign {

namespace {

constexpr double kResolutionMax = 9.0;   // inclusive: "9 A or better" keeps 9.0
constexpr double kCaGapMax = 10.0;       // drop when a consecutive CA gap exceeds this
constexpr int kMinResolved = 4;
constexpr double kClashDist = 1.7;
constexpr double kClashPct = 30.0;       // strict: more than 30%
constexpr double kInterfaceDist = 5.0;   // strict: less than 5 A
constexpr int kPseudoMinLen = 61;        // "longer than 60"
constexpr int kPseudoMinFragment = 4;
constexpr int kPseudoMinSeparation = 4;  // j - i; consecutive CAs sit ~3.8 A apart

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string field(const std::string& line, size_t col0, size_t len) {
    if (col0 >= line.size()) return "";
    return line.substr(col0, std::min(len, line.size() - col0));
}

double parse_coord(const std::string& line, size_t col0, long line_no) {
    std::string f = trim(field(line, col0, 8));
    if (f.empty()) throw ParseError("missing coordinate field", line_no);
    try {
        size_t used = 0;
        double v = std::stod(f, &used);
        if (used != f.size()) throw std::invalid_argument(f);
        return v;
    } catch (const std::exception&) {
        throw ParseError("non-numeric coordinate field '" + f + "'", line_no);
    }
}

bool is_water(const std::string& res3) { return res3 == "HOH" || res3 == "WAT" || res3 == "DOD"; }

bool is_hydrogen(const std::string& element, const std::string& atom_name) {
    std::string e = trim(element);
    if (!e.empty()) {
        char c = static_cast<char>(std::toupper(e[0]));
        return e.size() == 1 && (c == 'H' || c == 'D');
    }
    // No element column: derive from the atom name, skipping leading digits.
    for (char c : atom_name) {
        if (std::isdigit(static_cast<unsigned char>(c)) || c == ' ') continue;
        char u = static_cast<char>(std::toupper(c));
        return u == 'H' || u == 'D';
    }
    return false;
}

std::optional<double> parse_remark2_resolution(const std::string& line) {
    auto pos = line.find("RESOLUTION.");
    if (pos == std::string::npos) return std::nullopt;
    std::istringstream rest(line.substr(pos + 11));
    double value;
    if (rest >> value) return value;
    return std::nullopt;  // "NOT APPLICABLE" and friends
}

/// Percentage of `a`'s atoms within kClashDist of any atom of `b`.
double clash_percentage(const CurChain& a, const CurChain& b) {
    int total = 0;
    int clashing = 0;
    for (const auto& ra : a.residues) {
        for (const auto& atom_a : ra.atoms) {
            ++total;
            bool hit = false;
            for (const auto& rb : b.residues) {
                for (const auto& atom_b : rb.atoms) {
                    if ((atom_a.pos - atom_b.pos).norm() < kClashDist) {
                        hit = true;
                        break;
                    }
                }
                if (hit) break;
            }
            if (hit) ++clashing;
        }
    }
    if (total == 0) return 0.0;
    return 100.0 * clashing / total;
}

double min_heavy_atom_distance(const CurChain& a, const CurChain& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ra : a.residues) {
        for (const auto& atom_a : ra.atoms) {
            for (const auto& rb : b.residues) {
                for (const auto& atom_b : rb.atoms) {
                    best = std::min(best, (atom_a.pos - atom_b.pos).norm());
                }
            }
        }
    }
    return best;
}

Chain chain_from_resolved(const CurChain& c) {
    Chain out;
    out.seq = c.resolved_sequence();
    out.coords = c.resolved_ca();
    return out;
}

}  // namespace

int CurChain::atom_count() const {
    int n = 0;
    for (const auto& r : residues) n += static_cast<int>(r.atoms.size());
    return n;
}

int CurChain::resolved_count() const {
    int n = 0;
    for (const auto& r : residues) {
        if (r.resolved()) ++n;
    }
    return n;
}

std::string CurChain::resolved_sequence() const {
    std::string s;
    for (const auto& r : residues) {
        if (r.resolved()) s.push_back(aa_letter(r.aa));
    }
    return s;
}

Eigen::MatrixXd CurChain::resolved_ca() const {
    Eigen::MatrixXd out(resolved_count(), 3);
    int k = 0;
    for (const auto& r : residues) {
        if (r.resolved()) out.row(k++) = r.ca->transpose();
    }
    return out;
}

StructureEntry parse_structure(const std::string& text, const std::string& entry_id) {
    if (text.empty()) throw ContractError("parse_structure: empty input");

    StructureEntry entry;
    entry.id = entry_id;
    std::vector<CurChain> chains;
    std::map<std::string, size_t> chain_index;

    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string rec = field(line, 0, 6);
        if (rec == "ENDMDL") break;  // first model only
        if (rec.rfind("REMARK", 0) == 0 && trim(field(line, 6, 4)) == "2") {
            if (!entry.resolution.has_value()) entry.resolution = parse_remark2_resolution(line);
            continue;
        }
        if (rec != "ATOM  ") continue;  // HETATM (waters, ligands) ignored

        if (line.size() < 54) throw ParseError("ATOM line too short for coordinates", line_no);
        const std::string atom_name = trim(field(line, 12, 4));
        const std::string res3 = trim(field(line, 17, 3));
        std::string chain_id = trim(field(line, 21, 1));
        if (chain_id.empty()) chain_id = "_";
        const std::string res_seq_s = trim(field(line, 22, 4));
        const char icode = line.size() > 26 ? line[26] : ' ';
        if (is_water(res3)) continue;
        if (is_hydrogen(field(line, 76, 2), field(line, 12, 4))) continue;

        int res_seq = 0;
        try {
            res_seq = std::stoi(res_seq_s);
        } catch (const std::exception&) {
            throw ParseError("non-numeric residue number '" + res_seq_s + "'", line_no);
        }
        CurAtom atom;
        atom.name = atom_name;
        atom.pos = {parse_coord(line, 30, line_no), parse_coord(line, 38, line_no),
                    parse_coord(line, 46, line_no)};
        const std::string occ_s = trim(field(line, 54, 6));
        if (!occ_s.empty()) {
            try {
                atom.occupancy = std::stod(occ_s);
            } catch (const std::exception&) {
                throw ParseError("non-numeric occupancy '" + occ_s + "'", line_no);
            }
        }

        size_t ci;
        if (auto it = chain_index.find(chain_id); it != chain_index.end()) {
            ci = it->second;
        } else {
            ci = chains.size();
            chain_index.emplace(chain_id, ci);
            chains.push_back(CurChain{chain_id, {}});
        }
        CurChain& chain = chains[ci];
        if (chain.residues.empty() || chain.residues.back().res_seq != res_seq ||
            chain.residues.back().icode != icode) {
            CurResidue r;
            r.res_seq = res_seq;
            r.icode = icode;
            r.code3 = res3;
            r.aa = aa_index_from_three(res3);
            chain.residues.push_back(std::move(r));
        }
        CurResidue& residue = chain.residues.back();

        // Duplicate altlocs collapse to the highest-occupancy copy;
        // the first one wins ties.
        bool merged = false;
        for (auto& existing : residue.atoms) {
            if (existing.name == atom.name) {
                if (atom.occupancy > existing.occupancy) {
                    existing = atom;
                    if (atom.name == "CA") residue.ca = atom.pos;
                }
                merged = true;
                break;
            }
        }
        if (!merged) {
            if (atom.name == "CA") residue.ca = atom.pos;
            residue.atoms.push_back(std::move(atom));
        }
    }

    if (chains.empty()) throw ParseError("entry contains no protein chains: " + entry_id);
    entry.chains = std::move(chains);
    return entry;
}

std::pair<std::vector<CurChain>, std::vector<Rejection>> apply_quality_filters(
    const StructureEntry& entry) {
    std::vector<CurChain> kept;
    std::vector<Rejection> log;

    if (entry.resolution.has_value()) {
        if (*entry.resolution > kResolutionMax) {
            for (const auto& c : entry.chains) log.push_back({entry.id, c.id, "resolution"});
            return {kept, log};
        }
    } else {
        // Absence of a reported resolution is not a report above the cap.
        log.push_back({entry.id, "-", "resolution-unknown"});
    }

    for (const auto& chain : entry.chains) {
        bool unknown = false;
        for (const auto& r : chain.residues) {
            if (r.unknown()) {
                unknown = true;
                break;
            }
        }
        if (unknown) {
            log.push_back({entry.id, chain.id, "unknown-residue"});
            continue;
        }
        Eigen::MatrixXd ca = chain.resolved_ca();
        bool gap = false;
        for (int i = 0; i + 1 < ca.rows(); ++i) {
            if ((ca.row(i + 1) - ca.row(i)).norm() > kCaGapMax) {
                gap = true;
                break;
            }
        }
        if (gap) {
            log.push_back({entry.id, chain.id, "ca-gap"});
            continue;
        }
        if (chain.resolved_count() < kMinResolved) {
            log.push_back({entry.id, chain.id, "too-short"});
            continue;
        }
        kept.push_back(chain);
    }
    return {kept, log};
}

std::vector<std::string> detect_clashes(const std::vector<CurChain>& chains) {
    std::vector<CurChain> live = chains;
    std::vector<std::string> removed;

    while (live.size() >= 2) {
        bool acted = false;
        for (size_t i = 0; i < live.size() && !acted; ++i) {
            for (size_t j = i + 1; j < live.size() && !acted; ++j) {
                double pi = clash_percentage(live[i], live[j]);
                double pj = clash_percentage(live[j], live[i]);
                if (pi <= kClashPct && pj <= kClashPct) continue;
                size_t victim;
                if (pi > kClashPct && pj > kClashPct) {
                    if (pi != pj) {
                        victim = pi > pj ? i : j;
                    } else if (live[i].atom_count() != live[j].atom_count()) {
                        victim = live[i].atom_count() < live[j].atom_count() ? i : j;
                    } else {
                        victim = live[i].id > live[j].id ? i : j;
                    }
                } else {
                    victim = pi > kClashPct ? i : j;
                }
                removed.push_back(live[victim].id);
                live.erase(live.begin() + static_cast<long>(victim));
                acted = true;
            }
        }
        if (!acted) break;
    }
    return removed;
}

std::vector<ComplexRecord> extract_interface_pairs(const std::string& entry_id,
                                                   const std::vector<CurChain>& chains) {
    std::vector<ComplexRecord> out;
    for (size_t i = 0; i < chains.size(); ++i) {
        for (size_t j = i + 1; j < chains.size(); ++j) {
            if (min_heavy_atom_distance(chains[i], chains[j]) >= kInterfaceDist) continue;
            // Both orientations: each chain takes a turn as the target.
            ComplexRecord ab;
            ab.id = entry_id + "_" + chains[i].id + "_" + chains[j].id;
            ab.target = chain_from_resolved(chains[i]);
            ab.binder = chain_from_resolved(chains[j]);
            ab.validate();
            ComplexRecord ba;
            ba.id = entry_id + "_" + chains[j].id + "_" + chains[i].id;
            ba.target = chain_from_resolved(chains[j]);
            ba.binder = chain_from_resolved(chains[i]);
            ba.validate();
            out.push_back(std::move(ab));
            out.push_back(std::move(ba));
        }
    }
    return out;
}

std::optional<ComplexRecord> make_pseudo_complex(const std::string& entry_id,
                                                 const CurChain& chain) {
    const int n = chain.resolved_count();
    if (n < kPseudoMinLen) return std::nullopt;
    Eigen::MatrixXd ca = chain.resolved_ca();
    std::string seq = chain.resolved_sequence();

    // First qualifying pair in (i, j) order, 1-based residue positions.
    for (int i = kPseudoMinFragment; i <= n - kPseudoMinFragment; ++i) {
        const int j_lo = std::max(i + kPseudoMinSeparation, i + 1);
        for (int j = j_lo; j <= n - kPseudoMinFragment + 1; ++j) {
            if ((ca.row(i - 1) - ca.row(j - 1)).norm() >= kInterfaceDist) continue;
            ComplexRecord rec;
            rec.id = entry_id + "_" + chain.id + "_pseudo";
            rec.target.seq = seq.substr(0, static_cast<size_t>(i));
            rec.target.coords = ca.topRows(i);
            rec.binder.seq = seq.substr(static_cast<size_t>(j - 1));
            rec.binder.coords = ca.bottomRows(n - j + 1);
            rec.validate();
            return rec;
        }
    }
    return std::nullopt;
}

std::string sequence_cluster_key(const std::string& sequence) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(sequence)));
    return buf;
}

std::tuple<std::vector<ComplexRecord>, std::vector<ComplexRecord>, std::vector<ComplexRecord>>
split_by_cluster(const std::vector<ComplexRecord>& records,
                 const std::map<std::string, std::string>& cluster_of_hash,
                 const std::array<double, 3>& ratios, std::uint64_t seed) {
    double ratio_sum = ratios[0] + ratios[1] + ratios[2];
    if (!(ratio_sum > 0.0)) throw ConfigError("split_by_cluster: ratios must sum to > 0");

    // Cluster ids in first-appearance order, so the shuffle is the only
    // source of randomness.
    std::vector<std::string> cluster_ids;
    std::vector<std::string> record_cluster(records.size());
    for (size_t r = 0; r < records.size(); ++r) {
        auto it = cluster_of_hash.find(sequence_cluster_key(records[r].binder.seq));
        if (it == cluster_of_hash.end()) {
            throw ConfigError("split_by_cluster: record '" + records[r].id +
                              "' has no cluster assignment");
        }
        record_cluster[r] = it->second;
        if (std::find(cluster_ids.begin(), cluster_ids.end(), it->second) == cluster_ids.end()) {
            cluster_ids.push_back(it->second);
        }
    }

    Rng rng = Rng(seed).substream(rng_tag::kClusterSplit);
    for (size_t i = cluster_ids.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.next_u64() % i);
        std::swap(cluster_ids[i - 1], cluster_ids[j]);
    }

    // Largest-remainder apportionment of clusters to the three splits.
    const double c = static_cast<double>(cluster_ids.size());
    std::array<double, 3> quota = {c * ratios[0] / ratio_sum, c * ratios[1] / ratio_sum,
                                   c * ratios[2] / ratio_sum};
    std::array<size_t, 3> count = {static_cast<size_t>(quota[0]), static_cast<size_t>(quota[1]),
                                   static_cast<size_t>(quota[2])};
    size_t assigned = count[0] + count[1] + count[2];
    while (assigned < cluster_ids.size()) {
        int best = 0;
        double best_frac = -1.0;
        for (int s = 0; s < 3; ++s) {
            double frac = quota[static_cast<size_t>(s)] - static_cast<double>(count[static_cast<size_t>(s)]);
            if (frac > best_frac) {
                best_frac = frac;
                best = s;
            }
        }
        ++count[static_cast<size_t>(best)];
        quota[static_cast<size_t>(best)] = static_cast<double>(count[static_cast<size_t>(best)]);
        ++assigned;
    }

    std::map<std::string, int> split_of_cluster;
    size_t k = 0;
    for (int s = 0; s < 3; ++s) {
        for (size_t i = 0; i < count[static_cast<size_t>(s)]; ++i) {
            split_of_cluster[cluster_ids[k++]] = s;
        }
    }

    std::tuple<std::vector<ComplexRecord>, std::vector<ComplexRecord>, std::vector<ComplexRecord>>
        out;
    for (size_t r = 0; r < records.size(); ++r) {
        switch (split_of_cluster[record_cluster[r]]) {
            case 0: std::get<0>(out).push_back(records[r]); break;
            case 1: std::get<1>(out).push_back(records[r]); break;
            default: std::get<2>(out).push_back(records[r]); break;
        }
    }
    return out;
}

std::map<std::string, std::string> load_cluster_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cluster file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw ParseError("cluster line needs 'sequence-hash\\tcluster-id'", line_no);
        }
        out[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return out;
}

void write_rejections(const std::string& path, const std::vector<Rejection>& rejections) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open rejection log for writing: " + path);
    for (const auto& r : rejections) {
        out << r.entry << "\t" << r.chain << "\t" << r.reason << "\n";
    }
    if (!out.good()) throw IoError("rejection log write failed: " + path);
}

}  // namespace ppdesign
