#include "ppdesign/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ppdesign/errors.hpp"

namespace ppdesign {

void ScoreRecord::validate() const {
    if (id.empty()) throw ConfigError("score validation: empty candidate id");
    if (!(iptm >= 0.0 && iptm <= 1.0)) {
        throw ConfigError("score validation: ipTM out of [0,1] for " + id);
    }
    if (!(ptm >= 0.0 && ptm <= 1.0)) {
        throw ConfigError("score validation: pTM out of [0,1] for " + id);
    }
    if (!(pae >= 0.0)) throw ConfigError("score validation: PAE negative for " + id);
    if (!(plddt >= 0.0 && plddt <= 100.0)) {
        throw ConfigError("score validation: pLDDT out of [0,100] for " + id);
    }
}

double amino_acid_recovery(const std::string& a, const std::string& b) {
    if (a.size() != b.size()) {
        throw ContractError("amino_acid_recovery: length mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw ContractError("amino_acid_recovery: empty sequences");
    int same = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(a.size());
}

double diversity(const std::vector<std::string>& candidates, int k) {
    if (k < 2) {
        throw ContractError("diversity: undefined for k < 2 (single-candidate sets)");
    }
    if (static_cast<int>(candidates.size()) < k) {
        throw ContractError("diversity: fewer than k candidates");
    }
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            sum += 1.0 - amino_acid_recovery(candidates[static_cast<size_t>(i)],
                                             candidates[static_cast<size_t>(j)]);
        }
    }
    return sum / (static_cast<double>(k) * (k - 1));
}

double novelty(const std::vector<std::string>& candidates, const std::string& reference, int k) {
    if (k < 1) throw ContractError("novelty: k must be >= 1");
    if (static_cast<int>(candidates.size()) < k) {
        throw ContractError("novelty: fewer than k candidates");
    }
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        sum += 1.0 - amino_acid_recovery(candidates[static_cast<size_t>(i)], reference);
    }
    return sum / k;
}

std::vector<ScoreRecord> rank_by_plddt(std::vector<ScoreRecord> scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoreRecord& a, const ScoreRecord& b) {
        if (a.plddt != b.plddt) return a.plddt > b.plddt;
        return a.id < b.id;
    });
    return scored;
}

bool passes_thresholds(const ScoreRecord& s, const SuccessThresholds& t) {
    return s.iptm >= t.iptm_min && s.ptm >= t.ptm_min && s.pae <= t.pae_max &&
           s.plddt >= t.plddt_min;
}

double success_rate(const std::vector<std::vector<ScoreRecord>>& ranked_per_target, int k,
                    const SuccessThresholds& thresholds) {
    if (ranked_per_target.empty()) throw ContractError("success_rate: no targets");
    if (k < 1) throw ContractError("success_rate: k must be >= 1");
    long hits = 0;
    for (size_t t = 0; t < ranked_per_target.size(); ++t) {
        const auto& ranked = ranked_per_target[t];
        if (static_cast<int>(ranked.size()) < k) {
            throw ContractError("success_rate: target #" + std::to_string(t) + " has only " +
                                std::to_string(ranked.size()) + " candidates, need " +
                                std::to_string(k));
        }
        for (int i = 0; i < k; ++i) {
            if (passes_thresholds(ranked[static_cast<size_t>(i)], thresholds)) ++hits;
        }
    }
    return static_cast<double>(hits) /
           (static_cast<double>(ranked_per_target.size()) * static_cast<double>(k));
}

double comparative_success_rate(const std::vector<std::vector<double>>& scores_per_target,
                                const std::vector<double>& reference_per_target, int k) {
    if (scores_per_target.size() != reference_per_target.size() || scores_per_target.empty()) {
        throw ContractError("comparative_success_rate: targets and references must pair up");
    }
    if (k < 1) throw ContractError("comparative_success_rate: k must be >= 1");
    long hits = 0;
    for (size_t t = 0; t < scores_per_target.size(); ++t) {
        const auto& scores = scores_per_target[t];
        if (static_cast<int>(scores.size()) < k) {
            throw ContractError("comparative_success_rate: target #" + std::to_string(t) +
                                " has fewer than k scores");
        }
        for (int i = 0; i < k; ++i) {
            // Strict inequality: a tie with the reference binder fails.
            if (scores[static_cast<size_t>(i)] < reference_per_target[t]) ++hits;
        }
    }
    return static_cast<double>(hits) /
           (static_cast<double>(scores_per_target.size()) * static_cast<double>(k));
}

std::vector<ScoreRecord> load_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score file: " + path);
    std::vector<ScoreRecord> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ScoreRecord s;
        if (!(ls >> s.id >> s.iptm >> s.ptm >> s.pae >> s.plddt)) {
            throw ParseError("malformed score line, need 'id iptm ptm pae plddt'", line_no);
        }
        try {
            s.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::pair<std::string, double>> load_comparative_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open comparative score file: " + path);
    std::vector<std::pair<std::string, double>> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id;
        double score;
        if (!(ls >> id >> score)) {
            throw ParseError("malformed comparative score line, need 'id score'", line_no);
        }
        out.emplace_back(std::move(id), score);
    }
    return out;
}

ScoreRecord synthetic_score(const ComplexRecord& rec) {
    rec.validate();
    const auto& tc = rec.target.coords;
    const auto& bc = rec.binder.coords;
    const int n = static_cast<int>(bc.rows());

    // Interface contacts: binder residues with a target C-alpha within 8 A.
    int contacts = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < tc.rows(); ++j) {
            if ((bc.row(i) - tc.row(j)).norm() < 8.0) {
                ++contacts;
                break;
            }
        }
    }
    double iq = std::min(1.0, contacts / std::max(4.0, 0.25 * n));

    // Chain plausibility: consecutive spacing near 3.8 A.
    double gap = 0.0;
    for (int i = 0; i + 1 < n; ++i) gap += std::abs((bc.row(i + 1) - bc.row(i)).norm() - 3.8);
    if (n > 1) gap /= (n - 1);
    double sp = std::exp(-gap / 2.0);

    // Radius of gyration against the globular scaling expectation.
    Eigen::RowVector3d c = bc.colwise().mean();
    double rg = std::sqrt((bc.rowwise() - c).rowwise().squaredNorm().mean());
    double rg_ref = 2.2 * std::pow(static_cast<double>(n), 0.38);
    double rgs = std::exp(-std::abs(rg - rg_ref) / rg_ref);

    // Steric sanity: heavy interpenetration collapses the interface term.
    double min_inter = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < tc.rows(); ++j) {
            min_inter = std::min(min_inter, (bc.row(i) - tc.row(j)).norm());
        }
    }
    if (min_inter < 2.0) iq *= min_inter / 2.0;

    double q = 0.45 * sp + 0.3 * rgs + 0.25 * iq;

    ScoreRecord s;
    s.id = rec.id;
    s.iptm = std::clamp(0.15 + 0.55 * iq + 0.3 * sp * rgs, 0.0, 1.0);
    s.ptm = std::clamp(0.2 + 0.5 * sp + 0.3 * rgs, 0.0, 1.0);
    s.pae = std::clamp(3.0 + 22.0 * (1.0 - q), 0.0, 30.0);
    s.plddt = std::clamp(35.0 + 60.0 * q, 0.0, 100.0);
    return s;
}

}  // namespace ppdesign
