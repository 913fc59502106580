#pragma once

#include <string>
#include <vector>

#include "ppdesign/complex_record.hpp"

namespace ppdesign {

/// Confidence scores for one candidate complex, supplied by an external
/// scorer (or the built-in synthetic one for end-to-end tests).
struct ScoreRecord {
    std::string id;
    double iptm = 0.0;   // [0, 1]
    double ptm = 0.0;    // [0, 1]
    double pae = 0.0;    // >= 0, angstrom-scale error estimate
    double plddt = 0.0;  // [0, 100]

    void validate() const;
};

struct SuccessThresholds {
    double iptm_min = 0.8;
    double ptm_min = 0.8;
    double pae_max = 10.0;
    double plddt_min = 80.0;
};

/// Fraction of positions where two equal-length sequences agree.
double amino_acid_recovery(const std::string& a, const std::string& b);

/// Mean pairwise (1 - AAR) over ordered pairs i != j among the first k
/// candidates; k >= 2 required (top-1 diversity is undefined).
double diversity(const std::vector<std::string>& candidates, int k);

/// Mean (1 - AAR) of the first k candidates against the reference sequence.
double novelty(const std::vector<std::string>& candidates, const std::string& reference, int k);

/// Descending complex pLDDT; ties broken by candidate id ascending.
std::vector<ScoreRecord> rank_by_plddt(std::vector<ScoreRecord> scored);

bool passes_thresholds(const ScoreRecord& s, const SuccessThresholds& t);

/// Top-k success rate over targets: (1 / (|D| k)) sum over targets and
/// candidates i <= k of the all-four-thresholds indicator. Each inner list
/// must already be ranked and hold at least k entries.
double success_rate(const std::vector<std::vector<ScoreRecord>>& ranked_per_target, int k,
                    const SuccessThresholds& thresholds);

/// Fraction of candidates with score strictly below the per-target
/// reference, aggregated the same way; ties count as failure.
double comparative_success_rate(const std::vector<std::vector<double>>& scores_per_target,
                                const std::vector<double>& reference_per_target, int k);

/// Tab-separated score file: `candidate_id iptm ptm pae plddt` per line.
std::vector<ScoreRecord> load_scores(const std::string& path);

/// Tab-separated comparative file: `candidate_id score` per line.
std::vector<std::pair<std::string, double>> load_comparative_scores(const std::string& path);

/// Deterministic geometric heuristic mapping a complex to pseudo scores from
/// interface contact counts, binder radius of gyration, and consecutive
/// C-alpha spacing. A test fixture, not a structural-accuracy claim.
ScoreRecord synthetic_score(const ComplexRecord& rec);

}  // namespace ppdesign
