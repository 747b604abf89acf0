#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siftgraph/facegraph.hpp"
#include "siftgraph/matcher.hpp"

namespace siftgraph {

/// One verification claim. Scores are dissimilarities: a claim is
/// accepted when score <= threshold.
struct ScoreRecord {
    std::string claimed_id;
    std::string true_id;
    double score = 0.0;
    std::string group;

    bool genuine() const noexcept { return claimed_id == true_id; }
};

struct RocPoint {
    double threshold = 0.0;
    double far = 0.0;  ///< impostor claims with score <= threshold
    double frr = 0.0;  ///< genuine claims with score > threshold
};

/// One point per distinct score plus a sentinel just below the minimum and
/// one just above the maximum, in ascending threshold order. Throws
/// DegenerateScores unless both genuine and impostor claims are present.
std::vector<RocPoint> roc(std::span<const ScoreRecord> records);

struct EerResult {
    double eer = 0.0;  ///< (far + frr) / 2 at the chosen threshold
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
};

/// Threshold minimising |FAR - FRR| over the ROC sweep, smallest on ties.
EerResult prior_eer(std::span<const ScoreRecord> records);

/// Per claimed subject, the prior-EER threshold over that subject's claims.
/// Throws InsufficientClaims naming a subject lacking genuine or impostor
/// claims.
std::map<std::string, double> client_thresholds(std::span<const ScoreRecord> records);

struct ErrorRates {
    double far = 0.0;
    double frr = 0.0;
};

/// Applies each claim's subject threshold. A claim whose subject has no
/// entry uses `fallback` when given; otherwise MissingThreshold is thrown.
ErrorRates far_frr_at(std::span<const ScoreRecord> records, const std::map<std::string, double>& thresholds,
                      std::optional<double> fallback = std::nullopt);

/// Weighted error rate (frr + r * far) / (1 + r). Throws InvalidRate when
/// far or frr leave [0, 1] or r <= 0.
double wer(double far, double frr, double r);

inline constexpr double kCostRatios[] = {0.1, 1.0, 10.0};

struct WerReport {
    double r = 1.0;
    std::string threshold_source_group;
    std::string evaluated_group;
    double far = 0.0;
    double frr = 0.0;
    double wer = 0.0;
};

/// One enrolled or probing image of the protocol.
struct ProtocolEntry {
    FaceGraph graph;
    std::string group;  ///< "G1" or "G2"
    std::string role;   ///< "train" or "test"
};

struct GroupResult {
    std::string group;
    std::vector<ScoreRecord> scores;
    std::vector<RocPoint> roc;
    EerResult pooled;
    /// Mean over subjects of each subject's own prior EER.
    double client_mean_eer = 0.0;
    std::map<std::string, double> client_thresholds;
};

struct ProtocolReport {
    Constraint constraint = Constraint::RPBMC;
    GroupResult g1;
    GroupResult g2;
    std::vector<WerReport> wer;  ///< G1->G2 then G2->G1, each for r in kCostRatios

    double average_eer() const { return 0.5 * (g1.pooled.eer + g2.pooled.eer); }
};

/// Scores every test image of a group against every subject enrolled in the
/// same group (best score over that subject's train images).
std::vector<ScoreRecord> score_group(std::span<const ProtocolEntry> entries, const std::string& group,
                                     Constraint constraint, const MatchConfig& cfg);

/// Two-group protocol: scores and prior EER per group; client thresholds
/// from one group transferred to the other in both directions; WER for
/// every cost ratio. Throws GroupOverlap when a subject appears in both
/// groups.
ProtocolReport run_protocol(std::span<const ProtocolEntry> entries, Constraint constraint, const MatchConfig& cfg);

/// Writes scores.csv, roc_G1.csv, roc_G2.csv, wer_report.csv and report.txt.
void write_protocol_report(const ProtocolReport& report, const std::filesystem::path& out_dir);

/// Tables of prior EER and WER, one column per report.
std::string format_report(std::span<const ProtocolReport> reports);
std::string wer_csv(std::span<const ProtocolReport> reports);

}  // namespace siftgraph
