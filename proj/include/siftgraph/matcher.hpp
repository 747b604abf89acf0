#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siftgraph/facegraph.hpp"

namespace siftgraph {

enum class Constraint {
    GIBMC,  ///< gallery-image-based: per-gallery-vertex minimum distance
    RPBMC,  ///< reduced-point-based: mutual one-to-one pairs only
};

std::string_view to_string(Constraint c);
/// Accepts "GIBMC"/"RPBMC" in any case; throws InvalidArgument otherwise.
Constraint parse_constraint(std::string_view text);

struct MatchConfig {
    /// Nearest/second-nearest acceptance ratio for mutual pairing.
    double ratio = 0.8;
    /// Multipliers for the 1-sigma, 2-sigma and 3-sigma bands.
    std::array<double, 3> band_multipliers{0.075, 0.05, 0.025};
    /// combined = blend * vertex_weighted + (1 - blend) * edge_weighted.
    double vertex_blend = 0.5;
    /// Component weights for (length, dtheta, dlogscale) edge differences.
    std::array<double, 3> edge_weights{1.0, 1.0, 1.0};
    /// Stand-in distances when a constraint leaves no vertex pair or fewer
    /// than two pairs (no edges). Weighted with the 1-sigma multiplier.
    double unmatched_vertex_distance = 1.4142135623730951;
    double unmatched_edge_distance = 3.141592653589793;

    void validate() const;
};

struct MatchScore {
    double vertex_raw = 0.0;
    double edge_raw = 0.0;
    double vertex_weighted = 0.0;
    double edge_weighted = 0.0;
    double combined = 0.0;
    std::size_t n_vertex_pairs = 0;
    std::size_t n_edge_pairs = 0;
    /// Fewer than two vertex pairs, so no edge could be compared.
    bool too_few_pairs = false;
    Constraint constraint = Constraint::RPBMC;
};

struct WeightParams {
    double mu = 0.0;
    double sigma = 0.0;  ///< population standard deviation
    std::array<double, 3> multipliers{0.075, 0.05, 0.025};
};

/// Result of empirical-rule weighting. band[i] is 1, 2 or 3 for the
/// sigma band the i-th distance falls in and 0 beyond 3 sigma.
struct WeightedDistances {
    WeightParams params;
    std::vector<double> weighted;
    std::vector<int> band;
    /// Mean of weighted values over entries with a non-zero multiplier.
    double mean = 0.0;
};

/// Throws EmptyList.
WeightedDistances gaussian_weight(std::span<const double> distances,
                                  const std::array<double, 3>& multipliers = {0.075, 0.05, 0.025});

struct VertexScore {
    /// For gallery vertex i: min over probe vertices of descriptor distance.
    std::vector<double> minima;
    /// Probe index attaining minima[i]; lowest index on ties.
    std::vector<std::size_t> argmin;
    double mean = 0.0;
};

/// Per-gallery-vertex minimum distances and their mean. Throws EmptyGraph.
VertexScore gibmc_vertex_score(const FaceGraph& gallery, const FaceGraph& probe);

/// Reduces the minimum-distance assignment to unique probe targets, keeping
/// the closest gallery vertex for each (lowest gallery index on ties).
std::vector<VertexPair> gibmc_pairs(const VertexScore& vertex);

struct EdgeScore {
    std::vector<double> distances;
    double mean = 0.0;
    bool too_few_pairs = false;
};

/// Compares edge (a, a') of the gallery with (b, b') of the probe for every
/// two pairs (a, b), (a', b'). Fewer than two pairs yields an empty,
/// flagged result with mean 0.
EdgeScore gibmc_edge_score(const FaceGraph& gallery, const FaceGraph& probe, std::span<const VertexPair> pairs,
                           const std::array<double, 3>& edge_weights = {1.0, 1.0, 1.0});

/// Reciprocal one-to-one pairing (multiple and one-way assignments removed).
CorrespondenceSet rpbmc_pairs(const FaceGraph& gallery, const FaceGraph& probe, double ratio);

/// Throws EmptyGraph for an empty graph and TooFewKeypoints below two vertices.
MatchScore match(const FaceGraph& gallery, const FaceGraph& probe, Constraint constraint, const MatchConfig& cfg);

struct RankedSubject {
    std::string subject_id;
    std::string image_id;  ///< enrolled image that produced the best score
    MatchScore score;
};

/// Best (lowest combined) score per subject, sorted ascending with ties
/// broken by subject id. Throws EmptyGallery.
std::vector<RankedSubject> identify(const FaceGraph& probe, std::span<const FaceGraph> gallery, Constraint constraint,
                                    const MatchConfig& cfg);

/// probe_image_id,gallery_subject_id,constraint,vertex_raw,edge_raw,
/// vertex_weighted,edge_weighted,combined,n_vertex_pairs,n_edge_pairs
std::string score_csv_header();
std::string score_csv_row(std::string_view probe_image_id, std::string_view gallery_subject_id,
                          const MatchScore& score);

}  // namespace siftgraph
