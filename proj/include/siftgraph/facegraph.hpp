#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "siftgraph/sift.hpp"

namespace siftgraph {

/// Complete graph over one face image's keypoints. Vertices carry their
/// SIFT features; edges are implicit (every unordered vertex pair).
class FaceGraph {
public:
    FaceGraph() = default;
    FaceGraph(std::vector<Keypoint> vertices, std::string subject_id, std::string image_id);

    const std::vector<Keypoint>& vertices() const noexcept { return vertices_; }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t edge_count() const noexcept { return vertices_.size() * (vertices_.size() - (vertices_.empty() ? 0 : 1)) / 2; }
    const std::string& subject_id() const noexcept { return subject_id_; }
    const std::string& image_id() const noexcept { return image_id_; }
    /// Largest pairwise distance between vertex locations.
    double diameter() const noexcept { return diameter_; }

    friend bool operator==(const FaceGraph& a, const FaceGraph& b)
    {
        return a.subject_id_ == b.subject_id_ && a.image_id_ == b.image_id_ && a.vertices_ == b.vertices_;
    }

private:
    std::vector<Keypoint> vertices_;
    std::string subject_id_;
    std::string image_id_;
    double diameter_ = 0.0;
};

/// Throws TooFewKeypoints below two keypoints.
FaceGraph build_graph(std::vector<Keypoint> keypoints, std::string subject_id, std::string image_id);

/// Geometric attributes of edge (i, j).
struct EdgeAttr {
    double length = 0.0;     ///< endpoint distance / graph diameter, in [0, 1]
    double dtheta = 0.0;     ///< orientation(j) - orientation(i), wrapped to (-pi, pi]
    double dlogscale = 0.0;  ///< log scale(j) - log scale(i)
};

/// Throws IndexOutOfRange or SelfLoop.
EdgeAttr edge_attr(const FaceGraph& g, std::size_t i, std::size_t j);

/// Wraps an angle difference into (-pi, pi].
double wrap_pi(double angle);

double descriptor_distance(const Descriptor& a, const Descriptor& b);

struct VertexPair {
    std::size_t gallery = 0;
    std::size_t probe = 0;
    double distance = 0.0;

    friend bool operator==(const VertexPair&, const VertexPair&) = default;
};

enum class CorrespondenceMode { Directional, Mutual };

struct CorrespondenceSet {
    std::vector<VertexPair> pairs;  ///< sorted by gallery index
    CorrespondenceMode mode = CorrespondenceMode::Directional;

    /// True when no index repeats in the gallery coordinate, and for
    /// mutual sets also none in the probe coordinate.
    bool is_injective() const;
};

/// Nearest neighbour of a descriptor among `candidates`, plus the runner-up
/// distance (infinity when there is only one candidate). Ties go to the
/// lowest index.
struct NearestMatch {
    std::size_t index = 0;
    double best = 0.0;
    double second = 0.0;
};

NearestMatch nearest_neighbour(const Descriptor& query, std::span<const Keypoint> candidates);

/// Ratio acceptance: best < ratio * second, or an exact (zero-distance) hit.
bool passes_ratio(const NearestMatch& m, double ratio);

/// For each gallery vertex its nearest probe vertex, kept when it passes
/// the ratio test. Probe vertices may repeat.
CorrespondenceSet directional_correspondence(const FaceGraph& gallery, const FaceGraph& probe, double ratio);

/// Pairs (i, j) where i's accepted best match is j and j's accepted best
/// match is i. One-to-one by construction.
CorrespondenceSet mutual_correspondence(const FaceGraph& gallery, const FaceGraph& probe, double ratio);

}  // namespace siftgraph
