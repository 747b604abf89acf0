#include "siftgraph/facegraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "siftgraph/error.hpp"

namespace siftgraph {

FaceGraph::FaceGraph(std::vector<Keypoint> vertices, std::string subject_id, std::string image_id)
    : vertices_(std::move(vertices)), subject_id_(std::move(subject_id)), image_id_(std::move(image_id))
{
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        for (std::size_t j = i + 1; j < vertices_.size(); ++j) {
            double dx = static_cast<double>(vertices_[i].x) - vertices_[j].x;
            double dy = static_cast<double>(vertices_[i].y) - vertices_[j].y;
            diameter_ = std::max(diameter_, std::hypot(dx, dy));
        }
    }
}

FaceGraph build_graph(std::vector<Keypoint> keypoints, std::string subject_id, std::string image_id)
{
    if (keypoints.size() < 2) {
        throw Error(Errc::TooFewKeypoints, "a face graph needs at least 2 keypoints, got " +
                                               std::to_string(keypoints.size()) + " for image '" + image_id + "'");
    }
    return FaceGraph(std::move(keypoints), std::move(subject_id), std::move(image_id));
}

double wrap_pi(double angle)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    angle = std::fmod(angle, two_pi);
    if (angle <= -std::numbers::pi)
        angle += two_pi;
    else if (angle > std::numbers::pi)
        angle -= two_pi;
    return angle;
}

EdgeAttr edge_attr(const FaceGraph& g, std::size_t i, std::size_t j)
{
    const auto& v = g.vertices();
    if (i >= v.size() || j >= v.size())
        throw Error(Errc::IndexOutOfRange, "edge endpoint out of range");
    if (i == j)
        throw Error(Errc::SelfLoop, "edge endpoints must differ");

    const Keypoint& a = v[i];
    const Keypoint& b = v[j];
    EdgeAttr e;
    if (g.diameter() > 0.0) {
        double dx = static_cast<double>(b.x) - a.x;
        double dy = static_cast<double>(b.y) - a.y;
        e.length = std::min(1.0, std::hypot(dx, dy) / g.diameter());
    }
    e.dtheta = wrap_pi(static_cast<double>(b.orientation) - a.orientation);
    e.dlogscale = std::log(static_cast<double>(b.scale)) - std::log(static_cast<double>(a.scale));
    return e;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b)
{
    double sq = 0.0;
    for (int k = 0; k < kDescriptorLength; ++k) {
        double d = static_cast<double>(a[k]) - b[k];
        sq += d * d;
    }
    return std::sqrt(sq);
}

bool CorrespondenceSet::is_injective() const
{
    std::set<std::size_t> g, p;
    for (const auto& pr : pairs) {
        if (!g.insert(pr.gallery).second)
            return false;
        if (mode == CorrespondenceMode::Mutual && !p.insert(pr.probe).second)
            return false;
    }
    return true;
}

NearestMatch nearest_neighbour(const Descriptor& query, std::span<const Keypoint> candidates)
{
    NearestMatch m;
    m.best = std::numeric_limits<double>::infinity();
    m.second = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        double d = descriptor_distance(query, candidates[j].descriptor);
        if (d < m.best) {
            m.second = m.best;
            m.best = d;
            m.index = j;
        } else if (d < m.second) {
            m.second = d;
        }
    }
    return m;
}

bool passes_ratio(const NearestMatch& m, double ratio)
{
    return m.best == 0.0 || m.best < ratio * m.second;
}

CorrespondenceSet directional_correspondence(const FaceGraph& gallery, const FaceGraph& probe, double ratio)
{
    CorrespondenceSet out;
    out.mode = CorrespondenceMode::Directional;
    if (probe.vertices().empty())
        return out;
    for (std::size_t i = 0; i < gallery.vertex_count(); ++i) {
        NearestMatch m = nearest_neighbour(gallery.vertices()[i].descriptor, probe.vertices());
        if (passes_ratio(m, ratio))
            out.pairs.push_back({i, m.index, m.best});
    }
    return out;
}

CorrespondenceSet mutual_correspondence(const FaceGraph& gallery, const FaceGraph& probe, double ratio)
{
    CorrespondenceSet forward = directional_correspondence(gallery, probe, ratio);
    CorrespondenceSet backward = directional_correspondence(probe, gallery, ratio);

    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> back_target(probe.vertex_count(), none);
    for (const auto& p : backward.pairs)
        back_target[p.gallery] = p.probe;

    CorrespondenceSet out;
    out.mode = CorrespondenceMode::Mutual;
    for (const auto& p : forward.pairs)
        if (back_target[p.probe] == p.gallery)
            out.pairs.push_back(p);
    return out;
}

}  // namespace siftgraph
