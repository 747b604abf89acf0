#include "siftgraph/matcher.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "siftgraph/error.hpp"

namespace siftgraph {

std::string_view to_string(Constraint c)
{
    return c == Constraint::GIBMC ? "GIBMC" : "RPBMC";
}

Constraint parse_constraint(std::string_view text)
{
    std::string up(text);
    for (auto& ch : up)
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (up == "GIBMC")
        return Constraint::GIBMC;
    if (up == "RPBMC")
        return Constraint::RPBMC;
    throw Error(Errc::InvalidArgument, "unknown constraint '" + std::string(text) + "' (expected GIBMC or RPBMC)");
}

void MatchConfig::validate() const
{
    if (!(ratio > 0.0 && ratio <= 1.0))
        throw Error(Errc::InvalidArgument, "ratio must be in (0, 1]");
    for (double m : band_multipliers)
        if (!(m >= 0.0))
            throw Error(Errc::InvalidArgument, "band multipliers must be non-negative");
    if (!(vertex_blend >= 0.0 && vertex_blend <= 1.0))
        throw Error(Errc::InvalidArgument, "vertex blend must be in [0, 1]");
    for (double w : edge_weights)
        if (!(w >= 0.0))
            throw Error(Errc::InvalidArgument, "edge weights must be non-negative");
    if (!(unmatched_vertex_distance >= 0.0) || !(unmatched_edge_distance >= 0.0))
        throw Error(Errc::InvalidArgument, "unmatched distances must be non-negative");
}

WeightedDistances gaussian_weight(std::span<const double> distances, const std::array<double, 3>& multipliers)
{
    if (distances.empty())
        throw Error(Errc::EmptyList, "cannot weight an empty distance list");

    WeightedDistances out;
    out.params.multipliers = multipliers;
    const double n = static_cast<double>(distances.size());
    const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
    double mu = *lo;
    double sigma = 0.0;
    // A constant list keeps mu exact and sigma zero despite summation rounding.
    if (*lo != *hi) {
        double sum = 0.0;
        for (double d : distances)
            sum += d;
        mu = sum / n;
        double sq = 0.0;
        for (double d : distances)
            sq += (d - mu) * (d - mu);
        sigma = std::sqrt(sq / n);
    }
    out.params.mu = mu;
    out.params.sigma = sigma;

    out.weighted.reserve(distances.size());
    out.band.reserve(distances.size());
    double kept_sum = 0.0;
    std::size_t kept = 0;
    for (double d : distances) {
        const double dev = std::abs(d - mu);
        int band = 0;
        if (dev <= sigma)
            band = 1;
        else if (dev <= 2.0 * sigma)
            band = 2;
        else if (dev <= 3.0 * sigma)
            band = 3;
        const double m = band == 0 ? 0.0 : multipliers[band - 1];
        out.band.push_back(band);
        out.weighted.push_back(d * m);
        if (m != 0.0) {
            kept_sum += d * m;
            ++kept;
        }
    }
    out.mean = kept == 0 ? 0.0 : kept_sum / static_cast<double>(kept);
    return out;
}

VertexScore gibmc_vertex_score(const FaceGraph& gallery, const FaceGraph& probe)
{
    if (gallery.vertex_count() == 0 || probe.vertex_count() == 0)
        throw Error(Errc::EmptyGraph, "vertex score needs non-empty graphs");

    VertexScore out;
    out.minima.reserve(gallery.vertex_count());
    out.argmin.reserve(gallery.vertex_count());
    double sum = 0.0;
    for (const Keypoint& g : gallery.vertices()) {
        NearestMatch m = nearest_neighbour(g.descriptor, probe.vertices());
        out.minima.push_back(m.best);
        out.argmin.push_back(m.index);
        sum += m.best;
    }
    out.mean = sum / static_cast<double>(out.minima.size());
    return out;
}

std::vector<VertexPair> gibmc_pairs(const VertexScore& vertex)
{
    // probe index -> winning gallery index
    std::map<std::size_t, std::size_t> winner;
    for (std::size_t i = 0; i < vertex.minima.size(); ++i) {
        auto [it, inserted] = winner.try_emplace(vertex.argmin[i], i);
        if (!inserted && vertex.minima[i] < vertex.minima[it->second])
            it->second = i;
    }
    std::vector<VertexPair> pairs;
    pairs.reserve(winner.size());
    for (const auto& [probe, gallery] : winner)
        pairs.push_back({gallery, probe, vertex.minima[gallery]});
    std::sort(pairs.begin(), pairs.end(), [](const VertexPair& a, const VertexPair& b) { return a.gallery < b.gallery; });
    return pairs;
}

EdgeScore gibmc_edge_score(const FaceGraph& gallery, const FaceGraph& probe, std::span<const VertexPair> pairs,
                           const std::array<double, 3>& edge_weights)
{
    EdgeScore out;
    if (pairs.size() < 2) {
        out.too_few_pairs = true;
        return out;
    }
    out.distances.reserve(pairs.size() * (pairs.size() - 1) / 2);
    double sum = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        for (std::size_t l = k + 1; l < pairs.size(); ++l) {
            const EdgeAttr a = edge_attr(gallery, pairs[k].gallery, pairs[l].gallery);
            const EdgeAttr b = edge_attr(probe, pairs[k].probe, pairs[l].probe);
            const double dl = a.length - b.length;
            const double dt = wrap_pi(a.dtheta - b.dtheta);
            const double ds = a.dlogscale - b.dlogscale;
            const double d =
                std::sqrt(edge_weights[0] * dl * dl + edge_weights[1] * dt * dt + edge_weights[2] * ds * ds);
            out.distances.push_back(d);
            sum += d;
        }
    }
    out.mean = sum / static_cast<double>(out.distances.size());
    return out;
}

CorrespondenceSet rpbmc_pairs(const FaceGraph& gallery, const FaceGraph& probe, double ratio)
{
    // A reciprocated best match is necessarily the minimum-distance one among
    // all gallery vertices pointing at that probe vertex.
    return mutual_correspondence(gallery, probe, ratio);
}

MatchScore match(const FaceGraph& gallery, const FaceGraph& probe, Constraint constraint, const MatchConfig& cfg)
{
    cfg.validate();
    if (gallery.vertex_count() == 0 || probe.vertex_count() == 0)
        throw Error(Errc::EmptyGraph, "cannot match an empty graph");
    if (gallery.vertex_count() < 2 || probe.vertex_count() < 2)
        throw Error(Errc::TooFewKeypoints, "matching needs at least 2 vertices per graph");

    MatchScore score;
    score.constraint = constraint;

    std::vector<double> vertex_distances;
    std::vector<VertexPair> pairs;
    if (constraint == Constraint::GIBMC) {
        VertexScore vs = gibmc_vertex_score(gallery, probe);
        pairs = gibmc_pairs(vs);
        vertex_distances = std::move(vs.minima);
    } else {
        pairs = rpbmc_pairs(gallery, probe, cfg.ratio).pairs;
        vertex_distances.reserve(pairs.size());
        for (const auto& p : pairs)
            vertex_distances.push_back(p.distance);
    }

    const double base_multiplier = cfg.band_multipliers[0];
    score.n_vertex_pairs = vertex_distances.size();
    if (vertex_distances.empty()) {
        score.vertex_raw = cfg.unmatched_vertex_distance;
        score.vertex_weighted = base_multiplier * cfg.unmatched_vertex_distance;
    } else {
        double sum = 0.0;
        for (double d : vertex_distances)
            sum += d;
        score.vertex_raw = sum / static_cast<double>(vertex_distances.size());
        score.vertex_weighted = gaussian_weight(vertex_distances, cfg.band_multipliers).mean;
    }

    EdgeScore es = gibmc_edge_score(gallery, probe, pairs, cfg.edge_weights);
    score.n_edge_pairs = es.distances.size();
    score.too_few_pairs = es.too_few_pairs;
    score.edge_raw = es.mean;
    score.edge_weighted = es.too_few_pairs ? base_multiplier * cfg.unmatched_edge_distance
                                           : gaussian_weight(es.distances, cfg.band_multipliers).mean;

    score.combined = cfg.vertex_blend * score.vertex_weighted + (1.0 - cfg.vertex_blend) * score.edge_weighted;
    return score;
}

std::vector<RankedSubject> identify(const FaceGraph& probe, std::span<const FaceGraph> gallery, Constraint constraint,
                                    const MatchConfig& cfg)
{
    if (gallery.empty())
        throw Error(Errc::EmptyGallery, "gallery has no enrolled graphs");

    std::map<std::string, RankedSubject> best;
    for (const FaceGraph& g : gallery) {
        MatchScore s = match(g, probe, constraint, cfg);
        auto it = best.find(g.subject_id());
        if (it == best.end())
            best.emplace(g.subject_id(), RankedSubject{g.subject_id(), g.image_id(), s});
        else if (s.combined < it->second.score.combined)
            it->second = RankedSubject{g.subject_id(), g.image_id(), s};
    }

    std::vector<RankedSubject> ranked;
    ranked.reserve(best.size());
    for (auto& [id, r] : best)
        ranked.push_back(std::move(r));
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedSubject& a, const RankedSubject& b) {
        if (a.score.combined != b.score.combined)
            return a.score.combined < b.score.combined;
        return a.subject_id < b.subject_id;
    });
    return ranked;
}

std::string score_csv_header()
{
    return "probe_image_id,gallery_subject_id,constraint,vertex_raw,edge_raw,vertex_weighted,edge_weighted,combined,"
           "n_vertex_pairs,n_edge_pairs";
}

std::string score_csv_row(std::string_view probe_image_id, std::string_view gallery_subject_id,
                          const MatchScore& s)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, ",%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu", s.vertex_raw, s.edge_raw, s.vertex_weighted,
                  s.edge_weighted, s.combined, s.n_vertex_pairs, s.n_edge_pairs);
    std::string row;
    row += probe_image_id;
    row += ',';
    row += gallery_subject_id;
    row += ',';
    row += to_string(s.constraint);
    row += buf;
    return row;
}

}  // namespace siftgraph
