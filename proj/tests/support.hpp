#pragma once

// Shared generators and independent brute-force oracles for the test
// suites. Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "siftgraph/evaluation.hpp"
#include "siftgraph/facegraph.hpp"
#include "siftgraph/image.hpp"
#include "siftgraph/sift.hpp"

namespace siftgraph::testing {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0)
{
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline Descriptor random_descriptor(std::mt19937_64& rng)
{
    Descriptor d;
    double sq = 0.0;
    for (auto& v : d) {
        v = static_cast<float>(uniform(rng));
        sq += static_cast<double>(v) * v;
    }
    for (auto& v : d)
        v = static_cast<float>(v / std::sqrt(sq));
    return d;
}

inline Keypoint random_keypoint(std::mt19937_64& rng)
{
    Keypoint kp;
    kp.x = static_cast<float>(uniform(rng, 0.0, 128.0));
    kp.y = static_cast<float>(uniform(rng, 0.0, 128.0));
    kp.scale = static_cast<float>(uniform(rng, 0.8, 6.0));
    kp.orientation = static_cast<float>(uniform(rng, 0.0, 6.28));
    kp.descriptor = random_descriptor(rng);
    return kp;
}

inline FaceGraph random_graph(std::mt19937_64& rng, std::size_t n, std::string subject = "s", std::string image = "i")
{
    std::vector<Keypoint> kps;
    for (std::size_t i = 0; i < n; ++i)
        kps.push_back(random_keypoint(rng));
    return FaceGraph(std::move(kps), std::move(subject), std::move(image));
}

/// Probe graph that shares `shared` gallery vertices (descriptor jittered)
/// and adds unrelated ones, in shuffled order.
inline FaceGraph related_graph(std::mt19937_64& rng, const FaceGraph& g, std::size_t shared, std::size_t extra,
                               double jitter)
{
    std::vector<Keypoint> kps;
    for (std::size_t i = 0; i < shared && i < g.vertex_count(); ++i) {
        Keypoint kp = g.vertices()[i];
        double sq = 0.0;
        for (auto& v : kp.descriptor) {
            v = static_cast<float>(std::max(0.0, v + uniform(rng, -jitter, jitter)));
            sq += static_cast<double>(v) * v;
        }
        for (auto& v : kp.descriptor)
            v = static_cast<float>(v / std::sqrt(sq));
        kps.push_back(kp);
    }
    for (std::size_t i = 0; i < extra; ++i)
        kps.push_back(random_keypoint(rng));
    std::shuffle(kps.begin(), kps.end(), rng);
    return FaceGraph(std::move(kps), "p", "p");
}

inline double oracle_distance(const Descriptor& a, const Descriptor& b)
{
    long double sq = 0.0L;
    for (std::size_t k = 0; k < a.size(); ++k) {
        long double d = static_cast<long double>(a[k]) - b[k];
        sq += d * d;
    }
    return static_cast<double>(std::sqrt(sq));
}

/// Full distance table, rows = gallery, columns = probe.
inline std::vector<std::vector<double>> distance_table(const FaceGraph& g, const FaceGraph& p)
{
    std::vector<std::vector<double>> t(g.vertex_count(), std::vector<double>(p.vertex_count()));
    for (std::size_t i = 0; i < g.vertex_count(); ++i)
        for (std::size_t j = 0; j < p.vertex_count(); ++j)
            t[i][j] = oracle_distance(g.vertices()[i].descriptor, p.vertices()[j].descriptor);
    return t;
}

/// Mean over gallery rows of the row minimum.
inline double oracle_min_min_mean(const FaceGraph& g, const FaceGraph& p)
{
    auto t = distance_table(g, p);
    long double sum = 0.0L;
    for (const auto& row : t)
        sum += *std::min_element(row.begin(), row.end());
    return static_cast<double>(sum / t.size());
}

/// Index of the smallest entry (first on ties) and whether it passes the
/// ratio test against the second smallest entry.
inline std::pair<std::size_t, bool> oracle_best(const std::vector<double>& row, double ratio)
{
    std::vector<std::size_t> order(row.size());
    for (std::size_t j = 0; j < row.size(); ++j)
        order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    const double best = row[order[0]];
    const double second = row.size() > 1 ? row[order[1]] : std::numeric_limits<double>::infinity();
    return {order[0], best == 0.0 || best < ratio * second};
}

/// Exhaustive mutual-nearest-neighbour pairs (gallery, probe).
inline std::set<std::pair<std::size_t, std::size_t>> oracle_mutual(const FaceGraph& g, const FaceGraph& p, double ratio)
{
    auto t = distance_table(g, p);
    std::vector<std::vector<double>> tt(p.vertex_count(), std::vector<double>(g.vertex_count()));
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < t[i].size(); ++j)
            tt[j][i] = t[i][j];
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < t.size(); ++i) {
        auto [j, ok] = oracle_best(t[i], ratio);
        if (!ok)
            continue;
        auto [back, ok2] = oracle_best(tt[j], ratio);
        if (ok2 && back == i)
            out.insert({i, j});
    }
    return out;
}

/// Band of each value: 1..3 within that many population standard
/// deviations of the mean, 0 beyond.
inline std::vector<int> oracle_bands(const std::vector<double>& values, double* mu_out = nullptr,
                                     double* sigma_out = nullptr)
{
    long double sum = 0.0L;
    for (double v : values)
        sum += v;
    const long double mu = sum / values.size();
    long double sq = 0.0L;
    for (double v : values)
        sq += (v - mu) * (v - mu);
    const long double sigma = std::sqrt(sq / values.size());
    if (mu_out)
        *mu_out = static_cast<double>(mu);
    if (sigma_out)
        *sigma_out = static_cast<double>(sigma);
    std::vector<int> bands;
    for (double v : values) {
        long double dev = std::fabs(v - mu);
        int b = 0;
        for (int k = 3; k >= 1; --k)
            if (dev <= k * sigma)
                b = k;
        bands.push_back(b);
    }
    return bands;
}

struct OracleRates {
    double far;
    double frr;
};

/// Naive per-threshold claim count.
inline OracleRates oracle_rates(const std::vector<ScoreRecord>& recs, double t)
{
    std::size_t gen = 0, imp = 0, fa = 0, fr = 0;
    for (const auto& r : recs) {
        if (r.claimed_id == r.true_id) {
            ++gen;
            if (!(r.score <= t))
                ++fr;
        } else {
            ++imp;
            if (r.score <= t)
                ++fa;
        }
    }
    return {static_cast<double>(fa) / static_cast<double>(imp), static_cast<double>(fr) / static_cast<double>(gen)};
}

/// Exhaustive sweep over every observed score and the two sentinels;
/// returns (eer, threshold) with the smallest threshold on ties.
inline std::pair<double, double> oracle_eer(const std::vector<ScoreRecord>& recs)
{
    std::vector<double> ts;
    for (const auto& r : recs)
        ts.push_back(r.score);
    std::sort(ts.begin(), ts.end());
    const double inf = std::numeric_limits<double>::infinity();
    ts.insert(ts.begin(), std::nextafter(ts.front(), -inf));
    ts.push_back(std::nextafter(ts.back(), inf));
    double best_gap = inf, best_t = 0.0, best_eer = 0.0;
    for (double t : ts) {
        auto r = oracle_rates(recs, t);
        double gap = std::fabs(r.far - r.frr);
        if (gap < best_gap) {
            best_gap = gap;
            best_t = t;
            best_eer = 0.5 * (r.far + r.frr);
        }
    }
    return {best_eer, best_t};
}

/// Random genuine/impostor claims over `subjects` subjects.
inline std::vector<ScoreRecord> random_scores(std::mt19937_64& rng, std::size_t n, int subjects = 5,
                                              double genuine_shift = 0.3)
{
    std::vector<ScoreRecord> out;
    for (std::size_t k = 0; k < n; ++k) {
        int claimed = static_cast<int>(rng() % subjects);
        bool genuine = uniform(rng) < 0.3;
        int truth = genuine ? claimed : (claimed + 1 + static_cast<int>(rng() % (subjects - 1))) % subjects;
        double score = uniform(rng) + (genuine ? 0.0 : genuine_shift);
        // Quantize so that exact ties occur.
        score = std::round(score * 200.0) / 200.0;
        out.push_back({"s" + std::to_string(claimed), "s" + std::to_string(truth), score, "G1"});
    }
    return out;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("siftgraph_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Renders an isotropic Gaussian blob on a flat background.
inline FloatImage blob_image(int w, int h, std::vector<std::array<double, 4>> blobs /* cx, cy, sigma, amplitude */,
                             double background = 0.2)
{
    FloatImage img(w, h, static_cast<float>(background));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = background;
            for (const auto& b : blobs) {
                double dx = x - b[0], dy = y - b[1];
                v += b[3] * std::exp(-(dx * dx + dy * dy) / (2.0 * b[2] * b[2]));
            }
            img.at(x, y) = static_cast<float>(v);
        }
    return img;
}

inline GrayImage to_gray(const FloatImage& f)
{
    GrayImage g(f.width, f.height);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            g.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(f.at(x, y) * 255.0), 0L, 255L));
    return g;
}

}  // namespace siftgraph::testing
