#include "siftgraph/sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "siftgraph/error.hpp"

namespace siftgraph {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a)
{
    a = std::fmod(a, kTwoPi);
    if (a < 0.0)
        a += kTwoPi;
    if (a >= kTwoPi)
        a = 0.0;
    return a;
}

std::vector<double> gaussian_kernel(double sigma)
{
    int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k)
        v /= sum;
    return k;
}

// Accumulates w_i * (p_i - p_center) so a constant signal comes back
// bit-identical.
FloatImage convolve_rows(const FloatImage& in, const std::vector<double>& k)
{
    const int r = static_cast<int>(k.size() / 2);
    FloatImage out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        const float* row = &in.data[static_cast<std::size_t>(y) * in.width];
        for (int x = 0; x < in.width; ++x) {
            const double c = row[x];
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                int xx = std::clamp(x + i, 0, in.width - 1);
                acc += k[i + r] * (row[xx] - c);
            }
            out.at(x, y) = static_cast<float>(c + acc);
        }
    }
    return out;
}

FloatImage convolve_cols(const FloatImage& in, const std::vector<double>& k)
{
    const int r = static_cast<int>(k.size() / 2);
    FloatImage out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            const double c = in.at(x, y);
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                int yy = std::clamp(y + i, 0, in.height - 1);
                acc += k[i + r] * (in.at(x, yy) - c);
            }
            out.at(x, y) = static_cast<float>(c + acc);
        }
    }
    return out;
}

FloatImage upsample_double(const FloatImage& in)
{
    FloatImage out(in.width * 2, in.height * 2);
    for (int y = 0; y < out.height; ++y) {
        double sy = 0.5 * y;
        int y0 = static_cast<int>(sy);
        int y1 = std::min(y0 + 1, in.height - 1);
        double fy = sy - y0;
        for (int x = 0; x < out.width; ++x) {
            double sx = 0.5 * x;
            int x0 = static_cast<int>(sx);
            int x1 = std::min(x0 + 1, in.width - 1);
            double fx = sx - x0;
            double top = (1.0 - fx) * in.at(x0, y0) + fx * in.at(x1, y0);
            double bot = (1.0 - fx) * in.at(x0, y1) + fx * in.at(x1, y1);
            out.at(x, y) = static_cast<float>((1.0 - fy) * top + fy * bot);
        }
    }
    return out;
}

FloatImage downsample_half(const FloatImage& in)
{
    FloatImage out(in.width / 2, in.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = in.at(2 * x, 2 * y);
    return out;
}

FloatImage subtract(const FloatImage& a, const FloatImage& b)
{
    FloatImage out(a.width, a.height);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        out.data[i] = a.data[i] - b.data[i];
    return out;
}

struct Derivatives {
    double dx, dy, ds;
    double dxx, dyy, dss, dxy, dxs, dys;
};

Derivatives derivatives_at(const Octave& oct, int layer, int x, int y)
{
    const FloatImage& prev = oct.dog[layer - 1];
    const FloatImage& cur = oct.dog[layer];
    const FloatImage& next = oct.dog[layer + 1];
    const double c = cur.at(x, y);
    Derivatives d{};
    d.dx = 0.5 * (cur.at(x + 1, y) - cur.at(x - 1, y));
    d.dy = 0.5 * (cur.at(x, y + 1) - cur.at(x, y - 1));
    d.ds = 0.5 * (next.at(x, y) - prev.at(x, y));
    d.dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - 2.0 * c;
    d.dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - 2.0 * c;
    d.dss = next.at(x, y) + prev.at(x, y) - 2.0 * c;
    d.dxy = 0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
    d.dxs = 0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) + prev.at(x - 1, y));
    d.dys = 0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) + prev.at(x, y - 1));
    return d;
}

// Solves H * out = rhs for the symmetric 3x3 Hessian; false when singular.
bool solve3(const Derivatives& d, const std::array<double, 3>& rhs, std::array<double, 3>& out)
{
    double a[3][4] = {
        {d.dxx, d.dxy, d.dxs, rhs[0]},
        {d.dxy, d.dyy, d.dys, rhs[1]},
        {d.dxs, d.dys, d.dss, rhs[2]},
    };
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12)
            return false;
        if (pivot != col)
            for (int k = 0; k < 4; ++k)
                std::swap(a[col][k], a[pivot][k]);
        for (int r = 0; r < 3; ++r) {
            if (r == col)
                continue;
            double f = a[r][col] / a[col][col];
            for (int k = col; k < 4; ++k)
                a[r][k] -= f * a[col][k];
        }
    }
    for (int i = 0; i < 3; ++i)
        out[i] = a[i][3] / a[i][i];
    return true;
}

// Central-difference gradient; valid for 1 <= x <= w-2, 1 <= y <= h-2.
inline void pixel_gradient(const FloatImage& img, int x, int y, double& gx, double& gy)
{
    gx = 0.5 * (img.at(x + 1, y) - img.at(x - 1, y));
    gy = 0.5 * (img.at(x, y + 1) - img.at(x, y - 1));
}

int nearest_gaussian_layer(const ScaleSpace& ss, const LocalizedPoint& p)
{
    int layer = static_cast<int>(std::lround(p.layer + p.layer_offset));
    return std::clamp(layer, 0, ss.scales_per_octave + 2);
}

// Fixed point of repeated clamp-and-renormalize: the k largest entries sit at
// the cap and the rest share the remaining energy. A single pass would leave
// renormalized entries above the cap. Needs at least 1/cap^2 non-zero bins.
bool clamp_to_unit_sphere(std::array<double, kDescriptorLength>& v, double cap)
{
    std::array<int, kDescriptorLength> order{};
    for (int i = 0; i < kDescriptorLength; ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&v](int a, int b) { return v[a] > v[b]; });

    double rest = 0.0;
    for (double x : v)
        rest += x * x;
    for (int k = 0; k < kDescriptorLength; ++k) {
        const double budget = 1.0 - k * cap * cap;
        if (budget <= 0.0 || rest <= 0.0)
            return false;
        const double s = std::sqrt(budget / rest);
        if (s * v[order[k]] <= cap) {
            for (int j = 0; j < kDescriptorLength; ++j)
                v[order[j]] = j < k ? cap : v[order[j]] * s;
            return true;
        }
        rest -= v[order[k]] * v[order[k]];
    }
    return false;
}

}  // namespace

std::string_view to_string(Rejection reason)
{
    switch (reason) {
    case Rejection::None: return "None";
    case Rejection::NotConverged: return "NotConverged";
    case Rejection::OutOfBounds: return "OutOfBounds";
    case Rejection::LowContrast: return "LowContrast";
    case Rejection::EdgeResponse: return "EdgeResponse";
    }
    return "Unknown";
}

double ScaleSpace::layer_sigma(double layer) const
{
    return base_sigma * std::pow(2.0, layer / scales_per_octave);
}

double ScaleSpace::absolute_sigma(int octave, double layer) const
{
    return base_sigma * std::pow(2.0, octave + layer / scales_per_octave);
}

double ScaleSpace::step(int octave) const
{
    return first_step * std::ldexp(1.0, octave);
}

FloatImage gaussian_blur(const FloatImage& img, double sigma)
{
    if (sigma <= 0.0)
        return img;
    auto k = gaussian_kernel(sigma);
    return convolve_cols(convolve_rows(img, k), k);
}

ScaleSpace build_scale_space(const GrayImage& img, const SiftConfig& cfg)
{
    if (img.width() < 16 || img.height() < 16)
        throw Error(Errc::ImageTooSmall, "image must be at least 16x16, got " + std::to_string(img.width()) +
                                             "x" + std::to_string(img.height()));
    return build_scale_space(to_float(img), cfg);
}

ScaleSpace build_scale_space(const FloatImage& img, const SiftConfig& cfg)
{
    cfg.validate();
    if (img.width < 16 || img.height < 16)
        throw Error(Errc::ImageTooSmall, "image must be at least 16x16, got " + std::to_string(img.width) + "x" +
                                             std::to_string(img.height));

    ScaleSpace ss;
    ss.base_sigma = cfg.base_sigma;
    ss.scales_per_octave = cfg.scales_per_octave;
    ss.source_width = img.width;
    ss.source_height = img.height;

    FloatImage base = img;
    double have_sigma = cfg.input_blur;
    if (cfg.upsample) {
        base = upsample_double(img);
        have_sigma *= 2.0;
        ss.first_step = 0.5;
    }
    if (cfg.base_sigma > have_sigma)
        base = gaussian_blur(base, std::sqrt(cfg.base_sigma * cfg.base_sigma - have_sigma * have_sigma));

    const int layers = cfg.scales_per_octave + 3;
    const double k = std::pow(2.0, 1.0 / cfg.scales_per_octave);
    for (;;) {
        if (std::min(base.width, base.height) < cfg.min_octave_size && !ss.octaves.empty())
            break;
        if (cfg.max_octaves > 0 && static_cast<int>(ss.octaves.size()) >= cfg.max_octaves)
            break;

        Octave oct;
        oct.gaussians.reserve(layers);
        oct.gaussians.push_back(std::move(base));
        double sigma = cfg.base_sigma;
        for (int i = 1; i < layers; ++i) {
            double next = sigma * k;
            oct.gaussians.push_back(gaussian_blur(oct.gaussians.back(), std::sqrt(next * next - sigma * sigma)));
            sigma = next;
        }
        for (int i = 0; i + 1 < layers; ++i)
            oct.dog.push_back(subtract(oct.gaussians[i + 1], oct.gaussians[i]));

        // gaussians[S] carries twice the base blur: it seeds the next octave.
        base = downsample_half(oct.gaussians[cfg.scales_per_octave]);
        ss.octaves.push_back(std::move(oct));
    }
    return ss;
}

std::vector<Extremum> detect_keypoints(const ScaleSpace& ss, const SiftConfig& cfg)
{
    const float threshold = static_cast<float>(cfg.candidate_threshold_ratio * cfg.contrast_threshold);
    std::vector<Extremum> out;
    for (int o = 0; o < static_cast<int>(ss.octaves.size()); ++o) {
        const Octave& oct = ss.octaves[o];
        for (int s = 1; s + 1 < static_cast<int>(oct.dog.size()); ++s) {
            const FloatImage& cur = oct.dog[s];
            for (int y = 1; y < cur.height - 1; ++y) {
                for (int x = 1; x < cur.width - 1; ++x) {
                    const float v = cur.at(x, y);
                    if (!(std::abs(v) > threshold))
                        continue;
                    bool is_max = true;
                    bool is_min = true;
                    for (int ds = -1; ds <= 1 && (is_max || is_min); ++ds) {
                        const FloatImage& img = oct.dog[s + ds];
                        for (int dy = -1; dy <= 1; ++dy) {
                            for (int dx = -1; dx <= 1; ++dx) {
                                if (ds == 0 && dx == 0 && dy == 0)
                                    continue;
                                float n = img.at(x + dx, y + dy);
                                if (n >= v)
                                    is_max = false;
                                if (n <= v)
                                    is_min = false;
                            }
                        }
                    }
                    if (is_max || is_min)
                        out.push_back({o, s, x, y, v});
                }
            }
        }
    }
    return out;
}

LocalizeResult localize_keypoint(const ScaleSpace& ss, const Extremum& candidate, const SiftConfig& cfg)
{
    LocalizeResult result;
    const Octave& oct = ss.octaves.at(candidate.octave);
    const int w = oct.dog[0].width;
    const int h = oct.dog[0].height;
    const int last_layer = static_cast<int>(oct.dog.size()) - 2;

    int x = candidate.x;
    int y = candidate.y;
    int s = candidate.layer;
    std::array<double, 3> offset{};
    Derivatives d{};
    bool converged = false;
    for (int iter = 0; iter < cfg.max_refine_iterations; ++iter) {
        d = derivatives_at(oct, s, x, y);
        if (!solve3(d, {-d.dx, -d.dy, -d.ds}, offset)) {
            result.rejection = Rejection::NotConverged;
            return result;
        }
        if (std::abs(offset[0]) <= 0.5 && std::abs(offset[1]) <= 0.5 && std::abs(offset[2]) <= 0.5) {
            converged = true;
            break;
        }
        if (std::abs(offset[0]) > 1e3 || std::abs(offset[1]) > 1e3 || std::abs(offset[2]) > 1e3) {
            result.rejection = Rejection::NotConverged;
            return result;
        }
        x += static_cast<int>(std::lround(offset[0]));
        y += static_cast<int>(std::lround(offset[1]));
        s += static_cast<int>(std::lround(offset[2]));
        if (s < 1 || s > last_layer || x < 1 || x > w - 2 || y < 1 || y > h - 2) {
            result.rejection = Rejection::OutOfBounds;
            return result;
        }
    }
    if (!converged) {
        result.rejection = Rejection::NotConverged;
        return result;
    }

    const double contrast = oct.dog[s].at(x, y) + 0.5 * (d.dx * offset[0] + d.dy * offset[1] + d.ds * offset[2]);
    if (std::abs(contrast) < cfg.contrast_threshold) {
        result.rejection = Rejection::LowContrast;
        return result;
    }

    const double trace = d.dxx + d.dyy;
    const double det = d.dxx * d.dyy - d.dxy * d.dxy;
    const double r = cfg.edge_ratio;
    if (det <= 0.0 || trace * trace * r >= (r + 1.0) * (r + 1.0) * det) {
        result.rejection = Rejection::EdgeResponse;
        return result;
    }

    LocalizedPoint& p = result.point;
    p.octave = candidate.octave;
    p.layer = s;
    p.octave_x = x + offset[0];
    p.octave_y = y + offset[1];
    p.layer_offset = offset[2];
    p.contrast = contrast;
    p.octave_sigma = ss.layer_sigma(s + offset[2]);
    const double step = ss.step(candidate.octave);
    p.x = p.octave_x * step;
    p.y = p.octave_y * step;
    p.scale = p.octave_sigma * step;
    if (p.x < 0.0 || p.y < 0.0 || p.x >= ss.source_width || p.y >= ss.source_height)
        result.rejection = Rejection::OutOfBounds;
    return result;
}

std::vector<double> orientation_histogram(const ScaleSpace& ss, const LocalizedPoint& point, const SiftConfig& cfg)
{
    const int bins = cfg.orientation_bins;
    const FloatImage& img = ss.octaves.at(point.octave).gaussians[nearest_gaussian_layer(ss, point)];
    const double window_sigma = cfg.orientation_window_factor * point.octave_sigma;
    const int radius = static_cast<int>(std::lround(3.0 * window_sigma));
    const int cx = static_cast<int>(std::lround(point.octave_x));
    const int cy = static_cast<int>(std::lround(point.octave_y));

    std::vector<double> raw(bins, 0.0);
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > radius * radius)
                continue;
            const int px = cx + dx;
            const int py = cy + dy;
            if (px < 1 || py < 1 || px > img.width - 2 || py > img.height - 2)
                continue;
            double gx, gy;
            pixel_gradient(img, px, py, gx, gy);
            const double mag = std::hypot(gx, gy);
            const double weight = std::exp(-(dx * dx + dy * dy) / (2.0 * window_sigma * window_sigma));
            const double angle = wrap_angle(std::atan2(gy, gx));
            int bin = static_cast<int>(std::lround(angle * bins / kTwoPi)) % bins;
            raw[bin] += weight * mag;
        }
    }

    // Circular [1 4 6 4 1] / 16 smoothing.
    std::vector<double> hist(bins);
    for (int i = 0; i < bins; ++i) {
        auto at = [&](int j) { return raw[((j % bins) + bins) % bins]; };
        hist[i] = (at(i - 2) + at(i + 2) + 4.0 * (at(i - 1) + at(i + 1)) + 6.0 * at(i)) / 16.0;
    }
    return hist;
}

std::vector<OrientedPoint> assign_orientations(const ScaleSpace& ss, const LocalizedPoint& point,
                                               const SiftConfig& cfg)
{
    const auto hist = orientation_histogram(ss, point, cfg);
    const int bins = static_cast<int>(hist.size());
    const double peak = *std::max_element(hist.begin(), hist.end());

    std::vector<OrientedPoint> out;
    if (!(peak > 0.0)) {
        out.push_back({point, 0.0});
        return out;
    }
    for (int i = 0; i < bins; ++i) {
        const double l = hist[(i + bins - 1) % bins];
        const double c = hist[i];
        const double r = hist[(i + 1) % bins];
        if (!(c > l && c > r) || c < cfg.orientation_peak_ratio * peak)
            continue;
        const double offset = 0.5 * (l - r) / (l - 2.0 * c + r);
        out.push_back({point, wrap_angle((i + offset) * kTwoPi / bins)});
    }
    if (out.empty()) {
        // Plateau peaks have no strict local maximum; take the first maximal bin.
        auto it = std::max_element(hist.begin(), hist.end());
        out.push_back({point, wrap_angle(static_cast<double>(it - hist.begin()) * kTwoPi / bins)});
    }
    return out;
}

std::optional<Descriptor> compute_descriptor(const ScaleSpace& ss, const OrientedPoint& op, const SiftConfig& cfg)
{
    const LocalizedPoint& p = op.point;
    const FloatImage& img = ss.octaves.at(p.octave).gaussians[nearest_gaussian_layer(ss, p)];
    const int n = cfg.descriptor_samples;
    const double cell = cfg.descriptor_magnification * p.octave_sigma;
    const double window = cell * kDescriptorGrid;
    const double spacing = window / n;
    const double weight_sigma = 0.5 * window;
    const double cos_t = std::cos(op.orientation);
    const double sin_t = std::sin(op.orientation);
    const double samples_per_cell = static_cast<double>(n) / kDescriptorGrid;

    std::array<double, kDescriptorLength> hist{};
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double u = (c - 0.5 * (n - 1)) * spacing;
            const double v = (r - 0.5 * (n - 1)) * spacing;
            const double sx = p.octave_x + cos_t * u - sin_t * v;
            const double sy = p.octave_y + sin_t * u + cos_t * v;
            // Bilinear gradient lookup needs both neighbours inside [1, size-2].
            if (!(sx >= 1.0 && sy >= 1.0 && sx <= img.width - 2 && sy <= img.height - 2))
                return std::nullopt;
            int x0 = std::min(static_cast<int>(sx), img.width - 3);
            int y0 = std::min(static_cast<int>(sy), img.height - 3);
            const double fx = sx - x0;
            const double fy = sy - y0;
            double g[2][2][2];
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i)
                    pixel_gradient(img, x0 + i, y0 + j, g[j][i][0], g[j][i][1]);
            double gx = (1 - fy) * ((1 - fx) * g[0][0][0] + fx * g[0][1][0]) + fy * ((1 - fx) * g[1][0][0] + fx * g[1][1][0]);
            double gy = (1 - fy) * ((1 - fx) * g[0][0][1] + fx * g[0][1][1]) + fy * ((1 - fx) * g[1][0][1] + fx * g[1][1][1]);

            const double mag = std::hypot(gx, gy) * std::exp(-(u * u + v * v) / (2.0 * weight_sigma * weight_sigma));
            if (mag == 0.0)
                continue;
            const double rel = wrap_angle(std::atan2(gy, gx) - op.orientation);

            // Cell-centre coordinates: sample (c + 0.5) / samples_per_cell - 0.5.
            const double bx = (c + 0.5) / samples_per_cell - 0.5;
            const double by = (r + 0.5) / samples_per_cell - 0.5;
            const double bo = rel * kDescriptorPlanes / kTwoPi;
            const int ix = static_cast<int>(std::floor(bx));
            const int iy = static_cast<int>(std::floor(by));
            const int io = static_cast<int>(std::floor(bo));
            const double dx = bx - ix;
            const double dy = by - iy;
            const double dor = bo - io;
            for (int jy = 0; jy < 2; ++jy) {
                const int yy = iy + jy;
                if (yy < 0 || yy >= kDescriptorGrid)
                    continue;
                const double wy = jy ? dy : 1.0 - dy;
                for (int jx = 0; jx < 2; ++jx) {
                    const int xx = ix + jx;
                    if (xx < 0 || xx >= kDescriptorGrid)
                        continue;
                    const double wx = jx ? dx : 1.0 - dx;
                    for (int jo = 0; jo < 2; ++jo) {
                        const int oo = (io + jo) % kDescriptorPlanes;
                        const double wo = jo ? dor : 1.0 - dor;
                        hist[(yy * kDescriptorGrid + xx) * kDescriptorPlanes + oo] += mag * wx * wy * wo;
                    }
                }
            }
        }
    }

    auto normalize = [&hist]() {
        double sq = 0.0;
        for (double v : hist)
            sq += v * v;
        if (!(sq > 0.0))
            return false;
        const double inv = 1.0 / std::sqrt(sq);
        for (double& v : hist)
            v *= inv;
        return true;
    };
    if (!normalize())
        return std::nullopt;
    if (!clamp_to_unit_sphere(hist, cfg.descriptor_clamp))
        return std::nullopt;

    Descriptor out;
    for (int i = 0; i < kDescriptorLength; ++i)
        out[i] = static_cast<float>(hist[i]);
    return out;
}

std::vector<Keypoint> extract_features(const GrayImage& img, const SiftConfig& cfg)
{
    const ScaleSpace ss = build_scale_space(img, cfg);
    std::vector<Keypoint> out;
    for (const Extremum& e : detect_keypoints(ss, cfg)) {
        const LocalizeResult loc = localize_keypoint(ss, e, cfg);
        if (!loc.accepted())
            continue;
        for (const OrientedPoint& op : assign_orientations(ss, loc.point, cfg)) {
            auto desc = compute_descriptor(ss, op, cfg);
            if (!desc)
                continue;
            Keypoint kp;
            kp.x = static_cast<float>(loc.point.x);
            kp.y = static_cast<float>(loc.point.y);
            kp.scale = static_cast<float>(loc.point.scale);
            kp.orientation = static_cast<float>(op.orientation);
            // float rounding can land exactly on 2*pi.
            if (kp.orientation >= static_cast<float>(kTwoPi))
                kp.orientation = 0.0f;
            kp.descriptor = *desc;
            out.push_back(kp);
        }
    }
    std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
        return std::tie(a.y, a.x, a.scale, a.orientation) < std::tie(b.y, b.x, b.scale, b.orientation);
    });
    // Neighbouring candidates can refine onto the same point.
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace siftgraph
