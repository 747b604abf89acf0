#include "siftgraph/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "siftgraph/error.hpp"

namespace siftgraph {

namespace {

// mt19937_64 output is fully specified by the standard; the distribution
// classes are not, so values are mapped to [0, 1) by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Blob {
    double cx, cy;
    double inv_a2, inv_b2;  // 1 / (2 sigma^2) along the two axes
    double cos_t, sin_t;
    double amplitude;
};

struct FaceModel {
    double axis_x, axis_y;
    double face_level, background_level;
    std::vector<Blob> blobs;
};

FaceModel make_model(std::uint64_t seed, int subject, int size)
{
    Rng rng(mix(seed, static_cast<std::uint64_t>(subject) + 1));
    const double half = 0.5 * size;
    FaceModel m;
    m.axis_x = rng.uniform(0.34, 0.38) * size;
    m.axis_y = rng.uniform(0.38, 0.42) * size;
    m.face_level = rng.uniform(130.0, 145.0);
    m.background_level = rng.uniform(15.0, 30.0);

    const int count = 160;
    m.blobs.reserve(count);
    while (static_cast<int>(m.blobs.size()) < count) {
        double u = rng.uniform(-1.0, 1.0);
        double v = rng.uniform(-1.0, 1.0);
        if (u * u + v * v > 0.8)
            continue;
        Blob b;
        b.cx = half + u * m.axis_x;
        b.cy = half + v * m.axis_y;
        double sa = rng.uniform(1.2, 4.5);
        double sb = sa / rng.uniform(1.0, 3.0);
        b.inv_a2 = 1.0 / (2.0 * sa * sa);
        b.inv_b2 = 1.0 / (2.0 * sb * sb);
        double t = rng.uniform(0.0, std::numbers::pi);
        b.cos_t = std::cos(t);
        b.sin_t = std::sin(t);
        b.amplitude = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(40.0, 100.0);
        m.blobs.push_back(b);
    }
    return m;
}

double evaluate(const FaceModel& m, double x, double y, int size)
{
    const double half = 0.5 * size;
    const double ex = (x - half) / m.axis_x;
    const double ey = (y - half) / m.axis_y;
    // Signed distance proxy to the ellipse boundary, in pixels.
    const double r = std::sqrt(ex * ex + ey * ey);
    const double edge = (1.0 - r) * std::min(m.axis_x, m.axis_y);
    const double inside = 1.0 / (1.0 + std::exp(-edge / 1.5));

    double texture = 0.0;
    for (const Blob& b : m.blobs) {
        const double dx = x - b.cx;
        const double dy = y - b.cy;
        const double p = b.cos_t * dx + b.sin_t * dy;
        const double q = -b.sin_t * dx + b.cos_t * dy;
        const double e = p * p * b.inv_a2 + q * q * b.inv_b2;
        if (e < 30.0)
            texture += b.amplitude * std::exp(-e);
    }
    // Soft compression keeps overlapping blobs from clipping into flat areas.
    const double face = m.face_level + 90.0 * std::tanh(texture / 80.0);
    return m.background_level + inside * (face - m.background_level);
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

}  // namespace

std::string subject_name(int subject)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%03d", subject);
    return buf;
}

GrayImage render_face(std::uint64_t seed, int subject, const Perturbation& pert, int size)
{
    const FaceModel model = make_model(seed, subject, size);
    const double half = 0.5 * size;
    const double c = std::cos(pert.rotation);
    const double s = std::sin(pert.rotation);
    GrayImage img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            // Inverse similarity: output pixel -> canonical face coordinates.
            const double px = x - half - pert.tx;
            const double py = y - half - pert.ty;
            const double cx = half + (c * px + s * py) / pert.scale;
            const double cy = half + (-s * px + c * py) / pert.scale;
            double v = evaluate(model, cx, cy, size) * pert.gain + pert.offset;
            img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return img;
}

Perturbation random_perturbation(std::uint64_t seed, int subject, int image)
{
    Rng rng(mix(mix(seed, static_cast<std::uint64_t>(subject) + 1), static_cast<std::uint64_t>(image) + 0x51));
    Perturbation p;
    p.rotation = rng.uniform(-20.0, 20.0) * std::numbers::pi / 180.0;
    p.scale = std::exp(rng.uniform(std::log(0.8), std::log(1.25)));
    p.tx = rng.uniform(-6.0, 6.0);
    p.ty = rng.uniform(-6.0, 6.0);
    p.gain = rng.uniform(0.85, 1.15);
    p.offset = rng.uniform(-12.0, 12.0);
    return p;
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::FileNotFound, "file not found: " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw Error(Errc::CorruptHeader, "manifest is empty: " + path.string());
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "image_path,subject_id,image_id,group,role")
        throw Error(Errc::CorruptHeader, "unexpected manifest header: " + line);

    const auto base = path.parent_path();
    std::vector<ManifestRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto f = split_csv_line(line);
        if (f.size() != 5)
            throw Error(Errc::CorruptHeader, "manifest line " + std::to_string(lineno) + ": expected 5 fields");
        if (f[4] != "train" && f[4] != "test")
            throw Error(Errc::InvalidArgument, "manifest line " + std::to_string(lineno) + ": role must be train|test");
        std::filesystem::path p(f[0]);
        if (p.is_relative())
            p = base / p;
        rows.push_back({p.string(), f[1], f[2], f[3], f[4]});
    }
    return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open for writing: " + path.string());
    out << "image_path,subject_id,image_id,group,role\n";
    for (const auto& r : rows)
        out << r.image_path << ',' << r.subject_id << ',' << r.image_id << ',' << r.group << ',' << r.role << '\n';
    if (!out)
        throw Error(Errc::IoError, "write failed: " + path.string());
}

std::vector<ManifestRow> generate_corpus(const CorpusOptions& opts, const std::filesystem::path& out_dir)
{
    if (opts.subjects < 2)
        throw Error(Errc::InvalidArgument, "corpus needs at least 2 subjects");
    if (opts.images_per_subject < 2)
        throw Error(Errc::InvalidArgument, "corpus needs at least 2 images per subject");
    if (opts.size < 32)
        throw Error(Errc::InvalidArgument, "corpus image size must be at least 32");

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw Error(Errc::IoError, "cannot create directory " + out_dir.string() + ": " + ec.message());

    std::vector<ManifestRow> rows;
    const int g1 = (opts.subjects + 1) / 2;
    for (int s = 0; s < opts.subjects; ++s) {
        for (int k = 0; k < opts.images_per_subject; ++k) {
            const std::string subject = subject_name(s);
            const std::string image_id = subject + "_" + std::to_string(k);
            const std::string file = image_id + ".pgm";
            save_pgm(render_face(opts.seed, s, random_perturbation(opts.seed, s, k), opts.size), out_dir / file);
            rows.push_back({file, subject, image_id, s < g1 ? "G1" : "G2", k == 0 ? "train" : "test"});
        }
    }
    write_manifest(rows, out_dir / "manifest.csv");
    return rows;
}

}  // namespace siftgraph
