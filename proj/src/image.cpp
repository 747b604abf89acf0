#include "siftgraph/image.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "siftgraph/error.hpp"

namespace siftgraph {

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill))
{
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data))
{
    if (width <= 0 || height <= 0)
        throw Error(Errc::InvalidArgument, "image dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw Error(Errc::InvalidArgument, "pixel buffer does not match dimensions");
}

FloatImage to_float(const GrayImage& img)
{
    FloatImage out(img.width(), img.height());
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        out.data[i] = static_cast<float>(px[i]) / 255.0f;
    return out;
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Skips whitespace and '#' comments, then reads a decimal integer.
    long next_int()
    {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw Error(Errc::CorruptHeader, "expected integer in PGM header");
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1L << 30))
                throw Error(Errc::CorruptHeader, "PGM header value out of range");
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw Error(Errc::CorruptHeader, "missing separator before PGM raster");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw Error(Errc::UnsupportedFormat, "not a PNM file");
    if (bytes[1] != '5') {
        // P6/P3 are colour, P2/P1/P4 are ASCII or bitmaps.
        throw Error(Errc::UnsupportedFormat,
                    std::string("unsupported PNM variant P") + static_cast<char>(bytes[1]));
    }

    HeaderReader reader(bytes);
    long width = reader.next_int();
    long height = reader.next_int();
    long maxval = reader.next_int();
    if (width <= 0 || height <= 0)
        throw Error(Errc::CorruptHeader, "PGM dimensions must be positive");
    if (maxval != 255)
        throw Error(Errc::UnsupportedFormat, "only 8-bit PGM (maxval 255) is supported");

    std::size_t offset = reader.raster_offset();
    std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (bytes.size() - offset != expected) {
        throw Error(Errc::CorruptHeader, "header declares " + std::to_string(expected) +
                                             " pixels but payload has " +
                                             std::to_string(bytes.size() - offset) + " bytes");
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height),
                     std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end()));
}

GrayImage load_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::FileNotFound, "file not found: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img)
{
    std::string header = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path)
{
    auto bytes = encode_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::IoError, "write failed: " + path.string());
}

GrayImage histogram_equalize(const GrayImage& img)
{
    std::array<std::size_t, 256> cdf{};
    for (auto v : img.pixels())
        ++cdf[v];
    for (std::size_t i = 1; i < cdf.size(); ++i)
        cdf[i] += cdf[i - 1];

    const std::size_t n = img.size();
    std::size_t cdf_min = 0;
    for (auto c : cdf) {
        if (c != 0) {
            cdf_min = c;
            break;
        }
    }
    if (cdf_min == n)
        return img;

    std::array<std::uint8_t, 256> lut{};
    const double denom = static_cast<double>(n - cdf_min);
    for (std::size_t v = 0; v < lut.size(); ++v) {
        double num = cdf[v] >= cdf_min ? static_cast<double>(cdf[v] - cdf_min) : 0.0;
        lut[v] = static_cast<std::uint8_t>(std::lround(255.0 * num / denom));
    }

    GrayImage out = img;
    for (auto& v : out.pixels())
        v = lut[v];
    return out;
}

}  // namespace siftgraph
