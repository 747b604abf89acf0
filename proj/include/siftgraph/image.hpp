#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace siftgraph {

/// 8-bit single-channel raster, row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<const std::uint8_t> pixels() const noexcept { return data_; }
    std::span<std::uint8_t> pixels() noexcept { return data_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Real-valued single-channel raster used inside the scale space.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill)
    {
    }

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Intensities mapped to [0, 1].
FloatImage to_float(const GrayImage& img);

/// Reads a binary PGM (P5, maxval 255). Throws FileNotFound,
/// UnsupportedFormat or CorruptHeader.
GrayImage load_image(const std::filesystem::path& path);

/// Parses P5 bytes already in memory.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pgm(const GrayImage& img);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Global histogram equalization with the cdf_min-anchored remapping
/// L(v) = round(255 (cdf(v) - cdf_min) / (N - cdf_min)).
/// An image with a single occupied bin is returned unchanged.
GrayImage histogram_equalize(const GrayImage& img);

}  // namespace siftgraph
