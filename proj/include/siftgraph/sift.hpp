#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "siftgraph/image.hpp"

namespace siftgraph {

inline constexpr int kDescriptorGrid = 4;
inline constexpr int kDescriptorPlanes = 8;
inline constexpr int kDescriptorLength = kDescriptorGrid * kDescriptorGrid * kDescriptorPlanes;

using Descriptor = std::array<float, kDescriptorLength>;

/// Detector and descriptor parameters. Intensities are on [0, 1].
struct SiftConfig {
    int scales_per_octave = 3;
    double base_sigma = 1.6;
    /// Blur assumed to be present in the input image.
    double input_blur = 0.5;
    /// Double the input once before octave 0.
    bool upsample = true;
    /// Octaves are added while both dimensions stay at or above this.
    int min_octave_size = 16;
    /// 0 means as many octaves as min_octave_size allows.
    int max_octaves = 0;

    double contrast_threshold = 0.03;
    /// Candidate prefilter: |DoG| must exceed ratio * contrast_threshold.
    double candidate_threshold_ratio = 0.5;
    double edge_ratio = 10.0;
    int max_refine_iterations = 5;

    int orientation_bins = 36;
    double orientation_peak_ratio = 0.8;
    /// Gaussian window sigma for orientation, in units of keypoint sigma.
    double orientation_window_factor = 1.5;

    /// Samples per side of the square descriptor window (multiple of 4).
    int descriptor_samples = 16;
    /// Width of one spatial descriptor cell, in units of keypoint sigma.
    double descriptor_magnification = 3.0;
    double descriptor_clamp = 0.2;

    /// Throws Error(InvalidArgument) naming the first out-of-range field.
    void validate() const;

    /// Canonical flat key=value block, one pair per line, fixed key order.
    std::string to_text() const;
    /// Accepts any subset of keys; unknown keys and malformed values throw.
    static SiftConfig from_text(std::string_view text);
    /// Sets one field from its textual form. Throws on unknown key.
    void set(std::string_view key, std::string_view value);

    /// 64-bit FNV-1a digest of to_text().
    std::uint64_t digest() const;

    friend bool operator==(const SiftConfig&, const SiftConfig&) = default;
};

/// One SIFT feature. Location and scale are in source-image pixels;
/// orientation is in radians on [0, 2*pi).
struct Keypoint {
    float x = 0.0f;
    float y = 0.0f;
    float scale = 0.0f;
    float orientation = 0.0f;
    Descriptor descriptor{};

    friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct Octave {
    /// scales_per_octave + 3 Gaussian layers.
    std::vector<FloatImage> gaussians;
    /// scales_per_octave + 2 layers; dog[i] = gaussians[i + 1] - gaussians[i].
    std::vector<FloatImage> dog;
};

struct ScaleSpace {
    std::vector<Octave> octaves;
    double base_sigma = 1.6;
    int scales_per_octave = 3;
    /// Source-image pixels per octave-0 pixel (0.5 when upsampled).
    double first_step = 1.0;
    int source_width = 0;
    int source_height = 0;

    /// Blur of gaussians[layer] in its own octave's pixel units.
    double layer_sigma(double layer) const;
    /// Blur of octave/layer expressed in octave-0 pixels: base * 2^(o + s/S).
    double absolute_sigma(int octave, double layer) const;
    /// Source-image pixels per pixel of the given octave.
    double step(int octave) const;
};

/// A strict 3x3x3 DoG extremum on the integer grid.
struct Extremum {
    int octave = 0;
    int layer = 0;  ///< DoG index, always in [1, scales_per_octave].
    int x = 0;
    int y = 0;
    float value = 0.0f;
};

enum class Rejection {
    None,
    NotConverged,
    OutOfBounds,
    LowContrast,
    EdgeResponse,
};

std::string_view to_string(Rejection reason);

/// Sub-pixel, sub-scale refined extremum.
struct LocalizedPoint {
    int octave = 0;
    int layer = 0;           ///< integer DoG layer after refinement moves
    double octave_x = 0.0;   ///< refined location in octave pixels
    double octave_y = 0.0;
    double layer_offset = 0.0;
    double contrast = 0.0;   ///< interpolated |D(x^)| sign preserved
    double octave_sigma = 0.0;
    /// Source-image location and scale.
    double x = 0.0;
    double y = 0.0;
    double scale = 0.0;
};

struct LocalizeResult {
    Rejection rejection = Rejection::None;
    LocalizedPoint point;

    bool accepted() const noexcept { return rejection == Rejection::None; }
};

struct OrientedPoint {
    LocalizedPoint point;
    double orientation = 0.0;
};

/// Converts `img` to [0, 1] and builds Gaussian and DoG octave stacks.
/// Throws ImageTooSmall below 16x16.
ScaleSpace build_scale_space(const GrayImage& img, const SiftConfig& cfg);
ScaleSpace build_scale_space(const FloatImage& img, const SiftConfig& cfg);

std::vector<Extremum> detect_keypoints(const ScaleSpace& ss, const SiftConfig& cfg);

LocalizeResult localize_keypoint(const ScaleSpace& ss, const Extremum& candidate, const SiftConfig& cfg);

/// Smoothed gradient-orientation histogram around a localized point; bin i
/// is centred on angle 2*pi*i/bins.
std::vector<double> orientation_histogram(const ScaleSpace& ss, const LocalizedPoint& point,
                                          const SiftConfig& cfg);

/// One output per histogram peak at or above the peak ratio; never empty.
std::vector<OrientedPoint> assign_orientations(const ScaleSpace& ss, const LocalizedPoint& point,
                                               const SiftConfig& cfg);

/// Returns nullopt when the sampling window leaves the usable image area
/// or the patch has no gradient energy.
std::optional<Descriptor> compute_descriptor(const ScaleSpace& ss, const OrientedPoint& point,
                                             const SiftConfig& cfg);

/// Full detector chain. Output is sorted by (y, x, scale, orientation).
/// Equalization is the caller's job.
std::vector<Keypoint> extract_features(const GrayImage& img, const SiftConfig& cfg);

/// Separable Gaussian blur with replicated borders.
FloatImage gaussian_blur(const FloatImage& img, double sigma);

}  // namespace siftgraph
