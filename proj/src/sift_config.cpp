#include <charconv>
#include <cstdio>
#include <string>

#include "siftgraph/error.hpp"
#include "siftgraph/sift.hpp"

namespace siftgraph {

namespace {

std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_real(std::string_view key, std::string_view text)
{
    // std::from_chars for double is available in libstdc++ 11.
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error(Errc::InvalidArgument, "bad real value for '" + std::string(key) + "': " + std::string(text));
    return v;
}

int parse_int(std::string_view key, std::string_view text)
{
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error(Errc::InvalidArgument, "bad integer value for '" + std::string(key) + "': " + std::string(text));
    return v;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    if (text == "1" || text == "true")
        return true;
    if (text == "0" || text == "false")
        return false;
    throw Error(Errc::InvalidArgument, "bad boolean value for '" + std::string(key) + "': " + std::string(text));
}

std::string_view trim(std::string_view s)
{
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw Error(Errc::InvalidArgument, std::string("detector config: ") + what);
}

}  // namespace

void SiftConfig::validate() const
{
    require(scales_per_octave >= 1 && scales_per_octave <= 16, "scales_per_octave must be in [1, 16]");
    require(base_sigma > 0.0, "base_sigma must be positive");
    require(input_blur >= 0.0, "input_blur must be non-negative");
    require(min_octave_size >= 8, "min_octave_size must be at least 8");
    require(max_octaves >= 0, "max_octaves must be non-negative");
    require(contrast_threshold >= 0.0, "contrast_threshold must be non-negative");
    require(candidate_threshold_ratio >= 0.0 && candidate_threshold_ratio <= 1.0,
            "candidate_threshold_ratio must be in [0, 1]");
    require(edge_ratio > 1.0, "edge_ratio must exceed 1");
    require(max_refine_iterations >= 1, "max_refine_iterations must be at least 1");
    require(orientation_bins >= 4 && orientation_bins <= 360, "orientation_bins must be in [4, 360]");
    require(orientation_peak_ratio > 0.0 && orientation_peak_ratio <= 1.0,
            "orientation_peak_ratio must be in (0, 1]");
    require(orientation_window_factor > 0.0, "orientation_window_factor must be positive");
    require(descriptor_samples >= kDescriptorGrid && descriptor_samples % kDescriptorGrid == 0,
            "descriptor_samples must be a positive multiple of 4");
    require(descriptor_magnification > 0.0, "descriptor_magnification must be positive");
    require(descriptor_clamp > 0.0 && descriptor_clamp <= 1.0, "descriptor_clamp must be in (0, 1]");
}

std::string SiftConfig::to_text() const
{
    std::string out;
    auto put = [&out](const char* key, const std::string& value) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };
    put("scales_per_octave", std::to_string(scales_per_octave));
    put("base_sigma", format_real(base_sigma));
    put("input_blur", format_real(input_blur));
    put("upsample", upsample ? "1" : "0");
    put("min_octave_size", std::to_string(min_octave_size));
    put("max_octaves", std::to_string(max_octaves));
    put("contrast_threshold", format_real(contrast_threshold));
    put("candidate_threshold_ratio", format_real(candidate_threshold_ratio));
    put("edge_ratio", format_real(edge_ratio));
    put("max_refine_iterations", std::to_string(max_refine_iterations));
    put("orientation_bins", std::to_string(orientation_bins));
    put("orientation_peak_ratio", format_real(orientation_peak_ratio));
    put("orientation_window_factor", format_real(orientation_window_factor));
    put("descriptor_samples", std::to_string(descriptor_samples));
    put("descriptor_magnification", format_real(descriptor_magnification));
    put("descriptor_clamp", format_real(descriptor_clamp));
    return out;
}

void SiftConfig::set(std::string_view key, std::string_view value)
{
    value = trim(value);
    if (key == "scales_per_octave") scales_per_octave = parse_int(key, value);
    else if (key == "base_sigma") base_sigma = parse_real(key, value);
    else if (key == "input_blur") input_blur = parse_real(key, value);
    else if (key == "upsample") upsample = parse_bool(key, value);
    else if (key == "min_octave_size") min_octave_size = parse_int(key, value);
    else if (key == "max_octaves") max_octaves = parse_int(key, value);
    else if (key == "contrast_threshold") contrast_threshold = parse_real(key, value);
    else if (key == "candidate_threshold_ratio") candidate_threshold_ratio = parse_real(key, value);
    else if (key == "edge_ratio") edge_ratio = parse_real(key, value);
    else if (key == "max_refine_iterations") max_refine_iterations = parse_int(key, value);
    else if (key == "orientation_bins") orientation_bins = parse_int(key, value);
    else if (key == "orientation_peak_ratio") orientation_peak_ratio = parse_real(key, value);
    else if (key == "orientation_window_factor") orientation_window_factor = parse_real(key, value);
    else if (key == "descriptor_samples") descriptor_samples = parse_int(key, value);
    else if (key == "descriptor_magnification") descriptor_magnification = parse_real(key, value);
    else if (key == "descriptor_clamp") descriptor_clamp = parse_real(key, value);
    else throw Error(Errc::InvalidArgument, "unknown detector config key '" + std::string(key) + "'");
}

SiftConfig SiftConfig::from_text(std::string_view text)
{
    SiftConfig cfg;
    while (!text.empty()) {
        auto eol = text.find('\n');
        auto line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (line.empty() || line.front() == '#')
            continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::InvalidArgument, "expected key=value, got '" + std::string(line) + "'");
        cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::uint64_t SiftConfig::digest() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_text()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace siftgraph
