#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "siftgraph/facegraph.hpp"

namespace siftgraph {

/// Gallery file layout, little-endian throughout:
///
///   "GSFT"            4 bytes magic
///   u32               format version (currently 1)
///   u64               detector config digest
///   u32               entry count
///   per entry:
///     u32 + bytes     subject_id (UTF-8)
///     u32 + bytes     image_id (UTF-8)
///     u32             keypoint count
///     per keypoint:   f32 x, y, scale, orientation, then 128 x f32 descriptor
///   u32               CRC-32 (zlib polynomial) of every preceding byte
///
/// An empty gallery is therefore exactly kEmptyGallerySize bytes.
inline constexpr std::uint32_t kGalleryFormatVersion = 1;
inline constexpr std::size_t kEmptyGallerySize = 24;

class GalleryDb {
public:
    GalleryDb() = default;
    explicit GalleryDb(std::uint64_t cfg_digest) : cfg_digest_(cfg_digest), has_digest_(true) {}

    /// Throws DuplicateEntry for a repeated (subject_id, image_id) and
    /// MixedConfig when `cfg_digest` differs from the gallery's.
    void add(FaceGraph graph, std::uint64_t cfg_digest);

    const std::vector<FaceGraph>& entries() const noexcept { return entries_; }
    std::uint64_t cfg_digest() const noexcept { return cfg_digest_; }
    std::uint32_t format_version() const noexcept { return format_version_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    friend bool operator==(const GalleryDb& a, const GalleryDb& b)
    {
        return a.format_version_ == b.format_version_ && a.cfg_digest_ == b.cfg_digest_ && a.entries_ == b.entries_;
    }

private:
    friend GalleryDb decode_gallery(std::span<const std::uint8_t> bytes);

    std::vector<FaceGraph> entries_;
    std::uint64_t cfg_digest_ = 0;
    bool has_digest_ = false;
    std::uint32_t format_version_ = kGalleryFormatVersion;
};

std::vector<std::uint8_t> encode_gallery(const GalleryDb& db);
/// Throws BadMagic, UnsupportedVersion, TruncatedFile, ChecksumMismatch or
/// CorruptHeader (bytes after the checksum).
GalleryDb decode_gallery(std::span<const std::uint8_t> bytes);

/// Throws IoError.
void save(const GalleryDb& db, const std::filesystem::path& path);
/// Throws IoError plus everything decode_gallery throws.
GalleryDb load(const std::filesystem::path& path);

/// One keypoint per line: subject_id image_id x y scale orientation d0..d127,
/// space separated, reals with 9 significant digits (lossless for f32).
void export_text(const GalleryDb& db, std::ostream& out);

}  // namespace siftgraph
