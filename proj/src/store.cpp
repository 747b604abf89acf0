#include "siftgraph/store.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>

#include <zlib.h>

#include "siftgraph/error.hpp"

namespace siftgraph {

namespace {

class Writer {
public:
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i)
            bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i)
            bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void str(const std::string& s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes.insert(bytes.end(), s.begin(), s.end());
    }

    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t position() const { return pos_; }

    void need(std::size_t n) const
    {
        if (remaining() < n)
            throw Error(Errc::TruncatedFile, "gallery file ends inside a record at byte " + std::to_string(pos_));
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str()
    {
        std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::uint8_t kMagic[4] = {'G', 'S', 'F', 'T'};
constexpr std::size_t kKeypointBytes = 4 * (4 + kDescriptorLength);

std::uint32_t crc_of(std::span<const std::uint8_t> bytes)
{
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

void GalleryDb::add(FaceGraph graph, std::uint64_t cfg_digest)
{
    if (has_digest_ && cfg_digest != cfg_digest_)
        throw Error(Errc::MixedConfig, "entry '" + graph.image_id() +
                                           "' was extracted with a different detector config than the gallery");
    for (const auto& e : entries_)
        if (e.subject_id() == graph.subject_id() && e.image_id() == graph.image_id())
            throw Error(Errc::DuplicateEntry,
                        "entry (" + graph.subject_id() + ", " + graph.image_id() + ") already enrolled");
    cfg_digest_ = cfg_digest;
    has_digest_ = true;
    entries_.push_back(std::move(graph));
}

std::vector<std::uint8_t> encode_gallery(const GalleryDb& db)
{
    Writer w;
    w.bytes.insert(w.bytes.end(), std::begin(kMagic), std::end(kMagic));
    w.u32(db.format_version());
    w.u64(db.cfg_digest());
    w.u32(static_cast<std::uint32_t>(db.size()));
    for (const FaceGraph& g : db.entries()) {
        w.str(g.subject_id());
        w.str(g.image_id());
        w.u32(static_cast<std::uint32_t>(g.vertex_count()));
        for (const Keypoint& kp : g.vertices()) {
            w.f32(kp.x);
            w.f32(kp.y);
            w.f32(kp.scale);
            w.f32(kp.orientation);
            for (float d : kp.descriptor)
                w.f32(d);
        }
    }
    w.u32(crc_of(w.bytes));
    return std::move(w.bytes);
}

GalleryDb decode_gallery(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4)
        throw Error(Errc::TruncatedFile, "gallery file shorter than its magic");
    if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
        throw Error(Errc::BadMagic, "not a gallery file (magic mismatch)");

    Reader r(bytes.subspan(4));
    GalleryDb db;
    db.format_version_ = r.u32();
    if (db.format_version_ != kGalleryFormatVersion)
        throw Error(Errc::UnsupportedVersion, "gallery format version " + std::to_string(db.format_version_) +
                                                  " (supported: " + std::to_string(kGalleryFormatVersion) + ")");
    db.cfg_digest_ = r.u64();
    db.has_digest_ = true;
    const std::uint32_t count = r.u32();
    for (std::uint32_t e = 0; e < count; ++e) {
        std::string subject = r.str();
        std::string image = r.str();
        const std::uint32_t n = r.u32();
        r.need(static_cast<std::size_t>(n) * kKeypointBytes);
        std::vector<Keypoint> kps(n);
        for (Keypoint& kp : kps) {
            kp.x = r.f32();
            kp.y = r.f32();
            kp.scale = r.f32();
            kp.orientation = r.f32();
            for (float& d : kp.descriptor)
                d = r.f32();
        }
        db.add(FaceGraph(std::move(kps), std::move(subject), std::move(image)), db.cfg_digest_);
    }

    const std::size_t payload = 4 + r.position();
    const std::uint32_t stored = r.u32();
    if (r.remaining() != 0)
        throw Error(Errc::CorruptHeader, "unexpected bytes after gallery checksum");
    if (stored != crc_of(bytes.first(payload)))
        throw Error(Errc::ChecksumMismatch, "gallery checksum does not match payload");
    return db;
}

void save(const GalleryDb& db, const std::filesystem::path& path)
{
    const auto bytes = encode_gallery(db);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::IoError, "write failed: " + path.string());
}

GalleryDb load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot open gallery: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_gallery(bytes);
}

void export_text(const GalleryDb& db, std::ostream& out)
{
    out << "# subject_id image_id x y scale orientation d0..d127\n";
    char buf[32];
    for (const FaceGraph& g : db.entries()) {
        for (const Keypoint& kp : g.vertices()) {
            out << g.subject_id() << ' ' << g.image_id();
            for (float v : {kp.x, kp.y, kp.scale, kp.orientation}) {
                std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
                out << buf;
            }
            for (float v : kp.descriptor) {
                std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
                out << buf;
            }
            out << '\n';
        }
    }
}

}  // namespace siftgraph
