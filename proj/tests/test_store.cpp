#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <zlib.h>

#include "siftgraph/error.hpp"
#include "siftgraph/store.hpp"
#include "support.hpp"

using namespace siftgraph;
using siftgraph::testing::TempDir;

namespace {

GalleryDb random_gallery(std::mt19937_64& rng, std::size_t entries)
{
    const std::uint64_t digest = rng();
    GalleryDb db(digest);
    for (std::size_t e = 0; e < entries; ++e) {
        std::size_t n = 2 + rng() % 20;
        std::string subject = "subj_" + std::to_string(rng() % 5) + (e % 3 == 0 ? "\xc3\xa9" : "");
        db.add(siftgraph::testing::random_graph(rng, n, subject, "img" + std::to_string(e)), digest);
    }
    return db;
}

Errc decode_error(const std::vector<std::uint8_t>& bytes)
{
    try {
        decode_gallery(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "decode_gallery accepted bad bytes";
    return Errc::InvalidArgument;
}

void restamp_crc(std::vector<std::uint8_t>& bytes)
{
    const uLong crc = crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4));
    for (int k = 0; k < 4; ++k)
        bytes[bytes.size() - 4 + k] = static_cast<std::uint8_t>(crc >> (8 * k));
}

}  // namespace

TEST(Store, EmptyGalleryHasFixedSize)
{
    GalleryDb db(0x0123456789abcdefULL);
    auto bytes = encode_gallery(db);
    ASSERT_EQ(bytes.size(), kEmptyGallerySize);
    EXPECT_EQ(std::memcmp(bytes.data(), "GSFT", 4), 0);
    EXPECT_EQ(bytes[4], 1);  // version, little-endian
    EXPECT_EQ(bytes[8], 0xef);
    EXPECT_EQ(bytes[15], 0x01);
    EXPECT_EQ(decode_gallery(bytes), db);
}

TEST(Store, LayoutOfOneEntry)
{
    GalleryDb db(7);
    Keypoint a{}, b{};
    a.x = 1.5f;
    b.x = 3.0f;
    db.add(FaceGraph({a, b}, "ab", "c"), 7);
    auto bytes = encode_gallery(db);
    // header 20 + ids (4+2) + (4+1) + count 4 + 2 * 132 floats + crc 4
    EXPECT_EQ(bytes.size(), 20u + 6 + 5 + 4 + 2 * 132 * 4 + 4);
    float x;
    std::memcpy(&x, bytes.data() + 20 + 6 + 5 + 4, 4);
    EXPECT_EQ(x, 1.5f);
}

TEST(Store, RoundTripAndDeterminism)
{
    TempDir dir("store");
    std::mt19937_64 rng(99);
    for (int k = 0; k < 25; ++k) {
        GalleryDb db = random_gallery(rng, rng() % 10);
        save(db, dir / "a.gsft");
        save(db, dir / "b.gsft");
        GalleryDb back = load(dir / "a.gsft");
        ASSERT_EQ(back, db);
        for (std::size_t e = 0; e < db.size(); ++e)
            EXPECT_DOUBLE_EQ(back.entries()[e].diameter(), db.entries()[e].diameter());
        std::ifstream fa(dir / "a.gsft", std::ios::binary), fb(dir / "b.gsft", std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
        ASSERT_EQ(sa, sb);
    }
}

TEST(Store, TenEntryFieldByField)
{
    std::mt19937_64 rng(5);
    GalleryDb db = random_gallery(rng, 10);
    GalleryDb back = decode_gallery(encode_gallery(db));
    ASSERT_EQ(back.size(), 10u);
    EXPECT_EQ(back.cfg_digest(), db.cfg_digest());
    EXPECT_EQ(back.format_version(), kGalleryFormatVersion);
    for (std::size_t e = 0; e < 10; ++e) {
        const auto& g = db.entries()[e];
        const auto& h = back.entries()[e];
        EXPECT_EQ(h.subject_id(), g.subject_id());
        EXPECT_EQ(h.image_id(), g.image_id());
        ASSERT_EQ(h.vertex_count(), g.vertex_count());
        for (std::size_t v = 0; v < g.vertex_count(); ++v) {
            const auto& p = g.vertices()[v];
            const auto& q = h.vertices()[v];
            EXPECT_EQ(std::memcmp(&p.x, &q.x, 4), 0);
            EXPECT_EQ(p.y, q.y);
            EXPECT_EQ(p.scale, q.scale);
            EXPECT_EQ(p.orientation, q.orientation);
            EXPECT_EQ(p.descriptor, q.descriptor);
        }
    }
}

TEST(Store, BadMagic)
{
    auto bytes = encode_gallery(GalleryDb(1));
    bytes[0] = 'X';
    EXPECT_EQ(decode_error(bytes), Errc::BadMagic);
}

TEST(Store, UnsupportedVersion)
{
    auto bytes = encode_gallery(GalleryDb(1));
    bytes[4] = 2;
    restamp_crc(bytes);
    EXPECT_EQ(decode_error(bytes), Errc::UnsupportedVersion);
}

TEST(Store, TruncationAnywhereIsDetected)
{
    std::mt19937_64 rng(8);
    auto bytes = encode_gallery(random_gallery(rng, 3));
    for (std::size_t cut = 4; cut < bytes.size(); cut += 13) {
        std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        ASSERT_EQ(decode_error(part), Errc::TruncatedFile) << "cut at " << cut;
    }
}

TEST(Store, FlippedBitFailsChecksum)
{
    std::mt19937_64 rng(9);
    auto bytes = encode_gallery(random_gallery(rng, 2));
    bytes[bytes.size() / 2] ^= 0x10;
    EXPECT_EQ(decode_error(bytes), Errc::ChecksumMismatch);
}

TEST(Store, TrailingBytesRejected)
{
    auto bytes = encode_gallery(GalleryDb(1));
    bytes.push_back(0);
    EXPECT_EQ(decode_error(bytes), Errc::CorruptHeader);
}

TEST(Store, AddEnforcesUniquenessAndConfig)
{
    std::mt19937_64 rng(10);
    GalleryDb db(5);
    db.add(siftgraph::testing::random_graph(rng, 3, "a", "1"), 5);
    try {
        db.add(siftgraph::testing::random_graph(rng, 3, "a", "1"), 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateEntry);
    }
    try {
        db.add(siftgraph::testing::random_graph(rng, 3, "a", "2"), 6);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MixedConfig);
    }
}

TEST(Store, LoadMissingFileIsIoError)
{
    try {
        load("/nonexistent/dir/g.gsft");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::IoError);
    }
}

TEST(Store, TextExportIsLossless)
{
    std::mt19937_64 rng(4);
    GalleryDb db = random_gallery(rng, 2);
    std::ostringstream os;
    export_text(db, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    ASSERT_EQ(line[0], '#');
    for (const auto& g : db.entries())
        for (const auto& kp : g.vertices()) {
            ASSERT_TRUE(std::getline(is, line));
            std::istringstream ls(line);
            std::string s, i;
            float v[132];
            ls >> s >> i;
            for (float& f : v)
                ls >> f;
            EXPECT_EQ(s, g.subject_id());
            EXPECT_EQ(v[0], kp.x);
            EXPECT_EQ(v[3], kp.orientation);
            for (int k = 0; k < 128; ++k)
                ASSERT_EQ(v[4 + k], kp.descriptor[k]);
        }
}
