#include "siftgraph/error.hpp"

namespace siftgraph {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::CorruptHeader: return "CorruptHeader";
    case Errc::ImageTooSmall: return "ImageTooSmall";
    case Errc::TooFewKeypoints: return "TooFewKeypoints";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::SelfLoop: return "SelfLoop";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::EmptyList: return "EmptyList";
    case Errc::EmptyGallery: return "EmptyGallery";
    case Errc::DegenerateScores: return "DegenerateScores";
    case Errc::InsufficientClaims: return "InsufficientClaims";
    case Errc::MissingThreshold: return "MissingThreshold";
    case Errc::InvalidRate: return "InvalidRate";
    case Errc::GroupOverlap: return "GroupOverlap";
    case Errc::IoError: return "IoError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::MixedConfig: return "MixedConfig";
    case Errc::DuplicateEntry: return "DuplicateEntry";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code)
{
}

}  // namespace siftgraph
