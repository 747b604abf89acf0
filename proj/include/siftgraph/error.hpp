#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace siftgraph {

enum class Errc {
    FileNotFound,
    UnsupportedFormat,
    CorruptHeader,
    ImageTooSmall,
    TooFewKeypoints,
    IndexOutOfRange,
    SelfLoop,
    EmptyGraph,
    EmptyList,
    EmptyGallery,
    DegenerateScores,
    InsufficientClaims,
    MissingThreshold,
    InvalidRate,
    GroupOverlap,
    IoError,
    BadMagic,
    UnsupportedVersion,
    TruncatedFile,
    ChecksumMismatch,
    MixedConfig,
    DuplicateEntry,
    InvalidArgument,
};

std::string_view to_string(Errc code);

/// Every failure in the library surfaces as this exception; `code()` names
/// the failure class and `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace siftgraph
