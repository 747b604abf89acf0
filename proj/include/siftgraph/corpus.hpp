#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "siftgraph/image.hpp"

namespace siftgraph {

/// Similarity transform plus photometric change applied to a subject's
/// canonical face proxy.
struct Perturbation {
    double rotation = 0.0;  ///< radians, about the image centre
    double scale = 1.0;
    double tx = 0.0;        ///< pixels
    double ty = 0.0;
    double gain = 1.0;
    double offset = 0.0;    ///< intensity levels
};

/// Renders subject `subject` of the procedural face-proxy family keyed by
/// `seed`: a soft elliptical face region filled with anisotropic Gaussian
/// blobs whose layout is unique per (seed, subject).
GrayImage render_face(std::uint64_t seed, int subject, const Perturbation& pert, int size = 128);

/// Draws a perturbation within the generator's ranges: rotation within
/// +/-20 degrees, scale 0.8-1.25, translation within +/-6 px, gain
/// 0.85-1.15, offset within +/-12 levels.
Perturbation random_perturbation(std::uint64_t seed, int subject, int image);

struct ManifestRow {
    std::string image_path;
    std::string subject_id;
    std::string image_id;
    std::string group;  ///< "G1" or "G2"
    std::string role;   ///< "train" or "test"

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// CSV with header image_path,subject_id,image_id,group,role. Relative
/// image paths are resolved against the manifest's directory by the reader.
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);

struct CorpusOptions {
    std::uint64_t seed = 42;
    int subjects = 10;
    int images_per_subject = 4;
    int size = 128;
};

/// Writes <out>/<subject>_<k>.pgm and <out>/manifest.csv. The first half
/// of the subjects form G1, the rest G2; image 0 of each subject is the
/// enrollment (train) image. Throws InvalidArgument for fewer than two
/// subjects and IoError when the directory cannot be written.
std::vector<ManifestRow> generate_corpus(const CorpusOptions& opts, const std::filesystem::path& out_dir);

std::string subject_name(int subject);

}  // namespace siftgraph
