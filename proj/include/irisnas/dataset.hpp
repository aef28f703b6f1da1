#pragma once

#include "irisnas/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace irisnas {

struct ManifestEntry {
    std::string path;
    std::string subject;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using Manifest = std::vector<ManifestEntry>;

/// CSV with a `path,subject_id` header. Relative paths stay relative.
Manifest read_manifest(const std::filesystem::path& file);
void write_manifest(const std::filesystem::path& file, const Manifest& m);

enum class SplitScheme { sample_disjoint, subject_disjoint };

struct SplitSpec {
    SplitScheme scheme = SplitScheme::sample_disjoint;
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    Manifest train;
    Manifest val;
    Manifest test;
};

/// Sample-disjoint: per subject, round(val*n) / round(test*n) images go to
/// validation / test and train takes the rest. Subject-disjoint: the same
/// rounding over the shuffled subject list. Throws std::invalid_argument when
/// a subject has fewer than 2 images (sample-disjoint) or fewer than 10
/// subjects exist (subject-disjoint).
DatasetSplit split_dataset(const Manifest& m, const SplitSpec& spec);

/// Images stacked as [N,1,H,W] with dense class labels.
struct LabeledImages {
    Tensor<float> images;
    std::vector<std::size_t> labels;
    std::vector<std::string> subjects;  // per sample
    std::vector<std::string> classes;   // label -> subject id

    std::size_t size() const { return labels.size(); }
    std::size_t height() const { return images.shape().h; }
    std::size_t width() const { return images.shape().w; }
};

/// Assigns labels by position of each subject in `classes`; subjects missing
/// from `classes` raise std::out_of_range.
std::vector<std::size_t> label_subjects(const std::vector<std::string>& subjects,
                                        const std::vector<std::string>& classes);

/// Sorted unique subject ids of a manifest.
std::vector<std::string> subject_classes(const Manifest& m);

/// Area-averages an 8-bit image down by integer factors and centers it to
/// roughly zero mean, unit range.
std::vector<float> prepare_input(const std::vector<std::uint8_t>& pixels, std::size_t h, std::size_t w,
                                 std::size_t out_h, std::size_t out_w);

/// Reads every PGM listed in the manifest (paths resolved against `root`).
LabeledImages load_images(const Manifest& m, const std::filesystem::path& root, std::size_t out_h,
                          std::size_t out_w, const std::vector<std::string>& classes);

/// Selects rows of a stacked image tensor.
Tensor<float> gather(const Tensor<float>& images, const std::vector<std::size_t>& rows);

}  // namespace irisnas
