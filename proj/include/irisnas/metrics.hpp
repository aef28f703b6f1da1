#pragma once

// Verification metrics on dissimilarity scores: low score = same subject,
// a claim is accepted when score <= threshold.

#include "irisnas/iriscode.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace irisnas {

struct ScoreSet {
    std::vector<double> genuine;
    std::vector<double> impostor;

    /// Throws std::invalid_argument if either side is empty or non-finite.
    void validate() const;
};

struct RocPoint {
    double threshold = 0.0;
    double far = 0.0;
    double frr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // ascending threshold
    bool degenerate = false;       // all scores equal
};

/// n_thresholds == 0 sweeps every distinct score; otherwise an even grid over
/// the pooled range. A leading point below every score has FAR 0, FRR 1.
RocCurve roc(const ScoreSet& s, std::size_t n_thresholds = 0);

/// FAR at the FAR = FRR crossing, interpolated between the bracketing
/// thresholds. Degenerate curves give 0.5.
double eer(const RocCurve& curve);

/// FRR at the largest threshold whose FAR does not exceed far_target.
double frr_at_far(const RocCurve& curve, double far_target = 0.001);

inline constexpr std::size_t kImpostorRatio = 10;

/// Scores every same-subject pair as genuine and a seeded subsample of
/// different-subject pairs (at most ratio x genuine) as impostor.
ScoreSet pair_scores(const std::vector<std::string>& subjects,
                     const std::function<double(std::size_t, std::size_t)>& score, std::uint64_t seed,
                     std::size_t ratio = kImpostorRatio);

/// Classifier mode: every test sample claims every known identity; score is
/// 1 - probability of the claimed identity. Test subjects must be among
/// `classes`.
ScoreSet classifier_scores(const std::vector<std::vector<float>>& probabilities,
                           const std::vector<std::string>& subjects, const std::vector<std::string>& classes,
                           std::uint64_t seed, std::size_t ratio = kImpostorRatio);

/// Euclidean distance between embedding pairs.
ScoreSet embedding_scores(const std::vector<std::vector<float>>& embeddings, const std::vector<std::string>& subjects,
                          std::uint64_t seed, std::size_t ratio = kImpostorRatio);

/// Template Hamming distance between pairs.
ScoreSet hamming_scores(const std::vector<IrisTemplate>& templates, const std::vector<std::string>& subjects,
                        std::uint64_t seed, std::size_t ratio = kImpostorRatio, int max_shift = kDefaultMaxShift);

std::vector<std::vector<float>> softmax_rows(const std::vector<std::vector<float>>& logits);

void write_scores(const std::filesystem::path& path, const ScoreSet& s);
ScoreSet read_scores(const std::filesystem::path& path);
void write_roc(const std::filesystem::path& path, const RocCurve& c);

}  // namespace irisnas
