#pragma once

// Labeled synthetic corpus: identities x captures, each capture a random
// rotation, pupil geometry, texture jitter and noise draw.

#include "irisnas/dataset.hpp"
#include "irisnas/iris.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace irisnas {

struct CorpusParams {
    std::size_t identities = 200;
    std::size_t captures = 10;
    double max_rotation_deg = 10.0;
    double noise_sigma = 30.0;
    double phase_jitter = 0.8;
    double max_occlusion = 0.0;
    std::uint64_t seed = 0;
    TextureParams texture;
};

struct CorpusItem {
    std::string subject;
    std::uint64_t capture_seed = 0;
    SynthParams params;
};

/// Deterministic capture list; nothing is rendered yet.
std::vector<CorpusItem> plan_corpus(const CorpusParams& p);

std::string subject_name(std::size_t identity);

/// Renders each capture straight into the normalized 64x512 domain.
std::vector<NormalizedIris> render_normalized(const std::vector<CorpusItem>& items);

/// Area-downsampled, standardized model inputs with labels over `classes`.
LabeledImages to_labeled(const std::vector<NormalizedIris>& irises, const std::vector<std::string>& subjects,
                         const std::vector<std::string>& classes, std::size_t out_h, std::size_t out_w);

}  // namespace irisnas
