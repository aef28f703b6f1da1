#include "irisnas/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <random>

namespace irisnas {

std::string subject_name(std::size_t identity)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04zu", identity);
    return buf;
}

std::vector<CorpusItem> plan_corpus(const CorpusParams& p)
{
    if (p.identities == 0 || p.captures == 0)
        throw std::invalid_argument("corpus needs at least one identity and one capture");
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> rot(-p.max_rotation_deg, p.max_rotation_deg);
    std::uniform_real_distribution<double> occ(0.0, p.max_occlusion);
    std::vector<CorpusItem> items;
    items.reserve(p.identities * p.captures);
    for (std::size_t id = 0; id < p.identities; ++id)
        for (std::size_t c = 0; c < p.captures; ++c) {
            CorpusItem it;
            it.subject = subject_name(id);
            it.capture_seed = rng();
            it.params.identity = p.seed * 1000003ull + id;
            it.params.rotation = rot(rng) * std::numbers::pi / 180.0;
            it.params.noise_sigma = p.noise_sigma;
            it.params.phase_jitter = p.phase_jitter;
            it.params.occlusion = p.max_occlusion > 0.0 ? occ(rng) : 0.0;
            it.params.texture = p.texture;
            items.push_back(it);
        }
    return items;
}

std::vector<NormalizedIris> render_normalized(const std::vector<CorpusItem>& items)
{
    std::vector<NormalizedIris> out(items.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < items.size(); ++i)
        out[i] = synth_normalized(items[i].capture_seed, items[i].params);
    return out;
}

LabeledImages to_labeled(const std::vector<NormalizedIris>& irises, const std::vector<std::string>& subjects,
                         const std::vector<std::string>& classes, std::size_t out_h, std::size_t out_w)
{
    if (irises.size() != subjects.size())
        throw std::invalid_argument("one subject per image is required");
    LabeledImages d;
    d.images = Tensor<float>(Shape{irises.size(), 1, out_h, out_w});
    for (std::size_t i = 0; i < irises.size(); ++i) {
        const auto& img = irises[i].image;
        const auto v = prepare_input(img.pixels, img.height, img.width, out_h, out_w);
        std::copy(v.begin(), v.end(), d.images.data() + i * out_h * out_w);
    }
    d.subjects = subjects;
    d.classes = classes;
    d.labels = label_subjects(subjects, classes);
    return d;
}

}  // namespace irisnas
