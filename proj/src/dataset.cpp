#include "irisnas/dataset.hpp"

#include "irisnas/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace irisnas {

Manifest read_manifest(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw std::runtime_error("cannot open manifest " + file.string());
    Manifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (lineno == 1 && line == "path,subject_id")
            continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 == line.size())
            throw std::runtime_error(file.string() + ":" + std::to_string(lineno) + ": expected path,subject_id");
        m.push_back({line.substr(0, comma), line.substr(comma + 1)});
    }
    return m;
}

void write_manifest(const std::filesystem::path& file, const Manifest& m)
{
    std::ofstream out(file);
    if (!out)
        throw std::runtime_error("cannot write manifest " + file.string());
    out << "path,subject_id\n";
    for (const auto& e : m)
        out << e.path << "," << e.subject << "\n";
}

DatasetSplit split_dataset(const Manifest& m, const SplitSpec& spec)
{
    if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9 || spec.train < 0 || spec.val < 0 || spec.test < 0)
        throw std::invalid_argument("split fractions must be non-negative and sum to 1");
    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < m.size(); ++i)
        by_subject[m[i].subject].push_back(i);

    std::mt19937_64 rng(spec.seed);
    DatasetSplit out;
    auto take = [&](Manifest& dst, const std::vector<std::size_t>& idx) {
        for (std::size_t i : idx)
            dst.push_back(m[i]);
    };

    if (spec.scheme == SplitScheme::sample_disjoint) {
        for (auto& [subject, idx] : by_subject) {
            if (idx.size() < 2)
                throw std::invalid_argument("sample-disjoint split needs at least 2 images per subject; \"" + subject +
                                            "\" has " + std::to_string(idx.size()));
            std::shuffle(idx.begin(), idx.end(), rng);
            const auto n = static_cast<double>(idx.size());
            const auto n_val = static_cast<std::size_t>(std::llround(spec.val * n));
            const auto n_test = static_cast<std::size_t>(std::llround(spec.test * n));
            if (n_val + n_test > idx.size())
                throw std::invalid_argument("subject \"" + subject + "\" has too few images for the split");
            const auto mid = idx.begin() + static_cast<std::ptrdiff_t>(n_val);
            const auto last = mid + static_cast<std::ptrdiff_t>(n_test);
            take(out.val, {idx.begin(), mid});
            take(out.test, {mid, last});
            take(out.train, {last, idx.end()});
        }
        return out;
    }

    std::vector<std::string> subjects;
    for (const auto& kv : by_subject)
        subjects.push_back(kv.first);
    if (subjects.size() < 10)
        throw std::invalid_argument("subject-disjoint split needs at least 10 subjects, got " +
                                    std::to_string(subjects.size()));
    std::shuffle(subjects.begin(), subjects.end(), rng);
    const auto n = static_cast<double>(subjects.size());
    const auto n_val = static_cast<std::size_t>(std::llround(spec.val * n));
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test * n));
    for (std::size_t k = 0; k < subjects.size(); ++k) {
        Manifest& dst = k < n_val ? out.val : (k < n_val + n_test ? out.test : out.train);
        take(dst, by_subject[subjects[k]]);
    }
    return out;
}

std::vector<std::string> subject_classes(const Manifest& m)
{
    std::vector<std::string> s;
    for (const auto& e : m)
        s.push_back(e.subject);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

std::vector<std::size_t> label_subjects(const std::vector<std::string>& subjects,
                                        const std::vector<std::string>& classes)
{
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < classes.size(); ++k)
        index[classes[k]] = k;
    std::vector<std::size_t> labels;
    labels.reserve(subjects.size());
    for (const auto& s : subjects) {
        auto it = index.find(s);
        if (it == index.end())
            throw std::out_of_range("subject \"" + s + "\" is not among the known classes");
        labels.push_back(it->second);
    }
    return labels;
}

std::vector<float> prepare_input(const std::vector<std::uint8_t>& pixels, std::size_t h, std::size_t w,
                                 std::size_t out_h, std::size_t out_w)
{
    if (out_h == 0 || out_w == 0 || h % out_h != 0 || w % out_w != 0)
        throw std::invalid_argument("input " + std::to_string(h) + "x" + std::to_string(w) +
                                    " is not an integer multiple of " + std::to_string(out_h) + "x" +
                                    std::to_string(out_w));
    const std::size_t fy = h / out_h;
    const std::size_t fx = w / out_w;
    std::vector<double> acc(out_h * out_w, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            acc[(y / fy) * out_w + x / fx] += pixels[y * w + x];
    double mean = 0.0;
    for (auto& v : acc) {
        v /= static_cast<double>(fy * fx) * 255.0;
        mean += v;
    }
    mean /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double v : acc)
        var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(acc.size()));
    const double inv = sd > 1e-6 ? 1.0 / sd : 1.0;
    std::vector<float> out(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        out[i] = static_cast<float>((acc[i] - mean) * inv);
    return out;
}

LabeledImages load_images(const Manifest& m, const std::filesystem::path& root, std::size_t out_h,
                          std::size_t out_w, const std::vector<std::string>& classes)
{
    LabeledImages d;
    d.images = Tensor<float>(Shape{m.size(), 1, out_h, out_w});
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::filesystem::path p = m[i].path;
        if (p.is_relative())
            p = root / p;
        const GrayImage img = read_pgm(p);
        const auto v = prepare_input(img.pixels, img.height, img.width, out_h, out_w);
        std::copy(v.begin(), v.end(), d.images.data() + i * out_h * out_w);
        d.subjects.push_back(m[i].subject);
    }
    d.classes = classes;
    d.labels = label_subjects(d.subjects, classes);
    return d;
}

Tensor<float> gather(const Tensor<float>& images, const std::vector<std::size_t>& rows)
{
    const Shape s = images.shape();
    const std::size_t per = s.c * s.h * s.w;
    Tensor<float> out(Shape{rows.size(), s.c, s.h, s.w});
    for (std::size_t k = 0; k < rows.size(); ++k)
        std::copy_n(images.data() + rows[k] * per, per, out.data() + k * per);
    return out;
}

}  // namespace irisnas
