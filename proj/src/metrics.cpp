#include "irisnas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

namespace irisnas {

void ScoreSet::validate() const
{
    if (genuine.empty())
        throw std::invalid_argument("score set has no genuine scores");
    if (impostor.empty())
        throw std::invalid_argument("score set has no impostor scores");
    for (double v : genuine)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite genuine score");
    for (double v : impostor)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite impostor score");
}

RocCurve roc(const ScoreSet& s, std::size_t n_thresholds)
{
    s.validate();
    std::vector<double> gen = s.genuine;
    std::vector<double> imp = s.impostor;
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());
    const double lo = std::min(gen.front(), imp.front());
    const double hi = std::max(gen.back(), imp.back());

    std::vector<double> thresholds;
    if (n_thresholds == 0) {
        std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(thresholds));
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    } else if (n_thresholds == 1 || lo == hi) {
        thresholds.push_back(hi);
    } else {
        for (std::size_t k = 0; k < n_thresholds; ++k)
            thresholds.push_back(k + 1 == n_thresholds
                                     ? hi
                                     : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n_thresholds - 1));
    }

    RocCurve c;
    c.degenerate = lo == hi;
    c.points.push_back({std::nextafter(lo, -std::numeric_limits<double>::infinity()), 0.0, 1.0});
    const double ng = static_cast<double>(gen.size());
    const double ni = static_cast<double>(imp.size());
    for (double t : thresholds) {
        const auto acc_imp = std::upper_bound(imp.begin(), imp.end(), t) - imp.begin();
        const auto acc_gen = std::upper_bound(gen.begin(), gen.end(), t) - gen.begin();
        c.points.push_back({t, static_cast<double>(acc_imp) / ni, 1.0 - static_cast<double>(acc_gen) / ng});
    }
    return c;
}

double eer(const RocCurve& curve)
{
    if (curve.points.empty())
        throw std::invalid_argument("empty ROC curve");
    if (curve.degenerate)
        return 0.5;
    const auto& p = curve.points;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i].far - p[i].frr;
        if (d < 0.0)
            continue;
        if (d == 0.0 || i == 0)
            return p[i].far;
        const double d0 = p[i - 1].far - p[i - 1].frr;
        const double t = -d0 / (d - d0);
        return p[i - 1].far + t * (p[i].far - p[i - 1].far);
    }
    return p.back().far;
}

double frr_at_far(const RocCurve& curve, double far_target)
{
    if (curve.points.empty())
        throw std::invalid_argument("empty ROC curve");
    double frr = 1.0;
    for (const auto& q : curve.points)
        if (q.far <= far_target)
            frr = q.frr;
    return frr;
}

ScoreSet pair_scores(const std::vector<std::string>& subjects,
                     const std::function<double(std::size_t, std::size_t)>& score, std::uint64_t seed,
                     std::size_t ratio)
{
    std::vector<std::pair<std::size_t, std::size_t>> gen_pairs;
    std::vector<std::pair<std::size_t, std::size_t>> imp_pairs;
    for (std::size_t i = 0; i < subjects.size(); ++i)
        for (std::size_t j = i + 1; j < subjects.size(); ++j)
            (subjects[i] == subjects[j] ? gen_pairs : imp_pairs).emplace_back(i, j);
    if (gen_pairs.empty())
        throw std::invalid_argument("no genuine pairs: every subject has a single sample");
    if (imp_pairs.empty())
        throw std::invalid_argument("no impostor pairs: only one subject present");
    const std::size_t cap = ratio * gen_pairs.size();
    if (imp_pairs.size() > cap) {
        std::vector<std::pair<std::size_t, std::size_t>> kept;
        std::mt19937_64 rng(seed);
        std::sample(imp_pairs.begin(), imp_pairs.end(), std::back_inserter(kept), cap, rng);
        imp_pairs = std::move(kept);
    }
    ScoreSet s;
    for (auto [i, j] : gen_pairs)
        s.genuine.push_back(score(i, j));
    for (auto [i, j] : imp_pairs)
        s.impostor.push_back(score(i, j));
    return s;
}

ScoreSet classifier_scores(const std::vector<std::vector<float>>& probabilities,
                           const std::vector<std::string>& subjects, const std::vector<std::string>& classes,
                           std::uint64_t seed, std::size_t ratio)
{
    if (probabilities.size() != subjects.size())
        throw std::invalid_argument("one probability row per test sample is required");
    ScoreSet s;
    std::vector<std::pair<std::size_t, std::size_t>> imp_claims;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        const auto it = std::find(classes.begin(), classes.end(), subjects[i]);
        if (it == classes.end())
            throw std::invalid_argument("subject \"" + subjects[i] +
                                        "\" is not in the classifier's label set; classifier scoring needs seen subjects");
        if (probabilities[i].size() != classes.size())
            throw std::invalid_argument("probability row width differs from the number of classes");
        const auto truth = static_cast<std::size_t>(it - classes.begin());
        s.genuine.push_back(1.0 - static_cast<double>(probabilities[i][truth]));
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (c != truth)
                imp_claims.emplace_back(i, c);
    }
    if (s.genuine.empty())
        throw std::invalid_argument("no test samples");
    if (imp_claims.empty())
        throw std::invalid_argument("no impostor claims: only one class");
    const std::size_t cap = ratio * s.genuine.size();
    if (imp_claims.size() > cap) {
        std::vector<std::pair<std::size_t, std::size_t>> kept;
        std::mt19937_64 rng(seed);
        std::sample(imp_claims.begin(), imp_claims.end(), std::back_inserter(kept), cap, rng);
        imp_claims = std::move(kept);
    }
    for (auto [i, c] : imp_claims)
        s.impostor.push_back(1.0 - static_cast<double>(probabilities[i][c]));
    return s;
}

ScoreSet embedding_scores(const std::vector<std::vector<float>>& embeddings, const std::vector<std::string>& subjects,
                          std::uint64_t seed, std::size_t ratio)
{
    if (embeddings.size() != subjects.size())
        throw std::invalid_argument("one embedding per test sample is required");
    return pair_scores(
        subjects,
        [&](std::size_t i, std::size_t j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < embeddings[i].size(); ++k) {
                const double d = static_cast<double>(embeddings[i][k]) - static_cast<double>(embeddings[j][k]);
                acc += d * d;
            }
            return std::sqrt(acc);
        },
        seed, ratio);
}

ScoreSet hamming_scores(const std::vector<IrisTemplate>& templates, const std::vector<std::string>& subjects,
                        std::uint64_t seed, std::size_t ratio, int max_shift)
{
    if (templates.size() != subjects.size())
        throw std::invalid_argument("one template per test sample is required");
    return pair_scores(
        subjects, [&](std::size_t i, std::size_t j) { return match(templates[i], templates[j], max_shift).hd; }, seed,
        ratio);
}

std::vector<std::vector<float>> softmax_rows(const std::vector<std::vector<float>>& logits)
{
    std::vector<std::vector<float>> out;
    out.reserve(logits.size());
    for (const auto& row : logits) {
        std::vector<float> p(row.size());
        if (!row.empty()) {
            const double mx = *std::max_element(row.begin(), row.end());
            double sum = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k)
                sum += std::exp(static_cast<double>(row[k]) - mx);
            for (std::size_t k = 0; k < row.size(); ++k)
                p[k] = static_cast<float>(std::exp(static_cast<double>(row[k]) - mx) / sum);
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_scores(const std::filesystem::path& path, const ScoreSet& s)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "label,score\n";
    for (double v : s.genuine)
        out << "genuine," << v << "\n";
    for (double v : s.impostor)
        out << "impostor," << v << "\n";
}

ScoreSet read_scores(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    ScoreSet s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || (lineno == 1 && line == "label,score"))
            continue;
        const auto comma = line.find(',');
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (comma == std::string::npos)
            throw std::runtime_error(where + ": expected label,score");
        const std::string label = line.substr(0, comma);
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(line.substr(comma + 1), &used);
            if (used != line.size() - comma - 1)
                throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": bad score \"" + line.substr(comma + 1) + "\"");
        }
        if (label == "genuine")
            s.genuine.push_back(v);
        else if (label == "impostor")
            s.impostor.push_back(v);
        else
            throw std::runtime_error(where + ": label must be genuine or impostor, got \"" + label + "\"");
    }
    return s;
}

void write_roc(const std::filesystem::path& path, const RocCurve& c)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "threshold,far,frr\n";
    for (const auto& p : c.points)
        out << p.threshold << "," << p.far << "," << p.frr << "\n";
}

}  // namespace irisnas
