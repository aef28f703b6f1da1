// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include "cost_oracle.hpp"
#include "gradcheck.hpp"
#include "metric_oracle.hpp"
#include "polar_shift.hpp"

#include "irisnas/cli.hpp"
#include "irisnas/corpus.hpp"
#include "irisnas/iriscode.hpp"
#include "irisnas/metrics.hpp"
#include "irisnas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace irisnas;
using namespace irisnas::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t)
{
    return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Var weighted_total(Graph<double>& g, Var y)
{
    Var w = g.constant(random_tensor(g.value(y).shape(), 99));
    return sum(g, mul(g, y, w));
}

// ---- 1 ----

Outcome gradients()
{
    const auto t0 = Clock::now();
    constexpr double tol = 1e-4;
    const BatchNormArgs<double> bn{true, false};
    struct Case {
        std::string name;
        LossBuilder build;
        std::vector<Tensor<double>> inputs;
    };
    const std::vector<std::size_t> labels{1, 0, 3};
    std::vector<Case> cases;
    for (int d : {1, 2})
        cases.push_back({fmt("conv2d dilation %d", d),
                         [d](Graph<double>& g, const std::vector<Var>& v) { return weighted_total(g, conv2d(g, v[0], v[1], d)); },
                         {random_tensor({2, 3, 5, 6}, 1), random_tensor({2, 3, 3, 5}, 2)}});
    for (auto kind : {kernels::PoolKind::max, kernels::PoolKind::avg})
        cases.push_back({kind == kernels::PoolKind::max ? "maxpool" : "avgpool",
                         [kind](Graph<double>& g, const std::vector<Var>& v) {
                             return weighted_total(g, pool2d(g, v[0], kind, 2));
                         },
                         {random_tensor({2, 2, 5, 5}, 3)}});
    cases.push_back({"batchnorm",
                     [&](Graph<double>& g, const std::vector<Var>& v) {
                         return weighted_total(g, batchnorm(g, v[0], v[1], v[2], static_cast<RunningStats<double>*>(nullptr), bn));
                     },
                     {random_tensor({3, 2, 4, 4}, 4), random_tensor({1, 2, 1, 1}, 5, 0.5, 1.5), random_tensor({1, 2, 1, 1}, 6)}});
    cases.push_back({"relu", [](Graph<double>& g, const std::vector<Var>& v) { return weighted_total(g, relu(g, v[0])); },
                     {random_tensor({2, 3, 3, 4}, 7)}});
    cases.push_back({"identity/zero/add",
                     [](Graph<double>& g, const std::vector<Var>& v) {
                         return weighted_total(g, add(g, std::vector<Var>{identity_op(g, v[0]), zero_op(g, v[0]), v[1]}));
                     },
                     {random_tensor({2, 3, 3, 4}, 8), random_tensor({2, 3, 3, 4}, 9)}});
    cases.push_back({"mul/scale",
                     [](Graph<double>& g, const std::vector<Var>& v) {
                         return weighted_total(g, scale(g, mul(g, v[0], v[1]), 1.7));
                     },
                     {random_tensor({2, 3, 3, 4}, 10), random_tensor({2, 3, 3, 4}, 11)}});
    cases.push_back({"global avg pool",
                     [](Graph<double>& g, const std::vector<Var>& v) { return weighted_total(g, global_avg_pool(g, v[0])); },
                     {random_tensor({2, 3, 3, 4}, 12)}});
    cases.push_back({"softmax/weighted sum",
                     [](Graph<double>& g, const std::vector<Var>& v) {
                         const std::vector<std::size_t> slots{0, 2};
                         return weighted_total(g, weighted_sum(g, std::vector<Var>{v[0], v[1]}, softmax(g, v[2]), slots));
                     },
                     {random_tensor({1, 2, 3, 3}, 13), random_tensor({1, 2, 3, 3}, 14), random_tensor({1, 3, 1, 1}, 15)}});
    cases.push_back({"linear/cross-entropy",
                     [&](Graph<double>& g, const std::vector<Var>& v) {
                         return cross_entropy(g, linear(g, v[0], v[1], v[2]), labels);
                     },
                     {random_tensor({3, 5, 1, 1}, 16), random_tensor({4, 5, 1, 1}, 17), random_tensor({1, 4, 1, 1}, 18)}});
    cases.push_back({"slice/triplet",
                     [](Graph<double>& g, const std::vector<Var>& v) {
                         return triplet_loss(g, slice_batch(g, v[0], 0, 3), slice_batch(g, v[0], 3, 3),
                                             slice_batch(g, v[0], 6, 3), 2.0);
                     },
                     {random_tensor({9, 4, 1, 1}, 19)}});

    double worst = 0.0;
    std::string worst_name;
    std::size_t coords = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto r = grad_check(cases[i].build, cases[i].inputs, 100 + i);
        coords += r.checked;
        if (r.max_error >= worst) {
            worst = r.max_error;
            worst_name = cases[i].name;
        }
    }

    // full supernet, 4 nodes, every op on every edge, weights and logits
    NetworkConfig c;
    c.nodes = 4;
    c.channels = 3;
    c.outputs = 4;
    c.input_h = 6;
    c.input_w = 10;
    auto net = Network<double>::supernet(c, 20);
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    for (auto& e : net.edges())
        for (auto& v : e.logits.value.values())
            v = 0.5 * nd(rng);
    const auto x = random_tensor({4, 1, 6, 10}, 22);
    const std::vector<std::size_t> y{0, 1, 2, 3};
    auto loss = [&](bool backward) {
        Graph<double> g;
        Var l = cross_entropy(g, net.forward(g, g.input(x, false), ForwardOptions{true, false}), y);
        if (backward)
            g.backward(l);
        return g.value(l)[0];
    };
    auto params = net.weights();
    for (auto* p : net.arch_parameters())
        params.push_back(p);
    const auto r = grad_check_params([&] { return loss(false); }, [&] { loss(true); }, params, 23);
    coords += r.checked;
    if (r.max_error >= worst) {
        worst = r.max_error;
        worst_name = "supernet";
    }
    const double secs = seconds_since(t0);
    return {worst < tol && secs < 60.0,
            fmt("%zu checks, %zu coordinates, worst rel err %.2e (%s), %.1f s", cases.size() + 1, coords, worst,
                worst_name.c_str(), secs)};
}

// ---- 2 ----

Outcome cost_exactness()
{
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> ch(1, 16), ext(1, 24);
    const auto ops = OperationSet::with_dilated();
    std::uniform_int_distribution<std::size_t> pick(0, ops.size() - 1);
    std::size_t agree = 0;
    const std::size_t n = 20;
    for (std::size_t t = 0; t < n; ++t) {
        const OpKind op = ops[pick(rng)];
        const std::size_t cin = ch(rng), cout = op_info(op).is_conv ? ch(rng) : cin;
        const std::size_t h = ext(rng), w = ext(rng);
        agree += op_cost(op, cin, cout, h, w) == counted_op_cost(op, cin, cout, h, w);
    }
    const OpCost example = op_cost(OpKind::conv3x3, 16, 4, 8, 16);
    const OpCost counted = counted_op_cost(OpKind::conv3x3, 16, 4, 8, 16);
    const bool ok_example = example == OpCost{148480, 584} && counted == example;
    return {agree == n && ok_example,
            fmt("%zu/%zu configurations exact; conv3x3 16->4 at 8x16: %llu FLOPs / %llu params", agree, n,
                static_cast<unsigned long long>(counted.flops), static_cast<unsigned long long>(counted.params))};
}

// ---- 3 ----

Outcome mixed_op_consistency()
{
    NetworkConfig c;
    c.nodes = 2;
    c.channels = 3;
    c.outputs = 4;
    c.input_h = 6;
    c.input_w = 10;
    c.ops = OperationSet::with_dilated();
    auto net = Network<double>::supernet(c, 3);
    auto& e = net.edges().front();
    const auto x = random_tensor({2, 3, 6, 10}, 4);
    double worst = 0.0;
    for (std::size_t k = 0; k < c.ops.size(); ++k) {
        for (std::size_t o = 0; o < c.ops.size(); ++o)
            e.logits.value[o] = o == k ? 40.0 : 0.0;
        Graph<double> g;
        Var xi = g.input(x);
        const ForwardOptions opt{true, false};
        const auto& mixed = g.value(mixed_op_forward(g, e, xi, opt));
        const auto& single = g.value(apply_op(g, c.ops[k], e.units[k] ? &*e.units[k] : nullptr, xi, opt));
        for (std::size_t i = 0; i < mixed.size(); ++i)
            worst = std::max(worst, std::abs(mixed[i] - single[i]) / std::max(1.0, std::abs(single[i])));
    }

    NetworkConfig full;
    full.ops = OperationSet::with_dilated();
    auto big = Network<double>::supernet(full, 5);
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> pick(0, full.ops.size() - 1);
    std::size_t exact = 0;
    const std::size_t trials = 20;
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& edge : big.edges()) {
            edge.logits.value.fill(-1000.0);
            edge.logits.value[pick(rng)] = 1000.0;
        }
        const auto ec = big.expected_cost();
        const auto dc = discrete_cost(big.discretize());
        exact += ec.flops == static_cast<double>(dc.flops) && ec.params == static_cast<double>(dc.params);
    }
    return {worst < 1e-6 && exact == trials,
            fmt("%zu ops, worst rel diff %.2e; one-hot expected == discrete cost in %zu/%zu", c.ops.size(), worst, exact,
                trials)};
}

// ---- 4 ----

Outcome projection_contract()
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> frac(0.05, 0.95);
    std::size_t within = 0, idempotent = 0, untouched = 0;
    double worst_ratio = 0.0;
    const std::size_t n = 100;
    for (std::size_t t = 0; t < n; ++t) {
        NetworkConfig c;
        if (t % 2)
            c.ops = OperationSet::with_dilated();
        auto net = Network<float>::supernet(c, 1000 + t);
        for (auto& e : net.edges())
            for (auto& v : e.logits.value.values())
                v = static_cast<float>(2.0 * nd(rng));
        const auto start = net.expected_cost();
        const auto base = net.base();
        Budget b{static_cast<double>(base.flops) + frac(rng) * (start.flops - static_cast<double>(base.flops)),
                 kUnbounded};
        if (t % 3 == 0)
            b.params = static_cast<double>(base.params) + frac(rng) * (start.params - static_cast<double>(base.params));
        project(net, b);
        const auto after = net.expected_cost();
        const double ratio = std::max(after.flops / b.flops, after.params / b.params);
        worst_ratio = std::max(worst_ratio, ratio);
        within += ratio <= 1.0 + 1e-6;
        std::vector<std::vector<float>> snap;
        for (auto* p : net.arch_parameters())
            snap.push_back(p->value.values());
        project(net, b);
        bool same = true;
        for (std::size_t k = 0; k < snap.size(); ++k)
            same = same && net.arch_parameters()[k]->value.values() == snap[k];
        idempotent += same;

        // a budget above the current cost leaves the logits alone
        auto fresh = Network<float>::supernet(c, 2000 + t);
        std::vector<std::vector<float>> before;
        for (auto* p : fresh.arch_parameters())
            before.push_back(p->value.values());
        const auto fc = fresh.expected_cost();
        const auto r = project(fresh, Budget{fc.flops * 1.01, fc.params * 1.01});
        bool kept = !r.changed;
        for (std::size_t k = 0; k < before.size(); ++k)
            kept = kept && fresh.arch_parameters()[k]->value.values() == before[k];
        untouched += kept;
    }
    std::vector<EdgeCandidates> two{{{0.0, 0.0}, {{100, 0}, {0, 0}}}};
    const double lambda = project_logits(OpCost{}, two, Budget{25.0, kUnbounded}).lambda;
    const bool closed = std::abs(lambda - std::log(3.0)) <= 1e-4;
    return {within == n && idempotent == n && untouched == n && closed,
            fmt("%zu/%zu within budget (worst cost/budget %.9f), %zu/%zu idempotent, %zu/%zu feasible untouched, "
                "lambda %.6f vs ln 3 = %.6f",
                within, n, worst_ratio, idempotent, n, untouched, n, lambda, std::log(3.0))};
}

// ---- 5 and 6 ----

struct SearchRun {
    double found_eer = 0.0;
    double random_eer = 0.0;
    bool within_budget = true;
};

class SearchBench {
public:
    SearchBench()
    {
        CorpusParams cp;  // 200 identities x 10 captures
        const auto items = plan_corpus(cp);
        const auto irises = render_normalized(items);
        Manifest m;
        for (std::size_t i = 0; i < items.size(); ++i)
            m.push_back({std::to_string(i), items[i].subject});
        const auto split = split_dataset(m, SplitSpec{});
        classes_ = subject_classes(split.train);
        auto build = [&](const Manifest& part) {
            std::vector<NormalizedIris> v;
            std::vector<std::string> s;
            for (const auto& e : part) {
                v.push_back(irises[std::stoul(e.path)]);
                s.push_back(e.subject);
            }
            NetworkConfig nc;
            return to_labeled(v, s, classes_, nc.input_h, nc.input_w);
        };
        train_ = build(split.train);
        val_ = build(split.val);
        test_ = build(split.test);
        images_ = items.size();
    }

    SearchRun run(double budget_flops, std::uint64_t seed)
    {
        SearchConfig cfg;
        cfg.budget.flops = budget_flops;
        cfg.seed = seed;
        NetworkConfig nc;
        const auto res = run_search(cfg, nc, train_, val_);
        nc.outputs = classes_.size();
        std::mt19937_64 rng(seed + 1000);
        const auto random = random_architecture(nc, cfg.budget, rng);
        SearchRun r;
        r.found_eer = evaluate(res.architecture, cfg);
        r.random_eer = evaluate(random, cfg);
        r.within_budget = check_constraints(discrete_cost(res.architecture), cfg.budget).feasible &&
                          check_constraints(discrete_cost(random), cfg.budget).feasible;
        return r;
    }

    std::size_t images() const { return images_; }

private:
    double evaluate(const DiscreteArchitecture& a, SearchConfig cfg)
    {
        cfg.epochs = 10;
        cfg.steps_per_epoch = 0;
        auto trained = train_final(a, train_, cfg);
        const auto probs = softmax_rows(predict(trained.network, test_.images));
        return eer(roc(classifier_scores(probs, test_.subjects, classes_, cfg.seed)));
    }

    std::vector<std::string> classes_;
    LabeledImages train_, val_, test_;
    std::size_t images_ = 0;
};

struct Sweep {
    std::vector<double> budgets;
    std::vector<std::vector<SearchRun>> runs;  // per budget, per seed
    std::vector<double> seconds;               // per budget
    std::size_t images = 0;
};

constexpr double kBaseBudget = 0.75e6;
constexpr std::size_t kSeeds = 5;

Sweep& sweep(bool all_budgets)
{
    static Sweep s;
    static SearchBench* bench = nullptr;
    static bool full = false;
    if (!bench) {
        bench = new SearchBench;
        s.images = bench->images();
    }
    auto run_budget = [&](double b) {
        const auto t0 = Clock::now();
        std::vector<SearchRun> runs;
        for (std::uint64_t seed = 0; seed < kSeeds; ++seed)
            runs.push_back(bench->run(b, seed));
        s.budgets.push_back(b);
        s.runs.push_back(runs);
        s.seconds.push_back(seconds_since(t0));
    };
    if (s.budgets.empty())
        run_budget(2 * kBaseBudget);
    if (all_budgets && !full) {
        run_budget(kBaseBudget);
        run_budget(4 * kBaseBudget);
        full = true;
    }
    return s;
}

std::size_t index_of_budget(const Sweep& s, double b)
{
    return static_cast<std::size_t>(std::find(s.budgets.begin(), s.budgets.end(), b) - s.budgets.begin());
}

Outcome constrained_search()
{
    const auto& s = sweep(false);
    const std::size_t k = index_of_budget(s, 2 * kBaseBudget);
    std::vector<double> found, random;
    bool budget_ok = true;
    for (const auto& r : s.runs[k]) {
        found.push_back(r.found_eer);
        random.push_back(r.random_eer);
        budget_ok = budget_ok && r.within_budget;
    }
    const double mf = median(found), mr = median(random);
    std::string per_seed;
    for (std::size_t i = 0; i < found.size(); ++i)
        per_seed += fmt("%s%.4f/%.4f", i ? " " : "", found[i], random[i]);
    return {mf < mr && budget_ok && s.seconds[k] <= 1800.0,
            fmt("%zu images, budget %.2fM FLOPs, median EER found %.4f vs random %.4f (per seed %s), budgets %s, "
                "%.0f s",
                s.images, 2 * kBaseBudget / 1e6, mf, mr, per_seed.c_str(), budget_ok ? "met" : "VIOLATED", s.seconds[k])};
}

Outcome budget_trend()
{
    const auto& s = sweep(true);
    std::vector<double> med;
    std::string line;
    for (double b : {kBaseBudget, 2 * kBaseBudget, 4 * kBaseBudget}) {
        std::vector<double> found;
        for (const auto& r : s.runs[index_of_budget(s, b)])
            found.push_back(r.found_eer);
        med.push_back(median(found));
        line += fmt("%s%.2fM: %.4f", line.empty() ? "" : ", ", b / 1e6, med.back());
    }
    return {med[1] <= med[0] && med[2] <= med[1], "median found EER " + line};
}

// ---- 7 ----

Outcome segmentation_accuracy()
{
    const std::size_t n = 100;
    std::size_t ok = 0;
    auto close = [](const CircleParams& a, const CircleParams& b) {
        return std::abs(a.x0 - b.x0) <= 2.0 && std::abs(a.y0 - b.y0) <= 2.0 && std::abs(a.r - b.r) <= 2.0;
    };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rot(-std::numbers::pi, std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        SynthParams p;
        p.identity = i;
        p.rotation = rot(rng);
        p.noise_sigma = 5.0;
        const auto eye = synth_iris(5000 + i, p);
        try {
            const auto seg = segment(eye.eye.image);
            ok += close(seg.pupil, eye.truth.pupil) && close(seg.limbus, eye.truth.limbus);
        } catch (const SegmentationError&) {
        }
    }
    bool uniform_rejected = false;
    try {
        segment(GrayImage(256, 256, 128));
    } catch (const SegmentationError& e) {
        uniform_rejected = std::string(e.what()).find("no circular edge found") != std::string::npos;
    }
    return {ok * 100 >= 95 * n && uniform_rejected,
            fmt("%zu/%zu eyes within 2 px, uniform image %s", ok, n, uniform_rejected ? "rejected" : "NOT rejected")};
}

// ---- 8 ----

Outcome rotation_property()
{
    std::size_t ok = 0;
    std::string detail;
    const std::vector<double> angles{-20, -10, -5, 5, 10, 20};
    for (double deg : angles) {
        SynthParams p;
        p.geometry = Segmentation{{128, 128, 40}, {128, 128, 100}};
        p.identity = 8;
        const auto ref = synth_iris(80, p);
        p.rotation = deg * std::numbers::pi / 180.0;
        const auto rot = synth_iris(80, p);
        const int expected = static_cast<int>(std::lround(512.0 * p.rotation / (2 * std::numbers::pi)));
        const int got = correlation_shift(normalize(ref.eye.image, ref.truth).image, normalize(rot.eye.image, rot.truth).image);
        ok += std::abs(got - expected) <= 1;
        detail += fmt("%s%+.0f deg: %d/%d", detail.empty() ? "" : ", ", deg, got, expected);
    }
    return {ok == angles.size(), "recovered/expected shift " + detail};
}

// ---- 9 ----

Outcome iriscode_statistics()
{
    std::mt19937_64 rng(9);
    std::bernoulli_distribution coin(0.5);
    auto random_template = [&] {
        IrisTemplate t;
        t.code.resize(t.geometry.bits());
        t.mask.assign(t.geometry.bits(), 1);
        for (auto& b : t.code)
            b = coin(rng);
        return t;
    };
    double impostor = 0.0;
    const int pairs = 1000;
    for (int i = 0; i < pairs; ++i)
        impostor += match(random_template(), random_template(), 0).hd;
    impostor /= pairs;

    // full pipeline on rendered eyes: segment, normalize, encode, match
    std::uniform_real_distribution<double> rot(-10.0, 10.0);
    double genuine = 0.0;
    const int gpairs = 20;
    for (int i = 0; i < gpairs; ++i) {
        auto encode_eye = [&](std::uint64_t seed, double deg) {
            SynthParams p;
            p.identity = 900 + i;
            p.noise_sigma = 5.0;
            p.rotation = deg * std::numbers::pi / 180.0;
            const auto eye = synth_iris(seed, p);
            return encode(normalize_eye(eye.eye, segment(eye.eye.image)));
        };
        genuine += match(encode_eye(9000 + i, rot(rng)), encode_eye(9100 + i, rot(rng))).hd;
    }
    genuine /= gpairs;

    IrisCodeCounter enc, mat;
    SynthParams p;
    const auto a = encode(synth_normalized(1, p), GaborBank{}, &enc);
    p.identity = 1;
    const auto b = encode(synth_normalized(2, p));
    match(a, b, kDefaultMaxShift, &mat);
    const std::uint64_t flops = enc.flops() + mat.flops();
    const bool counted = enc.flops() == encode_flops(GaborBank{}) && mat.flops() == match_flops(a.geometry);
    const bool within = flops >= 0.25e6 && flops <= 1.0e6;
    return {std::abs(impostor - 0.5) <= 0.02 && genuine < 0.3 && counted && within,
            fmt("impostor mean hd %.4f over %d random pairs, genuine mean hd %.4f over %d rendered pairs, "
                "encode+match %llu FLOPs (counters %s)",
                impostor, pairs, genuine, gpairs, static_cast<unsigned long long>(flops), counted ? "agree" : "DISAGREE")};
}

// ---- 10 ----

Outcome metric_oracle()
{
    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<std::size_t> size(50, 1000);
    std::uniform_real_distribution<double> gap(0.5, 4.0);
    double worst_eer = 0.0, worst_frr = 0.0;
    std::size_t monotone = 0;
    const std::size_t n = 20;
    for (std::size_t t = 0; t < n; ++t) {
        ScoreSet s;
        const double d = gap(rng);
        for (std::size_t i = 0, k = size(rng); i < k; ++i)
            s.genuine.push_back(nd(rng));
        for (std::size_t i = 0, k = size(rng); i < k; ++i)
            s.impostor.push_back(d + nd(rng));
        const auto c = roc(s);
        worst_eer = std::max(worst_eer, std::abs(eer(c) - oracle_eer(s)));
        worst_frr = std::max(worst_frr, std::abs(frr_at_far(c, 0.001) - oracle_frr_at_far(s, 0.001)));
        bool mono = true;
        for (std::size_t i = 1; i < c.points.size(); ++i)
            mono = mono && c.points[i].far >= c.points[i - 1].far && c.points[i].frr <= c.points[i - 1].frr;
        monotone += mono;
    }
    return {worst_eer <= 0.005 && worst_frr <= 0.005 && monotone == n,
            fmt("worst |EER - oracle| %.2f pp, worst |FRR@0.1%% - oracle| %.2f pp, ROC monotone %zu/%zu",
                100 * worst_eer, 100 * worst_frr, monotone, n)};
}

// ---- 11 ----

int quiet_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "irisnas");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream sink;
    auto* out = std::cout.rdbuf(sink.rdbuf());
    auto* err = std::cerr.rdbuf(sink.rdbuf());
    const int status = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(out);
    std::cerr.rdbuf(err);
    return status;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / "irisnas_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    bool ok = quiet_cli({"synth-data", "--out", (dir / "data").string(), "--identities", "10", "--captures", "10",
                         "--normalized"}) == 0 &&
              quiet_cli({"preprocess", "--manifest", (dir / "data" / "manifest.csv").string(), "--out",
                         (dir / "prep").string(), "--no-templates"}) == 0;
    std::size_t compared = 0, identical = 0;
    for (int k = 0; ok && k < 2; ++k) {
        const auto s = dir / ("s" + std::to_string(k));
        ok = quiet_cli({"--seed", "7", "search", "--manifest", (dir / "prep" / "manifest.csv").string(), "--out",
                        s.string(), "--epochs", "3", "--warmup-epochs", "1", "--steps-per-epoch", "5",
                        "--budget-flops", "1500000"}) == 0 &&
             quiet_cli({"--seed", "7", "train", "--arch", (s / "architecture.json").string(), "--manifest",
                        (s / "train.csv").string(), "--epochs", "3", "--out", (dir / ("m" + std::to_string(k))).string()}) ==
                 0;
    }
    if (ok) {
        for (const char* f : {"architecture.json", "supernet.json", "trace.csv"}) {
            ++compared;
            identical += slurp(dir / "s0" / f) == slurp(dir / "s1" / f);
        }
        for (const char* f : {"architecture.json", "trace.csv", "weights.irnw"}) {
            ++compared;
            identical += slurp(dir / "m0" / f) == slurp(dir / "m1" / f);
        }
    }
    fs::remove_all(dir);
    return {ok && compared == identical && compared > 0,
            ok ? fmt("%zu/%zu artifacts bit-identical across repeated search and train runs", identical, compared)
               : std::string("pipeline run failed")};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradients},
        {"cost-model exactness", cost_exactness},
        {"mixed-op consistency", mixed_op_consistency},
        {"projection contract", projection_contract},
        {"constrained search beats random", constrained_search},
        {"budget sweep trend", budget_trend},
        {"segmentation accuracy", segmentation_accuracy},
        {"rotation to column shift", rotation_property},
        {"iriscode statistics", iriscode_statistics},
        {"metric oracle agreement", metric_oracle},
        {"determinism", determinism},
    };
    std::set<std::size_t> wanted;
    for (int i = 1; i < argc; ++i)
        wanted.insert(std::stoul(argv[i]));
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (!wanted.empty() && !wanted.count(k + 1))
            continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %2zu %-32s %s  %s [%.1f s]\n", k + 1, criteria[k].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
