#include "irisnas/cli.hpp"

#include "irisnas/architecture.hpp"
#include "irisnas/checkpoint.hpp"
#include "irisnas/corpus.hpp"
#include "irisnas/cost_model.hpp"
#include "irisnas/dataset.hpp"
#include "irisnas/iris.hpp"
#include "irisnas/iriscode.hpp"
#include "irisnas/metrics.hpp"
#include "irisnas/search.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace irisnas {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos)
        s += ".0";
    return s;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw std::runtime_error("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << text;
}

fs::path manifest_root(const fs::path& manifest, const std::string& root)
{
    return root.empty() ? manifest.parent_path() : fs::path(root);
}

// ---- synth-data ----------------------------------------------------------

struct SynthOptions {
    std::string out;
    std::size_t identities = 20;
    std::size_t captures = 5;
    double noise = CorpusParams{}.noise_sigma;
    double jitter = CorpusParams{}.phase_jitter;
    double rotation = CorpusParams{}.max_rotation_deg;
    double occlusion = 0.0;
    bool normalized = false;
};

json circle_json(const CircleParams& c)
{
    return json::array({c.x0, c.y0, c.r});
}

int run_synth(const SynthOptions& o, std::uint64_t seed)
{
    CorpusParams cp;
    cp.identities = o.identities;
    cp.captures = o.captures;
    cp.noise_sigma = o.noise;
    cp.phase_jitter = o.jitter;
    cp.max_rotation_deg = o.rotation;
    cp.max_occlusion = o.occlusion;
    cp.seed = seed;
    const auto items = plan_corpus(cp);
    const fs::path out = o.out;
    fs::create_directories(out / "images");
    Manifest m;
    json truth = json::array();
    std::map<std::string, std::size_t> count;
    for (const auto& it : items) {
        const std::string stem = it.subject + "_" + std::to_string(count[it.subject]++);
        const std::string rel = "images/" + stem + ".pgm";
        const std::string rel_mask = "images/" + stem + ".mask.pgm";
        Segmentation seg;
        if (o.normalized) {
            const NormalizedIris n = synth_normalized(it.capture_seed, it.params);
            write_pgm(out / rel, n.image);
            write_pgm(out / rel_mask, n.mask);
            seg = n.source;
        } else {
            const SynthEye e = synth_iris(it.capture_seed, it.params);
            write_pgm(out / rel, e.eye.image);
            write_pgm(out / rel_mask, *e.eye.mask);
            seg = e.truth;
        }
        m.push_back({rel, it.subject});
        truth.push_back({{"path", rel},
                         {"subject_id", it.subject},
                         {"pupil", circle_json(seg.pupil)},
                         {"limbus", circle_json(seg.limbus)},
                         {"rotation_deg", it.params.rotation * 180.0 / std::numbers::pi},
                         {"occlusion", it.params.occlusion},
                         {"normalized", o.normalized}});
    }
    write_manifest(out / "manifest.csv", m);
    write_text(out / "truth.json", truth.dump(2) + "\n");
    std::cerr << "wrote " << items.size() << " images to " << out.string() << "\n";
    return 0;
}

// ---- preprocess ----------------------------------------------------------

struct PreprocessOptions {
    std::string manifest;
    std::string root;
    std::string out;
    bool templates = true;
};

fs::path mask_path_for(const fs::path& image)
{
    fs::path p = image;
    p.replace_extension(".mask.pgm");
    return p;
}

int run_preprocess(const PreprocessOptions& o)
{
    const Manifest m = read_manifest(o.manifest);
    const fs::path root = manifest_root(o.manifest, o.root);
    const fs::path out = o.out;
    fs::create_directories(out / "images");
    Manifest normalized;
    json segs = json::array();
    std::set<std::string> stems;
    for (const auto& e : m) {
        fs::path src = e.path;
        if (src.is_relative())
            src = root / src;
        EyeImage eye{read_pgm(src), std::nullopt};
        if (fs::exists(mask_path_for(src)))
            eye.mask = read_pgm(mask_path_for(src));
        NormalizedIris n;
        if (eye.image.width == kNormCols && eye.image.height == kNormRows) {
            // already in the polar domain
            n.image = eye.image;
            n.mask = eye.mask ? *eye.mask : GrayImage(kNormCols, kNormRows, kMaskValid);
        } else {
            Segmentation seg;
            try {
                seg = segment(eye.image);
            } catch (const SegmentationError& err) {
                throw std::runtime_error(src.string() + ": " + err.what());
            }
            n = normalize_eye(eye, seg);
            segs.push_back({{"path", e.path}, {"pupil", circle_json(seg.pupil)}, {"limbus", circle_json(seg.limbus)}});
        }
        std::string stem = fs::path(e.path).stem().string();
        if (!stems.insert(stem).second)
            throw std::runtime_error("duplicate image name " + stem + " in manifest");
        const std::string rel = "images/" + stem + ".pgm";
        write_pgm(out / rel, n.image);
        write_pgm(out / ("images/" + stem + ".mask.pgm"), n.mask);
        if (o.templates)
            save_template(out / ("images/" + stem + ".iris"), encode(n));
        normalized.push_back({rel, e.subject});
    }
    write_manifest(out / "manifest.csv", normalized);
    write_text(out / "segmentation.json", segs.dump(2) + "\n");
    std::cerr << "normalized " << normalized.size() << " images into " << out.string() << "\n";
    return 0;
}

// ---- cost ----------------------------------------------------------------

struct BudgetOptions {
    double flops = kUnbounded;
    double params = kUnbounded;
};

std::string tsv_number(double v)
{
    if (!std::isfinite(v))
        return "inf";
    if (v == std::round(v) && std::abs(v) < 1e15)
        return std::to_string(static_cast<long long>(v));
    return format_number(v);
}

void print_row(const std::string& part, const std::string& op, double flops, double params)
{
    std::cout << part << '\t' << op << '\t' << tsv_number(flops) << '\t' << tsv_number(params) << '\n';
}

void print_row(const std::string& part, const std::string& op, const OpCost& c)
{
    std::cout << part << '\t' << op << '\t' << c.flops << '\t' << c.params << '\n';
}

void print_feasibility(const FeasibilityReport& r, const Budget& b)
{
    std::cout << "budget\t-\t" << tsv_number(b.flops) << '\t' << tsv_number(b.params) << '\n';
    std::cout << "feasible\t" << (r.feasible ? "yes" : "no") << "\t-\t-\n";
    for (const auto& v : r.violations)
        std::cout << "violation\t" << v.resource << '\t' << tsv_number(v.value) << '\t' << tsv_number(v.margin)
                  << '\n';
}

// TSV: part, op, flops, params. Supernet edges report softmax-weighted costs.
int run_cost(const std::string& file, const BudgetOptions& b)
{
    const std::string text = read_text(file);
    const Budget budget{b.flops, b.params};
    const json parsed = json::parse(text, nullptr, false);
    std::cout << "part\top\tflops\tparams\n";
    if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("logits")) {
        const SupernetState s = deserialize_supernet(text);
        const DiscreteArchitecture& a = s.arch;
        print_row("stem", "conv3x3", stem_cost(a.channels, a.input_h, a.input_w));
        for (const auto& [key, logits] : s.logits) {
            const auto w = edge_softmax(logits);
            double f = 0.0, p = 0.0;
            std::size_t best = 0;
            for (std::size_t o = 0; o < s.ops.size(); ++o) {
                const OpCost c = op_cost(s.ops[o], a.channels, a.channels, a.input_h, a.input_w);
                f += w[o] * static_cast<double>(c.flops);
                p += w[o] * static_cast<double>(c.params);
                if (w[o] > w[best])
                    best = o;
            }
            print_row(edge_key(key.first, key.second), "mixed(" + std::string(op_name(s.ops[best])) + ")", f, p);
        }
        print_row("head", std::string(head_name(a.head)), head_cost(a.channels, a.outputs, a.input_h, a.input_w));
        NetworkConfig nc;
        nc.nodes = a.nodes;
        nc.channels = a.channels;
        nc.head = a.head;
        nc.outputs = a.outputs;
        nc.input_h = a.input_h;
        nc.input_w = a.input_w;
        nc.ops = s.ops;
        auto net = Network<double>::supernet(nc, 0);
        net.load_state(s);
        const ExpectedCost c = net.expected_cost();
        print_row("expected", "-", c.flops, c.params);
        print_row("argmax", "-", discrete_cost(a));
        print_feasibility(check_constraints(c, budget), budget);
    } else {
        const DiscreteArchitecture a = deserialize_arch(text);
        print_row("stem", "conv3x3", stem_cost(a.channels, a.input_h, a.input_w));
        for (const auto& e : a.edges)
            print_row(edge_key(e.from, e.to), std::string(op_name(e.op)),
                      op_cost(e.op, a.channels, a.channels, a.input_h, a.input_w));
        print_row("head", std::string(head_name(a.head)), head_cost(a.channels, a.outputs, a.input_h, a.input_w));
        const OpCost c = discrete_cost(a);
        print_row("total", "-", c);
        print_feasibility(check_constraints(c, budget), budget);
    }
    return 0;
}

// ---- search / train ------------------------------------------------------

struct TrainingOptions {
    std::string manifest;
    std::string root;
    std::string out;
    std::string loss = "xent";
    std::string split = "sample";
    std::string ops = "plain";
    double budget_flops = kUnbounded;
    double budget_params = kUnbounded;
    double xi = 0.0;
    double lr_w = 0.2;
    double lr_alpha = 3.0;
    double alpha_l1 = 1e-3;
    double momentum = 0.9;
    double margin = 1.0;
    std::size_t epochs = 8;
    std::size_t warmup = 2;
    std::size_t batch = 32;
    std::size_t steps = 20;
    std::size_t patience = 10;
    std::size_t nodes = 4;
    std::size_t channels = 8;
    std::size_t embedding_dim = 32;
    std::size_t input_h = 8;
    std::size_t input_w = 64;
    std::string arch;
};

LossKind parse_loss(const std::string& s)
{
    if (s == "xent")
        return LossKind::cross_entropy;
    if (s == "triplet")
        return LossKind::triplet;
    throw UsageError("--loss must be xent or triplet");
}

SearchConfig search_config(const TrainingOptions& o, std::uint64_t seed)
{
    SearchConfig c;
    c.budget = {o.budget_flops, o.budget_params};
    c.xi = o.xi;
    c.lr_w = o.lr_w;
    c.lr_alpha = o.lr_alpha;
    c.alpha_l1 = o.alpha_l1;
    c.momentum = o.momentum;
    c.margin = o.margin;
    c.epochs = o.epochs;
    c.warmup_epochs = o.warmup;
    c.batch_size = o.batch;
    c.steps_per_epoch = o.steps;
    c.patience = o.patience;
    c.loss = parse_loss(o.loss);
    c.seed = seed;
    return c;
}

LabeledImages load_split(const Manifest& m, const fs::path& root, const TrainingOptions& o,
                         const std::vector<std::string>& classes)
{
    return load_images(m, root, o.input_h, o.input_w, classes);
}

void write_manifest_abs(const fs::path& file, const Manifest& m, const fs::path& root)
{
    Manifest abs;
    for (const auto& e : m) {
        fs::path p = e.path;
        if (p.is_relative())
            p = fs::absolute(root / p).lexically_normal();
        abs.push_back({p.string(), e.subject});
    }
    write_manifest(file, abs);
}

int run_search_cmd(const TrainingOptions& o, std::uint64_t seed)
{
    const SearchConfig cfg = search_config(o, seed);
    cfg.validate();
    const Manifest m = read_manifest(o.manifest);
    const fs::path root = manifest_root(o.manifest, o.root);
    SplitSpec spec;
    spec.seed = seed;
    if (o.split == "sample")
        spec.scheme = SplitScheme::sample_disjoint;
    else if (o.split == "subject")
        spec.scheme = SplitScheme::subject_disjoint;
    else
        throw UsageError("--split must be sample or subject");
    if (cfg.loss == LossKind::cross_entropy && spec.scheme == SplitScheme::subject_disjoint)
        throw UsageError("cross-entropy needs every evaluated subject in training; use --split sample or --loss triplet");
    const DatasetSplit split = split_dataset(m, spec);

    NetworkConfig nc;
    nc.nodes = o.nodes;
    nc.channels = o.channels;
    nc.input_h = o.input_h;
    nc.input_w = o.input_w;
    if (o.ops == "plain")
        nc.ops = OperationSet::plain();
    else if (o.ops == "dilated")
        nc.ops = OperationSet::with_dilated();
    else
        throw UsageError("--ops must be plain or dilated");

    const auto train_classes = subject_classes(split.train);
    if (cfg.loss == LossKind::cross_entropy) {
        nc.head = HeadKind::softmax;
        nc.outputs = train_classes.size();
    } else {
        nc.head = HeadKind::embedding;
        nc.outputs = o.embedding_dim;
    }
    // Fail fast on budgets below the fixed stem+head cost, before any image is read.
    const OpCost base = stem_cost(nc.channels, nc.input_h, nc.input_w) +
                        head_cost(nc.channels, nc.outputs, nc.input_h, nc.input_w);
    const auto base_report = check_constraints(base, cfg.budget);
    if (!base_report.feasible)
        throw InfeasibleBudget("budget infeasible: stem+head alone cost " + std::to_string(base.flops) + " FLOPs / " +
                                   std::to_string(base.params) + " params; " + base_report.describe(),
                               ExpectedCost{static_cast<double>(base.flops), static_cast<double>(base.params)});

    const LabeledImages train = load_split(split.train, root, o, train_classes);
    const LabeledImages val = load_split(split.val, root, o,
                                         cfg.loss == LossKind::cross_entropy ? train_classes
                                                                             : subject_classes(split.val));
    std::cerr << "search: " << train.size() << " train / " << val.size() << " val images, " << nc.outputs
              << " outputs\n";
    SearchResult res = run_search(cfg, nc, train, val);

    // --out is either the architecture file itself or a directory for it
    fs::path arch_file = o.out;
    if (arch_file.extension() != ".json")
        arch_file /= "architecture.json";
    const fs::path out = arch_file.parent_path().empty() ? fs::path(".") : arch_file.parent_path();
    fs::create_directories(out);
    write_text(arch_file, serialize_arch(res.architecture) + "\n");
    write_text(out / "supernet.json", serialize_supernet(res.supernet.state()) + "\n");
    write_text(out / "trace.csv", trace_csv(res.trace));
    write_manifest_abs(out / "train.csv", split.train, root);
    write_manifest_abs(out / "val.csv", split.val, root);
    write_manifest_abs(out / "test.csv", split.test, root);
    const OpCost c = discrete_cost(res.architecture);
    std::cout << json{{"flops", c.flops}, {"params", c.params}, {"edges", res.architecture.edges.size()}}.dump() << "\n";
    return 0;
}

int run_train_cmd(const TrainingOptions& o, std::uint64_t seed)
{
    if (o.arch.empty())
        throw UsageError("train needs --arch");
    SearchConfig cfg = search_config(o, seed);
    cfg.validate();
    DiscreteArchitecture a = deserialize_arch(read_text(o.arch));
    const Manifest m = read_manifest(o.manifest);
    const fs::path root = manifest_root(o.manifest, o.root);
    const auto classes = subject_classes(m);
    if (cfg.loss == LossKind::cross_entropy) {
        if (a.head != HeadKind::softmax)
            throw UsageError("cross-entropy training needs a softmax head");
        if (a.outputs != classes.size())
            throw UsageError("architecture has " + std::to_string(a.outputs) + " outputs but the manifest has " +
                             std::to_string(classes.size()) + " subjects");
    } else if (a.head != HeadKind::embedding) {
        throw UsageError("triplet training needs an embedding head");
    }
    TrainingOptions io = o;
    io.input_h = a.input_h;
    io.input_w = a.input_w;
    const LabeledImages train = load_split(m, root, io, classes);
    std::cerr << "train: " << train.size() << " images, " << cfg.epochs << " epochs\n";
    TrainResult r = train_final(a, train, cfg);

    const fs::path out = o.out;
    fs::create_directories(out);
    save_checkpoint(out / "weights.irnw", r.network.checkpoint());
    write_text(out / "architecture.json", serialize_arch(a) + "\n");
    write_text(out / "classes.json", json(classes).dump() + "\n");
    write_text(out / "trace.csv", trace_csv(r.trace));
    std::cout << json{{"final_train_loss", r.trace.back().train_loss}}.dump() << "\n";
    return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalOptions {
    std::string scores;
    std::string model;
    std::string manifest;
    std::string root;
    std::string templates;
    std::string roc_out;
    std::string scores_out;
    double far = 0.001;
    std::size_t n_thresholds = 0;
    int max_shift = kDefaultMaxShift;
};

int run_eval(const EvalOptions& o, std::uint64_t seed)
{
    ScoreSet s;
    const int sources = !o.scores.empty() + !o.model.empty() + !o.templates.empty();
    if (sources != 1)
        throw UsageError("eval needs exactly one of --scores, --model or --templates");
    if (!o.scores.empty()) {
        s = read_scores(o.scores);
    } else if (!o.model.empty()) {
        if (o.manifest.empty())
            throw UsageError("eval --model needs --manifest");
        const fs::path dir = o.model;
        const DiscreteArchitecture a = deserialize_arch(read_text(dir / "architecture.json"));
        const std::vector<std::string> classes = json::parse(read_text(dir / "classes.json")).get<std::vector<std::string>>();
        auto net = Network<float>::from_architecture(a, seed);
        net.load_checkpoint(load_checkpoint(dir / "weights.irnw"));
        const Manifest m = read_manifest(o.manifest);
        const fs::path root = manifest_root(o.manifest, o.root);
        const auto own = subject_classes(m);
        if (a.head == HeadKind::softmax) {
            for (const auto& e : m)
                if (std::find(classes.begin(), classes.end(), e.subject) == classes.end())
                    throw std::runtime_error("subject \"" + e.subject +
                                             "\" was not seen in training; classifier scores need seen subjects");
        }
        const LabeledImages data = load_images(m, root, a.input_h, a.input_w, a.head == HeadKind::softmax ? classes : own);
        const auto out = predict(net, data.images);
        s = a.head == HeadKind::softmax ? classifier_scores(softmax_rows(out), data.subjects, classes, seed)
                                        : embedding_scores(out, data.subjects, seed);
    } else {
        const Manifest m = read_manifest(o.templates);
        const fs::path root = manifest_root(o.templates, o.root);
        std::vector<IrisTemplate> ts;
        std::vector<std::string> subjects;
        for (const auto& e : m) {
            fs::path p = e.path;
            if (p.is_relative())
                p = root / p;
            if (p.extension() == ".pgm")
                p.replace_extension(".iris");
            ts.push_back(load_template(p));
            subjects.push_back(e.subject);
        }
        s = hamming_scores(ts, subjects, seed, kImpostorRatio, o.max_shift);
    }
    const RocCurve c = roc(s, o.n_thresholds);
    if (!o.roc_out.empty())
        write_roc(o.roc_out, c);
    if (!o.scores_out.empty())
        write_scores(o.scores_out, s);
    if (c.degenerate)
        std::cerr << "warning: all scores are equal; EER reported as 0.5\n";
    std::cout << "eer," << format_number(eer(c)) << "\n";
    std::cout << "frr_at_far," << format_number(frr_at_far(c, o.far)) << "\n";
    std::cout << "genuine," << s.genuine.size() << "\n";
    std::cout << "impostor," << s.impostor.size() << "\n";
    return 0;
}

int run_match(const std::string& a, const std::string& b, int max_shift)
{
    const MatchResult r = match(load_template(a), load_template(b), max_shift);
    std::cout << format_number(r.hd) << "," << r.best_shift << "," << r.valid_bits << "\n";
    return 0;
}

// ---- config merging ------------------------------------------------------

std::vector<std::string> json_to_args(const json& obj, const std::string& where)
{
    std::vector<std::string> args;
    for (const auto& [key, value] : obj.items()) {
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>())
                args.push_back(flag);
        } else if (value.is_number() || value.is_string()) {
            args.push_back(flag);
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        } else {
            throw UsageError("config " + where + ": value of \"" + key + "\" must be a number, string or boolean");
        }
    }
    return args;
}

}  // namespace

int cli_main(int argc, const char* const* argv)
{
    CLI::App app{"Constrained architecture search for iris recognition", "irisnas"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    std::string config;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--config", config, "JSON file of flag values; command-line flags override it");

    SynthOptions so;
    auto* synth = app.add_subcommand("synth-data", "write a labeled synthetic eye corpus");
    synth->add_option("--out", so.out, "output directory")->required();
    synth->add_option("--identities", so.identities)->capture_default_str();
    synth->add_option("--captures", so.captures, "images per identity")->capture_default_str();
    synth->add_option("--noise", so.noise, "gaussian noise sigma, gray levels")->capture_default_str();
    synth->add_option("--jitter", so.jitter, "per-capture texture phase jitter, radians")->capture_default_str();
    synth->add_option("--max-rotation", so.rotation, "degrees")->capture_default_str();
    synth->add_option("--max-occlusion", so.occlusion, "fraction of the iris covered from the top")->capture_default_str();
    synth->add_flag("--normalized", so.normalized, "emit 64x512 polar images directly");

    PreprocessOptions po;
    auto* prep = app.add_subcommand("preprocess", "segment and normalize every image of a manifest");
    prep->add_option("--manifest", po.manifest)->required();
    prep->add_option("--root", po.root, "base for relative paths (default: manifest directory)");
    prep->add_option("--out", po.out)->required();
    prep->add_flag("!--no-templates", po.templates, "skip IrisCode templates");

    std::string cost_file;
    BudgetOptions cost_budget;
    auto* cost = app.add_subcommand("cost", "FLOPs/params of an architecture or supernet JSON");
    cost->add_option("--arch", cost_file)->required();
    cost->add_option("--budget-flops", cost_budget.flops);
    cost->add_option("--budget-params", cost_budget.params);

    TrainingOptions so_search;
    TrainingOptions so_train;
    so_train.epochs = 10;
    so_train.steps = 0;
    auto add_training = [](CLI::App* sub, TrainingOptions& to) {
        sub->add_option("--manifest", to.manifest)->required();
        sub->add_option("--root", to.root);
        sub->add_option("--out", to.out)->required();
        sub->add_option("--loss", to.loss)->check(CLI::IsMember({"xent", "triplet"}))->capture_default_str();
        sub->add_option("--lr-w", to.lr_w)->capture_default_str();
        sub->add_option("--momentum", to.momentum)->capture_default_str();
        sub->add_option("--margin", to.margin, "triplet margin")->capture_default_str();
        sub->add_option("--epochs", to.epochs)->capture_default_str();
        sub->add_option("--batch-size", to.batch)->capture_default_str();
        sub->add_option("--steps-per-epoch", to.steps, "0 = full pass")->capture_default_str();
    };
    auto* search = app.add_subcommand("search", "constrained architecture search");
    add_training(search, so_search);
    search->add_option("--budget-flops", so_search.budget_flops);
    search->add_option("--budget-params", so_search.budget_params);
    search->add_option("--xi", so_search.xi, "virtual step; 0 = first order")->capture_default_str();
    search->add_option("--lr-alpha", so_search.lr_alpha)->capture_default_str();
    search->add_option("--alpha-l1", so_search.alpha_l1)->capture_default_str();
    search->add_option("--warmup-epochs", so_search.warmup)->capture_default_str();
    search->add_option("--patience", so_search.patience)->capture_default_str();
    search->add_option("--split", so_search.split)->check(CLI::IsMember({"sample", "subject"}))->capture_default_str();
    search->add_option("--ops", so_search.ops)->check(CLI::IsMember({"plain", "dilated"}))->capture_default_str();
    search->add_option("--nodes", so_search.nodes)->capture_default_str();
    search->add_option("--channels", so_search.channels)->capture_default_str();
    search->add_option("--embedding-dim", so_search.embedding_dim)->capture_default_str();
    search->add_option("--input-h", so_search.input_h)->capture_default_str();
    search->add_option("--input-w", so_search.input_w)->capture_default_str();
    auto* train = app.add_subcommand("train", "train a discrete architecture from scratch");
    add_training(train, so_train);
    train->add_option("--arch", so_train.arch)->required();

    EvalOptions eo;
    auto* eval = app.add_subcommand("eval", "verification metrics from scores, a trained model or templates");
    eval->add_option("--scores", eo.scores, "CSV label,score");
    eval->add_option("--model", eo.model, "directory written by train");
    eval->add_option("--manifest", eo.manifest, "test images for --model");
    eval->add_option("--root", eo.root);
    eval->add_option("--templates", eo.templates, "manifest of preprocessed images with templates");
    eval->add_option("--far", eo.far)->capture_default_str();
    eval->add_option("--n-thresholds", eo.n_thresholds, "0 = every distinct score")->capture_default_str();
    eval->add_option("--max-shift", eo.max_shift)->capture_default_str();
    eval->add_option("--roc-out", eo.roc_out);
    eval->add_option("--scores-out", eo.scores_out);

    std::string tpl_a, tpl_b;
    int match_shift = kDefaultMaxShift;
    auto* matchc = app.add_subcommand("match", "Hamming distance between two template files");
    matchc->add_option("a", tpl_a)->required();
    matchc->add_option("b", tpl_b)->required();
    matchc->add_option("--max-shift", match_shift)->capture_default_str();

    try {
        // Config values go in front of the user's flags so TakeLast lets the
        // command line win.
        std::vector<std::string> args(argv + 1, argv + argc);
        std::string config_path;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size())
                config_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0)
                config_path = args[i].substr(9);
        }
        if (!config_path.empty()) {
            const json cfg = json::parse(read_text(config_path));
            if (!cfg.is_object())
                throw UsageError("config must be a JSON object");
            std::size_t sub_at = args.size();
            for (std::size_t i = 0; i < args.size(); ++i)
                if (app.get_subcommand_no_throw(args[i])) {
                    sub_at = i;
                    break;
                }
            if (sub_at == args.size())
                throw UsageError("a subcommand is required");
            const std::string sub = args[sub_at];
            json global = json::object();
            json local = json::object();
            for (const auto& [key, value] : cfg.items()) {
                if (value.is_object()) {
                    if (key == sub)
                        local.update(value);
                    else if (!app.get_subcommand_no_throw(key))
                        throw UsageError("config: unknown section \"" + key + "\"");
                } else if (key == "seed") {
                    global[key] = value;
                } else {
                    local[key] = value;
                }
            }
            std::vector<std::string> merged = json_to_args(global, "globals");
            merged.insert(merged.end(), args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_at) + 1);
            const auto loc = json_to_args(local, sub);
            merged.insert(merged.end(), loc.begin(), loc.end());
            merged.insert(merged.end(), args.begin() + static_cast<std::ptrdiff_t>(sub_at) + 1, args.end());
            args = std::move(merged);
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (synth->parsed())
            return run_synth(so, seed);
        if (prep->parsed())
            return run_preprocess(po);
        if (cost->parsed())
            return run_cost(cost_file, cost_budget);
        if (search->parsed())
            return run_search_cmd(so_search, seed);
        if (train->parsed())
            return run_train_cmd(so_train, seed);
        if (eval->parsed())
            return run_eval(eo, seed);
        if (matchc->parsed())
            return run_match(tpl_a, tpl_b, match_shift);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InfeasibleBudget& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace irisnas
