#include "irisnas/architecture.hpp"
#include "irisnas/cli.hpp"
#include "irisnas/cost_model.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace irisnas;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "irisnas");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    Run r;
    r.status = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("irisnas_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
};

}  // namespace

TEST(FormatNumber, AlwaysFractional)
{
    EXPECT_EQ(format_number(0.0), "0.0");
    EXPECT_EQ(format_number(0.025), "0.025");
    EXPECT_EQ(format_number(3.0), "3.0");
}

TEST_F(CliTest, EvalSeparableScores)
{
    const auto scores = dir_ / "scores.csv";
    std::ofstream(scores) << "label,score\ngenuine,0.1\ngenuine,0.2\nimpostor,0.8\nimpostor,0.9\n";
    const auto r = run({"eval", "--scores", scores.string(), "--roc-out", (dir_ / "roc.csv").string()});
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("eer,0.0\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("frr_at_far,0.0\n"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(dir_ / "roc.csv").substr(0, 17), "threshold,far,frr");
}

TEST_F(CliTest, InfeasibleBudgetFails)
{
    // the images need not exist: the budget is checked before any is read
    std::ofstream manifest(dir_ / "m.csv");
    manifest << "path,subject_id\n";
    for (int i = 0; i < 20; ++i)
        manifest << "missing_" << i << ".pgm,s" << i % 2 << "\n";
    manifest.close();
    const auto r = run({"search", "--manifest", (dir_ / "m.csv").string(), "--out", (dir_ / "a.json").string(),
                        "--budget-flops", "1"});
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("infeasible"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir_ / "a.json"));
}

TEST_F(CliTest, UnknownSubcommandAndFlag)
{
    const auto a = run({"frobnicate"});
    EXPECT_NE(a.status, 0);
    const auto b = run({"eval", "--no-such-flag"});
    EXPECT_NE(b.status, 0);
    EXPECT_NE((b.out + b.err).find("Usage"), std::string::npos);
    EXPECT_NE(run({}).status, 0);
}

TEST_F(CliTest, EvalNeedsExactlyOneSource)
{
    EXPECT_NE(run({"eval"}).status, 0);
    std::ofstream(dir_ / "s.csv") << "label,score\ngenuine,0.1\nimpostor,0.9\n";
    EXPECT_NE(run({"eval", "--scores", (dir_ / "s.csv").string(), "--templates", (dir_ / "s.csv").string()}).status, 0);
}

TEST_F(CliTest, CostTableForArchitecture)
{
    DiscreteArchitecture a;
    a.nodes = 3;
    a.channels = 8;
    a.outputs = 12;
    a.input_h = 8;
    a.input_w = 64;
    a.edges = {{0, 1, OpKind::conv3x3}, {1, 2, OpKind::maxpool2x2}};
    std::ofstream(dir_ / "arch.json") << serialize_arch(a);
    const auto r = run({"cost", "--arch", (dir_ / "arch.json").string(), "--budget-flops", "1000000"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "part\top\tflops\tparams");
    // stem 81920 + conv 598016 + pool 16384 + head 8412
    EXPECT_NE(r.out.find("total\t-\t704732\t804"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("feasible\tyes"), std::string::npos) << r.out;
}

TEST_F(CliTest, MatchTemplatesAndConfigSeed)
{
    const auto data = dir_ / "data";
    ASSERT_EQ(run({"synth-data", "--out", data.string(), "--identities", "2", "--captures", "2", "--normalized"}).status,
              0);
    ASSERT_EQ(run({"preprocess", "--manifest", (data / "manifest.csv").string(), "--out", (dir_ / "prep").string()})
                  .status,
              0);
    const auto imgs = dir_ / "prep" / "images";
    std::vector<fs::path> templates;
    for (const auto& e : fs::directory_iterator(imgs))
        if (e.path().extension() == ".iris")
            templates.push_back(e.path());
    std::sort(templates.begin(), templates.end());
    ASSERT_EQ(templates.size(), 4u);
    const auto self = run({"match", templates[0].string(), templates[0].string()});
    ASSERT_EQ(self.status, 0) << self.err;
    EXPECT_EQ(self.out.substr(0, 6), "0.0,0,") << self.out;

    // same corpus from a config file with a seed gives the same bytes
    std::ofstream(dir_ / "cfg.json") << R"({"seed": 0, "synth-data": {"identities": 2, "captures": 2}})";
    ASSERT_EQ(run({"--config", (dir_ / "cfg.json").string(), "synth-data", "--out", (dir_ / "again").string(),
                   "--normalized"})
                  .status,
              0);
    EXPECT_EQ(slurp(dir_ / "again" / "truth.json"), slurp(data / "truth.json"));
    // flags beat the config file
    ASSERT_EQ(run({"--config", (dir_ / "cfg.json").string(), "synth-data", "--out", (dir_ / "three").string(),
                   "--identities", "3", "--normalized"})
                  .status,
              0);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "three" / "truth.json")).size(), 6u);
}

TEST_F(CliTest, FullPipelineArtifactsAndDeterminism)
{
    const auto data = dir_ / "data";
    ASSERT_EQ(run({"synth-data", "--out", data.string(), "--identities", "3", "--captures", "10"}).status, 0);
    EXPECT_TRUE(fs::exists(data / "manifest.csv"));
    EXPECT_TRUE(fs::exists(data / "truth.json"));

    const auto prep = dir_ / "prep";
    const auto p = run({"preprocess", "--manifest", (data / "manifest.csv").string(), "--out", prep.string()});
    ASSERT_EQ(p.status, 0) << p.err;
    EXPECT_TRUE(fs::exists(prep / "segmentation.json"));

    const std::vector<std::string> search_args{"search",  "--manifest",  (prep / "manifest.csv").string(),
                                               "--epochs", "3",          "--warmup-epochs",
                                               "1",       "--steps-per-epoch", "3",
                                               "--batch-size", "8",      "--budget-flops",
                                               "1500000"};
    auto a_args = search_args, b_args = search_args;
    a_args.insert(a_args.end(), {"--out", (dir_ / "s1").string()});
    b_args.insert(b_args.end(), {"--out", (dir_ / "s2").string()});
    const auto s1 = run(a_args);
    ASSERT_EQ(s1.status, 0) << s1.err;
    ASSERT_EQ(run(b_args).status, 0);
    for (const char* f : {"architecture.json", "supernet.json", "trace.csv", "train.csv", "val.csv", "test.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "s1" / f)) << f;
        EXPECT_EQ(slurp(dir_ / "s1" / f), slurp(dir_ / "s2" / f)) << f;
    }
    const auto arch = deserialize_arch(slurp(dir_ / "s1" / "architecture.json"));
    EXPECT_LE(discrete_cost(arch).flops, 1500000u);

    auto train = [&](const fs::path& out) {
        return run({"train", "--arch", (dir_ / "s1" / "architecture.json").string(), "--manifest",
                    (dir_ / "s1" / "train.csv").string(), "--epochs", "2", "--batch-size", "8", "--out",
                    out.string()});
    };
    const auto t1 = train(dir_ / "m1");
    ASSERT_EQ(t1.status, 0) << t1.err;
    ASSERT_EQ(train(dir_ / "m2").status, 0);
    for (const char* f : {"weights.irnw", "architecture.json", "classes.json", "trace.csv"}) {
        EXPECT_TRUE(fs::exists(dir_ / "m1" / f)) << f;
        EXPECT_EQ(slurp(dir_ / "m1" / f), slurp(dir_ / "m2" / f)) << f;
    }

    const auto e = run({"eval", "--model", (dir_ / "m1").string(), "--manifest", (dir_ / "s1" / "test.csv").string(),
                        "--scores-out", (dir_ / "scores.csv").string()});
    ASSERT_EQ(e.status, 0) << e.err;
    EXPECT_EQ(e.out.substr(0, 4), "eer,");
    EXPECT_TRUE(fs::exists(dir_ / "scores.csv"));

    const auto h = run({"eval", "--templates", (prep / "manifest.csv").string()});
    ASSERT_EQ(h.status, 0) << h.err;
    EXPECT_EQ(h.out.substr(0, 4), "eer,");
}
