#include <gtest/gtest.h>

#include "support.hpp"

using namespace paxray;
using namespace testing_support;

namespace {

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

/// Data-file flags pointing at the shipped demo assets.
std::string data_flags() {
    const auto d = data_dir();
    return " --lexicon " + quote(d / "lexicon.tsv") + " --embeddings " + quote(d / "embeddings.txt") + " --reports " +
           quote(d / "reports.json") + " --annotations " + quote(d / "annotations.json") + " --proposals " +
           quote(d / "proposals.json");
}

int run_cli(const fs::path& out, const std::string& args, const fs::path& log) {
    return run(quote(cli()) + " --out-dir " + quote(out) + " " + args + " > " + quote(log) + " 2>&1");
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_bytes(e.path());
    return out;
}

}  // namespace

TEST(Cli, FullChainProducesAllOutputs) {
    TempDir dir;
    const auto out = dir / "run";
    const auto log = dir / "log.txt";
    const auto flags = data_flags();
    ASSERT_EQ(run_cli(out, "phantom --seed 3 --size 64", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, "derive", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, "project", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, flags + " ground", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, flags + " eval hitrate", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, flags + " eval topk", log), 0) << read_bytes(log);

    const auto header = nlohmann::json::parse(read_bytes(out / "phantom" / "volume.json"));
    EXPECT_EQ(header.at("shape"), nlohmann::json({64, 64, 64}));
    for (const char* f : {"derived/labels/labels.json", "derived/warnings.json", "projection/frontal/image.pgm",
                          "projection/lateral/image.json", "projection/lateral/labels/labels.json",
                          "grounding/frontal.json", "grounding/lateral.json", "metrics/hitrate.json", "metrics/topk.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;

    const auto labels = load_label_volume(out / "derived" / "labels");
    EXPECT_TRUE(validate_hierarchy(labels, paxray_taxonomy()).empty());
    const auto frontal = load_label_set<2>(out / "projection" / "frontal" / "labels");
    EXPECT_EQ(frontal.shape, (Extent<2>{64, 64}));
    const auto g = ground::load_groundings(out / "grounding" / "frontal.json");
    EXPECT_FALSE(g.empty());
    const auto topk = nlohmann::json::parse(read_bytes(out / "metrics" / "topk.json"));
    for (const auto& r : topk.at("results")) {
        EXPECT_GE(r.at("percent").get<double>(), 0.0);
        EXPECT_LE(r.at("percent").get<double>(), 100.0);
    }
}

TEST(Cli, MissingEmbeddingsIsReported) {
    TempDir dir;
    const auto out = dir / "run";
    const auto log = dir / "log.txt";
    ASSERT_EQ(run_cli(out, "phantom --size 32", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, "derive", log), 0) << read_bytes(log);
    ASSERT_EQ(run_cli(out, "project --view frontal", log), 0) << read_bytes(log);
    const auto d = data_dir();
    const int rc = run_cli(out,
                           "--lexicon " + quote(d / "lexicon.tsv") + " --reports " + quote(d / "reports.json") +
                               " --embeddings " + quote(dir / "nope.txt") + " ground --view frontal",
                           log);
    EXPECT_NE(rc, 0);
    const auto err = nlohmann::json::parse(read_bytes(log));
    EXPECT_EQ(err.at("error"), "language.MissingFile");
    EXPECT_TRUE(err.contains("detail"));
}

TEST(Cli, ProposalsEqualToGroundTruthHitEverything) {
    TempDir dir;
    const auto gts = eval::load_annotations(golden_dir() / "annotations.json");
    eval::ProposalSet ps;
    for (const auto& a : gts) ps[a.image_id()].push_back({a.box, 1.0});
    eval::save_proposals(ps, dir / "proposals.json");
    const auto log = dir / "log.txt";
    ASSERT_EQ(run_cli(dir / "run",
                     "--annotations " + quote(golden_dir() / "annotations.json") + " --proposals " +
                         quote(dir / "proposals.json") + " --iou 0.5 eval hitrate",
                     log),
              0)
        << read_bytes(log);
    const auto report = nlohmann::json::parse(read_bytes(dir / "run" / "metrics" / "hitrate.json"));
    for (const auto& r : report.at("results")) EXPECT_EQ(r.at("percent"), 100.0) << r.dump();
}

TEST(Cli, ConfigFileAndFlagOverride) {
    TempDir dir;
    write_bytes(dir / "config.json", R"({"out_dir": "from_config", "threads": 2})");
    const auto log = dir / "log.txt";
    ASSERT_EQ(run(quote(cli()) + " --config " + quote(dir / "config.json") + " phantom --size 32 > " + quote(log) + " 2>&1"), 0)
        << read_bytes(log);
    EXPECT_TRUE(fs::exists(dir / "from_config" / "phantom" / "volume.json"));
    ASSERT_EQ(run(quote(cli()) + " --config " + quote(dir / "config.json") + " --out-dir " + quote(dir / "flag") +
                  " phantom --size 32 > " + quote(log) + " 2>&1"),
              0);
    EXPECT_TRUE(fs::exists(dir / "flag" / "phantom" / "volume.json"));
}

TEST(Cli, UsageErrors) {
    TempDir dir;
    const auto log = dir / "log.txt";
    EXPECT_EQ(run_cli(dir / "run", "phantom --size banana", log), 2);
    EXPECT_EQ(nlohmann::json::parse(read_bytes(log)).at("error"), "cli.InvalidArgument");
    EXPECT_NE(run_cli(dir / "run", "phantom --size 8", log), 0);
    EXPECT_NE(run_cli(dir / "run", "project --view axial", log), 0);
    write_bytes(dir / "bad.json", "{");
    EXPECT_EQ(run(quote(cli()) + " --config " + quote(dir / "bad.json") + " derive > " + quote(log) + " 2>&1"), 1);
    EXPECT_EQ(nlohmann::json::parse(read_bytes(log)).at("error"), "cli.InvalidConfig");
}

TEST(Cli, PhantomAndDeriveAreDeterministic) {
    TempDir dir;
    const auto log = dir / "log.txt";
    for (const char* name : {"a", "b"}) {
        const auto out = dir / name;
        const std::string threads = std::string(name) == "a" ? "1" : "4";
        ASSERT_EQ(run_cli(out, "--threads " + threads + " phantom --seed 11 --size 40", log), 0) << read_bytes(log);
        ASSERT_EQ(run_cli(out, "--threads " + threads + " derive", log), 0) << read_bytes(log);
    }
    EXPECT_EQ(tree_bytes(dir / "a"), tree_bytes(dir / "b"));
}
