#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "fixtures.hpp"
#include "pale/cm_detector.hpp"
#include "pale/dataset.hpp"
#include "pale/file_util.hpp"
#include "pale/mock_server.hpp"
#include "scripted_model.hpp"

using namespace pale;
using namespace pale::testing;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run pale_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pale");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string golden(const std::string& name) {
    return read_file(std::filesystem::path(PALE_GOLDEN_DIR) / name);
}

SyntheticSpec small_spec(std::uint64_t seed) {
    SyntheticSpec s;
    s.dim = 12;
    s.strong = 3;
    s.train_per_class = 80;
    s.test_per_class = 40;
    s.seed = seed;
    return s;
}

// Writes train/test matrices plus the labeled test dataset under `prefix`.
void write_fixture(const TempDir& dir, const std::string& prefix, const SyntheticClasses& s) {
    write_matrix_file(s.train_truthful, dir / (prefix + "train_t.emb"));
    write_matrix_file(s.train_hallucinated, dir / (prefix + "train_h.emb"));
    write_matrix_file(s.test, dir / (prefix + "test.emb"));
    write_dataset_file(test_dataset(s, prefix), dir / (prefix + "test.jsonl"));
}

std::string manifest_entry(const std::string& prefix) {
    return "{\"train_truthful\":\"" + prefix + "train_t.emb\",\"train_hallucinated\":\"" + prefix +
           "train_h.emb\",\"test\":\"" + prefix + "test.emb\",\"test_labels\":\"" + prefix +
           "test.jsonl\"}";
}

void write_scores(const TempDir& dir, const std::string& name, const std::vector<double>& pos,
                  const std::vector<double>& neg) {
    std::vector<ScoredExample> rows;
    Dataset d;
    int i = 0;
    for (double p : pos) {
        rows.push_back({"p" + std::to_string(i), p, Verdict::Hallucinated, 0, 0});
        d.examples.push_back({"p" + std::to_string(i++), "q", "a", Label::Hallucinated, {}, {}});
    }
    for (double n : neg) {
        rows.push_back({"n" + std::to_string(i), n, Verdict::Truthful, 0, 0});
        d.examples.push_back({"n" + std::to_string(i++), "q", "a", Label::Truthful, {}, {}});
    }
    write_file_atomic(dir / (name + ".csv"), scores_to_csv(rows));
    write_dataset_file(d, dir / (name + ".jsonl"));
}

}  // namespace

class CliHelp : public ::testing::TestWithParam<std::string> {};

TEST_P(CliHelp, MatchesGolden) {
    const std::string cmd = GetParam();
    const auto r = cmd == "pale" ? pale_cli({"--help"}) : pale_cli({cmd, "--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, golden("help_" + cmd + ".txt"));
}

INSTANTIATE_TEST_SUITE_P(AllCommands, CliHelp,
                         ::testing::Values("pale", "augment", "fit", "score", "eval", "sweep",
                                           "transfer"));

TEST(Cli, UsageErrors) {
    EXPECT_EQ(pale_cli({}).code, cli::kExitUsage);
    EXPECT_EQ(pale_cli({"frobnicate"}).code, cli::kExitUsage);
    EXPECT_EQ(pale_cli({"fit", "--truthful", "x"}).code, cli::kExitUsage);
    EXPECT_EQ(pale_cli({"--version"}).out, std::string(PALE_VERSION) + "\n");
}

TEST(CliFit, DefaultsAndMetadata) {
    TempDir dir;
    write_fixture(dir, "", make_synthetic(small_spec(1)));
    const auto model = (dir / "model.json").string();
    const auto r = pale_cli({"fit", "--truthful", (dir / "train_t.emb").string(), "--hallucinated",
                             (dir / "train_h.emb").string(), "--out", model, "--seed", "9"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("d=12"), std::string::npos);
    EXPECT_NE(r.out.find("top eigenvalues"), std::string::npos);
    const auto j = nlohmann::json::parse(read_file(model));
    EXPECT_EQ(j["format"], "CMD1");
    EXPECT_EQ(j["tau"], 0.15);
    EXPECT_EQ(j["truthful"]["k"], 5);
    EXPECT_EQ(j["meta"]["seed"], 9);
    EXPECT_EQ(j["meta"]["tool"], "pale");
    EXPECT_EQ(j["meta"]["config_hash"].get<std::string>().size(), 16u);

    // Deterministic bytes on a rerun.
    const auto again = (dir / "model2.json").string();
    pale_cli({"fit", "--truthful", (dir / "train_t.emb").string(), "--hallucinated",
              (dir / "train_h.emb").string(), "--out", again, "--seed", "9"});
    EXPECT_EQ(read_file(model), read_file(again));
}

TEST(CliFit, KClampWarning) {
    TempDir dir;
    std::mt19937_64 rng(2);
    write_matrix_file(random_matrix(4, 10, rng), dir / "t.emb");
    write_matrix_file(random_matrix(6, 10, rng), dir / "h.emb");
    const auto r = pale_cli({"fit", "--truthful", (dir / "t.emb").string(), "--hallucinated",
                             (dir / "h.emb").string(), "--k", "8", "--out",
                             (dir / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("clamped to 3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("clamped to 5"), std::string::npos) << r.err;
}

TEST(CliFit, MismatchedDimension) {
    TempDir dir;
    std::mt19937_64 rng(3);
    write_matrix_file(random_matrix(10, 4, rng), dir / "t.emb");
    write_matrix_file(random_matrix(10, 5, rng), dir / "h.emb");
    const auto r = pale_cli({"fit", "--truthful", (dir / "t.emb").string(), "--hallucinated",
                             (dir / "h.emb").string(), "--out", (dir / "m.json").string()});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_FALSE(std::filesystem::exists(dir / "m.json"));
}

TEST(CliFit, ConfigFileSuppliesFlags) {
    TempDir dir;
    write_fixture(dir, "", make_synthetic(small_spec(4)));
    std::ofstream(dir / "pale.toml") << "[fit]\nk = 3\ntau = 0.5\nresidual-mode = \"floor\"\n";
    const auto r = pale_cli({"--config", (dir / "pale.toml").string(), "fit", "--truthful",
                             (dir / "train_t.emb").string(), "--hallucinated",
                             (dir / "train_h.emb").string(), "--out",
                             (dir / "m.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(read_file(dir / "m.json"));
    EXPECT_EQ(j["truthful"]["k"], 3);
    EXPECT_EQ(j["tau"], 0.5);
    EXPECT_EQ(j["truthful"]["residual_mode"], "floor");

    // Flags override the file.
    const auto r2 = pale_cli({"--config", (dir / "pale.toml").string(), "fit", "--truthful",
                              (dir / "train_t.emb").string(), "--hallucinated",
                              (dir / "train_h.emb").string(), "--k", "2", "--out",
                              (dir / "m2.json").string()});
    ASSERT_EQ(r2.code, 0) << r2.err;
    EXPECT_EQ(nlohmann::json::parse(read_file(dir / "m2.json"))["truthful"]["k"], 2);
}

TEST(CliScore, SelfScoringAndSingleRow) {
    TempDir dir;
    const auto s = make_synthetic(small_spec(5));
    write_fixture(dir, "", s);
    const auto model = (dir / "m.json").string();
    ASSERT_EQ(pale_cli({"fit", "--truthful", (dir / "train_t.emb").string(), "--hallucinated",
                        (dir / "train_h.emb").string(), "--out", model})
                  .code,
              0);

    auto mean_delta = [&](const std::string& emb) {
        const auto out = (dir / (emb + ".csv")).string();
        const auto r = pale_cli({"score", "--model", model, "--embeddings",
                                 (dir / (emb + ".emb")).string(), "--out", out});
        EXPECT_EQ(r.code, 0) << r.err;
        EXPECT_NE(r.out.find("scored"), std::string::npos);
        double sum = 0;
        const auto rows = scores_from_csv(read_file(out));
        for (const auto& row : rows) sum += row.delta;
        EXPECT_TRUE(std::filesystem::exists(dir / (emb + ".meta.json")));
        return sum / static_cast<double>(rows.size());
    };
    EXPECT_LT(mean_delta("train_t"), mean_delta("train_h"));

    write_matrix_file(EmbeddingMatrix(1, 12, std::vector<float>(12, 0.5f)), dir / "one.emb");
    const auto out = (dir / "one.csv").string();
    ASSERT_EQ(pale_cli({"score", "--model", model, "--embeddings", (dir / "one.emb").string(),
                        "--out", out})
                  .code,
              0);
    const auto csv = read_file(out);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(CliScore, IdsFromDatasetAndErrors) {
    TempDir dir;
    const auto s = make_synthetic(small_spec(6));
    write_fixture(dir, "t", s);
    const auto model = (dir / "m.json").string();
    pale_cli({"fit", "--truthful", (dir / "ttrain_t.emb").string(), "--hallucinated",
              (dir / "ttrain_h.emb").string(), "--out", model});
    const auto out = (dir / "s.csv").string();
    ASSERT_EQ(pale_cli({"score", "--model", model, "--embeddings", (dir / "ttest.emb").string(),
                        "--dataset", (dir / "ttest.jsonl").string(), "--out", out})
                  .code,
              0);
    EXPECT_EQ(scores_from_csv(read_file(out)).front().id, "t0");

    EXPECT_EQ(pale_cli({"score", "--model", (dir / "none.json").string(), "--embeddings",
                        (dir / "test.emb").string(), "--out", out})
                  .code,
              cli::kExitUsage);
    std::mt19937_64 rng(1);
    write_matrix_file(random_matrix(3, 7, rng), dir / "wrong.emb");
    EXPECT_EQ(pale_cli({"score", "--model", model, "--embeddings", (dir / "wrong.emb").string(),
                        "--out", out})
                  .code,
              cli::kExitUsage);
}

TEST(CliEval, PerfectTiedAndDegenerate) {
    TempDir dir;
    write_scores(dir, "perfect", {2, 3}, {0, 1});
    write_scores(dir, "tied", {1, 1}, {1, 1});
    write_scores(dir, "onesided", {1, 2}, {});

    auto eval = [&](const std::string& name) {
        return pale_cli({"eval", "--scores", (dir / (name + ".csv")).string(), "--labels",
                         (dir / (name + ".jsonl")).string(), "--out",
                         (dir / (name + ".report.json")).string()});
    };
    ASSERT_EQ(eval("perfect").code, 0);
    auto j = nlohmann::json::parse(read_file(dir / "perfect.report.json"));
    EXPECT_EQ(j["auroc"], 1.0);
    EXPECT_EQ(j["meta"]["label_source"], "label");
    EXPECT_TRUE(std::filesystem::exists(dir / "perfect.report.roc.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "perfect.report.hist.csv"));

    ASSERT_EQ(eval("tied").code, 0);
    EXPECT_EQ(nlohmann::json::parse(read_file(dir / "tied.report.json"))["auroc"], 0.5);

    const auto bad = eval("onesided");
    EXPECT_EQ(bad.code, cli::kExitUsage);
    EXPECT_FALSE(bad.err.empty());
}

TEST(CliEval, SimilarityLabels) {
    TempDir dir;
    std::vector<ScoredExample> rows{{"a", 2.0, Verdict::Hallucinated, 0, 0},
                                    {"b", -1.0, Verdict::Truthful, 0, 0}};
    write_file_atomic(dir / "s.csv", scores_to_csv(rows));
    Dataset d;
    d.examples = {{"a", "q", "x", Label::Unlabeled, {}, 0.2}, {"b", "q", "y", Label::Unlabeled, {}, 0.9}};
    write_dataset_file(d, dir / "l.jsonl");
    const auto r = pale_cli({"eval", "--scores", (dir / "s.csv").string(), "--labels",
                             (dir / "l.jsonl").string(), "--label-source", "similarity", "--out",
                             (dir / "r.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(read_file(dir / "r.json"))["auroc"], 1.0);
}

TEST(CliSweep, LayerAndK) {
    TempDir dir;
    write_fixture(dir, "l4_", make_synthetic(small_spec(7)));
    write_fixture(dir, "l1_", make_noise(small_spec(8)));
    std::ofstream(dir / "layers.json")
        << "{\"entries\":{\"4\":" << manifest_entry("l4_") << ",\"1\":" << manifest_entry("l1_")
        << "}}";
    const auto r = pale_cli({"sweep", "--axis", "layer", "--manifest",
                             (dir / "layers.json").string(), "--out",
                             (dir / "layers.out.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(read_file(dir / "layers.out.json"));
    ASSERT_EQ(j["points"].size(), 2u);
    EXPECT_GT(j["points"][1]["auroc"].get<double>(), j["points"][0]["auroc"].get<double>());
    EXPECT_TRUE(std::filesystem::exists(dir / "layers.out.csv"));

    const auto k = pale_cli({"sweep", "--axis", "k", "--values", "1,3,12", "--train-truthful",
                             (dir / "l4_train_t.emb").string(), "--train-hallucinated",
                             (dir / "l4_train_h.emb").string(), "--test",
                             (dir / "l4_test.emb").string(), "--test-labels",
                             (dir / "l4_test.jsonl").string(), "--out",
                             (dir / "k.json").string()});
    ASSERT_EQ(k.code, 0) << k.err;
    EXPECT_EQ(nlohmann::json::parse(read_file(dir / "k.json"))["points"].size(), 3u);

    EXPECT_EQ(pale_cli({"sweep", "--axis", "k", "--out", (dir / "x.json").string()}).code,
              cli::kExitUsage);
}

TEST(CliTransfer, ThreeByThreeGrid) {
    TempDir dir;
    std::string entries;
    for (int i = 0; i < 3; ++i) {
        auto spec = small_spec(20 + i);
        spec.offset.assign(spec.dim, 0.0);
        spec.offset[1] = 3.0 * i;
        const std::string prefix = "d" + std::to_string(i) + "_";
        write_fixture(dir, prefix, make_synthetic(spec));
        entries += (i ? "," : "") + std::string("\"d") + std::to_string(i) + "\":" +
                   manifest_entry(prefix);
    }
    std::ofstream(dir / "m.json") << "{\"entries\":{" << entries << "}}";
    const auto r = pale_cli({"transfer", "--manifest", (dir / "m.json").string(), "--out",
                             (dir / "grid.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(read_file(dir / "grid.json"));
    ASSERT_EQ(j["auroc"].size(), 3u);
    for (const auto& row : j["auroc"]) EXPECT_EQ(row.size(), 3u);
    EXPECT_TRUE(std::filesystem::exists(dir / "grid.csv"));
}

TEST(CliAugment, MockEndToEnd) {
    TempDir dir;
    ScriptedModel model;
    MockChatServer server(model.handler());
    std::string questions;
    for (const auto& q : numbered_questions(3)) {
        questions += nlohmann::json{{"id", q.id}, {"question", q.question},
                                    {"reference_answer", q.reference_answer}}
                         .dump() +
                     "\n";
    }
    write_file_atomic(dir / "q.jsonl", questions);
    const auto out = (dir / "data.jsonl").string();
    const auto r = pale_cli({"augment", "--questions", (dir / "q.jsonl").string(), "--out", out,
                             "--endpoint", server.base_url(), "--retry-base-ms", "0", "--seed",
                             "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("passed=3"), std::string::npos);
    const auto d = read_dataset_file(out);
    EXPECT_EQ(d.examples.size(), 6u);
    EXPECT_EQ(d.metadata.extra["seed"], 3);
    EXPECT_TRUE(d.metadata.extra.contains("config_hash"));
    EXPECT_TRUE(std::filesystem::exists(dir / "data.audit.jsonl"));
    EXPECT_TRUE(std::filesystem::exists(dir / "data.journal.jsonl"));
}

TEST(CliAugment, MissingQuestionsAndUnreachableEndpoint) {
    TempDir dir;
    const auto missing = (dir / "nope.jsonl").string();
    const auto r = pale_cli({"augment", "--questions", missing, "--out", (dir / "o.jsonl").string()});
    EXPECT_EQ(r.code, cli::kExitUsage);
    EXPECT_NE(r.err.find(missing), std::string::npos);

    int port = 0;
    {
        MockChatServer server({MockReply::ok("x")});
        port = server.port();
    }
    write_file_atomic(dir / "q.jsonl",
                      "{\"id\":\"a\",\"question\":\"Q?\",\"reference_answer\":\"R\"}\n");
    const auto r2 = pale_cli({"augment", "--questions", (dir / "q.jsonl").string(), "--out",
                              (dir / "o.jsonl").string(), "--endpoint",
                              "http://127.0.0.1:" + std::to_string(port), "--max-retries", "1",
                              "--retry-base-ms", "0", "--timeout", "2"});
    EXPECT_EQ(r2.code, cli::kExitTransport) << r2.err;
}
